#pragma once

#include "strainwars/contact_process.hpp"
#include "strainwars/topology.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace strainwars {

enum class ExperimentKind
{
    ode,
    simulate,
    survival,
    critical,
    coexist,
    regime,
    crowd_out,
    oracle_check
};

std::string to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_experiment_kind(const std::string& text);

/// One experiment, as read from a flat "section.key = value" document.
/// Site fields hold site names (see Topology::site_name) and are resolved
/// against the topology when the run starts. Lists are comma separated.
struct ExperimentConfig
{
    ExperimentKind experiment = ExperimentKind::simulate;

    std::string topology_kind = "torus";
    int topology_d = 1;
    int topology_extent = 100;

    double lambda1 = 1.0;
    double lambda2 = 0.0;
    double delta1 = 1.0;
    double delta2 = 1.0;
    double t_max = 10.0;
    std::vector<double> sample_times;
    std::uint64_t max_infected = 0;

    std::string init_kind = "single";
    int init_strain = 1;
    std::string init_site;  // empty: origin
    double init_p1 = 0.0;
    double init_p2 = 0.0;
    std::string init_site1;  // empty: default pair placement
    std::string init_site2;

    std::vector<std::string> observe;

    std::uint64_t replicates = 1;
    std::optional<std::uint64_t> seed;
    unsigned parallel = 0;
    std::string output_prefix = "out/run";

    // ode
    double ode_u1 = 0.01;
    double ode_u2 = 0.01;
    double ode_dt = 1e-3;

    // critical
    std::string critical_kind = "lambda_c";
    double critical_lo = 0.0;
    double critical_hi = 1.0;
    double critical_tolerance = 0.1;
    double critical_window_fraction = 0.5;

    // regime
    std::vector<double> regime_lambdas;
    int regime_recurrence_depth = 4;

    // crowd-out: the second site of the pair-coexistence estimate; empty
    // means the antipode of the origin on tori, the far end of a path.
    std::string crowd_out_partner;

    /// Values of lambda1 to run as independent sub-runs; empty means just
    /// `lambda1`.
    std::vector<double> sweep_lambda1;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;

    Topology topology() const;
    SimParams sim_params(const Topology& topology) const;
    InitSpec init_spec(const Topology& topology) const;
    bool init_spec_may_have_both() const;
    std::uint64_t master_seed() const { return seed.value_or(1); }
};

/// All validation problems of a document, one "key: reason" line each.
class ConfigError : public std::invalid_argument
{
public:
    explicit ConfigError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    std::vector<std::string> problems_;
};

/// Parses and validates. Blank lines and lines starting with '#' are
/// ignored; unknown keys, duplicate keys, malformed values and constraint
/// violations are all reported together.
ExperimentConfig parse_config(const std::string& text);

/// Checks an already-built config; throws ConfigError listing every problem.
void validate_config(const ExperimentConfig& config);

/// Canonical document; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

std::vector<std::string> preset_names();
/// Throws ConfigError for an unknown name.
ExperimentConfig preset(const std::string& name);

struct OutputFile
{
    std::string path;
    std::string sha256;
    std::uint64_t bytes = 0;
};

struct RunManifest
{
    std::string config_text;
    std::string tool_version;
    double wall_seconds = 0.0;
    unsigned parallelism = 0;
    std::uint64_t seed = 0;
    std::vector<OutputFile> outputs;
    std::uint64_t boundary_contacts = 0;
    std::uint64_t boundary_replicates = 0;
    std::string manifest_path;
};

inline constexpr const char* kToolVersion = "0.1.0";

/// Runs the experiment, writes "<prefix>.*" outputs and "<prefix>.manifest.json".
/// On failure every file written so far is removed and the error rethrown.
RunManifest run_experiment(const ExperimentConfig& config);

}  // namespace strainwars
