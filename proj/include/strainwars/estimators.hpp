#pragma once

#include "strainwars/contact_process.hpp"
#include "strainwars/topology.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace strainwars {

/// Two-sided 95% normal quantile.
inline constexpr double kWilsonZ95 = 1.959963984540054;

/// Monte Carlo proportion with its 95% Wilson score interval.
struct EstimateCI
{
    double point = 0.0;
    double lower = 0.0;
    double upper = 1.0;
    std::uint64_t successes = 0;
    std::uint64_t replicates = 0;
    /// What the proportion is conditioned on, if anything.
    std::string conditioning;
    /// Replicates whose infection touched the truncation boundary.
    std::uint64_t boundary_contacts = 0;
    /// Replicates stopped by the explosion cap.
    std::uint64_t capped = 0;

    double width() const { return upper - lower; }
    double boundary_fraction() const
    {
        return replicates == 0 ? 0.0 : static_cast<double>(boundary_contacts) / static_cast<double>(replicates);
    }
};

EstimateCI wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = kWilsonZ95);

class EstimationError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

struct EstimatorOptions
{
    unsigned parallelism = 0;  // 0: one worker per hardware thread
};

/// Everything an estimator needs from one replicate; the final configuration
/// is dropped to keep ensembles small.
struct ReplicateRecord
{
    std::vector<SampleSummary> samples;
    std::uint64_t final_count1 = 0;
    std::uint64_t final_count2 = 0;
    std::uint64_t events = 0;
    StopReason stop = StopReason::horizon;
    bool boundary_contact = false;
    std::vector<bool> watch_hits;
    std::uint64_t seed = 0;

    bool survived() const { return final_count1 + final_count2 > 0; }
};

/// Runs replicates [first, first + count). Replicate i starts from
/// init.realize(topology, seed_i) with seed_i = replicate_seed(master_seed, i),
/// so a given index always sees the same random stream.
std::vector<ReplicateRecord> run_ensemble(const Topology& topology, const InitSpec& init, const SimParams& params,
                                          std::uint64_t count, std::uint64_t master_seed,
                                          const EstimatorOptions& options = {}, std::uint64_t first = 0);

/// P(infected set nonempty at t_max). Runs stopped by the explosion cap count
/// as surviving.
EstimateCI survival_probability(const Topology& topology, const InitSpec& init, const SimParams& params,
                                std::uint64_t replicates, std::uint64_t master_seed,
                                const EstimatorOptions& options = {});

/// P(origin infected at some moment of the late window
/// [(1 - window_fraction) * t_max, t_max]) on any topology.
EstimateCI origin_recurrence_probability(const Topology& topology, const InitSpec& init, const SimParams& params,
                                         std::uint64_t replicates, double window_fraction,
                                         std::uint64_t master_seed, const EstimatorOptions& options = {});

/// Tree version of origin_recurrence_probability: the root is the site whose
/// infinitely-often infection defines the strong survival threshold.
EstimateCI root_recurrence_probability(const Topology& tree, const InitSpec& init, const SimParams& params,
                                       std::uint64_t replicates, double window_fraction, std::uint64_t master_seed,
                                       const EstimatorOptions& options = {});

/// Alive/dead decision thresholds for bisection probes.
struct ClassifierRule
{
    double alive_lower = 0.05;   // alive when the Wilson lower bound exceeds this
    double dead_upper = 0.02;    // dead when the Wilson upper bound is below this
    int max_doublings = 3;       // inconclusive probes double their replicates up to 2^max_doublings times
    /// Fallback for probes still inconclusive at the cap: alive when the point
    /// estimate exceeds the midpoint of the two thresholds.
    double fallback_threshold() const { return 0.5 * (alive_lower + dead_upper); }
};

enum class CriticalKind
{
    lambda_c,   // global survival
    lambda_cc   // infection of the origin in the late window
};

std::string to_string(CriticalKind kind);

struct Probe
{
    double lambda = 0.0;
    EstimateCI estimate;
    bool alive = false;
    bool low_confidence = false;
};

struct CriticalEstimate
{
    double lo = 0.0;
    double hi = 0.0;
    CriticalKind kind = CriticalKind::lambda_c;
    double initial_lo = 0.0;
    double initial_hi = 0.0;
    std::vector<Probe> trace;  // endpoint checks first, then bisection probes in order
};

/// Bracket whose endpoints are not classified dead (low) and alive (high).
class BracketError : public EstimationError
{
public:
    using EstimationError::EstimationError;
};

struct CriticalSearch
{
    double lo = 0.0;
    double hi = 1.0;
    double tolerance = 0.1;
    std::uint64_t replicates = 200;
    std::uint64_t master_seed = 1;
    ClassifierRule rule;
    /// Late-window fraction for lambda_cc.
    double window_fraction = 0.5;
};

/// Classifies one lambda (applied to strain 1; strain 2 is left as given in
/// `base`) with escalating replicates. Indices are shared across lambdas, so
/// probes use common random numbers.
Probe classify_probe(const Topology& topology, const InitSpec& init, const SimParams& base, double lambda,
                     CriticalKind kind, const CriticalSearch& search, const EstimatorOptions& options = {});

/// Bisection for the global survival threshold of the one-type process.
CriticalEstimate estimate_lambda_c(const Topology& topology, const InitSpec& init, const SimParams& base,
                                   const CriticalSearch& search, const EstimatorOptions& options = {});

/// Bisection for the origin recurrence threshold. On trees this is the strong
/// survival threshold; it also runs on tori, where both thresholds coincide.
CriticalEstimate estimate_lambda_cc(const Topology& topology, const InitSpec& init, const SimParams& base,
                                    const CriticalSearch& search, const EstimatorOptions& options = {});

enum class Regime
{
    subcritical,
    weak_survival,
    strong_survival,
    inconclusive
};

std::string to_string(Regime regime);

struct RegimeVerdict
{
    Regime classification = Regime::inconclusive;
    EstimateCI survival;
    EstimateCI recurrence;
    double lambda = 0.0;
    int recurrence_depth = 0;
};

struct RegimeOptions
{
    double window_fraction = 0.5;
    /// Root recurrence is measured on the tree truncated at this depth (at
    /// most the topology's own depth). Above the survival threshold the full
    /// tree cannot be simulated to t_max, and the restricted process is
    /// dominated by the full one, so the estimate is a lower bound.
    int recurrence_depth = 4;
    double subcritical_upper = 0.02;
    double strong_lower = 0.10;
    double weak_survival_lower = 0.05;
    double weak_recurrence_upper = 0.05;
};

/// Three-way classification of a single-seed one-type process on a tree.
/// `params` supplies t_max, deltas and the explosion cap; lambda1 is replaced
/// by `lambda`.
RegimeVerdict classify_regime(const Topology& tree, double lambda, const SimParams& params,
                              std::uint64_t replicates, std::uint64_t master_seed, const RegimeOptions& regime = {},
                              const EstimatorOptions& options = {});

/// P(site x in state 1 and site y in state 2 at each sample time), from an
/// ensemble run with x and y observed (x = observe[ix], y = observe[iy]).
std::vector<EstimateCI> pair_coexistence_from(const std::vector<ReplicateRecord>& records, std::size_t ix,
                                              std::size_t iy);

EstimateCI pair_coexistence_probability(const Topology& topology, const InitSpec& init, const SimParams& params,
                                        const SiteId& x, const SiteId& y, double t, std::uint64_t replicates,
                                        std::uint64_t master_seed, const EstimatorOptions& options = {});

struct CrowdOutPoint
{
    double time = 0.0;
    EstimateCI strain1;  // P(site in state 1 at time | strain 2 present at t_max)
    EstimateCI strain2;  // P(site in state 2 at time | strain 2 present at t_max)
};

/// Minimum number of replicates satisfying the conditioning event.
inline constexpr std::uint64_t kMinConditioned = 100;

std::vector<CrowdOutPoint> crowd_out_from(const std::vector<ReplicateRecord>& records, std::size_t observed_index);

std::vector<CrowdOutPoint> crowd_out_curve(const Topology& topology, const InitSpec& init, const SimParams& params,
                                           const SiteId& site, const std::vector<double>& sample_times,
                                           std::uint64_t replicates, std::uint64_t master_seed,
                                           const EstimatorOptions& options = {});

/// P(both strains present at time t). Runs where both strains passed the
/// explosion cap count as coexisting.
EstimateCI coexistence_probability(const Topology& topology, const InitSpec& init, const SimParams& params, double t,
                                   std::uint64_t replicates, std::uint64_t master_seed,
                                   const EstimatorOptions& options = {});

}  // namespace strainwars
