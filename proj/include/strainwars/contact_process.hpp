#pragma once

#include "strainwars/rng.hpp"
#include "strainwars/topology.hpp"

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace strainwars {

/// Site state. Susceptible sites are never stored in a Configuration.
enum class Strain : std::uint8_t
{
    none = 0,
    one = 1,
    two = 2
};

inline int as_int(Strain s) noexcept { return static_cast<int>(s); }

/// Sparse configuration: infected sites and their strain.
using Configuration = std::map<SiteId, Strain>;

/// Throws TopologyError / std::invalid_argument if a key lies outside the
/// topology or a value is not strain 1 or 2.
void validate_configuration(const Topology& topology, const Configuration& config);

Strain state_of(const Configuration& config, const SiteId& site);

struct SimParams
{
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double delta1 = 1.0;
    double delta2 = 1.0;
    double t_max = 1.0;
    /// Observation times, sorted, within [0, t_max].
    std::vector<double> sample_times;
    /// Sites whose state is recorded at every sample time.
    std::vector<SiteId> observe;
    /// When set, the result reports for each observed site whether it was
    /// infected at any moment of [watch_from, t_max].
    std::optional<double> watch_from;
    /// Stop once every strain still present has more than this many infected
    /// sites (0 disables). Used on trees above the survival threshold, where
    /// outbreaks grow exponentially; an established strain counts as surviving.
    std::uint64_t max_infected = 0;

    void validate() const;
    double lambda(Strain s) const { return s == Strain::one ? lambda1 : lambda2; }
    double delta(Strain s) const { return s == Strain::one ? delta1 : delta2; }
};

struct InfectedCounts
{
    int n1 = 0;
    int n2 = 0;
    friend bool operator==(const InfectedCounts&, const InfectedCounts&) = default;
};

struct SiteRates
{
    double to_susceptible = 0.0;
    double to_strain1 = 0.0;
    double to_strain2 = 0.0;

    double total() const { return to_susceptible + to_strain1 + to_strain2; }
    friend bool operator==(const SiteRates&, const SiteRates&) = default;
};

/// Number of neighbors of `site` infected by strain 1 and by strain 2.
InfectedCounts infected_neighbor_counts(const Topology& topology, const Configuration& config, const SiteId& site);

/// Transition rates out of the current state of `site`.
SiteRates site_rates(const Topology& topology, const Configuration& config, const SiteId& site,
                     const SimParams& params);

struct SampleSummary
{
    double time = 0.0;
    std::uint64_t count1 = 0;
    std::uint64_t count2 = 0;
    std::vector<Strain> observed;  // aligned with SimParams::observe
    bool boundary_contact = false; // boundary touched at or before this time
};

enum class StopReason
{
    horizon,  // reached t_max
    absorbed, // no infected site left
    capped    // exceeded SimParams::max_infected
};

std::string to_string(StopReason reason);

struct SimResult
{
    /// One entry per requested sample time. After absorption the remaining
    /// entries are filled with the (empty) absorbed state; a capped run stops
    /// recording, so `samples` may be shorter than the request.
    std::vector<SampleSummary> samples;
    Configuration final_config;
    std::uint64_t final_count1 = 0;
    std::uint64_t final_count2 = 0;
    std::uint64_t events = 0;
    std::uint64_t peak_infected = 0;
    double elapsed = 0.0;
    std::uint64_t seed = 0;
    StopReason stop = StopReason::horizon;
    bool boundary_contact = false;
    std::vector<bool> watch_hits;  // aligned with SimParams::observe

    bool truncated() const noexcept { return stop == StopReason::capped; }
    /// Infected set nonempty at t_max, or the run exploded past the cap.
    bool survived() const noexcept { return final_count1 + final_count2 > 0; }
    bool strain_present(Strain s) const noexcept { return (s == Strain::one ? final_count1 : final_count2) > 0; }
};

/// Result of recomputing every rate from scratch and comparing it with the
/// engine's incremental bookkeeping.
struct RateAudit
{
    double cached_total = 0.0;
    double recomputed_total = 0.0;
    std::size_t cached_frontier = 0;
    std::size_t recomputed_frontier = 0;
    bool counts_consistent = true;
    bool frontier_consistent = true;

    bool ok() const;
    std::string describe() const;
};

class EngineError : public std::logic_error
{
public:
    using std::logic_error::logic_error;
};

/// Exact continuous-time simulation of the two-strain contact process by the
/// direct (Gillespie) method.
///
/// Sites are interned into slots on first contact. Every infected slot keeps
/// its neighbor slot list; every slot keeps the number of strain-1 and
/// strain-2 neighbors. Events are drawn from four pools whose sizes give the
/// total rate exactly:
///   recoveries of strain i: the infected list of strain i, each at delta_i;
///   infections by strain i: the directed edges (infected i -> susceptible),
///   each at lambda_i, so a susceptible site x is hit at lambda_i * n_i(x).
class ContactProcess
{
public:
    ContactProcess(const Topology& topology, const SimParams& params, const Configuration& init, std::uint64_t seed);

    double time() const noexcept { return time_; }
    double total_rate() const noexcept;
    std::uint64_t count(Strain s) const noexcept;
    std::uint64_t infected() const noexcept { return count(Strain::one) + count(Strain::two); }
    std::uint64_t events() const noexcept { return events_; }
    bool boundary_contact() const noexcept { return boundary_contact_; }

    Strain state(const SiteId& site) const;
    Configuration configuration() const;
    /// Sites carrying nonzero rate, from the engine's bookkeeping.
    std::vector<SiteId> frontier() const;

    /// Time of the next event (+inf when absorbed). Drawn once and cached
    /// until the event is applied.
    double next_event_time();
    /// Applies the event at next_event_time(). Returns the site that changed.
    SiteId apply_next_event();

    RateAudit audit() const;

private:
    static constexpr std::uint32_t kNoList = std::numeric_limits<std::uint32_t>::max();

    struct Slot
    {
        SiteId site;
        std::uint32_t nbr_begin = kNoList;
        std::uint32_t nbr_count = 0;
        std::uint32_t list_pos = 0;
        std::uint16_t n[2] = {0, 0};
        Strain state = Strain::none;
        bool boundary = false;
    };

    struct Edge
    {
        std::uint32_t src;
        std::uint32_t k;
    };

    std::uint32_t intern(const SiteId& site);
    std::optional<std::uint32_t> find_slot(const SiteId& site) const;
    void ensure_neighbors(std::uint32_t slot);
    std::uint32_t neighbor_index(std::uint32_t of, std::uint32_t target) const;
    void add_edge(std::uint32_t src, std::uint32_t k);
    void remove_edge(std::uint32_t src, std::uint32_t k);
    void infect(std::uint32_t slot, Strain s);
    void recover(std::uint32_t slot);

    const Topology& topology_;
    SimParams params_;
    Rng rng_;

    std::vector<Slot> slots_;
    std::vector<std::uint32_t> dense_lookup_;  // torus: site index -> slot + 1
    std::unordered_map<SiteId, std::uint32_t, SiteIdHash> sparse_lookup_;
    std::vector<std::uint32_t> nbr_slot_;
    std::vector<std::uint32_t> edge_pos_;  // per (slot, neighbor) position in edges_, kNoList if inactive
    std::vector<std::uint32_t> infected_[2];
    std::vector<Edge> edges_[2];
    std::vector<SiteId> scratch_;

    double time_ = 0.0;
    std::optional<double> pending_;
    std::uint64_t events_ = 0;
    bool boundary_contact_ = false;
};

/// Runs one replicate from `init` until t_max, absorption or the cap.
/// Identical inputs and seed give identical results.
SimResult run(const Topology& topology, const Configuration& init, const SimParams& params, std::uint64_t seed);

Configuration init_single(const Topology& topology, Strain strain, const SiteId& at);
Configuration init_product(const Topology& topology, double p1, double p2, std::uint64_t seed);
/// Tree only: strain 1 at the root's first child, strain 2 at its second.
Configuration init_split(const Topology& topology);
/// Strain 1 at `site1`, strain 2 at `site2`.
Configuration init_pair(const Topology& topology, const SiteId& site1, const SiteId& site2);

/// Recipe for an initial configuration, realized per replicate so that
/// random initial conditions get their own stream.
struct InitSpec
{
    enum class Kind
    {
        fixed,
        single,
        product,
        split,
        pair
    };

    Kind kind = Kind::single;
    Strain strain = Strain::one;
    std::optional<SiteId> at;      // single; defaults to the origin
    double p1 = 0.0;               // product
    double p2 = 0.0;               // product
    std::optional<SiteId> site1;   // pair; defaults to torus neighbors of the origin
    std::optional<SiteId> site2;
    Configuration config;          // fixed

    static InitSpec fixed(Configuration config);
    static InitSpec single(Strain strain, std::optional<SiteId> at = std::nullopt);
    static InitSpec product(double p1, double p2);
    static InitSpec split();
    static InitSpec pair(std::optional<SiteId> site1 = std::nullopt, std::optional<SiteId> site2 = std::nullopt);

    Configuration realize(const Topology& topology, std::uint64_t replicate_seed) const;
    /// Whether the realized configuration may contain strain 1 / strain 2.
    bool may_contain(Strain s) const;
    std::string describe() const;
};

/// Relabels strain 1 <-> 2.
Configuration swap_strains(const Configuration& config);
SimParams swap_strains(const SimParams& params);

}  // namespace strainwars
