#include "strainwars/estimators.hpp"

#include "strainwars/replicates.hpp"
#include "strainwars/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace strainwars {

EstimateCI wilson_interval(std::uint64_t successes, std::uint64_t trials, double z)
{
    if (trials == 0)
        throw EstimationError("a proportion needs at least one replicate");
    if (successes > trials)
        throw EstimationError("more successes than trials");
    EstimateCI ci;
    ci.successes = successes;
    ci.replicates = trials;
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    ci.point = p;
    ci.lower = std::clamp(std::min(center - half, p), 0.0, 1.0);
    ci.upper = std::clamp(std::max(center + half, p), 0.0, 1.0);
    if (successes == 0)
        ci.lower = 0.0;
    if (successes == trials)
        ci.upper = 1.0;
    return ci;
}

std::vector<ReplicateRecord> run_ensemble(const Topology& topology, const InitSpec& init, const SimParams& params,
                                          std::uint64_t count, std::uint64_t master_seed,
                                          const EstimatorOptions& options, std::uint64_t first)
{
    params.validate();
    return parallel_map<ReplicateRecord>(first, first + count, options.parallelism, [&](std::uint64_t i) {
        const std::uint64_t seed = replicate_seed(master_seed, i);
        const Configuration start = init.realize(topology, seed);
        SimResult r = run(topology, start, params, seed);
        ReplicateRecord rec;
        rec.samples = std::move(r.samples);
        rec.final_count1 = r.final_count1;
        rec.final_count2 = r.final_count2;
        rec.events = r.events;
        rec.stop = r.stop;
        rec.boundary_contact = r.boundary_contact;
        rec.watch_hits = std::move(r.watch_hits);
        rec.seed = seed;
        return rec;
    });
}

namespace {

void require_replicates(std::uint64_t replicates)
{
    if (replicates == 0)
        throw EstimationError("estimators need at least one replicate");
}

template <class Pred>
EstimateCI proportion(const std::vector<ReplicateRecord>& records, Pred&& pred, std::string conditioning = {})
{
    std::uint64_t hits = 0;
    std::uint64_t boundary = 0;
    std::uint64_t capped = 0;
    for (const auto& r : records)
    {
        hits += pred(r) ? 1 : 0;
        boundary += r.boundary_contact ? 1 : 0;
        capped += r.stop == StopReason::capped ? 1 : 0;
    }
    EstimateCI ci = wilson_interval(hits, records.size());
    ci.conditioning = std::move(conditioning);
    ci.boundary_contacts = boundary;
    ci.capped = capped;
    return ci;
}

EstimateCI merge_counts(const EstimateCI& a, const EstimateCI& b)
{
    EstimateCI ci = wilson_interval(a.successes + b.successes, a.replicates + b.replicates);
    ci.conditioning = a.conditioning;
    ci.boundary_contacts = a.boundary_contacts + b.boundary_contacts;
    ci.capped = a.capped + b.capped;
    return ci;
}

SimParams recurrence_params(const Topology& topology, const SimParams& params, double window_fraction)
{
    if (!(window_fraction > 0.0) || window_fraction > 1.0)
        throw EstimationError("window fraction must lie in (0, 1]");
    SimParams p = params;
    p.observe = {topology.origin()};
    p.watch_from = (1.0 - window_fraction) * params.t_max;
    p.sample_times.clear();
    return p;
}

EstimateCI survival_range(const Topology& topology, const InitSpec& init, const SimParams& params,
                          std::uint64_t first, std::uint64_t count, std::uint64_t master_seed,
                          const EstimatorOptions& options)
{
    SimParams p = params;
    p.sample_times.clear();
    p.observe.clear();
    p.watch_from.reset();
    const auto records = run_ensemble(topology, init, p, count, master_seed, options, first);
    return proportion(records, [](const ReplicateRecord& r) { return r.survived(); });
}

EstimateCI recurrence_range(const Topology& topology, const InitSpec& init, const SimParams& params,
                            double window_fraction, std::uint64_t first, std::uint64_t count,
                            std::uint64_t master_seed, const EstimatorOptions& options)
{
    const SimParams p = recurrence_params(topology, params, window_fraction);
    const auto records = run_ensemble(topology, init, p, count, master_seed, options, first);
    return proportion(records, [](const ReplicateRecord& r) { return r.watch_hits.at(0); });
}

}  // namespace

EstimateCI survival_probability(const Topology& topology, const InitSpec& init, const SimParams& params,
                                std::uint64_t replicates, std::uint64_t master_seed, const EstimatorOptions& options)
{
    require_replicates(replicates);
    auto ci = survival_range(topology, init, params, 0, replicates, master_seed, options);
    ci.conditioning = "proxy: infected set nonempty at t_max (or past the explosion cap)";
    return ci;
}

EstimateCI origin_recurrence_probability(const Topology& topology, const InitSpec& init, const SimParams& params,
                                         std::uint64_t replicates, double window_fraction,
                                         std::uint64_t master_seed, const EstimatorOptions& options)
{
    require_replicates(replicates);
    auto ci = recurrence_range(topology, init, params, window_fraction, 0, replicates, master_seed, options);
    std::ostringstream os;
    os << "proxy: origin infected at some time in [" << (1.0 - window_fraction) * params.t_max << ", "
       << params.t_max << "]";
    ci.conditioning = os.str();
    return ci;
}

EstimateCI root_recurrence_probability(const Topology& tree, const InitSpec& init, const SimParams& params,
                                       std::uint64_t replicates, double window_fraction, std::uint64_t master_seed,
                                       const EstimatorOptions& options)
{
    if (!tree.is_tree())
        throw EstimationError("root recurrence is defined on trees; use origin_recurrence_probability for tori");
    return origin_recurrence_probability(tree, init, params, replicates, window_fraction, master_seed, options);
}

std::string to_string(CriticalKind kind)
{
    return kind == CriticalKind::lambda_c ? "lambda_c" : "lambda_cc";
}

Probe classify_probe(const Topology& topology, const InitSpec& init, const SimParams& base, double lambda,
                     CriticalKind kind, const CriticalSearch& search, const EstimatorOptions& options)
{
    require_replicates(search.replicates);
    SimParams p = base;
    p.lambda1 = lambda;

    auto estimate = [&](std::uint64_t first, std::uint64_t count) {
        return kind == CriticalKind::lambda_c
                   ? survival_range(topology, init, p, first, count, search.master_seed, options)
                   : recurrence_range(topology, init, p, search.window_fraction, first, count, search.master_seed,
                                      options);
    };

    Probe probe;
    probe.lambda = lambda;
    probe.estimate = estimate(0, search.replicates);
    for (int round = 0;; ++round)
    {
        if (probe.estimate.lower > search.rule.alive_lower)
        {
            probe.alive = true;
            return probe;
        }
        if (probe.estimate.upper < search.rule.dead_upper)
        {
            probe.alive = false;
            return probe;
        }
        if (round >= search.rule.max_doublings)
            break;
        // Double the sample: replicates [n, 2n) extend [0, n).
        const auto n = probe.estimate.replicates;
        probe.estimate = merge_counts(probe.estimate, estimate(n, n));
    }
    probe.low_confidence = true;
    probe.alive = probe.estimate.point > search.rule.fallback_threshold();
    return probe;
}

namespace {

CriticalEstimate bisect(const Topology& topology, const InitSpec& init, const SimParams& base,
                        const CriticalSearch& search, CriticalKind kind, const EstimatorOptions& options)
{
    if (!(search.lo < search.hi))
        throw EstimationError("bracket needs lo < hi");
    if (!(search.tolerance > 0.0))
        throw EstimationError("tolerance must be > 0");
    if (search.lo < 0.0)
        throw EstimationError("bracket must lie in lambda >= 0");

    CriticalEstimate est;
    est.kind = kind;
    est.initial_lo = search.lo;
    est.initial_hi = search.hi;

    const Probe at_lo = classify_probe(topology, init, base, search.lo, kind, search, options);
    const Probe at_hi = classify_probe(topology, init, base, search.hi, kind, search, options);
    est.trace.push_back(at_lo);
    est.trace.push_back(at_hi);
    if (at_lo.alive || !at_hi.alive)
    {
        std::ostringstream os;
        os << "bracket (" << search.lo << ", " << search.hi << ") does not separate the regimes for "
           << to_string(kind) << ": lower end classified " << (at_lo.alive ? "alive" : "dead")
           << ", upper end classified " << (at_hi.alive ? "alive" : "dead")
           << "; widen the bracket so the lower end dies out and the upper end survives";
        throw BracketError(os.str());
    }

    est.lo = search.lo;
    est.hi = search.hi;
    while (est.hi - est.lo > search.tolerance)
    {
        const double mid = 0.5 * (est.lo + est.hi);
        const Probe probe = classify_probe(topology, init, base, mid, kind, search, options);
        est.trace.push_back(probe);
        if (probe.alive)
            est.hi = mid;
        else
            est.lo = mid;
    }
    return est;
}

}  // namespace

CriticalEstimate estimate_lambda_c(const Topology& topology, const InitSpec& init, const SimParams& base,
                                   const CriticalSearch& search, const EstimatorOptions& options)
{
    return bisect(topology, init, base, search, CriticalKind::lambda_c, options);
}

CriticalEstimate estimate_lambda_cc(const Topology& topology, const InitSpec& init, const SimParams& base,
                                    const CriticalSearch& search, const EstimatorOptions& options)
{
    return bisect(topology, init, base, search, CriticalKind::lambda_cc, options);
}

std::string to_string(Regime regime)
{
    switch (regime)
    {
    case Regime::subcritical:
        return "subcritical";
    case Regime::weak_survival:
        return "weak-survival";
    case Regime::strong_survival:
        return "strong-survival";
    case Regime::inconclusive:
        return "inconclusive";
    }
    return "unknown";
}

RegimeVerdict classify_regime(const Topology& tree, double lambda, const SimParams& params,
                              std::uint64_t replicates, std::uint64_t master_seed, const RegimeOptions& regime,
                              const EstimatorOptions& options)
{
    if (!tree.is_tree())
        throw EstimationError("regime classification needs a tree topology");
    if (regime.recurrence_depth < 1)
        throw EstimationError("recurrence depth must be >= 1");

    SimParams p = params;
    p.lambda1 = lambda;
    p.lambda2 = 0.0;
    const InitSpec init = InitSpec::single(Strain::one);

    RegimeVerdict v;
    v.lambda = lambda;
    v.survival = survival_probability(tree, init, p, replicates, master_seed, options);

    v.recurrence_depth = std::min(regime.recurrence_depth, tree.extent());
    const Topology local = Topology::tree(tree.d(), v.recurrence_depth);
    SimParams local_params = p;
    local_params.max_infected = 0;
    v.recurrence = root_recurrence_probability(local, init, local_params, replicates, regime.window_fraction,
                                               derive_seed(master_seed, 0x7265), options);
    v.recurrence.conditioning += " on the ball of radius " + std::to_string(v.recurrence_depth);

    if (v.survival.upper < regime.subcritical_upper)
        v.classification = Regime::subcritical;
    else if (v.recurrence.lower > regime.strong_lower)
        v.classification = Regime::strong_survival;
    else if (v.survival.lower > regime.weak_survival_lower && v.recurrence.upper < regime.weak_recurrence_upper)
        v.classification = Regime::weak_survival;
    else
        v.classification = Regime::inconclusive;
    return v;
}

std::vector<EstimateCI> pair_coexistence_from(const std::vector<ReplicateRecord>& records, std::size_t ix,
                                              std::size_t iy)
{
    if (records.empty())
        throw EstimationError("empty ensemble");
    const std::size_t times = records.front().samples.size();
    std::vector<EstimateCI> out;
    for (std::size_t k = 0; k < times; ++k)
    {
        std::uint64_t hits = 0;
        std::uint64_t seen = 0;
        for (const auto& r : records)
        {
            if (k >= r.samples.size())
                continue;  // capped before this time
            ++seen;
            const auto& obs = r.samples[k].observed;
            hits += (obs.at(ix) == Strain::one && obs.at(iy) == Strain::two) ? 1 : 0;
        }
        if (seen == 0)
            throw EstimationError("every replicate stopped before a requested sample time");
        auto ci = wilson_interval(hits, seen);
        ci.conditioning = "x in state 1 and y in state 2 at t = " + std::to_string(records.front().samples[k].time);
        out.push_back(std::move(ci));
    }
    return out;
}

EstimateCI pair_coexistence_probability(const Topology& topology, const InitSpec& init, const SimParams& params,
                                        const SiteId& x, const SiteId& y, double t, std::uint64_t replicates,
                                        std::uint64_t master_seed, const EstimatorOptions& options)
{
    require_replicates(replicates);
    if (!topology.contains(x) || !topology.contains(y))
        throw TopologyError("pair coexistence sites must belong to " + topology.describe());
    SimParams p = params;
    p.t_max = t;
    p.sample_times = {t};
    p.observe = {x, y};
    p.watch_from.reset();
    p.max_infected = 0;
    const auto records = run_ensemble(topology, init, p, replicates, master_seed, options);
    return pair_coexistence_from(records, 0, 1).front();
}

std::vector<CrowdOutPoint> crowd_out_from(const std::vector<ReplicateRecord>& records, std::size_t observed_index)
{
    std::vector<const ReplicateRecord*> kept;
    for (const auto& r : records)
        if (r.final_count2 > 0)
            kept.push_back(&r);
    if (kept.size() < kMinConditioned)
        throw EstimationError("conditioning event (strain 2 present at t_max) occurred in " +
                              std::to_string(kept.size()) + " replicates; need at least " +
                              std::to_string(kMinConditioned) + ", increase the replicate count");
    const std::size_t times = kept.front()->samples.size();
    std::vector<CrowdOutPoint> curve;
    for (std::size_t k = 0; k < times; ++k)
    {
        std::uint64_t ones = 0;
        std::uint64_t twos = 0;
        for (const auto* r : kept)
        {
            const Strain s = r->samples.at(k).observed.at(observed_index);
            ones += s == Strain::one ? 1 : 0;
            twos += s == Strain::two ? 1 : 0;
        }
        CrowdOutPoint pt;
        pt.time = kept.front()->samples[k].time;
        pt.strain1 = wilson_interval(ones, kept.size());
        pt.strain2 = wilson_interval(twos, kept.size());
        pt.strain1.conditioning = pt.strain2.conditioning = "given strain 2 present at t_max";
        curve.push_back(std::move(pt));
    }
    return curve;
}

std::vector<CrowdOutPoint> crowd_out_curve(const Topology& topology, const InitSpec& init, const SimParams& params,
                                           const SiteId& site, const std::vector<double>& sample_times,
                                           std::uint64_t replicates, std::uint64_t master_seed,
                                           const EstimatorOptions& options)
{
    require_replicates(replicates);
    if (!topology.contains(site))
        throw TopologyError("crowd-out site must belong to " + topology.describe());
    SimParams p = params;
    p.sample_times = sample_times;
    p.observe = {site};
    p.watch_from.reset();
    p.max_infected = 0;  // the condition needs the exact strain-2 state at t_max
    const auto records = run_ensemble(topology, init, p, replicates, master_seed, options);
    return crowd_out_from(records, 0);
}

EstimateCI coexistence_probability(const Topology& topology, const InitSpec& init, const SimParams& params, double t,
                                   std::uint64_t replicates, std::uint64_t master_seed,
                                   const EstimatorOptions& options)
{
    require_replicates(replicates);
    if (!init.may_contain(Strain::one) || !init.may_contain(Strain::two))
        throw EstimationError("coexistence needs an initial configuration with both strains");
    SimParams p = params;
    p.t_max = t;
    p.sample_times.clear();
    p.observe.clear();
    p.watch_from.reset();
    const auto records = run_ensemble(topology, init, p, replicates, master_seed, options);
    auto ci = proportion(records, [](const ReplicateRecord& r) { return r.final_count1 > 0 && r.final_count2 > 0; });
    ci.conditioning = "proxy: both strains present at t (or both past the explosion cap)";
    return ci;
}

}  // namespace strainwars
