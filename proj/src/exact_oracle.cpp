#include "strainwars/exact_oracle.hpp"

#include "strainwars/replicates.hpp"
#include "strainwars/rng.hpp"

#include <algorithm>
#include <cmath>

namespace strainwars {

namespace {

constexpr double kTailTarget = 1e-13;

std::vector<SiteId> oracle_sites(const Topology& topology)
{
    if (topology.site_count() > kOracleMaxSites)
        throw EstimationError("exact oracle handles at most " + std::to_string(kOracleMaxSites) + " sites, " +
                              topology.describe() + " has " + to_string(topology.site_count()));
    return topology.enumerate_sites();
}

std::size_t state_count(std::size_t sites)
{
    std::size_t n = 1;
    for (std::size_t i = 0; i < sites; ++i)
        n *= 3;
    return n;
}

struct Transition
{
    std::uint32_t from;
    std::uint32_t to;
    double rate;
};

struct Generator
{
    std::vector<Transition> transitions;
    std::vector<double> exit_rate;
};

Generator build_generator(const Topology& topology, const ExactDistribution& layout, const SimParams& params)
{
    const std::size_t n_states = layout.probabilities.size();
    Generator g;
    g.exit_rate.assign(n_states, 0.0);
    std::vector<std::size_t> power(layout.sites.size(), 1);
    for (std::size_t k = 1; k < power.size(); ++k)
        power[k] = power[k - 1] * 3;

    for (std::size_t s = 0; s < n_states; ++s)
    {
        const Configuration config = layout.configuration(s);
        for (std::size_t k = 0; k < layout.sites.size(); ++k)
        {
            const auto rates = site_rates(topology, config, layout.sites[k], params);
            const std::size_t digit = (s / power[k]) % 3;
            const double to[3] = {rates.to_susceptible, rates.to_strain1, rates.to_strain2};
            for (std::size_t target = 0; target < 3; ++target)
            {
                if (target == digit || to[target] <= 0.0)
                    continue;
                const std::size_t next = s - digit * power[k] + target * power[k];
                g.transitions.push_back({static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(next), to[target]});
                g.exit_rate[s] += to[target];
            }
        }
    }
    return g;
}

}  // namespace

std::size_t ExactDistribution::index_of(const Configuration& config) const
{
    std::size_t index = 0;
    std::size_t power = 1;
    std::size_t matched = 0;
    for (const auto& site : sites)
    {
        const Strain s = state_of(config, site);
        if (s != Strain::none)
            ++matched;
        index += static_cast<std::size_t>(as_int(s)) * power;
        power *= 3;
    }
    if (matched != config.size())
        throw TopologyError("configuration has sites outside the oracle graph");
    return index;
}

Configuration ExactDistribution::configuration(std::size_t index) const
{
    Configuration config;
    for (const auto& site : sites)
    {
        const auto digit = index % 3;
        index /= 3;
        if (digit != 0)
            config.emplace(site, digit == 1 ? Strain::one : Strain::two);
    }
    return config;
}

ExactDistribution propagate(const Topology& topology, const ExactDistribution& from, const SimParams& params,
                            double dt)
{
    if (!(dt >= 0.0))
        throw EstimationError("propagation time must be >= 0");
    ExactDistribution out;
    out.sites = from.sites;
    out.time = from.time + dt;
    out.probabilities.assign(from.probabilities.size(), 0.0);

    const Generator g = build_generator(topology, from, params);
    const double uniform_rate = g.exit_rate.empty() ? 0.0 : *std::max_element(g.exit_rate.begin(), g.exit_rate.end());
    if (uniform_rate == 0.0 || dt == 0.0)
    {
        out.probabilities = from.probabilities;
        out.terms = 1;
        return out;
    }

    // p(t) = sum_k Poisson(k; q t) * p0 P^k with P = I + Q / q.
    const double mean = uniform_rate * dt;
    std::vector<double> current = from.probabilities;
    std::vector<double> next(current.size());
    double cumulative = 0.0;
    for (std::size_t k = 0;; ++k)
    {
        const double log_w = -mean + static_cast<double>(k) * std::log(mean) - std::lgamma(static_cast<double>(k) + 1.0);
        const double w = std::exp(log_w);
        for (std::size_t s = 0; s < current.size(); ++s)
            out.probabilities[s] += w * current[s];
        cumulative += w;
        out.terms = k + 1;

        // Past the mode the Poisson terms decay at least geometrically with
        // ratio mean / (k + 2), which bounds the remaining tail.
        const double kk = static_cast<double>(k);
        if (kk + 2.0 > mean)
        {
            const double next_w = w * mean / (kk + 1.0);
            const double ratio = mean / (kk + 2.0);
            const double tail = next_w / (1.0 - ratio);
            if (tail < kTailTarget && cumulative > 0.5)
            {
                out.truncation_error = tail;
                break;
            }
        }

        for (std::size_t s = 0; s < current.size(); ++s)
            next[s] = current[s] * (1.0 - g.exit_rate[s] / uniform_rate);
        for (const auto& tr : g.transitions)
            next[tr.to] += current[tr.from] * tr.rate / uniform_rate;
        current.swap(next);
    }
    return out;
}

ExactDistribution exact_small_graph_distribution(const Topology& topology, const Configuration& init,
                                                 const SimParams& params, double t)
{
    validate_configuration(topology, init);
    ExactDistribution start;
    start.sites = oracle_sites(topology);
    start.probabilities.assign(state_count(start.sites.size()), 0.0);
    start.probabilities[start.index_of(init)] = 1.0;
    return propagate(topology, start, params, t);
}

std::vector<double> empirical_distribution(const Topology& topology, const Configuration& init,
                                           const SimParams& params, double t, std::uint64_t replicates,
                                           std::uint64_t master_seed, const EstimatorOptions& options)
{
    if (replicates == 0)
        throw EstimationError("empirical distribution needs at least one replicate");
    ExactDistribution layout;
    layout.sites = oracle_sites(topology);
    const std::size_t n_states = state_count(layout.sites.size());

    SimParams p = params;
    p.t_max = t;
    p.sample_times.clear();
    p.observe.clear();
    p.watch_from.reset();
    p.max_infected = 0;
    const auto indices = parallel_map<std::size_t>(0, replicates, options.parallelism, [&](std::uint64_t i) {
        return layout.index_of(run(topology, init, p, replicate_seed(master_seed, i)).final_config);
    });
    std::vector<double> freq(n_states, 0.0);
    for (const auto idx : indices)
        freq[idx] += 1.0;
    for (auto& f : freq)
        f /= static_cast<double>(replicates);
    return freq;
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q)
{
    if (p.size() != q.size())
        throw EstimationError("distributions have different supports");
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        sum += std::abs(p[i] - q[i]);
    return 0.5 * sum;
}

}  // namespace strainwars
