#pragma once

#include "strainwars/contact_process.hpp"
#include "strainwars/estimators.hpp"
#include "strainwars/topology.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace strainwars {

/// Largest graph the dense oracle accepts (3^8 = 6561 states).
inline constexpr std::size_t kOracleMaxSites = 8;

/// Distribution over all 3^n configurations of a small graph. State index
/// encodes site k (in enumerate_sites order) as base-3 digit k.
struct ExactDistribution
{
    std::vector<SiteId> sites;
    std::vector<double> probabilities;
    double time = 0.0;
    /// Upper bound on the Poisson tail mass dropped from the series.
    double truncation_error = 0.0;
    std::size_t terms = 0;

    std::size_t index_of(const Configuration& config) const;
    Configuration configuration(std::size_t index) const;
    double probability(const Configuration& config) const { return probabilities.at(index_of(config)); }
};

/// Transient law at time t of the process started from `init`, computed by
/// uniformization of the generator assembled from site_rates. Throws
/// EstimationError for graphs with more than kOracleMaxSites sites.
ExactDistribution exact_small_graph_distribution(const Topology& topology, const Configuration& init,
                                                 const SimParams& params, double t);

/// Propagates an existing distribution forward by dt.
ExactDistribution propagate(const Topology& topology, const ExactDistribution& from, const SimParams& params,
                            double dt);

/// Empirical law of the configuration at time t over `replicates` runs.
std::vector<double> empirical_distribution(const Topology& topology, const Configuration& init,
                                           const SimParams& params, double t, std::uint64_t replicates,
                                           std::uint64_t master_seed, const EstimatorOptions& options = {});

double total_variation(const std::vector<double>& p, const std::vector<double>& q);

}  // namespace strainwars
