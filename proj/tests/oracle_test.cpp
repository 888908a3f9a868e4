#include "strainwars/exact_oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace strainwars;

namespace {

SimParams params(double l1, double l2)
{
    SimParams p;
    p.lambda1 = l1;
    p.lambda2 = l2;
    p.t_max = 1.0;
    return p;
}

}  // namespace

TEST(Oracle, SingleSiteDecay)
{
    const auto t = Topology::path_graph(1);
    for (double time : {0.1, 1.0, 3.0})
    {
        const auto d = exact_small_graph_distribution(t, init_single(t, Strain::one, t.origin()), params(0, 0), time);
        EXPECT_NEAR(d.probability(init_single(t, Strain::one, t.origin())), std::exp(-time), 1e-10);
        EXPECT_LT(d.truncation_error, 1e-12);
    }
}

TEST(Oracle, TwoIndependentRecoveries)
{
    const auto t = Topology::path_graph(2);
    const Configuration both{{t.parse_site("0"), Strain::one}, {t.parse_site("1"), Strain::one}};
    for (double time : {0.5, 2.0})
    {
        const auto d = exact_small_graph_distribution(t, both, params(0, 0), time);
        EXPECT_NEAR(d.probability({}), std::pow(1 - std::exp(-time), 2), 1e-10);
    }
}

TEST(Oracle, ProbabilitiesSumToOne)
{
    const auto t = Topology::torus(1, 4);
    const auto d = exact_small_graph_distribution(t, InitSpec::pair().realize(t, 0), params(1.5, 2), 3.0);
    double sum = 0;
    for (double p : d.probabilities)
    {
        EXPECT_GE(p, -1e-15);
        sum += p;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_EQ(d.probabilities.size(), 81u);
}

TEST(Oracle, ChapmanKolmogorov)
{
    for (const auto& t : {Topology::path_graph(3), Topology::torus(1, 4), Topology::tree(2, 1)})
    {
        const auto init = InitSpec::pair(t.enumerate_sites()[0], t.enumerate_sites()[1]).realize(t, 0);
        const SimParams p = params(1.2, 0.8);
        const auto direct = exact_small_graph_distribution(t, init, p, 2.0);
        const auto half = exact_small_graph_distribution(t, init, p, 0.7);
        const auto chained = propagate(t, half, p, 1.3);
        for (std::size_t i = 0; i < direct.probabilities.size(); ++i)
            EXPECT_NEAR(direct.probabilities[i], chained.probabilities[i], 1e-9) << t.describe();
    }
}

TEST(Oracle, SiteBudget)
{
    const auto t = Topology::torus(1, 9);
    EXPECT_THROW(exact_small_graph_distribution(t, {}, params(1, 0), 1.0), EstimationError);
}

TEST(Oracle, TwoStrainEngineAgreement)
{
    // Both strains active with unequal recovery rates on a 4-cycle.
    const auto t = Topology::torus(1, 4);
    SimParams p = params(1.3, 2.1);
    p.delta1 = 0.7;
    p.delta2 = 1.4;
    const auto init = InitSpec::pair().realize(t, 0);
    const auto exact = exact_small_graph_distribution(t, init, p, 1.5);
    const auto emp = empirical_distribution(t, init, p, 1.5, 40000, 17);
    EXPECT_LT(total_variation(exact.probabilities, emp), 0.02);
}

TEST(Oracle, TotalVariation)
{
    EXPECT_DOUBLE_EQ(total_variation({0.5, 0.5, 0}, {0, 0.5, 0.5}), 0.5);
    EXPECT_THROW(total_variation({1}, {0.5, 0.5}), EstimationError);
}
