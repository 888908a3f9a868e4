#include "strainwars/meanfield.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace strainwars::meanfield;

TEST(Derivatives, DirectSubstitution)
{
    const auto [d1, d2] = derivatives({0.2, 0.3, 0.0}, {2, 1}, {3, 1});
    EXPECT_NEAR(d1, 0.0, 1e-15);
    EXPECT_NEAR(d2, 0.15, 1e-15);
}

TEST(Derivatives, FixedPoints)
{
    const auto [a1, a2] = derivatives({0, 0, 0}, {2.5, 0.7}, {1.3, 0.4});
    EXPECT_EQ(a1, 0.0);
    EXPECT_EQ(a2, 0.0);
    const StrainParams s2{3, 1};
    const auto [b1, b2] = derivatives({0, 1.0 - 1.0 / 3.0, 0}, {2, 1}, s2);
    EXPECT_EQ(b1, 0.0);
    EXPECT_NEAR(b2, 0.0, 1e-15);
}

TEST(Derivatives, FlowPointsIntoSimplexOnFace)
{
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(0, 1), rate(0.1, 5);
    for (int i = 0; i < 1000; ++i)
    {
        const double u1 = u(gen);
        const auto [d1, d2] = derivatives({u1, 1.0 - u1, 0}, {rate(gen), rate(gen)}, {rate(gen), rate(gen)});
        EXPECT_LE(d1 + d2, 1e-15);
    }
}

TEST(Integrate, PureDecay)
{
    const auto traj = integrate({0, 1}, {0, 1}, {0.5, 0.3, 0}, 5.0, 1e-3);
    const auto& last = traj.samples.back();
    EXPECT_DOUBLE_EQ(last.time, 5.0);
    EXPECT_NEAR(last.u1, 0.5 * std::exp(-5.0), 1e-6);
    EXPECT_NEAR(last.u2, 0.3 * std::exp(-5.0), 1e-6);
    EXPECT_EQ(traj.samples.size(), 5001u);
}

TEST(Integrate, LogisticLimit)
{
    const auto traj = integrate({2, 1}, {3, 1}, {0, 0.1, 0}, 50.0);
    EXPECT_NEAR(traj.samples.back().u2, 2.0 / 3.0, 1e-4);
    EXPECT_EQ(traj.samples.back().u1, 0.0);
}

TEST(Integrate, StrongerStrainExcludesWeaker)
{
    const auto traj = integrate({2, 1}, {3, 1}, {0.01, 0.6667, 0}, 50.0);
    EXPECT_LT(traj.samples.back().u1, 1e-6);
}

TEST(Integrate, AxisInvariance)
{
    const auto traj = integrate({4, 1}, {1.5, 0.5}, {0, 0.2, 0}, 20.0, 0.01);
    for (const auto& s : traj.samples)
        EXPECT_EQ(s.u1, 0.0);
}

TEST(Integrate, FourthOrderConvergence)
{
    // Error at step h against the analytic solution, maximized over the
    // coarse grid; the reference step h/16 is checked to be far smaller.
    const auto max_error = [](double h) {
        const auto traj = integrate({0, 1}, {0, 2}, {0.5, 0.3, 0}, 4.0, h);
        double err = 0;
        for (const auto& s : traj.samples)
        {
            err = std::max(err, std::abs(s.u1 - 0.5 * std::exp(-s.time)));
            err = std::max(err, std::abs(s.u2 - 0.3 * std::exp(-2 * s.time)));
        }
        return err;
    };
    const double h = 0.2;
    const double coarse = max_error(h);
    const double fine = max_error(h / 2);
    const double reference = max_error(h / 16);
    EXPECT_LT(reference, fine / 100);
    EXPECT_GE(coarse / fine, 8.0);
}

TEST(Integrate, SimplexConservedOnRandomRuns)
{
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> lam(0.1, 6), del(0.2, 3), u(0, 1);
    for (int i = 0; i < 50; ++i)
    {
        const double a = u(gen), b = u(gen) * (1 - a);
        const auto traj = integrate({lam(gen), del(gen)}, {lam(gen), del(gen)}, {a, b, 0}, 10.0, 0.01);
        for (const auto& s : traj.samples)
        {
            EXPECT_LE(s.u1 + s.u2, 1 + 1e-9);
            EXPECT_GE(s.u1, -1e-9);
            EXPECT_GE(s.u2, -1e-9);
        }
    }
}

TEST(Integrate, UnstableStepReported)
{
    try
    {
        integrate({0, 1}, {0, 1}, {0.5, 0.3, 0}, 30.0, 3.0);
        FAIL() << "expected IntegrationError";
    }
    catch (const IntegrationError& e)
    {
        EXPECT_NE(std::string(e.what()).find("dt"), std::string::npos) << e.what();
    }
}

TEST(Integrate, RejectsInvalidInput)
{
    EXPECT_THROW(integrate({-1, 1}, {1, 1}, {0.1, 0.1, 0}, 1.0), std::invalid_argument);
    EXPECT_THROW(integrate({1, 0}, {1, 1}, {0.1, 0.1, 0}, 1.0), std::invalid_argument);
    EXPECT_THROW(integrate({1, 1}, {1, 1}, {0.7, 0.7, 0}, 1.0), std::invalid_argument);
    EXPECT_THROW(integrate({1, 1}, {1, 1}, {0.1, 0.1, 0}, 1.0, 0.0), std::invalid_argument);
}

TEST(Equilibrium, ClosedForm)
{
    EXPECT_DOUBLE_EQ(endemic_equilibrium({2, 1}), 0.5);
    EXPECT_DOUBLE_EQ(endemic_equilibrium({1, 1}), 0.0);
    EXPECT_DOUBLE_EQ(endemic_equilibrium({3, 1}), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(endemic_equilibrium({0.5, 1}), 0.0);
}

TEST(Invasion, Rates)
{
    EXPECT_NEAR(invasion_growth_rate({3, 1}, {2, 1}), -1.0 / 3.0, 1e-15);
    EXPECT_EQ(invasion_growth_rate({2, 1}, {2, 1}), 0.0);
    EXPECT_NEAR(invasion_growth_rate({2, 1}, {3, 1}), 0.5, 1e-15);
    EXPECT_THROW(invasion_growth_rate({1, 1}, {3, 1}), std::invalid_argument);
}

TEST(Invasion, SignLawAndAntisymmetry)
{
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> del(0.5, 2), mult(1.01, 4);
    for (int i = 0; i < 500; ++i)
    {
        const double d1 = del(gen), d2 = del(gen);
        const StrainParams a{mult(gen) * d1, d1}, b{mult(gen) * d2, d2};
        const double ab = invasion_growth_rate(a, b);
        const double ba = invasion_growth_rate(b, a);
        if (b.ratio() > a.ratio())
        {
            EXPECT_GT(ab, 0);
            EXPECT_LT(ba, 0);
        }
        else if (b.ratio() < a.ratio())
        {
            EXPECT_LT(ab, 0);
            EXPECT_GT(ba, 0);
        }
    }
}

TEST(Winner, Verdicts)
{
    EXPECT_EQ(predict_winner({2, 1}, {3, 1}), Verdict::strain2);
    EXPECT_EQ(predict_winner({4, 2}, {3, 2}), Verdict::strain1);
    EXPECT_EQ(predict_winner({0.5, 1}, {0.9, 1}), Verdict::both_die_out);
    EXPECT_EQ(predict_winner({2, 1}, {4, 2}), Verdict::tie);
    EXPECT_EQ(to_string(Verdict::tie), "degenerate-tie");
}

TEST(Winner, ScaleInvariance)
{
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> r(0.1, 5), k(0.1, 10);
    for (int i = 0; i < 500; ++i)
    {
        const StrainParams a{r(gen), r(gen)}, b{r(gen), r(gen)};
        const double c = k(gen);
        EXPECT_EQ(predict_winner(a, b), predict_winner({a.lambda * c, a.delta * c}, b));
    }
}
