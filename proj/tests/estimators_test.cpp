#include "strainwars/estimators.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace strainwars;

namespace {

SimParams params(double l1, double l2, double t_max)
{
    SimParams p;
    p.lambda1 = l1;
    p.lambda2 = l2;
    p.t_max = t_max;
    return p;
}

bool within(const EstimateCI& ci, double x) { return ci.lower <= x && x <= ci.upper; }

}  // namespace

TEST(Wilson, BracketsPointEstimate)
{
    for (std::uint64_t n : {1u, 2u, 10u, 1000u})
        for (std::uint64_t s = 0; s <= n; s += std::max<std::uint64_t>(1, n / 7))
        {
            const auto ci = wilson_interval(s, n);
            EXPECT_LE(0.0, ci.lower);
            EXPECT_LE(ci.lower, ci.point);
            EXPECT_LE(ci.point, ci.upper);
            EXPECT_LE(ci.upper, 1.0);
        }
    EXPECT_EQ(wilson_interval(0, 50).lower, 0.0);
    EXPECT_EQ(wilson_interval(50, 50).upper, 1.0);
    EXPECT_THROW(wilson_interval(1, 0), EstimationError);
    EXPECT_THROW(wilson_interval(5, 4), EstimationError);
}

TEST(Wilson, KnownValue)
{
    // 50/100: centre 0.5, half-width z*sqrt(0.25/100 + z^2/40000)/(1 + z^2/100).
    const double z = kWilsonZ95;
    const double half = z * std::sqrt(0.0025 + z * z / 40000.0) / (1 + z * z / 100.0);
    const auto ci = wilson_interval(50, 100);
    EXPECT_NEAR(ci.lower, 0.5 - half, 1e-12);
    EXPECT_NEAR(ci.upper, 0.5 + half, 1e-12);
}

TEST(Wilson, TightensWithMoreData)
{
    std::mt19937_64 gen(1);
    for (double p : {0.01, 0.2, 0.5, 0.9})
    {
        std::bernoulli_distribution b(p);
        std::uint64_t s = 0, n = 0;
        double last = 2.0;
        for (std::uint64_t target = 100; target <= 102400; target *= 4)
        {
            while (n < target)
            {
                s += b(gen);
                ++n;
            }
            const double w = wilson_interval(s, n).width();
            EXPECT_LE(w, last) << "p=" << p << " n=" << n;
            last = w;
        }
    }
}

TEST(Survival, PureDeath)
{
    const auto t = Topology::torus(1, 10);
    const auto ci = survival_probability(t, InitSpec::single(Strain::one), params(0, 0, 1.0), 100000, 9);
    EXPECT_TRUE(within(ci, std::exp(-1.0))) << ci.lower << " " << ci.upper;
    EXPECT_THROW(survival_probability(t, InitSpec::single(Strain::one), params(0, 0, 1), 0, 9), EstimationError);
}

TEST(Survival, SuperAndSubcriticalRing)
{
    const auto t = Topology::torus(1, 200);
    EXPECT_GT(survival_probability(t, InitSpec::single(Strain::one), params(3, 0, 100), 200, 4).point, 0.5);
    EXPECT_LT(survival_probability(t, InitSpec::single(Strain::one), params(0.5, 0, 100), 200, 4).point, 0.01);
}

TEST(Survival, MonotoneInLambdaWithCommonRandomNumbers)
{
    const auto t = Topology::torus(1, 100);
    const int n = 300;
    double prev = -1, prev_var = 0;
    for (double lambda : {1.2, 1.5, 1.8, 2.1, 2.4})
    {
        const auto ci = survival_probability(t, InitSpec::single(Strain::one), params(lambda, 0, 50), n, 21);
        const double var = ci.point * (1 - ci.point) / n;
        EXPECT_GE(ci.point, prev - 2 * std::sqrt(var + prev_var)) << lambda;
        prev = ci.point;
        prev_var = var;
    }
}

TEST(Survival, ParallelismDoesNotChangeResults)
{
    const auto t = Topology::torus(1, 60);
    const auto init = InitSpec::product(0.2, 0.2);
    const auto a = run_ensemble(t, init, params(2, 3, 10), 64, 5, EstimatorOptions{1});
    const auto b = run_ensemble(t, init, params(2, 3, 10), 64, 5, EstimatorOptions{4});
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        EXPECT_EQ(a[i].events, b[i].events);
        EXPECT_EQ(a[i].final_count1, b[i].final_count1);
        EXPECT_EQ(a[i].seed, b[i].seed);
    }
}

TEST(Recurrence, PureDeathRoot)
{
    const auto t = Topology::tree(3, 3);
    const auto ci = root_recurrence_probability(t, InitSpec::single(Strain::one), params(0, 0, 4), 20000, 0.5, 3);
    EXPECT_TRUE(within(ci, std::exp(-2.0))) << ci.point;
    EXPECT_THROW(root_recurrence_probability(Topology::torus(1, 10), InitSpec::single(Strain::one),
                                             params(0, 0, 4), 10, 0.5, 3),
                 EstimationError);
}

TEST(Critical, BisectionContract)
{
    const auto t = Topology::torus(1, 100);
    CriticalSearch s;
    s.lo = 0.5;
    s.hi = 3.0;
    s.tolerance = 0.25;
    s.replicates = 100;
    s.master_seed = 8;
    const auto est = estimate_lambda_c(t, InitSpec::single(Strain::one), params(0, 0, 100), s);
    EXPECT_GE(est.lo, s.lo);
    EXPECT_LE(est.hi, s.hi);
    EXPECT_LT(est.lo, est.hi);
    EXPECT_LE(est.hi - est.lo, s.tolerance);
    ASSERT_GE(est.trace.size(), 2u);
    EXPECT_EQ(est.trace[0].lambda, s.lo);
    EXPECT_FALSE(est.trace[0].alive);
    EXPECT_EQ(est.trace[1].lambda, s.hi);
    EXPECT_TRUE(est.trace[1].alive);

    // Replay the trace: alive probes lower hi, dead ones raise lo.
    double lo = s.lo, hi = s.hi;
    for (std::size_t i = 2; i < est.trace.size(); ++i)
    {
        const auto& p = est.trace[i];
        EXPECT_GT(p.lambda, lo);
        EXPECT_LT(p.lambda, hi);
        (p.alive ? hi : lo) = p.lambda;
    }
    EXPECT_EQ(lo, est.lo);
    EXPECT_EQ(hi, est.hi);
}

TEST(Critical, NonSeparatingBracket)
{
    const auto t = Topology::torus(1, 100);
    CriticalSearch s;
    s.lo = 2.5;
    s.hi = 4.0;
    s.replicates = 50;
    try
    {
        estimate_lambda_c(t, InitSpec::single(Strain::one), params(0, 0, 50), s);
        FAIL() << "expected BracketError";
    }
    catch (const BracketError& e)
    {
        EXPECT_NE(std::string(e.what()).find("widen"), std::string::npos) << e.what();
    }
}

TEST(Critical, RecurrenceBisectionOnRing)
{
    const auto t = Topology::torus(1, 100);
    CriticalSearch s;
    s.lo = 0.5;
    s.hi = 3.0;
    s.tolerance = 0.3;
    s.replicates = 100;
    const auto est = estimate_lambda_cc(t, InitSpec::single(Strain::one), params(0, 0, 100), s);
    EXPECT_EQ(est.kind, CriticalKind::lambda_cc);
    EXPECT_LE(est.hi - est.lo, s.tolerance);
}

TEST(Regime, Subcritical)
{
    const auto t = Topology::tree(8, 40);
    SimParams p = params(0, 0, 200);
    p.max_infected = 100;
    const auto v = classify_regime(t, 0.05, p, 200, 1);
    EXPECT_EQ(v.classification, Regime::subcritical);
    EXPECT_EQ(to_string(v.classification), "subcritical");
    EXPECT_THROW(classify_regime(Topology::torus(1, 10), 0.5, p, 10, 1), EstimationError);
}

TEST(PairCoexistence, AbsentStrainGivesZero)
{
    const auto t = Topology::torus(1, 50);
    const auto ci = pair_coexistence_probability(t, InitSpec::product(0, 0.3), params(0, 3, 20), t.origin(),
                                                 t.parse_site("25"), 20, 200, 2);
    EXPECT_EQ(ci.point, 0.0);
    EXPECT_EQ(ci.successes, 0u);
}

TEST(PairCoexistence, LabelSwapSwapsSites)
{
    const auto t = Topology::torus(1, 40);
    SimParams p = params(2, 2.5, 5);
    p.sample_times = {1, 5};
    p.observe = {t.origin(), t.parse_site("20")};
    auto records = run_ensemble(t, InitSpec::product(0.3, 0.3), p, 300, 6);
    const auto forward = pair_coexistence_from(records, 0, 1);
    for (auto& r : records)
    {
        std::swap(r.final_count1, r.final_count2);
        for (auto& s : r.samples)
        {
            std::swap(s.count1, s.count2);
            for (auto& o : s.observed)
                o = o == Strain::one ? Strain::two : (o == Strain::two ? Strain::one : o);
        }
    }
    const auto swapped = pair_coexistence_from(records, 1, 0);
    for (std::size_t k = 0; k < forward.size(); ++k)
    {
        EXPECT_EQ(forward[k].successes, swapped[k].successes);
        EXPECT_EQ(forward[k].point, swapped[k].point);
    }
}

TEST(CrowdOut, NoStrainOneMeansZeroCurve)
{
    const auto t = Topology::torus(1, 50);
    const auto curve = crowd_out_curve(t, InitSpec::product(0, 0.3), params(0, 3, 20), t.origin(), {1, 10, 20},
                                       200, 3);
    ASSERT_EQ(curve.size(), 3u);
    for (const auto& pt : curve)
        EXPECT_EQ(pt.strain1.point, 0.0);
}

TEST(CrowdOut, RareConditioningIsAnError)
{
    const auto t = Topology::torus(1, 20);
    EXPECT_THROW(crowd_out_curve(t, InitSpec::product(0.1, 0.1), params(0, 0, 20), t.origin(), {20}, 150, 3),
                 EstimationError);
}

TEST(Coexistence, IndependentPureDeaths)
{
    const auto t = Topology::torus(1, 10);
    const auto ci = coexistence_probability(t, InitSpec::pair(), params(0, 0, 1), 1.0, 20000, 12);
    EXPECT_TRUE(within(ci, std::exp(-2.0))) << ci.point;
    EXPECT_THROW(coexistence_probability(t, InitSpec::single(Strain::one), params(0, 0, 1), 1.0, 10, 1),
                 EstimationError);
}
