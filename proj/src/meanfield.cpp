#include "strainwars/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace strainwars::meanfield {

void StrainParams::validate(const std::string& name) const
{
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument(name + ".lambda must be finite and >= 0");
    if (!(delta > 0.0) || !std::isfinite(delta))
        throw std::invalid_argument(name + ".delta must be finite and > 0");
}

void MeanFieldState::validate() const
{
    if (!(u1 >= 0.0) || !(u2 >= 0.0) || u1 + u2 > 1.0)
        throw std::invalid_argument("mean-field state must satisfy u1 >= 0, u2 >= 0, u1 + u2 <= 1");
    if (!(time >= 0.0))
        throw std::invalid_argument("mean-field time must be >= 0");
}

std::pair<double, double> derivatives(const MeanFieldState& state, const StrainParams& s1, const StrainParams& s2)
{
    const double u0 = state.u0();
    return {s1.lambda * state.u1 * u0 - s1.delta * state.u1, s2.lambda * state.u2 * u0 - s2.delta * state.u2};
}

namespace {

MeanFieldState rk4_step(const MeanFieldState& s, double h, const StrainParams& s1, const StrainParams& s2)
{
    auto shifted = [&](double a1, double a2, double scale) {
        return MeanFieldState{s.u1 + scale * a1, s.u2 + scale * a2, s.time};
    };
    const auto [k1a, k1b] = derivatives(s, s1, s2);
    const auto [k2a, k2b] = derivatives(shifted(k1a, k1b, h / 2), s1, s2);
    const auto [k3a, k3b] = derivatives(shifted(k2a, k2b, h / 2), s1, s2);
    const auto [k4a, k4b] = derivatives(shifted(k3a, k3b, h), s1, s2);
    return MeanFieldState{s.u1 + h / 6 * (k1a + 2 * k2a + 2 * k3a + k4a),
                          s.u2 + h / 6 * (k1b + 2 * k2b + 2 * k3b + k4b), s.time + h};
}

void project_or_fail(MeanFieldState& s, double dt)
{
    const bool negative = s.u1 < -kSimplexTolerance || s.u2 < -kSimplexTolerance;
    const bool overfull = s.u1 + s.u2 > 1.0 + kSimplexTolerance;
    if (negative || overfull || !std::isfinite(s.u1) || !std::isfinite(s.u2))
    {
        std::ostringstream os;
        os << "integration left the simplex at t=" << s.time << " (u1=" << s.u1 << ", u2=" << s.u2
           << "); retry with a smaller dt than " << dt;
        throw IntegrationError(os.str());
    }
    s.u1 = std::max(s.u1, 0.0);
    s.u2 = std::max(s.u2, 0.0);
    const double total = s.u1 + s.u2;
    if (total > 1.0)
    {
        s.u1 /= total;
        s.u2 /= total;
    }
}

}  // namespace

Trajectory integrate(const StrainParams& s1, const StrainParams& s2, const MeanFieldState& init, double t_end,
                     double dt)
{
    s1.validate("strain1");
    s2.validate("strain2");
    init.validate();
    if (!(dt > 0.0) || !(t_end > init.time) || dt > t_end - init.time)
        throw std::invalid_argument("integrate requires 0 < dt <= t_end - t0");

    Trajectory traj;
    traj.step = dt;
    const auto steps = static_cast<std::size_t>(std::ceil((t_end - init.time) / dt - 1e-9));
    traj.samples.reserve(steps + 1);
    traj.samples.push_back(init);

    MeanFieldState s = init;
    for (std::size_t i = 1; i <= steps; ++i)
    {
        // Sample times are t0 + i*dt computed directly, not accumulated.
        const double target = i == steps ? t_end : init.time + static_cast<double>(i) * dt;
        s = rk4_step(s, target - s.time, s1, s2);
        s.time = target;
        project_or_fail(s, dt);
        traj.samples.push_back(s);
    }
    return traj;
}

double endemic_equilibrium(const StrainParams& s)
{
    s.validate();
    if (s.lambda <= s.delta)
        return 0.0;
    return 1.0 - s.delta / s.lambda;
}

double invasion_growth_rate(const StrainParams& resident, const StrainParams& invader)
{
    resident.validate("resident");
    invader.validate("invader");
    if (resident.lambda <= resident.delta)
        throw std::invalid_argument("resident strain is subcritical (lambda <= delta): no endemic equilibrium to invade");
    return invader.lambda * resident.delta / resident.lambda - invader.delta;
}

std::string to_string(Verdict v)
{
    switch (v)
    {
    case Verdict::strain1:
        return "strain1";
    case Verdict::strain2:
        return "strain2";
    case Verdict::tie:
        return "degenerate-tie";
    case Verdict::both_die_out:
        return "both-die-out";
    }
    return "unknown";
}

Verdict predict_winner(const StrainParams& s1, const StrainParams& s2)
{
    s1.validate("strain1");
    s2.validate("strain2");
    // Compare lambda1*delta2 against lambda2*delta1 so that rescaling a strain
    // never changes the verdict through rounding of the ratios.
    const double r1 = s1.lambda * s2.delta;
    const double r2 = s2.lambda * s1.delta;
    const bool alive1 = s1.lambda > s1.delta;
    const bool alive2 = s2.lambda > s2.delta;
    if (!alive1 && !alive2)
        return Verdict::both_die_out;
    if (r1 == r2)
        return Verdict::tie;
    return r1 > r2 ? Verdict::strain1 : Verdict::strain2;
}

}  // namespace strainwars::meanfield
