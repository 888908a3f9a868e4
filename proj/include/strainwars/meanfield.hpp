#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace strainwars::meanfield {

/// Infection rate per contact and recovery rate of one strain.
struct StrainParams
{
    double lambda = 0.0;
    double delta = 1.0;

    /// Throws std::invalid_argument unless lambda >= 0 and delta > 0.
    void validate(const std::string& name = "strain") const;
    double ratio() const { return lambda / delta; }
};

/// Infected densities; the susceptible density is always 1 - u1 - u2.
struct MeanFieldState
{
    double u1 = 0.0;
    double u2 = 0.0;
    double time = 0.0;

    double u0() const { return 1.0 - u1 - u2; }
    void validate() const;
};

struct Trajectory
{
    std::vector<MeanFieldState> samples;
    double step = 0.0;
    std::string method = "rk4";
};

class IntegrationError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Tolerance for leaving the simplex. Smaller excursions are clamped back,
/// larger ones abort the integration.
inline constexpr double kSimplexTolerance = 1e-9;
/// u1 below this is treated as extinct.
inline constexpr double kExtinctionDensity = 1e-9;
inline constexpr double kDefaultStep = 1e-3;

std::pair<double, double> derivatives(const MeanFieldState& state, const StrainParams& s1, const StrainParams& s2);

/// Fixed-step classical Runge-Kutta from init.time to t_end, one sample per
/// step (the last step is shortened to land on t_end).
Trajectory integrate(const StrainParams& s1, const StrainParams& s2, const MeanFieldState& init, double t_end,
                     double dt = kDefaultStep);

/// Single-strain endemic density max(0, 1 - delta / lambda).
double endemic_equilibrium(const StrainParams& s);

/// Per-capita growth rate of a rare invader against a resident at its endemic
/// equilibrium. Throws std::invalid_argument when the resident is subcritical.
double invasion_growth_rate(const StrainParams& resident, const StrainParams& invader);

enum class Verdict
{
    strain1,
    strain2,
    tie,
    both_die_out
};

std::string to_string(Verdict v);

/// Strain with the larger lambda / delta ratio excludes the other.
Verdict predict_winner(const StrainParams& s1, const StrainParams& s2);

}  // namespace strainwars::meanfield
