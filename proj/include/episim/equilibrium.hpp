#pragma once

#include <cstdint>
#include <string>

#include "episim/kernel.hpp"
#include "episim/lln.hpp"
#include "episim/trajectory.hpp"

namespace episim {

enum class Regime { DiseaseFree, Critical, Endemic };

std::string regime_name(Regime r);

struct EquilibriumReport {
    double R0 = 0.0;
    double E_inv_gamma_star = 0.0; // kInf when P(gamma_star = 0) > 0
    Regime regime = Regime::DiseaseFree;
    double S_star = 1.0;
    bool S_star_known = true; // false when the disease-free limit needs a trajectory
    double F_star = 0.0;
    double I_star = 0.0;
    // Root solver diagnostics.
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    int iterations = 0;
    double residual = 0.0;          // |H(F_star) - R0|
    bool closed_form_available = false;
    double closed_form_F_star = 0.0;
};

// H(x) = x \int_0^inf E[exp(-x \int_0^s gamma(r) dr)] ds. Exact closed form
// x E[zeta] + E[1/gamma_star] for indicator laws; otherwise a common-random-
// numbers Monte Carlo average of per-path closed forms (each path's time
// integral is exact, so the estimate is monotone in x sample-by-sample).
double evaluate_H(const KernelLaw& law, double x);

// The sampled route regardless of family; used to cross-check the closed form.
double evaluate_H_sampled(const KernelLaw& law, double x, int budget, std::uint64_t seed);

// Classifies the regime by R0 vs E[1/gamma_star] and, in the endemic case,
// solves H(x) = R0 by bracketed bisection (H is strictly increasing).
EquilibriumReport solve_endemic(const KernelLaw& law);

struct DiseaseFreeLimit {
    double S_star = 0.0;
    double truncation_bound = 0.0; // estimated error from cutting the horizon at T
    double F_at_T = 0.0;
};

// Evaluates the t -> inf limit of S_bar by truncating the time-infinite
// expectations at the grid horizon. Requires F_bar(T) <= f_threshold.
DiseaseFreeLimit disease_free_limit_S(const TrajectoryGrid& grid, const KernelLaw& law,
                                      const InitialLaw& init, const SolveConfig& cfg,
                                      double f_threshold = 1e-3);

struct InstabilityCheck {
    bool applicable = false; // endemic regime with F_bar(0) > 0
    double min_F = 0.0;
    bool above_floor = false;
};

// Evidence that the disease-free state is not approached: min of F_bar over
// the grid stays above `floor`.
InstabilityCheck instability_check(const TrajectoryGrid& grid, const EquilibriumReport& report,
                                   double floor = 0.05);

void write_equilibrium_json(const EquilibriumReport& report, const std::string& path);

} // namespace episim
