#pragma once

#include <cstdint>
#include <vector>

#include "episim/kernel.hpp"
#include "episim/trajectory.hpp"

namespace episim {

enum class SolverEngine { Auto, Exact, MonteCarlo };

struct SolveConfig {
    double T = 10.0;
    double dt = 0.01;
    int M = 500;                // per-cohort sample count (Monte Carlo engine)
    std::uint64_t seed = 1;
    SolverEngine engine = SolverEngine::Auto;
    double conservation_ceiling = 0.05;
    std::size_t memory_budget_scalars = 100000000;
};

// Solver by-products: engine choice, residual summary, the Monte Carlo
// half-sample spread of S_bar, and the time-infinite tail quantities used by
// the disease-free limit evaluation.
struct SolveInfo {
    bool exact_engine = true;
    double max_conservation_residual = 0.0;
    double mc_half_width_S = 0.0;
    double S_star_tail = 0.0;   // truncated evaluation of the t -> inf limit of S_bar
    double F_at_T = 0.0;
    double tail_integral_estimate = 0.0; // estimate of \int_T^inf F_bar from the decay rate
};

// Time-steps the coupled system
//   S(t) = E[gamma_0(t) e^{-int_0^t gamma_0 F}] + int_0^t E[gamma(t-s) e^{-int_s^t gamma(.-s) F}] S(s)F(s) ds
//   F(t) = I(0) lambda_bar_0(t) + int_0^t lambda_bar(t-s) S(s)F(s) ds
// and derives I, U and the conservation residual of the mass identity.
TrajectoryGrid solve_limit(const KernelLaw& law, const InitialLaw& init, const SolveConfig& cfg,
                           SolveInfo* info = nullptr);

// Max over the grid of the stored conservation residual.
double conservation_check(const TrajectoryGrid& grid);

// Re-runs the expectation recursions with F_bar taken from `grid` (no fixed
// point) and reports the tail quantities at the final time.
SolveInfo evaluate_limit_tail(const TrajectoryGrid& grid, const KernelLaw& law, const InitialLaw& init,
                              const SolveConfig& cfg);

struct FixedPointCheck {
    std::vector<double> z_scores;       // per grid point
    double coverage_within_3 = 1.0;     // fraction with |z| <= 3
    bool k_small_warning = false;
};

// Simulates K independent single-individual processes driven by the fixed
// force of infection from `grid` and compares the Monte Carlo estimate of
// E[lambda_{A(t)}(age(t))] to F_bar(t) pointwise.
FixedPointCheck auxiliary_fixed_point_check(const TrajectoryGrid& grid, const KernelLaw& law,
                                            const InitialLaw& init, int K, std::uint64_t seed);

} // namespace episim
