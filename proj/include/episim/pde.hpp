#pragma once

#include <string>
#include <vector>

#include "episim/distribution.hpp"
#include "episim/kernel.hpp"
#include "episim/lln.hpp"
#include "episim/piecewise.hpp"

namespace episim {

// Age-structured scenario: deterministic infectivity shape over infection age,
// deterministic susceptibility shape over recovery age, an infectious-duration
// hazard, and initial densities over the two ages.
struct PdeScenario {
    PiecewiseConst lambda_tilde;       // infectivity by infection age
    PiecewiseConst gamma_tilde;        // susceptibility by recovery age, in [0,1]
    PiecewiseHazard hazard;            // recovery hazard mu_F
    double S0 = 1.0;                   // never-infected fraction
    PiecewiseConst I0_density;         // density over infection age
    PiecewiseConst R0_density;         // density over recovery age
    double theta_max = 0.0;            // recovery-age window (0: derived)
    double age_eps = 1e-10;            // infection-age window cut where F^c < age_eps
    std::vector<double> snapshot_times; // optional density snapshot times

    void validate() const;
};

struct PdeDensitySnapshot {
    double t = 0.0;
    std::vector<double> age;       // cell left edges (shared by both densities)
    std::vector<double> I_density; // per infection-age cell
    std::vector<double> R_density; // per recovery-age cell (0 past its window)
};

struct PdeSeries {
    double dt = 0.0;
    std::vector<double> times;
    std::vector<double> S_bar;       // never-infected fraction
    std::vector<double> I_total;     // \int I(t, tau) dtau
    std::vector<double> R_total;     // \int R(t, theta) dtheta (incl. window tail)
    std::vector<double> S_frak;      // S_bar + \int gamma_tilde R
    std::vector<double> F_frak;      // \int lambda_tilde I
    std::vector<double> mass_residual;
    std::vector<double> birth_density;    // I(t, 0)
    std::vector<double> recovery_density; // R(t, 0)
    std::vector<PdeDensitySnapshot> snapshots;
};

// Marches the transport system along characteristics: interior cells advance
// by exact survival ratios, boundaries carry the exact per-step fluxes (so the
// total mass is conserved to rounding).
PdeSeries solve_pde(const PdeScenario& scn, double T, double dt);

// (S_frak, F_frak) recomputed from a density snapshot; exposed pieces of the
// solver used by tests.
struct PdeDensities {
    std::vector<double> I_mass; // per infection-age cell
    std::vector<double> R_mass; // per recovery-age cell
    double R_tail = 0.0;
    double S = 0.0;
};

// R(t, 0) evaluated from the renewal form: \int I0(tau) f(t+tau)/F^c(tau) dtau
// + \int_0^t f(t-s) S_frak F_frak(s) ds, with f the duration density.
double r2_recovery_boundary(const PdeScenario& scn, const PdeSeries& series, std::size_t step);

// Kernel-law view of the scenario: lambda(t) = lambda_tilde(t) 1{t < eta},
// gamma(t) = gamma_tilde(t - eta) 1{t > eta}, eta ~ hazard.
KernelLaw kernel_law_from_pde(const PdeScenario& scn);
InitialLaw initial_law_from_pde(const PdeScenario& scn);

struct CrosscheckResult {
    double sup_S_frak = 0.0;
    double sup_F_frak = 0.0;
    PdeSeries pde;
    TrajectoryGrid limit;
};

// Solves both formulations of the same scenario and reports sup-norm
// discrepancies of the aggregates.
CrosscheckResult crosscheck_against_limit(const PdeScenario& scn, double T, double dt,
                                          const SolveConfig& lln_cfg);

void write_pde_csv(const PdeSeries& s, const std::string& path);
// Columns: t,age,I_density,R_density (one block per snapshot time).
void write_pde_density_csv(const PdeSeries& s, const std::string& path);

} // namespace episim
