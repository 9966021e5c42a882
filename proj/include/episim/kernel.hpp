#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "episim/distribution.hpp"
#include "episim/piecewise.hpp"
#include "episim/random.hpp"

namespace episim {

// One realized infectivity/susceptibility pair, piecewise constant. Both
// functions share the breakpoint grid; lambda is 0 from `eta` on and gamma is
// 0 before `zeta`, with eta <= zeta (the infectious and partially-susceptible
// phases never overlap).
struct KernelPath {
    std::vector<double> breaks; // breaks[0] == 0, strictly increasing
    std::vector<double> lambda; // per interval; last value holds to +inf (must be 0)
    std::vector<double> gamma;  // per interval; last value holds to +inf
    double eta = 0.0;           // sup{ t : lambda(t) > 0 }
    double zeta = kInf;         // inf{ t : gamma(t) > 0 } (kInf for SIR-type paths)
    double gamma_star = 0.0;    // limiting susceptibility level

    double lambda_at(double t) const { return value_at(lambda, t); }
    double gamma_at(double t) const { return value_at(gamma, t); }

    // Exact \int_a^b gamma(r) dr.
    double gamma_integral(double a, double b) const;

    void check_invariants(double lambda_star) const;

private:
    double value_at(const std::vector<double>& vals, double t) const;
};

// Monotone cursor over a path's intervals; `t` arguments must be nondecreasing
// between resets, which makes evaluation O(1) amortized in event loops.
struct PathCursor {
    std::size_t idx = 0;

    void reset() { idx = 0; }

    double gamma_at(const KernelPath& p, double t) {
        advance(p, t);
        return p.gamma[idx];
    }
    double lambda_at(const KernelPath& p, double t) {
        advance(p, t);
        return p.lambda[idx];
    }

private:
    void advance(const KernelPath& p, double t) {
        while (idx + 1 < p.breaks.size() && p.breaks[idx + 1] <= t) ++idx;
    }
};

enum class Family { MarkovSIS, GeneralSIS, SIR, SIRS, IndicatorGamma, GradualGamma, Custom };

std::string family_name(Family f);
Family family_from_name(const std::string& name);

// A sampleable law over KernelPaths. Every family fits the template
//   lambda(t) = shape_or_level(t) * 1{t < eta},
//   gamma(t)  = gamma_star * S(t - eta - delay) * 1{t > eta},
// with S a deterministic nondecreasing recovery-age profile reaching 1:
//   SIS / SIR / SIRS / IndicatorGamma: S = 1{u >= 0} (a jump),
//   GradualGamma: a staircase ramp of `ramp_steps` levels over `ramp_rho`,
//   Custom: a user profile (which may itself delay the rise).
struct KernelLaw {
    Family family = Family::MarkovSIS;
    double lambda_level = 1.0;
    PiecewiseConst lambda_shape; // empty => constant lambda_level while infectious
    Distribution eta = Exponential{1.0};
    Distribution immune_delay = Deterministic{0.0}; // zeta - eta (before any Custom profile offset)
    DiscreteAtoms gamma_star{{1.0}, {1.0}};
    PiecewiseConst recovery_profile; // Custom only; values in [0,1], nondecreasing, ends at 1
    double ramp_rho = 1.0;
    int ramp_steps = 8;
    double lambda_star = 0.0; // 0 => derived from the level/shape
    int mc_budget = 100000;

    void validate() const;
    double lambda_star_effective() const;
    bool gamma_is_indicator() const; // true when gamma jumps straight to gamma_star
    bool gamma_is_trivial_zero() const { return max_gamma_star() == 0.0; }
    double max_gamma_star() const;
};

// Initial condition in the sense of a time-zero population mixture: with
// probability 1 - i_fraction - r_fraction a fully susceptible individual
// (lambda = 0, gamma = 1), with probability i_fraction an individual infected
// xi time units ago (paths shifted by xi, remaining duration drawn from the
// conditional tail), and with probability r_fraction an individual that
// recovered vartheta time units ago (gamma profile shifted, lambda = 0).
struct InitialLaw {
    double i_fraction = 0.0;
    Distribution xi = Deterministic{0.0};
    double r_fraction = 0.0;
    Distribution vartheta = Deterministic{0.0};

    void validate(const KernelLaw& base) const;
};

KernelPath sample_kernel(const KernelLaw& law, RandomStream& rng);
KernelPath sample_initial(const KernelLaw& law, const InitialLaw& init, RandomStream& rng);
// The infected branch alone (conditioned on chi = 1); used for stratified MC.
KernelPath sample_initial_infected(const KernelLaw& law, const InitialLaw& init, RandomStream& rng);
// The recovered branch alone.
KernelPath sample_initial_recovered(const KernelLaw& law, const InitialLaw& init, RandomStream& rng);

// Mean infectivity lambda_bar(t) = E[lambda(t)]; closed form for all families.
double mean_infectivity(const KernelLaw& law, double t);
// Exact (1/(b-a)) \int_a^b lambda_bar, used for cell-averaged convolutions.
double mean_infectivity_cell_avg(const KernelLaw& law, double a, double b);

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};
// Monte Carlo estimate of lambda_bar(t) over `budget` sampled paths.
McEstimate mc_mean_infectivity(const KernelLaw& law, double t, int budget, RandomStream& rng);

// F^c(t) = P(eta > t).
double survival(const KernelLaw& law, double t);
// F^c_0(t) = P(eta_0 > t | eta_0 > 0) under the shifted-age construction.
double survival_initial(const KernelLaw& law, const InitialLaw& init, double t);
// lambda_bar_0(t) = E[lambda_0(t) | eta_0 > 0].
double mean_infectivity_initial(const KernelLaw& law, const InitialLaw& init, double t);

// Batched evaluation on {0, step, ..., (npoints-1)*step}; one pass over the
// xi quadrature nodes instead of one per point.
std::vector<double> initial_survival_grid(const KernelLaw& law, const InitialLaw& init,
                                          std::size_t npoints, double step);
std::vector<double> initial_mean_infectivity_grid(const KernelLaw& law, const InitialLaw& init,
                                                  std::size_t npoints, double step);

struct LawStatistics {
    double R0 = 0.0;
    bool R0_finite = true;
    double E_inv_gamma_star = 0.0; // kInf when P(gamma_star = 0) > 0
    double E_eta = 0.0;
    double E_zeta = 0.0; // E[inf{t : gamma(t) > 0}]; kInf for SIR-type laws
    double gamma_star_min = 0.0;
    double gamma_star_max = 0.0;
};
LawStatistics law_statistics(const KernelLaw& law);

} // namespace episim
