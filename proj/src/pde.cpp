#include "episim/pde.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace episim {

namespace {

double hazard_at(const PiecewiseHazard& h, double t) {
    std::size_t i = 0;
    while (i + 1 < h.breaks.size() && h.breaks[i + 1] <= t) ++i;
    return h.rates[i];
}

// \int_a^b lambda_tilde(t) F^c(t) dt, exact for the piecewise representation.
double lam_fc_integral(const PiecewiseConst& lam, const Distribution& eta, double a, double b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < lam.values.size(); ++i) {
        const double lo = std::max(a, lam.breaks[i]);
        const double hi = (i + 1 < lam.breaks.size()) ? std::min(b, lam.breaks[i + 1]) : b;
        if (hi > lo) acc += lam.values[i] * integral_survival(eta, lo, hi);
    }
    return acc;
}

} // namespace

void PdeScenario::validate() const {
    lambda_tilde.check_valid("pde.lambda_tilde");
    gamma_tilde.check_valid("pde.gamma_tilde");
    episim::validate(Distribution{hazard}, "pde.hazard");
    if (!I0_density.empty()) I0_density.check_valid("pde.I0_density");
    if (!R0_density.empty()) R0_density.check_valid("pde.R0_density");
    double prev = 0.0;
    for (double v : gamma_tilde.values) {
        if (v < prev || v < 0.0 || v > 1.0)
            throw std::invalid_argument("pde.gamma_tilde: must be nondecreasing within [0, 1]");
        prev = v;
    }
    for (double v : lambda_tilde.values)
        if (v < 0.0) throw std::invalid_argument("pde.lambda_tilde: must be >= 0");
    const double total = S0 + I0_density.integral(0.0, kInf) + R0_density.integral(0.0, kInf);
    if (std::abs(total - 1.0) > 1e-6)
        throw std::invalid_argument("pde: S0 + int I0 + int R0 must equal 1 (got " +
                                    std::to_string(total) + ")");
}

PdeSeries solve_pde(const PdeScenario& scn, double T, double dt) {
    scn.validate();
    if (T <= 0.0 || dt <= 0.0) throw std::invalid_argument("solve_pde: T and dt must be > 0");
    const Distribution eta{scn.hazard};
    const int nsteps = static_cast<int>(std::llround(T / dt));

    // Infection-age window: where the duration survival drops below age_eps,
    // extended to cover the initial density.
    double tau_max = 0.0;
    while (survival(eta, tau_max) > scn.age_eps && tau_max < 1e6) tau_max += dt;
    if (!scn.I0_density.empty()) tau_max = std::max(tau_max, scn.I0_density.breaks.back());
    const int ntau = static_cast<int>(std::ceil(tau_max / dt - 1e-9)) + 1;

    // Recovery-age window: past the last gamma_tilde knot the susceptibility is
    // flat, so everything older collapses into one tail bucket.
    double theta_max = scn.theta_max;
    if (theta_max <= 0.0)
        theta_max = (scn.gamma_tilde.breaks.empty() ? 0.0 : scn.gamma_tilde.breaks.back()) + 1.0;
    const int nth = static_cast<int>(std::ceil(theta_max / dt - 1e-9)) + 1;
    const double gamma_plateau =
        scn.gamma_tilde.values.empty() ? 0.0 : scn.gamma_tilde.values.back();

    // Cell multipliers: exact survival-mass ratios; a single-rate hazard gets
    // one shared factor so that marching is literally a repeated product.
    std::vector<double> mult(ntau, 0.0);
    if (scn.hazard.rates.size() == 1) {
        const double m = std::exp(-scn.hazard.rates[0] * dt);
        std::fill(mult.begin(), mult.end(), m);
    } else {
        for (int j = 0; j < ntau; ++j) {
            const double lo = integral_survival(eta, j * dt, (j + 1) * dt);
            const double hi = integral_survival(eta, (j + 1) * dt, (j + 2) * dt);
            mult[j] = lo > 0.0 ? hi / lo : 0.0;
        }
    }

    // Effective infectivity per cell: mass-weighted lambda_tilde average
    // (weights proportional to F^c inside the cell).
    std::vector<double> lam_eff(ntau, 0.0);
    for (int j = 0; j < ntau; ++j) {
        const double denom = integral_survival(eta, j * dt, (j + 1) * dt);
        lam_eff[j] = denom > 0.0 ? lam_fc_integral(scn.lambda_tilde, eta, j * dt, (j + 1) * dt) / denom
                                 : scn.lambda_tilde(j * dt);
    }
    std::vector<double> gam_cell(nth, 0.0);
    for (int j = 0; j < nth; ++j) gam_cell[j] = scn.gamma_tilde.integral(j * dt, (j + 1) * dt) / dt;

    // Initial cell masses.
    std::vector<double> mI(ntau, 0.0), mR(nth, 0.0);
    for (int j = 0; j < ntau; ++j) mI[j] = scn.I0_density.integral(j * dt, (j + 1) * dt);
    for (int j = 0; j < nth; ++j) mR[j] = scn.R0_density.integral(j * dt, (j + 1) * dt);
    double bucket = scn.R0_density.integral(nth * dt, kInf);
    double S = scn.S0;
    double trunc_I = scn.I0_density.integral(ntau * dt, kInf);

    PdeSeries out;
    out.dt = dt;
    out.times.reserve(nsteps + 1);

    std::vector<double> snaps = scn.snapshot_times;
    std::sort(snaps.begin(), snaps.end());
    std::size_t next_snap = 0;

    for (int i = 0; i <= nsteps; ++i) {
        if (next_snap < snaps.size() && i * dt >= snaps[next_snap] - 0.5 * dt) {
            PdeDensitySnapshot snap;
            snap.t = i * dt;
            const int cells = std::max(ntau, nth);
            for (int j = 0; j < cells; ++j) {
                snap.age.push_back(j * dt);
                snap.I_density.push_back(j < ntau ? mI[j] / dt : 0.0);
                snap.R_density.push_back(j < nth ? mR[j] / dt : 0.0);
            }
            out.snapshots.push_back(std::move(snap));
            ++next_snap;
        }
        double itot = 0.0, ffrak = 0.0;
        for (int j = 0; j < ntau; ++j) {
            itot += mI[j];
            ffrak += lam_eff[j] * mI[j];
        }
        double rtot = bucket, gr = gamma_plateau * bucket;
        for (int j = 0; j < nth; ++j) {
            rtot += mR[j];
            gr += gam_cell[j] * mR[j];
        }
        const double sfrak = S + gr;
        const double mass = S + itot + rtot + trunc_I;

        out.times.push_back(i * dt);
        out.S_bar.push_back(S);
        out.I_total.push_back(itot);
        out.R_total.push_back(rtot);
        out.S_frak.push_back(sfrak);
        out.F_frak.push_back(ffrak);
        out.mass_residual.push_back(std::abs(mass - 1.0));
        if (i == nsteps) break;

        // Fluxes over (t_i, t_{i+1}): exact exponential thinning per cell.
        const double dS = S * (1.0 - std::exp(-ffrak * dt));
        double reinfected = dS;
        for (int j = 0; j < nth; ++j) {
            const double loss = mR[j] * (1.0 - std::exp(-gam_cell[j] * ffrak * dt));
            mR[j] -= loss;
            reinfected += loss;
        }
        {
            const double loss = bucket * (1.0 - std::exp(-gamma_plateau * ffrak * dt));
            bucket -= loss;
            reinfected += loss;
        }
        double recovered = 0.0;
        for (int j = 0; j < ntau; ++j) {
            const double kept = mI[j] * mult[j];
            recovered += mI[j] - kept;
            mI[j] = kept;
        }
        // Shift along characteristics.
        trunc_I += mI[ntau - 1];
        for (int j = ntau - 1; j > 0; --j) mI[j] = mI[j - 1];
        mI[0] = reinfected;
        bucket += mR[nth - 1];
        for (int j = nth - 1; j > 0; --j) mR[j] = mR[j - 1];
        mR[0] = recovered;
        S -= dS;

        out.birth_density.push_back(reinfected / dt);
        out.recovery_density.push_back(recovered / dt);
    }
    // Densities have one entry per step interval; pad to align with times.
    out.birth_density.push_back(out.birth_density.empty() ? 0.0 : out.birth_density.back());
    out.recovery_density.push_back(out.recovery_density.empty() ? 0.0 : out.recovery_density.back());
    return out;
}

double r2_recovery_boundary(const PdeScenario& scn, const PdeSeries& series, std::size_t step) {
    const Distribution eta{scn.hazard};
    const double t = series.times.at(step);
    const double dt = series.dt;
    // f(u) = mu(u) F^c(u); first term integrates over the initial density.
    double first = 0.0;
    if (!scn.I0_density.empty()) {
        const double hi = scn.I0_density.breaks.back();
        const int cells = static_cast<int>(std::ceil(hi / dt - 1e-9));
        for (int c = 0; c < cells; ++c) {
            const double tau = (c + 0.5) * dt;
            const double mass = scn.I0_density.integral(c * dt, (c + 1) * dt);
            const double fc_tau = survival(eta, tau);
            if (fc_tau <= 0.0) continue;
            first += mass * hazard_at(scn.hazard, t + tau) * survival(eta, t + tau) / fc_tau;
        }
    }
    double second = 0.0;
    for (std::size_t j = 0; j < step; ++j) {
        const double lag = t - series.times[j];
        second += hazard_at(scn.hazard, lag) * survival(eta, lag) * series.S_frak[j] *
                  series.F_frak[j] * dt;
    }
    return first + second;
}

KernelLaw kernel_law_from_pde(const PdeScenario& scn) {
    scn.validate();
    KernelLaw law;
    law.family = Family::Custom;
    law.lambda_shape = scn.lambda_tilde;
    law.eta = scn.hazard;
    law.immune_delay = Deterministic{0.0};
    const double plateau = scn.gamma_tilde.values.empty() ? 0.0 : scn.gamma_tilde.values.back();
    if (plateau <= 0.0) {
        law.gamma_star = DiscreteAtoms{{0.0}, {1.0}};
    } else {
        law.gamma_star = DiscreteAtoms{{plateau}, {1.0}};
        law.recovery_profile = scn.gamma_tilde;
        for (auto& v : law.recovery_profile.values) v /= plateau;
    }
    law.lambda_star = scn.lambda_tilde.max_value();
    return law;
}

namespace {

// Normalized PiecewiseDensity from an age-density given as a PiecewiseConst
// (whose last value must be 0 so the mass is finite).
PiecewiseDensity density_from_piecewise(const PiecewiseConst& pc, double mass, const char* name) {
    if (pc.values.empty() || pc.values.back() != 0.0)
        throw std::invalid_argument(std::string(name) + ": density must end with a 0 value");
    PiecewiseDensity d;
    for (std::size_t i = 0; i + 1 < pc.breaks.size(); ++i) {
        d.breaks.push_back(pc.breaks[i]);
        d.values.push_back(pc.values[i] / mass);
    }
    d.breaks.push_back(pc.breaks.back());
    return d;
}

} // namespace

InitialLaw initial_law_from_pde(const PdeScenario& scn) {
    InitialLaw init;
    init.i_fraction = scn.I0_density.integral(0.0, kInf);
    init.r_fraction = scn.R0_density.integral(0.0, kInf);
    if (init.i_fraction > 0.0)
        init.xi = density_from_piecewise(scn.I0_density, init.i_fraction, "pde.I0_density");
    if (init.r_fraction > 0.0)
        init.vartheta = density_from_piecewise(scn.R0_density, init.r_fraction, "pde.R0_density");
    return init;
}

CrosscheckResult crosscheck_against_limit(const PdeScenario& scn, double T, double dt,
                                          const SolveConfig& lln_cfg) {
    CrosscheckResult res;
    res.pde = solve_pde(scn, T, dt);
    SolveConfig cfg = lln_cfg;
    cfg.T = T;
    cfg.dt = dt;
    const KernelLaw law = kernel_law_from_pde(scn);
    const InitialLaw init = initial_law_from_pde(scn);
    res.limit = solve_limit(law, init, cfg);
    for (std::size_t i = 0; i < res.pde.times.size(); ++i) {
        res.sup_S_frak = std::max(res.sup_S_frak, std::abs(res.pde.S_frak[i] - res.limit.S_bar[i]));
        res.sup_F_frak = std::max(res.sup_F_frak, std::abs(res.pde.F_frak[i] - res.limit.F_bar[i]));
    }
    return res;
}

void write_pde_density_csv(const PdeSeries& s, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "t,age,I_density,R_density\n";
    char buf[40];
    auto put = [&](double v, char sep) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << buf << sep;
    };
    for (const auto& snap : s.snapshots)
        for (std::size_t j = 0; j < snap.age.size(); ++j) {
            put(snap.t, ',');
            put(snap.age[j], ',');
            put(snap.I_density[j], ',');
            put(snap.R_density[j], '\n');
        }
}

void write_pde_csv(const PdeSeries& s, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "t,S_bar,I_total,R_total,S_frak,F_frak,mass_residual\n";
    char buf[40];
    auto put = [&](double v, char sep) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << buf << sep;
    };
    for (std::size_t i = 0; i < s.times.size(); ++i) {
        put(s.times[i], ',');
        put(s.S_bar[i], ',');
        put(s.I_total[i], ',');
        put(s.R_total[i], ',');
        put(s.S_frak[i], ',');
        put(s.F_frak[i], ',');
        put(s.mass_residual[i], '\n');
    }
}

} // namespace episim
