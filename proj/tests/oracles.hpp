#pragma once

// Independent numerical oracles used by the tests. These deliberately avoid
// the library's own solvers: classical fixed-step RK4 on the reduced ODE/DDE
// forms, plus a Kolmogorov-Smirnov test for distributional checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracles {

// dI/dt = lambda I (1 - I) - beta I; returns I on the grid {0, dt, ..., n dt}.
inline std::vector<double> sis_ode(double lambda, double beta, double I0, double dt, int n,
                                   int substeps = 20) {
    std::vector<double> out;
    out.reserve(n + 1);
    double I = I0;
    const double h = dt / substeps;
    auto f = [&](double x) { return lambda * x * (1.0 - x) - beta * x; };
    out.push_back(I);
    for (int i = 0; i < n; ++i) {
        for (int s = 0; s < substeps; ++s) {
            const double k1 = f(I);
            const double k2 = f(I + 0.5 * h * k1);
            const double k3 = f(I + 0.5 * h * k2);
            const double k4 = f(I + h * k3);
            I += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        out.push_back(I);
    }
    return out;
}

struct SirsState {
    double S, I, R;
};

// Markov SIRS: S' = -lam S I + delta R, I' = lam S I - beta I, R' = beta I - delta R.
inline std::vector<SirsState> sirs_ode(double lam, double beta, double delta, SirsState y0,
                                       double dt, int n, int substeps = 20) {
    std::vector<SirsState> out;
    out.reserve(n + 1);
    SirsState y = y0;
    const double h = dt / substeps;
    auto f = [&](const SirsState& s) {
        return SirsState{-lam * s.S * s.I + delta * s.R, lam * s.S * s.I - beta * s.I,
                         beta * s.I - delta * s.R};
    };
    auto axpy = [](const SirsState& a, double c, const SirsState& b) {
        return SirsState{a.S + c * b.S, a.I + c * b.I, a.R + c * b.R};
    };
    out.push_back(y);
    for (int i = 0; i < n; ++i) {
        for (int s = 0; s < substeps; ++s) {
            const SirsState k1 = f(y);
            const SirsState k2 = f(axpy(y, 0.5 * h, k1));
            const SirsState k3 = f(axpy(y, 0.5 * h, k2));
            const SirsState k4 = f(axpy(y, h, k3));
            y.S += h / 6.0 * (k1.S + 2 * k2.S + 2 * k3.S + k4.S);
            y.I += h / 6.0 * (k1.I + 2 * k2.I + 2 * k3.I + k4.I);
            y.R += h / 6.0 * (k1.R + 2 * k2.R + 2 * k3.R + k4.R);
        }
        out.push_back(y);
    }
    return out;
}

struct DdeResult {
    std::vector<double> S_eff; // susceptibility-weighted pool
    std::vector<double> I;
};

// Markov recovery with a deterministic immune delay theta0: recovered return
// to full susceptibility exactly theta0 after recovery.
//   S_eff' = -lam S_eff I + beta I(t - theta0) + r0_inflow(t)
//   I'     =  lam S_eff I - beta I
// r0_inflow(t): density of initially-recovered individuals reaching age theta0.
inline DdeResult sirs_delay_dde(double lam, double beta, double theta0, double Seff0, double I0,
                                const std::function<double(double)>& r0_inflow, double dt, int n,
                                int substeps = 5) {
    DdeResult out;
    const double h = dt / substeps;
    std::vector<double> hist; // I on the fine grid
    hist.reserve(static_cast<std::size_t>(n) * substeps + 1);
    double Seff = Seff0, I = I0;
    hist.push_back(I);
    auto I_delayed = [&](double t) -> double {
        if (t < theta0) return 0.0;
        const double u = (t - theta0) / h;
        const auto j = static_cast<std::size_t>(u);
        if (j + 1 >= hist.size()) return hist.back();
        const double fr = u - j;
        return hist[j] * (1.0 - fr) + hist[j + 1] * fr;
    };
    auto deriv = [&](double t, double Se, double Ii, double& dS, double& dI) {
        const double inflow = beta * I_delayed(t) + (t < theta0 ? r0_inflow(t) : 0.0);
        dS = -lam * Se * Ii + inflow;
        dI = lam * Se * Ii - beta * Ii;
    };
    out.S_eff.push_back(Seff);
    out.I.push_back(I);
    for (int i = 0; i < n; ++i) {
        for (int s = 0; s < substeps; ++s) {
            const double t = (static_cast<double>(i) * substeps + s) * h;
            double k1S, k1I, k2S, k2I, k3S, k3I, k4S, k4I;
            deriv(t, Seff, I, k1S, k1I);
            deriv(t + 0.5 * h, Seff + 0.5 * h * k1S, I + 0.5 * h * k1I, k2S, k2I);
            deriv(t + 0.5 * h, Seff + 0.5 * h * k2S, I + 0.5 * h * k2I, k3S, k3I);
            deriv(t + h, Seff + h * k3S, I + h * k3I, k4S, k4I);
            Seff += h / 6.0 * (k1S + 2 * k2S + 2 * k3S + k4S);
            I += h / 6.0 * (k1I + 2 * k2I + 2 * k3I + k4I);
            hist.push_back(I);
        }
        out.S_eff.push_back(Seff);
        out.I.push_back(I);
    }
    return out;
}

// One-sample Kolmogorov-Smirnov test against a CDF; returns the asymptotic
// p-value Q_KS((sqrt(n) + 0.12 + 0.11/sqrt(n)) D).
inline double ks_p_value(std::vector<double> sample, const std::function<double(double)>& cdf) {
    std::sort(sample.begin(), sample.end());
    const auto n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    const double x = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double q = 0.0;
    for (int k = 1; k <= 100; ++k) q += 2.0 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * x * x);
    return std::clamp(q, 0.0, 1.0);
}

// Composite trapezoid with refinement; used as the independent quadrature
// route for R0 checks.
inline double trapezoid(const std::function<double(double)>& f, double a, double b, int panels) {
    double acc = 0.5 * (f(a) + f(b));
    const double h = (b - a) / panels;
    for (int i = 1; i < panels; ++i) acc += f(a + i * h);
    return acc * h;
}

} // namespace oracles
