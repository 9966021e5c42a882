#include "episim/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace episim {

namespace {

constexpr std::uint64_t kHSeed = 0x48d1a2b3c4e5f607ULL; // fixed: CRN across x values

// Exact h(x) = x \int_0^inf exp(-x Gamma(s)) ds for one staircase gamma path.
// Segment list: (start age a_r, level l_r), levels nondecreasing, last level
// is the plateau gamma_star.
double h_single_path(const KernelPath& p, double x) {
    const double gstar = p.gamma_star;
    if (gstar <= 0.0) return kInf;
    if (x <= 0.0) return 1.0 / gstar;
    double big_gamma = 0.0; // running \int_0^{a_r} gamma
    double acc = 0.0;
    for (std::size_t r = 0; r < p.breaks.size(); ++r) {
        const double a = p.breaks[r];
        const double g = p.gamma[r];
        if (r + 1 < p.breaks.size()) {
            const double len = p.breaks[r + 1] - a;
            const double e0 = std::exp(-x * big_gamma);
            if (g <= 0.0) {
                acc += x * e0 * len;
            } else {
                acc += e0 * (1.0 - std::exp(-x * g * len)) / g;
            }
            big_gamma += g * len;
        } else {
            // plateau: gamma == gstar from here on
            acc += std::exp(-x * big_gamma) / gstar;
        }
    }
    return acc;
}

} // namespace

std::string regime_name(Regime r) {
    switch (r) {
        case Regime::DiseaseFree: return "disease_free";
        case Regime::Critical: return "critical";
        case Regime::Endemic: return "endemic";
    }
    return "unknown";
}

double evaluate_H_sampled(const KernelLaw& law, double x, int budget, std::uint64_t seed) {
    RandomStream root(seed);
    double acc = 0.0;
    for (int m = 0; m < budget; ++m) {
        auto rs = root.derive(0x61u, static_cast<std::uint64_t>(m));
        const KernelPath p = sample_kernel(law, rs);
        const double h = h_single_path(p, x);
        if (std::isinf(h)) return kInf;
        acc += h;
    }
    return acc / budget;
}

double evaluate_H(const KernelLaw& law, double x) {
    if (x < 0.0) throw std::invalid_argument("evaluate_H: x must be >= 0");
    const LawStatistics st = law_statistics(law);
    if (std::isinf(st.E_inv_gamma_star)) return kInf;
    if (law.gamma_is_indicator()) return x * st.E_zeta + st.E_inv_gamma_star;
    if (x == 0.0) return st.E_inv_gamma_star;
    return evaluate_H_sampled(law, x, law.mc_budget, kHSeed);
}

EquilibriumReport solve_endemic(const KernelLaw& law) {
    law.validate();
    const LawStatistics st = law_statistics(law);
    if (!st.R0_finite) throw std::invalid_argument("solve_endemic: R0 is not finite");

    EquilibriumReport rep;
    rep.R0 = st.R0;
    rep.E_inv_gamma_star = st.E_inv_gamma_star;

    const double crit_tol = 1e-9 * std::max(st.R0, 1.0);
    if (!std::isinf(st.E_inv_gamma_star) && std::abs(st.R0 - st.E_inv_gamma_star) <= crit_tol) {
        rep.regime = Regime::Critical;
    } else if (std::isinf(st.E_inv_gamma_star) || st.R0 < st.E_inv_gamma_star) {
        rep.regime = Regime::DiseaseFree;
    } else {
        rep.regime = Regime::Endemic;
    }

    if (rep.regime != Regime::Endemic) {
        rep.F_star = 0.0;
        rep.I_star = 0.0;
        // S_star is only pinned without a trajectory when gamma_star == 1 a.s.
        rep.S_star_known = (st.gamma_star_min == 1.0 && st.gamma_star_max == 1.0);
        rep.S_star = rep.S_star_known ? 1.0 : 0.0;
        return rep;
    }

    // Bracket: H(0) = E[1/gamma_star] < R0; H is strictly increasing and
    // unbounded, so double the upper end until it crosses.
    double lo = 0.0, hi = 1.0;
    int guard = 0;
    while (evaluate_H(law, hi) < st.R0) {
        hi *= 2.0;
        if (++guard > 200) throw std::runtime_error("solve_endemic: bracket expansion failed");
    }
    rep.bracket_lo = lo;
    rep.bracket_hi = hi;

    double mid = 0.5 * (lo + hi);
    int it = 0;
    const double target = 1e-9 * std::max(st.R0, 1.0);
    for (; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        const double h = evaluate_H(law, mid);
        if (std::abs(h - st.R0) <= target || (hi - lo) <= 1e-15 * std::max(1.0, hi)) break;
        if (h < st.R0)
            lo = mid;
        else
            hi = mid;
    }
    rep.iterations = it;
    rep.F_star = mid;
    rep.residual = std::abs(evaluate_H(law, mid) - st.R0);
    rep.S_star = 1.0 / st.R0;
    rep.S_star_known = true;
    rep.I_star = st.E_eta * rep.F_star / st.R0;

    if (law.gamma_is_indicator() && st.E_zeta > 0.0 && !std::isinf(st.E_zeta)) {
        rep.closed_form_available = true;
        rep.closed_form_F_star = (st.R0 - st.E_inv_gamma_star) / st.E_zeta;
    }
    return rep;
}

DiseaseFreeLimit disease_free_limit_S(const TrajectoryGrid& grid, const KernelLaw& law,
                                      const InitialLaw& init, const SolveConfig& cfg,
                                      double f_threshold) {
    if (grid.size() < 2) throw std::invalid_argument("disease_free_limit_S: grid too short");
    const double fT = grid.F_bar.back();
    if (fT > f_threshold)
        throw std::runtime_error("disease_free_limit_S: horizon too short (F_bar(T) = " +
                                 std::to_string(fT) + " above the smallness threshold)");
    const SolveInfo info = evaluate_limit_tail(grid, law, init, cfg);
    DiseaseFreeLimit out;
    out.S_star = info.S_star_tail;
    out.F_at_T = fT;
    double cohort_mass = 0.0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
        cohort_mass += grid.S_bar[i] * grid.F_bar[i] * grid.dt;
    const double tail = std::isinf(info.tail_integral_estimate) ? fT * grid.times.back()
                                                                : info.tail_integral_estimate;
    // First-order sensitivity of the truncated expectations to the missing
    // exposure \int_T^inf F_bar: every exponent moves by at most that much.
    out.truncation_bound = tail * (1.0 + cohort_mass);
    return out;
}

InstabilityCheck instability_check(const TrajectoryGrid& grid, const EquilibriumReport& report,
                                   double floor) {
    InstabilityCheck out;
    if (grid.size() == 0) throw std::invalid_argument("instability_check: empty grid");
    out.min_F = *std::min_element(grid.F_bar.begin(), grid.F_bar.end());
    out.applicable = report.regime == Regime::Endemic && grid.F_bar.front() > 0.0;
    out.above_floor = out.applicable && out.min_F >= floor;
    return out;
}

namespace {

std::string num_or_inf(double v) {
    if (std::isinf(v)) return "\"inf\"";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void write_equilibrium_json(const EquilibriumReport& r, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "{\n";
    out << "  \"R0\": " << num_or_inf(r.R0) << ",\n";
    out << "  \"E_inv_gamma_star\": " << num_or_inf(r.E_inv_gamma_star) << ",\n";
    out << "  \"regime\": \"" << regime_name(r.regime) << "\",\n";
    out << "  \"S_star\": " << (r.S_star_known ? num_or_inf(r.S_star) : "null") << ",\n";
    out << "  \"F_star\": " << num_or_inf(r.F_star) << ",\n";
    out << "  \"I_star\": " << num_or_inf(r.I_star) << ",\n";
    out << "  \"solver_diagnostics\": {\n";
    out << "    \"bracket\": [" << num_or_inf(r.bracket_lo) << ", " << num_or_inf(r.bracket_hi)
        << "],\n";
    out << "    \"iterations\": " << r.iterations << ",\n";
    out << "    \"residual\": " << num_or_inf(r.residual) << "\n";
    out << "  }\n";
    out << "}\n";
}

} // namespace episim
