#include "episim/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace episim {

namespace {

constexpr double kTieEps = 1e-12;

void fail(const std::string& what) { throw std::invalid_argument(what); }

// xi-quadrature for continuous age-at-time-zero laws: cell masses + midpoints.
struct XiNodes {
    std::vector<double> weight;
    std::vector<double> point;
};

XiNodes xi_nodes(const Distribution& xi, int cells = 4000) {
    XiNodes out;
    if (const auto* det = std::get_if<Deterministic>(&xi)) {
        out.weight = {1.0};
        out.point = {det->value};
        return out;
    }
    if (const auto* at = std::get_if<DiscreteAtoms>(&xi)) {
        out.weight = at->probs;
        out.point = at->values;
        return out;
    }
    const double hi = support_upper(xi);
    if (std::isinf(hi)) fail("initial.xi: continuous xi laws need bounded support for quadrature");
    const double h = hi / cells;
    out.weight.reserve(cells);
    out.point.reserve(cells);
    for (int c = 0; c < cells; ++c) {
        const double a = c * h, b = (c + 1) * h;
        const double w = survival(xi, a) - survival(xi, b);
        if (w > 0.0) {
            out.weight.push_back(w);
            out.point.push_back(0.5 * (a + b));
        }
    }
    return out;
}

} // namespace

double KernelPath::value_at(const std::vector<double>& vals, double t) const {
    auto it = std::upper_bound(breaks.begin(), breaks.end(), t);
    const auto idx = static_cast<std::size_t>(it - breaks.begin());
    if (idx == 0) return 0.0;
    return vals[idx - 1];
}

double KernelPath::gamma_integral(double a, double b) const {
    if (b <= a) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < gamma.size(); ++i) {
        const double lo = std::max(a, breaks[i]);
        const double hi = (i + 1 < breaks.size()) ? std::min(b, breaks[i + 1]) : b;
        if (hi > lo) acc += gamma[i] * (hi - lo);
    }
    return acc;
}

void KernelPath::check_invariants(double lambda_star) const {
    if (breaks.empty() || breaks.front() != 0.0) fail("KernelPath: breaks must start at 0");
    if (breaks.size() != lambda.size() || breaks.size() != gamma.size())
        fail("KernelPath: per-interval arrays must match breaks");
    double last_lambda_pos = 0.0;
    double first_gamma_pos = kInf;
    for (std::size_t i = 0; i < breaks.size(); ++i) {
        if (i + 1 < breaks.size() && breaks[i + 1] <= breaks[i]) fail("KernelPath: breaks not increasing");
        if (lambda[i] < 0.0 || lambda[i] > lambda_star + kTieEps)
            fail("KernelPath: lambda outside [0, lambda_star]");
        if (gamma[i] < 0.0 || gamma[i] > 1.0 + kTieEps) fail("KernelPath: gamma outside [0, 1]");
        if (lambda[i] > 0.0) {
            if (i + 1 == breaks.size()) fail("KernelPath: lambda must vanish eventually");
            last_lambda_pos = breaks[i + 1];
        }
        if (gamma[i] > 0.0) first_gamma_pos = std::min(first_gamma_pos, breaks[i]);
    }
    if (last_lambda_pos > first_gamma_pos + kTieEps)
        fail("KernelPath: infectious and susceptible phases overlap");
    if (std::abs(last_lambda_pos - eta) > kTieEps) fail("KernelPath: eta inconsistent with lambda");
    if (first_gamma_pos != zeta && std::abs(first_gamma_pos - zeta) > kTieEps)
        fail("KernelPath: zeta inconsistent with gamma");
}

std::string family_name(Family f) {
    switch (f) {
        case Family::MarkovSIS: return "markov_sis";
        case Family::GeneralSIS: return "general_sis";
        case Family::SIR: return "sir";
        case Family::SIRS: return "sirs";
        case Family::IndicatorGamma: return "indicator_gamma";
        case Family::GradualGamma: return "gradual_gamma";
        case Family::Custom: return "custom";
    }
    return "unknown";
}

Family family_from_name(const std::string& name) {
    if (name == "markov_sis") return Family::MarkovSIS;
    if (name == "general_sis") return Family::GeneralSIS;
    if (name == "sir") return Family::SIR;
    if (name == "sirs") return Family::SIRS;
    if (name == "indicator_gamma") return Family::IndicatorGamma;
    if (name == "gradual_gamma") return Family::GradualGamma;
    if (name == "custom") return Family::Custom;
    fail("kernel.family: unknown family '" + name + "'");
    return Family::Custom;
}

double KernelLaw::lambda_star_effective() const {
    if (lambda_star > 0.0) return lambda_star;
    return lambda_shape.empty() ? lambda_level : lambda_shape.max_value();
}

double KernelLaw::max_gamma_star() const {
    double m = 0.0;
    for (double v : gamma_star.values) m = std::max(m, v);
    return m;
}

bool KernelLaw::gamma_is_indicator() const {
    if (family == Family::GradualGamma) return false;
    if (family != Family::Custom) return true;
    for (double v : recovery_profile.values)
        if (v != 0.0 && v != 1.0) return false;
    return true;
}

void KernelLaw::validate() const {
    if (lambda_shape.empty()) {
        if (lambda_level < 0.0) fail("kernel.lambda: must be >= 0");
    } else {
        lambda_shape.check_valid("kernel.lambda_shape");
        for (double v : lambda_shape.values)
            if (v <= 0.0) fail("kernel.lambda_shape: values must be > 0 (zero-infectivity phases are clipped by eta)");
    }
    episim::validate(eta, "kernel.eta");
    episim::validate(immune_delay, "kernel.immune_delay");
    episim::validate(Distribution{gamma_star}, "kernel.gamma_star");
    for (double v : gamma_star.values)
        if (v < 0.0 || v > 1.0) fail("kernel.gamma_star: values must lie in [0, 1]");
    if (family == Family::MarkovSIS && !std::holds_alternative<Exponential>(eta))
        fail("kernel.eta: markov_sis requires an exponential eta");
    if (family == Family::MarkovSIS || family == Family::GeneralSIS) {
        const auto* det = std::get_if<Deterministic>(&immune_delay);
        if (!det || det->value != 0.0) fail("kernel.immune_delay: SIS families require zero delay");
    }
    if ((family == Family::MarkovSIS || family == Family::GeneralSIS || family == Family::SIRS) &&
        (gamma_star.values.size() != 1 || gamma_star.values[0] != 1.0))
        fail("kernel.gamma_star: SIS/SIRS families require gamma_star == 1");
    if (family == Family::SIR && max_gamma_star() != 0.0)
        fail("kernel.gamma_star: SIR requires gamma_star == 0");
    if (family == Family::GradualGamma) {
        if (ramp_rho <= 0.0) fail("kernel.ramp_rho: must be > 0");
        if (ramp_steps < 1) fail("kernel.ramp_steps: must be >= 1");
    }
    if (family == Family::Custom && !recovery_profile.empty()) {
        recovery_profile.check_valid("kernel.recovery_profile");
        double prev = 0.0;
        for (double v : recovery_profile.values) {
            if (v < prev || v < 0.0 || v > 1.0)
                fail("kernel.recovery_profile: must be nondecreasing within [0, 1]");
            prev = v;
        }
        if (max_gamma_star() > 0.0 && recovery_profile.values.back() != 1.0)
            fail("kernel.recovery_profile: must end at 1 so that gamma_star is the plateau");
    }
    const double lam_max = lambda_shape.empty() ? lambda_level : lambda_shape.max_value();
    if (lambda_star > 0.0 && lam_max > lambda_star + kTieEps)
        fail("kernel.lambda_star: smaller than the infectivity level");
    if (mc_budget < 1) fail("kernel.mc_budget: must be >= 1");
}

void InitialLaw::validate(const KernelLaw& base) const {
    if (i_fraction < 0.0 || i_fraction > 1.0) fail("initial.i_fraction: must lie in [0, 1]");
    if (r_fraction < 0.0 || r_fraction > 1.0) fail("initial.r_fraction: must lie in [0, 1]");
    if (i_fraction + r_fraction > 1.0 + 1e-12) fail("initial: i_fraction + r_fraction must be <= 1");
    episim::validate(xi, "initial.xi");
    episim::validate(vartheta, "initial.vartheta");
    if (i_fraction > 0.0) {
        const double xi_hi = support_upper(xi);
        const double eta_hi = support_upper(base.eta);
        if (xi_hi > eta_hi || (xi_hi == eta_hi && !std::isinf(eta_hi) && !has_atom_at(base.eta, eta_hi)))
            fail("initial.xi: support exceeds the support of eta (xi <= eta must hold a.s.)");
    }
}

namespace {

// Effective recovery-age profile S(u); empty() means "jump to 1 at u = 0".
PiecewiseConst recovery_profile_of(const KernelLaw& law) {
    if (law.family == Family::GradualGamma) {
        PiecewiseConst ramp;
        const int k = law.ramp_steps;
        ramp.breaks.reserve(k + 1);
        ramp.values.reserve(k + 1);
        for (int j = 0; j < k; ++j) {
            ramp.breaks.push_back(law.ramp_rho * j / k);
            ramp.values.push_back((j + 0.5) / k);
        }
        ramp.breaks.push_back(law.ramp_rho);
        ramp.values.push_back(1.0);
        return ramp;
    }
    if (law.family == Family::Custom) return law.recovery_profile;
    return {};
}

struct PathDraw {
    double eta;
    double delay;
    double gstar;
};

PathDraw draw_parameters(const KernelLaw& law, RandomStream& rng) {
    PathDraw d;
    d.eta = sample(law.eta, rng);
    d.delay = sample(law.immune_delay, rng);
    d.gstar = law.gamma_star.values[rng.categorical(law.gamma_star.probs)];
    return d;
}

// Assemble the piecewise path
//   lambda(t) = shape(t + lambda_shift) on [0, eta_rem),
//   gamma(t)  = gstar * S(t - gamma_start) for t >= gamma_start,
// where gamma_start may be negative for recovered starts (profile partly consumed).
KernelPath build_path(const KernelLaw& law, double eta_rem, double lambda_shift, double gamma_start,
                      double gstar) {
    const PiecewiseConst prof = recovery_profile_of(law);
    // Per-channel "set the value from this time on" edit maps.
    std::map<double, double> lam_edit, gam_edit;
    if (eta_rem > 0.0) {
        if (law.lambda_shape.empty()) {
            lam_edit[0.0] = law.lambda_level;
        } else {
            for (std::size_t i = 0; i < law.lambda_shape.values.size(); ++i) {
                const double b = law.lambda_shape.breaks[i] - lambda_shift;
                if (b >= eta_rem) break;
                lam_edit[std::max(0.0, b)] = law.lambda_shape.values[i];
            }
        }
        lam_edit[eta_rem] = 0.0;
    }
    if (gstar > 0.0) {
        if (prof.empty()) {
            gam_edit[std::max(0.0, gamma_start)] = gstar;
        } else {
            for (std::size_t i = 0; i < prof.values.size(); ++i) {
                const double b = gamma_start + prof.breaks[i];
                const double v = gstar * prof.values[i];
                if (b <= 0.0) {
                    gam_edit[0.0] = v; // later entries overwrite earlier sub-zero ones
                } else {
                    gam_edit[b] = v;
                }
            }
        }
    }
    std::vector<double> times;
    times.push_back(0.0);
    for (auto& [t, v] : lam_edit) times.push_back(t);
    for (auto& [t, v] : gam_edit) times.push_back(t);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    KernelPath p;
    p.breaks.reserve(times.size());
    p.lambda.reserve(times.size());
    p.gamma.reserve(times.size());
    double cur_l = 0.0, cur_g = 0.0;
    for (double t : times) {
        if (auto it = lam_edit.find(t); it != lam_edit.end()) cur_l = it->second;
        if (auto it = gam_edit.find(t); it != gam_edit.end()) cur_g = it->second;
        if (!p.breaks.empty() && cur_l == p.lambda.back() && cur_g == p.gamma.back()) continue;
        p.breaks.push_back(t);
        p.lambda.push_back(cur_l);
        p.gamma.push_back(cur_g);
    }
    // eta = end of the last positive-lambda interval; zeta = first positive gamma.
    double eta_actual = 0.0, zeta_actual = kInf;
    for (std::size_t i = 0; i < p.breaks.size(); ++i) {
        if (p.lambda[i] > 0.0) eta_actual = (i + 1 < p.breaks.size()) ? p.breaks[i + 1] : kInf;
        if (p.gamma[i] > 0.0) zeta_actual = std::min(zeta_actual, p.breaks[i]);
    }
    p.eta = eta_actual;
    p.zeta = zeta_actual;
    p.gamma_star = gstar * (prof.empty() ? 1.0 : prof.values.empty() ? 1.0 : prof.values.back());
    if (gstar == 0.0) p.gamma_star = 0.0;
    return p;
}

} // namespace

KernelPath sample_kernel(const KernelLaw& law, RandomStream& rng) {
    const PathDraw d = draw_parameters(law, rng);
    return build_path(law, d.eta, 0.0, d.eta + d.delay, d.gstar);
}

KernelPath sample_initial_infected(const KernelLaw& law, const InitialLaw& init, RandomStream& rng) {
    const double xi = sample(init.xi, rng);
    const double eta_full = sample_conditional_exceed(law.eta, xi, rng);
    const double eta_rem = eta_full - xi;
    const double delay = sample(law.immune_delay, rng);
    const double gstar = law.gamma_star.values[rng.categorical(law.gamma_star.probs)];
    return build_path(law, eta_rem, xi, eta_rem + delay, gstar);
}

KernelPath sample_initial_recovered(const KernelLaw& law, const InitialLaw& init, RandomStream& rng) {
    const double vt = sample(init.vartheta, rng);
    const double delay = sample(law.immune_delay, rng);
    const double gstar = law.gamma_star.values[rng.categorical(law.gamma_star.probs)];
    // Recovery happened vt ago: the profile argument at time t is (t + vt - delay).
    return build_path(law, 0.0, 0.0, delay - vt, gstar);
}

KernelPath sample_initial(const KernelLaw& law, const InitialLaw& init, RandomStream& rng) {
    const double u = rng.uniform();
    if (u < init.i_fraction) return sample_initial_infected(law, init, rng);
    if (u < init.i_fraction + init.r_fraction) return sample_initial_recovered(law, init, rng);
    KernelPath p;
    p.breaks = {0.0};
    p.lambda = {0.0};
    p.gamma = {1.0};
    p.eta = 0.0;
    p.zeta = 0.0;
    p.gamma_star = 1.0;
    return p;
}

double mean_infectivity(const KernelLaw& law, double t) {
    const double level = law.lambda_shape.empty() ? law.lambda_level : law.lambda_shape(t);
    return level * episim::survival(law.eta, t);
}

double mean_infectivity_cell_avg(const KernelLaw& law, double a, double b) {
    if (b <= a) return 0.0;
    if (law.lambda_shape.empty())
        return law.lambda_level * integral_survival(law.eta, a, b) / (b - a);
    double acc = 0.0;
    const auto& sh = law.lambda_shape;
    for (std::size_t i = 0; i < sh.values.size(); ++i) {
        const double lo = std::max(a, sh.breaks[i]);
        const double hi = (i + 1 < sh.breaks.size()) ? std::min(b, sh.breaks[i + 1]) : b;
        if (hi > lo) acc += sh.values[i] * integral_survival(law.eta, lo, hi);
    }
    return acc / (b - a);
}

McEstimate mc_mean_infectivity(const KernelLaw& law, double t, int budget, RandomStream& rng) {
    double sum = 0.0, sumsq = 0.0;
    for (int m = 0; m < budget; ++m) {
        auto stream = rng.derive(static_cast<std::uint64_t>(m));
        const KernelPath p = sample_kernel(law, stream);
        const double v = p.lambda_at(t);
        sum += v;
        sumsq += v * v;
    }
    McEstimate e;
    e.mean = sum / budget;
    const double var = std::max(0.0, sumsq / budget - e.mean * e.mean);
    e.std_error = std::sqrt(var / budget);
    return e;
}

double survival(const KernelLaw& law, double t) { return episim::survival(law.eta, t); }

double survival_initial(const KernelLaw& law, const InitialLaw& init, double t) {
    if (const auto* e = std::get_if<Exponential>(&law.eta)) return std::exp(-e->rate * t);
    const XiNodes nodes = xi_nodes(init.xi);
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes.point.size(); ++i) {
        const double sx = episim::survival(law.eta, nodes.point[i]);
        if (sx <= 0.0) continue;
        acc += nodes.weight[i] * episim::survival(law.eta, nodes.point[i] + t) / sx;
    }
    return acc;
}

double mean_infectivity_initial(const KernelLaw& law, const InitialLaw& init, double t) {
    if (law.lambda_shape.empty()) return law.lambda_level * survival_initial(law, init, t);
    const XiNodes nodes = xi_nodes(init.xi);
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes.point.size(); ++i) {
        const double sx = episim::survival(law.eta, nodes.point[i]);
        if (sx <= 0.0) continue;
        acc += nodes.weight[i] * law.lambda_shape(t + nodes.point[i]) *
               episim::survival(law.eta, nodes.point[i] + t) / sx;
    }
    return acc;
}

std::vector<double> initial_survival_grid(const KernelLaw& law, const InitialLaw& init,
                                          std::size_t npoints, double step) {
    std::vector<double> out(npoints, 0.0);
    if (const auto* e = std::get_if<Exponential>(&law.eta)) {
        for (std::size_t i = 0; i < npoints; ++i) out[i] = std::exp(-e->rate * step * i);
        return out;
    }
    const XiNodes nodes = xi_nodes(init.xi);
    for (std::size_t m = 0; m < nodes.point.size(); ++m) {
        const double x = nodes.point[m];
        const double sx = episim::survival(law.eta, x);
        if (sx <= 0.0) continue;
        const double wm = nodes.weight[m] / sx;
        for (std::size_t i = 0; i < npoints; ++i)
            out[i] += wm * episim::survival(law.eta, x + step * i);
    }
    return out;
}

std::vector<double> initial_mean_infectivity_grid(const KernelLaw& law, const InitialLaw& init,
                                                  std::size_t npoints, double step) {
    if (law.lambda_shape.empty()) {
        std::vector<double> out = initial_survival_grid(law, init, npoints, step);
        for (auto& v : out) v *= law.lambda_level;
        return out;
    }
    std::vector<double> out(npoints, 0.0);
    const XiNodes nodes = xi_nodes(init.xi);
    for (std::size_t m = 0; m < nodes.point.size(); ++m) {
        const double x = nodes.point[m];
        const double sx = episim::survival(law.eta, x);
        if (sx <= 0.0) continue;
        const double wm = nodes.weight[m] / sx;
        for (std::size_t i = 0; i < npoints; ++i) {
            const double t = step * i;
            out[i] += wm * law.lambda_shape(t + x) * episim::survival(law.eta, x + t);
        }
    }
    return out;
}

LawStatistics law_statistics(const KernelLaw& law) {
    LawStatistics s;
    s.E_eta = mean(law.eta);
    if (law.lambda_shape.empty()) {
        s.R0 = law.lambda_level * s.E_eta;
    } else {
        const auto& sh = law.lambda_shape;
        double acc = 0.0;
        for (std::size_t i = 0; i < sh.values.size(); ++i) {
            const double lo = sh.breaks[i];
            const double hi = (i + 1 < sh.breaks.size()) ? sh.breaks[i + 1] : kInf;
            acc += sh.values[i] * integral_survival(law.eta, lo, hi);
        }
        s.R0 = acc;
    }
    s.R0_finite = std::isfinite(s.R0);

    double einv = 0.0;
    double gmin = 1.0, gmax = 0.0;
    for (std::size_t i = 0; i < law.gamma_star.values.size(); ++i) {
        const double g = law.gamma_star.values[i];
        const double p = law.gamma_star.probs[i];
        if (p <= 0.0) continue;
        gmin = std::min(gmin, g);
        gmax = std::max(gmax, g);
        if (g <= 0.0)
            einv = kInf;
        else if (!std::isinf(einv))
            einv += p / g;
    }
    s.E_inv_gamma_star = einv;
    s.gamma_star_min = gmin;
    s.gamma_star_max = gmax;

    if (law.gamma_is_trivial_zero()) {
        s.E_zeta = kInf;
    } else {
        double profile_offset = 0.0;
        const PiecewiseConst prof = recovery_profile_of(law);
        if (!prof.empty()) {
            for (std::size_t i = 0; i < prof.values.size(); ++i)
                if (prof.values[i] > 0.0) {
                    profile_offset = prof.breaks[i];
                    break;
                }
        }
        s.E_zeta = s.E_eta + mean(law.immune_delay) + profile_offset;
    }
    return s;
}

} // namespace episim
