#include "episim/lln.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <unordered_map>

namespace episim {

namespace {

// ---------------------------------------------------------------------------
// Grid discretization of the kernels.
//
// Cohort masses w_j live on cells (s_j, s_{j+1}]; convolution kernels are
// therefore taken as exact cell averages (so that their discrete total equals
// R0 resp. E[eta] exactly), and duration laws entering indicator thresholds
// are quantized to the nearest grid point (centered cells).
// ---------------------------------------------------------------------------

struct GridKernels {
    int n = 0;
    double dt = 0.0;
    std::vector<double> lam_avg; // [n+1]; lam_avg[k] = cell average of lambda_bar on ((k-1)dt, k dt]
    std::vector<double> fc_avg;  // [n+1]; same for F^c
    std::vector<double> lam0;    // [n+1]; lambda_bar_0(t_i), pointwise
    std::vector<double> fc0;     // [n+1]; F^c_0(t_i), pointwise
};

GridKernels grid_kernels(const KernelLaw& law, const InitialLaw& init, int n, double dt) {
    GridKernels g;
    g.n = n;
    g.dt = dt;
    g.lam_avg.assign(n + 1, 0.0);
    g.fc_avg.assign(n + 1, 0.0);
    for (int k = 1; k <= n; ++k) {
        const double a = (k - 1) * dt, b = k * dt;
        g.lam_avg[k] = mean_infectivity_cell_avg(law, a, b);
        g.fc_avg[k] = integral_survival(law.eta, a, b) / dt;
    }
    if (init.i_fraction > 0.0) {
        g.lam0 = initial_mean_infectivity_grid(law, init, n + 1, dt);
        g.fc0 = initial_survival_grid(law, init, n + 1, dt);
    } else {
        g.lam0.assign(n + 1, 0.0);
        g.fc0.assign(n + 1, 0.0);
    }
    return g;
}

// Centered PMF: p[k] = P(X in ((k-1/2)dt, (k+1/2)dt]); mean-unbiased.
// Mass beyond n*dt is left out (it is the "never within horizon" tail).
std::vector<double> pmf_centered(const Distribution& d, int n, double dt) {
    std::vector<double> p(n + 1, 0.0);
    double prev = 1.0; // survival at -dt/2 treated as 1
    for (int k = 0; k <= n; ++k) {
        const double s = survival(d, (k + 0.5) * dt);
        p[k] = std::max(0.0, prev - s);
        prev = s;
    }
    return p;
}

// Ceil PMF: p[k] = P(X in ((k-1)dt, k dt]), so E rises by ~dt/2. Susceptibility
// onsets are quantized this way on purpose: a cohort's reinfection pool
// overweights its decay sum by F dt/2 per unit, and the ceil shift of the
// onset cancels that at first order, leaving the endemic fixed point O(dt^2).
std::vector<double> pmf_ceil(const Distribution& d, int n, double dt) {
    std::vector<double> p(n + 1, 0.0);
    double prev = survival(d, 0.0);
    p[0] = std::max(0.0, 1.0 - prev);
    for (int k = 1; k <= n; ++k) {
        const double s = survival(d, k * dt);
        p[k] = std::max(0.0, prev - s);
        prev = s;
    }
    return p;
}

std::vector<double> pmf_ceil_from_survival_grid(const std::vector<double>& surv, int n) {
    std::vector<double> p(n + 1, 0.0);
    p[0] = std::max(0.0, 1.0 - surv[0]);
    for (int k = 1; k <= n; ++k) p[k] = std::max(0.0, surv[k - 1] - surv[k]);
    return p;
}

std::vector<double> convolve_pmf(const std::vector<double>& a, const std::vector<double>& b, int n) {
    if (std::abs(a[0] - 1.0) < 1e-15) return b; // delta at 0
    if (std::abs(b[0] - 1.0) < 1e-15) return a;
    std::vector<double> out(n + 1, 0.0);
    for (int i = 0; i <= n; ++i) {
        if (a[i] == 0.0) continue;
        const int jmax = n - i;
        for (int j = 0; j <= jmax; ++j) out[i + j] += a[i] * b[j];
    }
    return out;
}

std::vector<double> pmf_shift(std::vector<double> p, int cells) {
    if (cells <= 0) return p;
    const int n = static_cast<int>(p.size()) - 1;
    std::vector<double> out(n + 1, 0.0);
    for (int k = 0; k + cells <= n; ++k) out[k + cells] = p[k];
    return out;
}

// PMF of (A - B)^+ from the PMFs of A and B.
std::vector<double> pmf_difference_clipped(const std::vector<double>& a, const std::vector<double>& b,
                                           int n) {
    std::vector<double> out(n + 1, 0.0);
    for (int i = 0; i <= n; ++i) {
        if (a[i] == 0.0) continue;
        double bmass_seen = 0.0;
        for (int j = 0; j <= n; ++j) {
            if (b[j] == 0.0) continue;
            bmass_seen += b[j];
            out[std::max(0, i - j)] += a[i] * b[j];
        }
        // B mass beyond the grid exceeds any on-grid A value: clips to 0.
        out[0] += a[i] * (1.0 - bmass_seen);
    }
    return out;
}

void merge_zero_cell_up(std::vector<double>& p) {
    if (p.size() >= 2) {
        p[1] += p[0];
        p[0] = 0.0;
    }
}

// Deterministic extra offset of the first positive susceptibility within a
// Custom recovery profile (0 for jump families and ramps).
double profile_offset(const KernelLaw& law) {
    if (law.family != Family::Custom || law.recovery_profile.empty()) return 0.0;
    for (std::size_t i = 0; i < law.recovery_profile.values.size(); ++i)
        if (law.recovery_profile.values[i] > 0.0) return law.recovery_profile.breaks[i];
    return 0.0;
}

struct GammaAtoms {
    std::vector<double> value;
    std::vector<double> prob;
};

GammaAtoms gamma_atoms(const KernelLaw& law) {
    GammaAtoms a;
    for (std::size_t i = 0; i < law.gamma_star.values.size(); ++i)
        if (law.gamma_star.probs[i] > 0.0) {
            a.value.push_back(law.gamma_star.values[i]);
            a.prob.push_back(law.gamma_star.probs[i]);
        }
    return a;
}

void check_bounds(double F, double S, double lambda_star, int step) {
    if (!(F >= -1e-9 && F <= lambda_star * (1.0 + 1e-6) + 1e-9) || !(S >= -1e-9 && S <= 1.0 + 1e-6)) {
        std::ostringstream os;
        os << "solver bounds violated at step " << step << " (F=" << F << ", S=" << S
           << "); reduce dt or check the scenario";
        throw std::runtime_error(os.str());
    }
}

void check_residual(double resid, double ceiling, int step) {
    if (resid > ceiling) {
        std::ostringstream os;
        os << "conservation residual " << resid << " exceeds ceiling " << ceiling << " at step "
           << step << "; reduce dt or increase M";
        throw std::runtime_error(os.str());
    }
}

void fit_tail(const TrajectoryGrid& g, SolveInfo& info) {
    const std::size_t n = g.size() - 1;
    info.F_at_T = g.F_bar[n];
    const std::size_t back = std::min(n, std::max<std::size_t>(2, n / 10));
    const double f0 = g.F_bar[n - back];
    const double f1 = g.F_bar[n];
    if (f1 > 0.0 && f0 > f1) {
        const double rate = std::log(f0 / f1) / (back * g.dt);
        info.tail_integral_estimate = f1 / rate;
    } else {
        info.tail_integral_estimate = f1 > 0.0 ? kInf : 0.0;
    }
}

// ---------------------------------------------------------------------------
// Exact-expectation engine (indicator susceptibility: gamma = g* 1{t >= zeta}).
//
// All inner expectations reduce, per gamma_star atom, to scalar recursions
//   Phi_a(i+1) = e^{-g_a F_i dt} Phi_a(i) + c_{i+1},   c_m = sum_k q_k w_{m-k},
// plus one running sum NY of cohort mass whose zeta has not been reached.
// The cohort weight uses a half-step exponential damping so that the discrete
// conservation identity drifts only at O(dt^3) per step.
// ---------------------------------------------------------------------------

TrajectoryGrid run_exact(const KernelLaw& law, const InitialLaw& init, const SolveConfig& cfg,
                         SolveInfo* info, const std::vector<double>* fixed_F) {
    const int n = static_cast<int>(std::llround(cfg.T / cfg.dt));
    const double dt = cfg.dt;
    const GridKernels gk = grid_kernels(law, init, n, dt);
    const GammaAtoms atoms = gamma_atoms(law);
    const std::size_t na = atoms.value.size();
    const double ifrac = init.i_fraction;
    const double rfrac = init.r_fraction;
    const double sfrac = 1.0 - ifrac - rfrac;
    const double offset = profile_offset(law);
    const int offset_cells = static_cast<int>(std::llround(offset / dt));
    const double lambda_star = law.lambda_star_effective();

    // Cohort zeta PMF (eta + delay + offset): eta ceil-quantized (see pmf_ceil),
    // delay centered; first cell rolled up so that a cohort never feeds back
    // into S_bar at its own birth step.
    std::vector<double> qc = pmf_shift(
        convolve_pmf(pmf_ceil(law.eta, n, dt), pmf_centered(law.immune_delay, n, dt), n),
        offset_cells);
    merge_zero_cell_up(qc);

    // Initially-infected group: zeta_0 = eta_0 + delay + offset with eta_0 the
    // conditional remaining duration.
    std::vector<double> q0(n + 1, 0.0);
    if (ifrac > 0.0) {
        q0 = pmf_shift(convolve_pmf(pmf_ceil_from_survival_grid(gk.fc0, n),
                                    pmf_centered(law.immune_delay, n, dt), n),
                       offset_cells);
        merge_zero_cell_up(q0);
    }

    // Initially-recovered group: zeta_R = (delay + offset - vartheta)^+.
    std::vector<double> qr(n + 1, 0.0);
    if (rfrac > 0.0) {
        qr = pmf_difference_clipped(
            pmf_shift(pmf_centered(law.immune_delay, n, dt), offset_cells),
            pmf_centered(init.vartheta, n, dt), n);
    }

    TrajectoryGrid out;
    out.dt = dt;
    out.times.resize(n + 1);
    out.F_bar.resize(n + 1);
    out.S_bar.resize(n + 1);
    out.I_bar.resize(n + 1);
    out.U_bar.resize(n + 1);
    out.conservation_residual.resize(n + 1);

    std::vector<double> w(n + 1, 0.0);
    std::vector<double> Phi(na, 0.0);
    std::vector<double> Rinf(na, ifrac > 0.0 ? q0[0] : 0.0);
    std::vector<double> Rrec(na, rfrac > 0.0 ? qr[0] : 0.0);
    double Q0 = ifrac > 0.0 ? q0[0] : 0.0;
    double Qr = rfrac > 0.0 ? qr[0] : 0.0;
    double NY = 0.0;
    double e_sus = 1.0; // exp(-int_0^t F)
    double max_resid = 0.0;

    for (int i = 0; i <= n; ++i) {
        const double t = i * dt;
        double convF = 0.0, convI = 0.0;
        for (int j = 0; j < i; ++j) {
            convF += gk.lam_avg[i - j] * w[j];
            convI += gk.fc_avg[i - j] * w[j];
        }
        const double F = fixed_F ? (*fixed_F)[i] : ifrac * gk.lam0[i] + convF;

        double S = sfrac * e_sus;
        double LHS = sfrac * e_sus + NY;
        for (std::size_t a = 0; a < na; ++a) {
            const double mass_a = ifrac * Rinf[a] + rfrac * Rrec[a] + Phi[a];
            S += atoms.prob[a] * atoms.value[a] * mass_a;
            LHS += atoms.prob[a] * (mass_a + ifrac * (1.0 - Q0) + rfrac * (1.0 - Qr));
        }
        const double resid = std::abs(LHS - 1.0);
        max_resid = std::max(max_resid, resid);
        check_residual(resid, cfg.conservation_ceiling, i);
        check_bounds(F, S, lambda_star, i);

        const double I = ifrac * gk.fc0[i] + convI;

        // Half-step damped susceptibility defining the cohort mass.
        double Stilde = sfrac * e_sus * std::exp(-0.5 * F * dt);
        for (std::size_t a = 0; a < na; ++a) {
            const double mass_a = ifrac * Rinf[a] + rfrac * Rrec[a] + Phi[a];
            Stilde += atoms.prob[a] * atoms.value[a] * mass_a *
                      std::exp(-0.5 * atoms.value[a] * F * dt);
        }
        w[i] = Stilde * F * dt;

        out.times[i] = t;
        out.F_bar[i] = F;
        out.S_bar[i] = S;
        out.I_bar[i] = I;
        out.U_bar[i] = 1.0 - I;
        out.conservation_residual[i] = resid;

        if (i == n) {
            if (info) {
                double sstar = sfrac * e_sus;
                for (std::size_t a = 0; a < na; ++a)
                    sstar += atoms.prob[a] * atoms.value[a] *
                             (ifrac * (Rinf[a] + (1.0 - Q0)) + rfrac * (Rrec[a] + (1.0 - Qr)) +
                              Phi[a] + NY);
                info->S_star_tail = sstar;
            }
            break;
        }

        // State advance to t_{i+1}.
        double c_next = 0.0;
        const int kmax = std::min(i + 1, n);
        for (int k = 1; k <= kmax; ++k) c_next += qc[k] * w[i + 1 - k];
        for (std::size_t a = 0; a < na; ++a) {
            const double d = std::exp(-atoms.value[a] * F * dt);
            Phi[a] = d * Phi[a] + c_next;
            Rinf[a] = d * Rinf[a] + (ifrac > 0.0 ? q0[i + 1] : 0.0);
            Rrec[a] = d * Rrec[a] + (rfrac > 0.0 ? qr[i + 1] : 0.0);
        }
        if (ifrac > 0.0) Q0 += q0[i + 1];
        if (rfrac > 0.0) Qr += qr[i + 1];
        NY += w[i] - c_next;
        e_sus *= std::exp(-F * dt);
    }

    if (info) {
        info->exact_engine = true;
        info->max_conservation_residual = max_resid;
        info->mc_half_width_S = 0.0;
        fit_tail(out, *info);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo cohort engine (general staircase susceptibility).
//
// Each cohort j carries M sampled gamma paths; per (cohort, sample) pair the
// running factor A = exp(-int gamma F) is maintained multiplicatively with
// per-step decay factors shared through a small level alphabet.
// ---------------------------------------------------------------------------

struct Alphabet {
    std::vector<double> level;
    std::unordered_map<std::uint64_t, std::uint8_t> by_bits;

    std::uint8_t index_of(double v) const {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        auto it = by_bits.find(bits);
        if (it == by_bits.end()) throw std::logic_error("gamma level missing from alphabet");
        return it->second;
    }
};

Alphabet build_alphabet(const KernelLaw& law, const InitialLaw& init) {
    std::vector<double> vals;
    vals.push_back(0.0);
    vals.push_back(1.0); // fully susceptible start
    // Profile values (jump families: {1}).
    std::vector<double> prof_vals{1.0};
    if (law.family == Family::GradualGamma) {
        prof_vals.clear();
        for (int j = 0; j < law.ramp_steps; ++j) prof_vals.push_back((j + 0.5) / law.ramp_steps);
        prof_vals.push_back(1.0);
    } else if (law.family == Family::Custom && !law.recovery_profile.empty()) {
        prof_vals = law.recovery_profile.values;
    }
    for (double g : law.gamma_star.values)
        for (double pv : prof_vals) vals.push_back(g * pv);
    (void)init;
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    if (vals.size() > 250) throw std::invalid_argument("gamma level alphabet too large (> 250 levels)");
    Alphabet a;
    a.level = vals;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, &vals[i], sizeof(bits));
        a.by_bits.emplace(bits, static_cast<std::uint8_t>(i));
    }
    return a;
}

struct PairArena {
    // Segment arena: (age, level) change points per path, contiguous.
    std::vector<float> seg_age;
    std::vector<std::uint8_t> seg_level;
    // Per pair state.
    std::vector<double> A;
    std::vector<std::uint32_t> cur;  // current segment cursor (arena index)
    std::vector<std::uint32_t> end;  // one past the path's last segment
    std::vector<std::uint8_t> level; // current level index
    std::vector<std::uint8_t> plateau;

    std::size_t add_path(const KernelPath& p, const Alphabet& al) {
        const std::size_t begin = seg_age.size();
        double prev = -1.0;
        for (std::size_t i = 0; i < p.breaks.size(); ++i) {
            if (p.gamma[i] == prev) continue;
            prev = p.gamma[i];
            seg_age.push_back(static_cast<float>(p.breaks[i]));
            seg_level.push_back(al.index_of(p.gamma[i]));
        }
        A.push_back(1.0);
        cur.push_back(static_cast<std::uint32_t>(begin));
        end.push_back(static_cast<std::uint32_t>(seg_age.size()));
        level.push_back(0);
        plateau.push_back(seg_level.empty() ? 0 : seg_level.back());
        // Initial level: segments at age <= 0.
        advance_pair(A.size() - 1, 0.0);
        return A.size() - 1;
    }

    void advance_pair(std::size_t p, double age) {
        std::uint32_t c = cur[p];
        const std::uint32_t e = end[p];
        std::uint8_t lv = level[p];
        while (c < e && seg_age[c] <= age) {
            lv = seg_level[c];
            ++c;
        }
        cur[p] = c;
        level[p] = lv;
    }
};

TrajectoryGrid run_mc(const KernelLaw& law, const InitialLaw& init, const SolveConfig& cfg,
                      SolveInfo* info, const std::vector<double>* fixed_F) {
    const int n = static_cast<int>(std::llround(cfg.T / cfg.dt));
    const double dt = cfg.dt;
    const int M = cfg.M;
    const GridKernels gk = grid_kernels(law, init, n, dt);
    const double ifrac = init.i_fraction;
    const double rfrac = init.r_fraction;
    const double sfrac = 1.0 - ifrac - rfrac;
    const double lambda_star = law.lambda_star_effective();

    const std::size_t est_pairs = static_cast<std::size_t>(n + 3) * static_cast<std::size_t>(M);
    if (est_pairs * 6 > cfg.memory_budget_scalars) {
        std::ostringstream os;
        os << "cohort state would need ~" << est_pairs * 6 << " scalars, over the budget of "
           << cfg.memory_budget_scalars << "; increase dt, lower M, or raise the budget";
        throw std::invalid_argument(os.str());
    }

    const Alphabet al = build_alphabet(law, init);
    PairArena arena;
    arena.A.reserve(est_pairs);

    RandomStream root(cfg.seed);

    // Init-group pairs: [0, nI) infected, [nI, nI + nR) recovered.
    std::size_t nI = 0, nR = 0;
    if (ifrac > 0.0) {
        for (int m = 0; m < M; ++m) {
            auto rs = root.derive(0x11u, static_cast<std::uint64_t>(m));
            arena.add_path(sample_initial_infected(law, init, rs), al);
        }
        nI = M;
    }
    if (rfrac > 0.0) {
        for (int m = 0; m < M; ++m) {
            auto rs = root.derive(0x22u, static_cast<std::uint64_t>(m));
            arena.add_path(sample_initial_recovered(law, init, rs), al);
        }
        nR = M;
    }
    const std::size_t cohort_base = nI + nR;

    TrajectoryGrid out;
    out.dt = dt;
    out.times.resize(n + 1);
    out.F_bar.resize(n + 1);
    out.S_bar.resize(n + 1);
    out.I_bar.resize(n + 1);
    out.U_bar.resize(n + 1);
    out.conservation_residual.resize(n + 1);

    std::vector<double> w(n + 1, 0.0);
    std::vector<double> dec(al.level.size()), hd(al.level.size());
    double e_sus = 1.0;
    double max_resid = 0.0, max_halfdiff = 0.0;
    const double wI = ifrac / M, wR = rfrac / M;

    for (int i = 0; i <= n; ++i) {
        const double t = i * dt;
        double convF = 0.0, convI = 0.0;
        for (int j = 0; j < i; ++j) {
            convF += gk.lam_avg[i - j] * w[j];
            convI += gk.fc_avg[i - j] * w[j];
        }
        const double F = fixed_F ? (*fixed_F)[i] : ifrac * gk.lam0[i] + convF;

        for (std::size_t l = 0; l < al.level.size(); ++l) {
            const double x = al.level[l] * F * dt;
            dec[l] = std::exp(-x);
            hd[l] = 1.0 - 0.5 * x;
        }

        double S = sfrac * e_sus;
        double Stilde = sfrac * e_sus * std::exp(-0.5 * F * dt);
        double LHS = sfrac * e_sus;
        double half1 = 0.0, half2 = 0.0;

        auto sweep = [&](std::size_t begin, std::size_t count, double wt, double age) {
            double s_lo = 0.0, s_hi = 0.0, st = 0.0, lh = 0.0;
            for (std::size_t p = begin; p < begin + count; ++p) {
                arena.advance_pair(p, age);
                const std::uint8_t lv = arena.level[p];
                const double g = al.level[lv];
                const double Ap = arena.A[p];
                lh += Ap;
                if (g > 0.0) {
                    const double gA = g * Ap;
                    ((p - begin) * 2 < count ? s_lo : s_hi) += gA;
                    st += gA * hd[lv];
                }
                arena.A[p] = Ap * dec[lv];
            }
            S += wt * (s_lo + s_hi);
            Stilde += wt * st;
            LHS += wt * lh;
            half1 += wt * 2.0 * s_lo;
            half2 += wt * 2.0 * s_hi;
        };

        if (nI > 0) sweep(0, nI, wI, t);
        if (nR > 0) sweep(nI, nR, wR, t);
        for (int j = 0; j < i; ++j)
            sweep(cohort_base + static_cast<std::size_t>(j) * M, M, w[j] / M, t - j * dt);

        // Cohort mass not yet created plus the zeta tail is implicit in LHS:
        // every live pair carries its own exp factor (1 before zeta).
        const double resid = std::abs(LHS - 1.0);
        max_resid = std::max(max_resid, resid);
        max_halfdiff = std::max(max_halfdiff, std::abs(half1 - half2));
        check_residual(resid, cfg.conservation_ceiling, i);
        check_bounds(F, S, lambda_star, i);

        const double I = ifrac * gk.fc0[i] + convI;
        w[i] = Stilde * F * dt;

        out.times[i] = t;
        out.F_bar[i] = F;
        out.S_bar[i] = S;
        out.I_bar[i] = I;
        out.U_bar[i] = 1.0 - I;
        out.conservation_residual[i] = resid;

        if (i == n) {
            if (info) {
                double sstar = sfrac * e_sus;
                auto tail_sweep = [&](std::size_t begin, std::size_t count, double wt) {
                    double acc = 0.0;
                    for (std::size_t p = begin; p < begin + count; ++p)
                        acc += al.level[arena.plateau[p]] * arena.A[p];
                    sstar += wt * acc;
                };
                // A was already decayed by this step's factor; the tail target
                // is exp(-int_0^T ...), i.e. the pre-decay value. Rescale back.
                for (std::size_t p = 0; p < arena.A.size(); ++p)
                    arena.A[p] /= dec[arena.level[p]];
                if (nI > 0) tail_sweep(0, nI, wI);
                if (nR > 0) tail_sweep(nI, nR, wR);
                for (int j = 0; j < i; ++j)
                    tail_sweep(cohort_base + static_cast<std::size_t>(j) * M, M, w[j] / M);
                info->S_star_tail = sstar;
            }
            break;
        }

        // Spawn cohort i (first contributes at step i+1, with age dt).
        for (int m = 0; m < M; ++m) {
            auto rs = root.derive(0x33u, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(m));
            arena.add_path(sample_kernel(law, rs), al);
        }
        e_sus *= std::exp(-F * dt);
    }

    if (info) {
        info->exact_engine = false;
        info->max_conservation_residual = max_resid;
        info->mc_half_width_S = 0.5 * max_halfdiff;
        fit_tail(out, *info);
    }
    return out;
}

bool exact_applicable(const KernelLaw& law) { return law.gamma_is_indicator(); }

TrajectoryGrid run_engine(const KernelLaw& law, const InitialLaw& init, const SolveConfig& cfg,
                          SolveInfo* info, const std::vector<double>* fixed_F) {
    law.validate();
    init.validate(law);
    if (cfg.dt <= 0.0 || cfg.T <= 0.0) throw std::invalid_argument("solver: T and dt must be > 0");
    if (cfg.M < 1) throw std::invalid_argument("solver: M must be >= 1");
    const bool exact = cfg.engine == SolverEngine::Exact ||
                       (cfg.engine == SolverEngine::Auto && exact_applicable(law));
    if (exact && !exact_applicable(law))
        throw std::invalid_argument("exact engine requires an indicator susceptibility law");
    return exact ? run_exact(law, init, cfg, info, fixed_F) : run_mc(law, init, cfg, info, fixed_F);
}

} // namespace

TrajectoryGrid solve_limit(const KernelLaw& law, const InitialLaw& init, const SolveConfig& cfg,
                           SolveInfo* info) {
    return run_engine(law, init, cfg, info, nullptr);
}

double conservation_check(const TrajectoryGrid& grid) {
    double m = 0.0;
    for (double r : grid.conservation_residual) m = std::max(m, r);
    return m;
}

SolveInfo evaluate_limit_tail(const TrajectoryGrid& grid, const KernelLaw& law, const InitialLaw& init,
                              const SolveConfig& cfg) {
    SolveConfig c = cfg;
    c.T = grid.times.back();
    c.dt = grid.dt;
    c.conservation_ceiling = kInf; // replay must not throw on a diagnostic pass
    SolveInfo info;
    run_engine(law, init, c, &info, &grid.F_bar);
    return info;
}

FixedPointCheck auxiliary_fixed_point_check(const TrajectoryGrid& grid, const KernelLaw& law,
                                            const InitialLaw& init, int K, std::uint64_t seed) {
    const std::size_t n = grid.size();
    if (n < 2) throw std::invalid_argument("auxiliary_fixed_point_check: grid too short");
    if (K < 1) throw std::invalid_argument("auxiliary_fixed_point_check: K must be >= 1");
    FixedPointCheck result;
    result.k_small_warning = K < 1000;
    const double dt = grid.dt;
    const double T = grid.times.back();
    double sup_m = 0.0;
    for (double f : grid.F_bar) sup_m = std::max(sup_m, f);

    std::vector<double> sum(n, 0.0), sumsq(n, 0.0);
    RandomStream root(seed);

    for (int k = 0; k < K; ++k) {
        auto rs_events = root.derive(0x51u, static_cast<std::uint64_t>(k));
        auto rs_path = root.derive(0x52u, static_cast<std::uint64_t>(k), std::uint64_t{0});
        KernelPath path = sample_initial(law, init, rs_path);
        PathCursor lam_cur, gam_cur;
        double tau = 0.0; // last infection time (age reference)
        int infections = 0;
        std::size_t gi = 0;
        double tc = sup_m > 0.0 ? rs_events.exponential(sup_m) : kInf;
        while (gi < n) {
            if (grid.times[gi] <= tc || tc > T) {
                const double lam = lam_cur.lambda_at(path, grid.times[gi] - tau);
                sum[gi] += lam;
                sumsq[gi] += lam * lam;
                ++gi;
                continue;
            }
            // Candidate event at tc: thin with probability gamma * m(tc) / sup_m.
            const double age = tc - tau;
            const double g = gam_cur.gamma_at(path, age);
            const std::size_t fi = std::min(n - 2, static_cast<std::size_t>(tc / dt));
            const double m_tc = grid.F_bar[fi];
            if (g > 0.0 && rs_events.uniform() < g * m_tc / sup_m) {
                ++infections;
                auto rs_new = root.derive(0x52u, static_cast<std::uint64_t>(k),
                                          static_cast<std::uint64_t>(infections));
                path = sample_kernel(law, rs_new);
                tau = tc;
                lam_cur.reset();
                gam_cur.reset();
            }
            tc += rs_events.exponential(sup_m);
        }
    }

    result.z_scores.resize(n);
    std::size_t within = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double mean = sum[i] / K;
        const double var = std::max(0.0, sumsq[i] / K - mean * mean);
        const double se = std::sqrt(var / K);
        const double diff = mean - grid.F_bar[i];
        double z;
        if (se > 0.0)
            z = diff / se;
        else
            z = std::abs(diff) < 1e-12 ? 0.0 : std::copysign(kInf, diff);
        result.z_scores[i] = z;
        if (std::abs(z) <= 3.0) ++within;
    }
    result.coverage_within_3 = static_cast<double>(within) / n;
    return result;
}

} // namespace episim
