// Acceptance suite: end-to-end checks of the whole toolkit against its
// analytic targets. Each criterion prints one [PASS]/[FAIL] line; the binary
// exits nonzero if any criterion fails. Scenario fixtures are loaded from the
// directory given as argv[1] (default: ./scenarios).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "episim/abm.hpp"
#include "episim/equilibrium.hpp"
#include "episim/lln.hpp"
#include "episim/pde.hpp"
#include "episim/scenario.hpp"

using namespace episim;

namespace {

int g_failures = 0;

class Criterion {
public:
    Criterion(int id, std::string what) : id_(id), what_(std::move(what)) {
        start_ = std::chrono::steady_clock::now();
    }

    void check(bool ok, const std::string& detail) {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        std::printf("[%s] C%-2d %s  (%s; %.1fs)\n", ok ? "PASS" : "FAIL", id_, what_.c_str(),
                    detail.c_str(), secs);
        std::fflush(stdout);
        if (!ok) ++g_failures;
    }

private:
    int id_;
    std::string what_;
    std::chrono::steady_clock::time_point start_;
};

std::string g_dir = "scenarios";

Scenario fixture(const std::string& name) { return load_scenario(g_dir + "/" + name + ".json"); }

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), pattern, a, b, c);
    return buf;
}

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------

void c1_sis_endemic_value() {
    Criterion c(1, "SIS endemic value: I(40) = 0.5 within 1e-3 at dt = 0.01");
    const Scenario s = fixture("markov_sis");
    const auto grid = solve_limit(s.kernel, s.initial, s.solve_config(1));
    const double err = std::abs(grid.I_bar.back() - 0.5);
    c.check(err <= 1e-3, fmt("I(40)=%.6f err=%.2e", grid.I_bar.back(), err));
}

void c2_sirs_endemic_value() {
    Criterion c(2, "SIRS endemic value: I(80) = 0.25 within 2e-3");
    const Scenario s = fixture("sirs");
    const auto grid = solve_limit(s.kernel, s.initial, s.solve_config(1));
    const double err = std::abs(grid.I_bar.back() - 0.25);
    c.check(err <= 2e-3, fmt("I(80)=%.6f err=%.2e", grid.I_bar.back(), err));
}

void c3_indicator_closed_form() {
    Criterion c(3, "indicator-gamma root of H(x) = R0 matches the closed form");
    const Scenario s = fixture("indicator_gamma");
    const EquilibriumReport rep = solve_endemic(s.kernel);
    const double err_f = std::abs(rep.F_star - 0.5);
    const double err_i = std::abs(rep.I_star - 0.5 / 3.0);
    c.check(rep.regime == Regime::Endemic && err_f <= 1e-6 && err_i <= 1e-6,
            fmt("F*=%.8f I*=%.8f (errs %.1e)", rep.F_star, rep.I_star, std::max(err_f, err_i)));
}

void c4_harmonic_threshold() {
    Criterion c(4, "H(0) = E[1/gamma*] exactly; H nondecreasing on 50-point grids for 5 laws");
    std::vector<KernelLaw> laws;
    {
        KernelLaw sis;
        sis.family = Family::MarkovSIS;
        sis.lambda_level = 2.0;
        sis.eta = Exponential{1.0};
        laws.push_back(sis);
    }
    {
        KernelLaw sirs;
        sirs.family = Family::SIRS;
        sirs.lambda_level = 2.0;
        sirs.eta = Exponential{1.0};
        sirs.immune_delay = Exponential{1.0};
        laws.push_back(sirs);
    }
    laws.push_back(fixture("indicator_gamma").kernel);
    {
        KernelLaw mix = fixture("indicator_gamma").kernel;
        mix.gamma_star = DiscreteAtoms{{0.25, 1.0}, {0.5, 0.5}};
        laws.push_back(mix);
    }
    {
        KernelLaw gg = fixture("gradual_gamma").kernel;
        gg.mc_budget = 4000;
        laws.push_back(gg);
    }
    const std::vector<double> thresholds = {1.0, 1.0, 2.0, 2.5, 1.0};
    bool ok = true;
    std::string detail = "ok";
    for (std::size_t l = 0; l < laws.size(); ++l) {
        if (evaluate_H(laws[l], 0.0) != thresholds[l]) {
            ok = false;
            detail = fmt("law %g: H(0) mismatch", static_cast<double>(l));
            break;
        }
        double prev = 0.0;
        for (int i = 1; i <= 50; ++i) {
            const double h = evaluate_H(laws[l], 0.08 * i);
            if (h < prev - 1e-12) {
                ok = false;
                detail = fmt("law %g: not monotone at x=%.2f", static_cast<double>(l), 0.08 * i);
                break;
            }
            prev = h;
        }
        if (!ok) break;
    }
    c.check(ok, detail);
}

void c5_conservation() {
    Criterion c(5, "conservation residual <= 5e-3 on all fixtures; halving dt shrinks it >= 1.8x");
    const std::vector<std::string> fixtures = {"markov_sis", "sirs", "indicator_gamma",
                                               "disease_free", "gradual_gamma"};
    bool ok = true;
    double worst = 0.0, worst_ratio = kInf;
    std::string who;
    for (const auto& name : fixtures) {
        const Scenario s = fixture(name);
        SolveConfig cfg = s.solve_config(1);
        SolveInfo coarse, fine;
        solve_limit(s.kernel, s.initial, cfg, &coarse);
        cfg.dt *= 0.5;
        solve_limit(s.kernel, s.initial, cfg, &fine);
        const double ratio = coarse.max_conservation_residual /
                             std::max(fine.max_conservation_residual, 1e-300);
        if (coarse.max_conservation_residual > worst) {
            worst = coarse.max_conservation_residual;
            who = name;
        }
        worst_ratio = std::min(worst_ratio, ratio);
        if (coarse.max_conservation_residual > 5e-3 || ratio < 1.8) ok = false;
    }
    c.check(ok, fmt("max residual=%.2e, min halving ratio=%.2f", worst, worst_ratio) + " (" + who + ")");
}

void c6_flln_rate() {
    Criterion c(6, "agent-based error vs N fits a slope in [-0.65, -0.35]");
    const Scenario s = fixture("markov_sis");
    CommandOptions opts;
    opts.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    const ConvergenceReport rep = run_convergence(s, opts);
    std::string detail = fmt("slope=%.3f (mean F errors:", rep.slope);
    for (double e : rep.mean_error_F) detail += fmt(" %.3g", e);
    c.check(rep.pass, detail + ")");
}

void c7_auxiliary_fixed_point() {
    Criterion c(7, "driven single-individual processes match F_bar at >= 93% of grid points");
    bool ok = true;
    std::string detail;
    for (const char* name : {"markov_sis", "sirs"}) {
        const Scenario s = fixture(name);
        SolveConfig cfg = s.solve_config(1);
        const auto grid = solve_limit(s.kernel, s.initial, cfg);
        const auto fp = auxiliary_fixed_point_check(grid, s.kernel, s.initial, 10000, 9);
        detail += fmt("%.1f%% ", 100.0 * fp.coverage_within_3);
        if (fp.coverage_within_3 < 0.93) ok = false;
    }
    c.check(ok, detail + "(coverage per fixture)");
}

void c8_pde_equivalence() {
    Criterion c(8, "age-structured solution matches the limit and the DDE oracle within 1e-2");
    const Scenario s = fixture("pde_markov_sirs");
    const auto res = crosscheck_against_limit(s.pde, s.horizon, s.dt, s.solve_config(1));
    // Independent route: RK4 on the delay-differential reduction.
    const double lam = 2.0, beta = 1.0, theta0 = 1.0;
    std::vector<double> hist;
    const int sub = 4;
    const double h = s.dt / sub;
    // Susceptibility-weighted pool at time zero: S0 + int gamma_tilde R0.
    double Seff = s.pde.S0;
    if (!s.pde.R0_density.empty() && s.pde.R0_density.values.back() == 0.0) {
        const double hi = s.pde.R0_density.breaks.back();
        const int cells = 2000;
        for (int q = 0; q < cells; ++q) {
            const double mid = (q + 0.5) * hi / cells;
            Seff += s.pde.gamma_tilde(mid) * s.pde.R0_density(mid) * hi / cells;
        }
    }
    double I = s.pde.I0_density.integral(0.0, kInf);
    if (!std::isfinite(Seff) || !std::isfinite(I))
        throw std::runtime_error("C8 oracle: nonfinite initial state");
    hist.push_back(I);
    double sup_dde_F = 0.0, sup_dde_S = 0.0;
    const auto n = static_cast<long>(res.pde.times.size()) - 1;
    for (long i = 0; i <= n; ++i) {
        sup_dde_F = std::max(sup_dde_F, std::abs(res.pde.F_frak[i] - lam * I));
        sup_dde_S = std::max(sup_dde_S, std::abs(res.pde.S_frak[i] - Seff));
        if (i == n) break;
        for (int q = 0; q < sub; ++q) {
            const double t = (static_cast<double>(i) * sub + q) * h;
            auto delayed = [&](double at) -> double {
                if (at < theta0) return 0.0;
                const double u = (at - theta0) / h;
                const auto j = static_cast<std::size_t>(u);
                if (j + 1 >= hist.size()) return hist.back();
                return hist[j] * (1.0 - (u - j)) + hist[j + 1] * (u - j);
            };
            auto f = [&](double tt, double Se, double Ii, double& dS, double& dI) {
                dS = -lam * Se * Ii + beta * delayed(tt);
                dI = lam * Se * Ii - beta * Ii;
            };
            double k1S, k1I, k2S, k2I, k3S, k3I, k4S, k4I;
            f(t, Seff, I, k1S, k1I);
            f(t + h / 2, Seff + h / 2 * k1S, I + h / 2 * k1I, k2S, k2I);
            f(t + h / 2, Seff + h / 2 * k2S, I + h / 2 * k2I, k3S, k3I);
            f(t + h, Seff + h * k3S, I + h * k3I, k4S, k4I);
            Seff += h / 6 * (k1S + 2 * k2S + 2 * k3S + k4S);
            I += h / 6 * (k1I + 2 * k2I + 2 * k3I + k4I);
            hist.push_back(I);
        }
    }
    const double worst = std::max({res.sup_S_frak, res.sup_F_frak, sup_dde_F, sup_dde_S});
    c.check(worst <= 1e-2, fmt("sup vs limit: S=%.2e F=%.2e", res.sup_S_frak, res.sup_F_frak) +
                               fmt("; vs DDE: S=%.2e F=%.2e", sup_dde_S, sup_dde_F));
}

void c9_disease_free() {
    Criterion c(9, "subcritical law dies out: F(60), I(60) <= 1e-3 and S(60) >= 0.99");
    const Scenario s = fixture("disease_free");
    const auto grid = solve_limit(s.kernel, s.initial, s.solve_config(1));
    const double F = grid.F_bar.back(), I = grid.I_bar.back(), S = grid.S_bar.back();
    c.check(F <= 1e-3 && I <= 1e-3 && S >= 0.99, fmt("F=%.2e I=%.2e S=%.4f", F, I, S));
}

void c10_instability_floor() {
    Criterion c(10, "endemic trajectories keep F_bar >= 0.05 over the whole horizon");
    bool ok = true;
    std::string detail;
    for (const char* name : {"markov_sis", "indicator_gamma"}) {
        const Scenario s = fixture(name);
        const auto grid = solve_limit(s.kernel, s.initial, s.solve_config(1));
        const auto rep = solve_endemic(s.kernel);
        const auto chk = instability_check(grid, rep, 0.05);
        detail += fmt("min F=%.3f ", chk.min_F);
        if (!(chk.applicable && chk.above_floor)) ok = false;
    }
    c.check(ok, detail);
}

void c11_determinism() {
    Criterion c(11, "every command is byte-identical across repeated runs with fixed seeds");
    namespace fs = std::filesystem;
    const fs::path base = fs::temp_directory_path() / "episim_accept_det";
    fs::remove_all(base);
    bool ok = true;
    std::string detail = "all artifacts identical";

    auto compare_runs = [&](const std::string& scen_name, auto&& command,
                            const std::vector<std::string>& artifacts) {
        const Scenario s = fixture(scen_name);
        for (int round = 0; round < 2 && ok; ++round) {
            CommandOptions opts;
            opts.out_dir = (base / (scen_name + std::to_string(round))).string();
            opts.threads = 4;
            if (command(s, opts) != 0) {
                ok = false;
                detail = scen_name + ": command failed";
                return;
            }
        }
        for (const auto& a : artifacts) {
            const std::string f0 = (base / (scen_name + "0") / a).string();
            const std::string f1 = (base / (scen_name + "1") / a).string();
            if (file_bytes(f0).empty() || file_bytes(f0) != file_bytes(f1)) {
                ok = false;
                detail = "mismatch or missing: " + a;
            }
        }
    };

    {
        // Small simulate/limit/equilibrium round trips on a reduced fixture.
        Scenario s = fixture("markov_sis");
        s.horizon = 10.0;
        s.N_list = {500};
        const std::string text = scenario_to_json_string(s);
        const fs::path mini = base / "mini.json";
        fs::create_directories(base);
        std::ofstream(mini, std::ios::binary) << text;
        const Scenario sm = load_scenario(mini.string());
        for (int round = 0; round < 2 && ok; ++round) {
            CommandOptions opts;
            opts.out_dir = (base / ("sim" + std::to_string(round))).string();
            if (cmd_simulate(sm, opts) != 0 || cmd_limit(sm, opts) != 0 ||
                cmd_equilibrium(sm, opts) != 0) {
                ok = false;
                detail = "command failed";
            }
        }
        for (const char* a : {"markov_sis_abm_N500_seed1.csv", "markov_sis_abm_N500_seed1_events.csv",
                              "markov_sis_limit.csv", "markov_sis_equilibrium.json"}) {
            const std::string f0 = (base / "sim0" / a).string();
            const std::string f1 = (base / "sim1" / a).string();
            if (!ok) break;
            if (file_bytes(f0).empty() || file_bytes(f0) != file_bytes(f1)) {
                ok = false;
                detail = std::string("mismatch or missing: ") + a;
            }
        }
    }
    if (ok)
        compare_runs("pde_markov_sirs",
                     [](const Scenario& s, const CommandOptions& o) { return cmd_crosscheck(s, o); },
                     {"pde_markov_sirs_pde.csv", "pde_markov_sirs_limit.csv",
                      "pde_markov_sirs_crosscheck.json"});
    if (ok) {
        // Convergence harness with threads: aggregation must not depend on
        // scheduling. Use a reduced sweep to stay fast.
        Scenario s = fixture("markov_sis");
        s.horizon = 10.0;
        s.N_list = {50, 500, 5000};
        s.replications = 10;
        std::vector<std::string> blobs;
        for (int round = 0; round < 2 && ok; ++round) {
            CommandOptions opts;
            opts.out_dir = (base / ("conv" + std::to_string(round))).string();
            opts.threads = round == 0 ? 1 : 8; // also across thread counts
            if (cmd_converge(s, opts) != 0) {
                ok = false;
                detail = "converge failed";
                break;
            }
            blobs.push_back(file_bytes((fs::path(opts.out_dir) / "markov_sis_convergence.json").string()));
        }
        if (ok && (blobs[0].empty() || blobs[0] != blobs[1])) {
            ok = false;
            detail = "convergence report differs across thread counts";
        }
    }
    c.check(ok, detail);
}

} // namespace

int main(int argc, char** argv) {
    if (argc > 1) g_dir = argv[1];
    std::printf("acceptance suite (fixtures: %s)\n", g_dir.c_str());
    c1_sis_endemic_value();
    c2_sirs_endemic_value();
    c3_indicator_closed_form();
    c4_harmonic_threshold();
    c5_conservation();
    c6_flln_rate();
    c7_auxiliary_fixed_point();
    c8_pde_equivalence();
    c9_disease_free();
    c10_instability_floor();
    c11_determinism();
    if (g_failures > 0) {
        std::printf("%d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
