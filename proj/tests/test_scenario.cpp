#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "episim/scenario.hpp"

using namespace episim;

namespace {

const char* kMinimalConfig = R"({
  "name": "mini",
  "kernel": {
    "family": "markov_sis",
    "lambda": 2.0,
    "eta": {"type": "exponential", "rate": 1.0}
  },
  "initial": {"i_fraction": 0.3, "xi": {"type": "deterministic", "value": 0.0}},
  "horizon": 15.0,
  "dt": 0.01
})";

std::filesystem::path temp_dir() {
    auto p = std::filesystem::temp_directory_path() / "episim_test";
    std::filesystem::create_directories(p);
    return p;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("minimal config parses with defaults filled") {
    const Scenario s = scenario_from_json_string(kMinimalConfig, "mini");
    CHECK(s.name == "mini");
    CHECK(s.M == 500);
    CHECK(s.seeds == std::vector<std::uint64_t>{1});
    CHECK(s.replications == 20);
    CHECK(s.engine == SolverEngine::Auto);
    CHECK(s.kernel.family == Family::MarkovSIS);
    // Derived statistics echoed by describe_law.
    const std::string d = describe_law(s);
    CHECK(d.find("R0=2") != std::string::npos);
    CHECK(d.find("E[zeta]=1") != std::string::npos);
}

TEST_CASE("field-precise validation errors") {
    const char* gamma_bad = R"({
      "kernel": {"family": "indicator_gamma", "lambda": 1.0,
                 "eta": {"type": "exponential", "rate": 1.0},
                 "gamma_star": {"values": [1.5], "probs": [1.0]}},
      "initial": {"i_fraction": 0.0},
      "horizon": 1.0, "dt": 0.1
    })";
    try {
        scenario_from_json_string(gamma_bad, "cfg");
        FAIL("expected a validation error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("gamma_star") != std::string::npos);
    }

    const char* unknown_field = R"({
      "kernel": {"family": "markov_sis", "lambda": 1.0,
                 "eta": {"type": "exponential", "rate": 1.0}},
      "initial": {"i_fraction": 0.0},
      "horizon": 1.0, "dt": 0.1, "tyop": 3
    })";
    try {
        scenario_from_json_string(unknown_field, "cfg");
        FAIL("expected an unknown-field error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("tyop") != std::string::npos);
    }

    const char* bad_dist = R"({
      "kernel": {"family": "markov_sis", "lambda": 1.0,
                 "eta": {"type": "exponential", "rate": -2.0}},
      "initial": {"i_fraction": 0.0},
      "horizon": 1.0, "dt": 0.1
    })";
    try {
        scenario_from_json_string(bad_dist, "cfg");
        FAIL("expected a rate error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("eta") != std::string::npos);
    }
}

TEST_CASE("derived E[zeta] for an indicator law with only distributions given") {
    const char* cfg = R"({
      "kernel": {"family": "indicator_gamma", "lambda": 3.0,
                 "eta": {"type": "deterministic", "value": 1.0},
                 "immune_delay": {"type": "exponential", "rate": 1.0},
                 "gamma_star": {"values": [0.5], "probs": [1.0]}},
      "initial": {"i_fraction": 0.1},
      "horizon": 5.0, "dt": 0.05
    })";
    const Scenario s = scenario_from_json_string(cfg, "cfg");
    const LawStatistics st = law_statistics(s.kernel);
    CHECK(st.E_zeta == doctest::Approx(2.0).epsilon(1e-12)); // 1 + 1/1
    CHECK(describe_law(s).find("E[zeta]=2") != std::string::npos);
}

TEST_CASE("scenario round-trips through serialization") {
    Scenario s = scenario_from_json_string(kMinimalConfig, "mini");
    s.N_list = {100, 1000, 10000};
    s.seeds = {3, 5};
    const std::string text = scenario_to_json_string(s);
    const Scenario t = scenario_from_json_string(text, "round");
    CHECK(scenario_to_json_string(t) == text);
}

TEST_CASE("commands produce deterministic artifacts") {
    const auto dir = temp_dir();
    const Scenario s = scenario_from_json_string(kMinimalConfig, "mini");
    CommandOptions opts;
    for (int round = 0; round < 2; ++round) {
        opts.out_dir = (dir / ("round" + std::to_string(round))).string();
        REQUIRE(cmd_limit(s, opts) == 0);
        REQUIRE(cmd_equilibrium(s, opts) == 0);
    }
    CHECK(slurp(dir / "round0" / "mini_limit.csv") == slurp(dir / "round1" / "mini_limit.csv"));
    CHECK(slurp(dir / "round0" / "mini_equilibrium.json") ==
          slurp(dir / "round1" / "mini_equilibrium.json"));
}

TEST_CASE("cmd_limit endpoint matches the ODE equilibrium on a short horizon") {
    const auto dir = temp_dir() / "limit_ep";
    Scenario s = scenario_from_json_string(kMinimalConfig, "mini");
    s.horizon = 15.0;
    CommandOptions opts;
    opts.out_dir = dir.string();
    REQUIRE(cmd_limit(s, opts) == 0);
    const TrajectoryGrid g = read_trajectory_csv((dir / "mini_limit.csv").string());
    // By t = 15 the SIS trajectory is within ~2e-3 of 0.5.
    CHECK(std::abs(g.I_bar.back() - 0.5) < 2e-3);
    CHECK(g.has_residual());
}

TEST_CASE("converge harness refuses underpowered setups and handles degenerate ones") {
    Scenario s = scenario_from_json_string(kMinimalConfig, "mini");
    CommandOptions opts;
    opts.out_dir = (temp_dir() / "conv").string();

    s.N_list = {100, 1000};
    CHECK_THROWS_AS(run_convergence(s, opts), std::invalid_argument);
    s.N_list = {100, 300, 1000}; // less than two decades
    CHECK_THROWS_AS(run_convergence(s, opts), std::invalid_argument);
    s.N_list = {100, 1000, 10000};
    s.replications = 5;
    CHECK_THROWS_AS(run_convergence(s, opts), std::invalid_argument);

    // Degenerate: no initial infection, every run matches the limit exactly.
    s.replications = 10;
    s.N_list = {10, 100, 1000};
    s.initial.i_fraction = 0.0;
    s.horizon = 5.0;
    const ConvergenceReport rep = run_convergence(s, opts);
    CHECK(rep.exact_match);
    CHECK(rep.pass);
}

TEST_CASE("convergence report serializes the declared fields") {
    ConvergenceReport r;
    r.N = {10, 100};
    r.mean_error_F = {0.5, 0.1};
    r.mean_error_I = {0.2, 0.05};
    r.slope = -0.5;
    r.pass = true;
    const auto path = (temp_dir() / "conv.json").string();
    write_convergence_json(r, path);
    const std::string text = slurp(path);
    for (const char* key : {"\"N\"", "\"mean_error_F\"", "\"mean_error_I\"", "\"slope\"", "\"pass\""})
        CHECK(text.find(key) != std::string::npos);
}
