#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"

#include "episim/scenario.hpp"

using namespace episim;

int main(int argc, char** argv) {
    CLI::App app{"Stochastic epidemics with random infectivity and gradually-recovering "
                 "susceptibility: agent-based simulation, integral-equation limit, endemic "
                 "equilibria and the age-structured formulation"};
    app.require_subcommand(1);

    std::string scenario_path;
    CommandOptions opts;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--scenario", scenario_path, "scenario JSON file")->required();
        sub->add_option("--out", opts.out_dir, "output directory (default: out)");
        sub->add_option("--seed-offset", opts.seed_offset, "added to every configured seed");
        sub->add_option("--threads", opts.threads, "worker threads for multi-run harnesses");
    };

    auto* c_sim = app.add_subcommand("simulate", "agent-based simulation runs");
    auto* c_lim = app.add_subcommand("limit", "deterministic large-population limit");
    auto* c_eq = app.add_subcommand("equilibrium", "R0, threshold and endemic equilibrium");
    auto* c_pde = app.add_subcommand("pde", "age-structured transport formulation");
    auto* c_conv = app.add_subcommand("converge", "agent-based vs limit error scaling in N");
    auto* c_cross = app.add_subcommand("crosscheck", "age-structured vs integral-equation limit");
    for (auto* sub : {c_sim, c_lim, c_eq, c_pde, c_conv, c_cross}) add_common(sub);

    CLI11_PARSE(app, argc, argv);

    try {
        const Scenario s = load_scenario(scenario_path);
        if (c_sim->parsed()) return cmd_simulate(s, opts);
        if (c_lim->parsed()) return cmd_limit(s, opts);
        if (c_eq->parsed()) return cmd_equilibrium(s, opts);
        if (c_pde->parsed()) return cmd_pde(s, opts);
        if (c_conv->parsed()) return cmd_converge(s, opts);
        if (c_cross->parsed()) return cmd_crosscheck(s, opts);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
