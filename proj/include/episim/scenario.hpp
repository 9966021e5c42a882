#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "episim/kernel.hpp"
#include "episim/lln.hpp"
#include "episim/pde.hpp"

namespace episim {

// One fully-specified experiment: the kernel law, the initial condition, grid
// and sampling settings, and (optionally) an age-structured formulation.
struct Scenario {
    std::string name = "scenario";
    KernelLaw kernel;
    InitialLaw initial;
    double horizon = 10.0;
    double dt = 0.01;
    double abm_grid_dt = 0.1; // sampling grid for agent-based runs
    int M = 500;
    std::vector<std::uint64_t> seeds{1};
    std::vector<int> N_list;
    int replications = 20;
    SolverEngine engine = SolverEngine::Auto;
    double conservation_ceiling = 0.05;
    std::size_t memory_budget_scalars = 100000000;
    int aux_K = 10000; // auxiliary fixed-point replicates
    bool has_pde = false;
    PdeScenario pde;

    SolveConfig solve_config(std::uint64_t seed) const;
    void validate() const;
};

Scenario load_scenario(const std::string& path);
void write_scenario(const Scenario& s, const std::string& path);
// Serialized forms are canonical: load(write(s)) round-trips exactly.
std::string scenario_to_json_string(const Scenario& s);
Scenario scenario_from_json_string(const std::string& text, const std::string& context);

// One-line summary of the derived law statistics (R0, thresholds, E[zeta]).
std::string describe_law(const Scenario& s);

struct CommandOptions {
    std::string out_dir = "out";
    std::uint64_t seed_offset = 0;
    int threads = 1;
};

// CLI verbs; each writes its artifacts under out_dir and returns 0 on success.
int cmd_simulate(const Scenario& s, const CommandOptions& opts);
int cmd_limit(const Scenario& s, const CommandOptions& opts);
int cmd_equilibrium(const Scenario& s, const CommandOptions& opts);
int cmd_pde(const Scenario& s, const CommandOptions& opts);
int cmd_converge(const Scenario& s, const CommandOptions& opts);
int cmd_crosscheck(const Scenario& s, const CommandOptions& opts);

struct ConvergenceReport {
    std::vector<int> N;
    std::vector<double> mean_error_F;
    std::vector<double> mean_error_I;
    double slope = 0.0;
    bool pass = false;
    bool exact_match = false; // degenerate scenario with zero errors everywhere
};

// Runs the limit once and R agent-based replications per population size;
// fits the log-log slope of the mean sup-norm force-of-infection error.
ConvergenceReport run_convergence(const Scenario& s, const CommandOptions& opts);
void write_convergence_json(const ConvergenceReport& r, const std::string& path);

} // namespace episim
