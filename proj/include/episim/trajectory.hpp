#pragma once

#include <string>
#include <vector>

namespace episim {

// Uniform-grid trajectory of the aggregate observables. `conservation_residual`
// is filled by the limit solver only (empty for agent-based runs).
struct TrajectoryGrid {
    double dt = 0.0;
    std::vector<double> times;
    std::vector<double> F_bar;
    std::vector<double> S_bar;
    std::vector<double> I_bar;
    std::vector<double> U_bar;
    std::vector<double> conservation_residual;

    std::size_t size() const { return times.size(); }
    bool has_residual() const { return !conservation_residual.empty(); }
};

// Columns: t,F_bar,S_bar,I_bar,U_bar[,conservation_residual]. '.' decimal,
// LF line endings, 17 significant digits (round-trip exact).
void write_trajectory_csv(const TrajectoryGrid& g, const std::string& path);
TrajectoryGrid read_trajectory_csv(const std::string& path);

struct CouplingDistance {
    double sup_F = 0.0;
    double sup_I = 0.0;
};

// Sup-norm distance between two trajectories on identical grids.
CouplingDistance coupling_distance(const TrajectoryGrid& run, const TrajectoryGrid& limit);

} // namespace episim
