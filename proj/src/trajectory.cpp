#include "episim/trajectory.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace episim {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void write_trajectory_csv(const TrajectoryGrid& g, const std::string& path) {
    std::ofstream out(path, std::ios::binary); // binary: LF endings everywhere
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "t,F_bar,S_bar,I_bar,U_bar";
    if (g.has_residual()) out << ",conservation_residual";
    out << "\n";
    for (std::size_t i = 0; i < g.size(); ++i) {
        out << fmt(g.times[i]) << ',' << fmt(g.F_bar[i]) << ',' << fmt(g.S_bar[i]) << ','
            << fmt(g.I_bar[i]) << ',' << fmt(g.U_bar[i]);
        if (g.has_residual()) out << ',' << fmt(g.conservation_residual[i]);
        out << "\n";
    }
}

TrajectoryGrid read_trajectory_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    TrajectoryGrid g;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty trajectory file: " + path);
    const bool with_residual = line.find("conservation_residual") != std::string::npos;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() < 5) throw std::runtime_error("malformed trajectory row in " + path);
        g.times.push_back(row[0]);
        g.F_bar.push_back(row[1]);
        g.S_bar.push_back(row[2]);
        g.I_bar.push_back(row[3]);
        g.U_bar.push_back(row[4]);
        if (with_residual) g.conservation_residual.push_back(row[5]);
    }
    if (g.times.size() >= 2) g.dt = g.times[1] - g.times[0];
    return g;
}

CouplingDistance coupling_distance(const TrajectoryGrid& run, const TrajectoryGrid& limit) {
    if (run.size() != limit.size() || run.size() == 0)
        throw std::invalid_argument("coupling_distance: grids differ in length");
    for (std::size_t i = 0; i < run.size(); ++i)
        if (std::abs(run.times[i] - limit.times[i]) > 1e-9)
            throw std::invalid_argument("coupling_distance: grid times differ");
    CouplingDistance d;
    for (std::size_t i = 0; i < run.size(); ++i) {
        d.sup_F = std::max(d.sup_F, std::abs(run.F_bar[i] - limit.F_bar[i]));
        d.sup_I = std::max(d.sup_I, std::abs(run.I_bar[i] - limit.I_bar[i]));
    }
    return d;
}

} // namespace episim
