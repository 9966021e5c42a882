#include "episim/abm.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace episim {

namespace {
constexpr std::uint64_t kTagPath = 0xB1;
constexpr std::uint64_t kTagCandidates = 0xB0;
} // namespace

void write_event_log_csv(const EventLog& log, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "t,individual,infection_count\n";
    char buf[40];
    for (const auto& e : log.events) {
        std::snprintf(buf, sizeof(buf), "%.17g", e.t);
        out << buf << ',' << e.individual << ',' << e.infection_count << "\n";
    }
}

PopulationState::PopulationState(const KernelLaw& law, const InitialLaw& init, int n,
                                 std::uint64_t seed)
    : law_(law), root_(seed) {
    if (n < 1) throw std::invalid_argument("init_population: n must be >= 1");
    law_.validate();
    init.validate(law_);
    indiv_.resize(n);
    for (int k = 0; k < n; ++k) {
        auto rs = root_.derive(kTagPath, static_cast<std::uint64_t>(k), std::uint64_t{0});
        attach_path(static_cast<std::uint32_t>(k), sample_initial(law_, init, rs), 0.0);
    }
}

PopulationState::PopulationState(const KernelLaw& law, std::vector<KernelPath> paths,
                                 std::uint64_t seed)
    : law_(law), root_(seed) {
    if (paths.empty()) throw std::invalid_argument("PopulationState: need at least one path");
    law_.validate();
    indiv_.resize(paths.size());
    for (std::size_t k = 0; k < paths.size(); ++k)
        attach_path(static_cast<std::uint32_t>(k), std::move(paths[k]), 0.0);
}

void PopulationState::attach_path(std::uint32_t k, KernelPath&& p, double now) {
    p.check_invariants(law_.lambda_star_effective());
    Individual& ind = indiv_[k];
    ind.path = std::move(p);
    ind.tau = now;
    ind.seg = 0;
    const bool was_infectious = ind.infectious;
    ind.infectious = ind.path.eta > 0.0;
    infectious_ += static_cast<int>(ind.infectious) - static_cast<int>(was_infectious);
    sum_lambda_ += ind.path.lambda[0];
    sum_gamma_ += ind.path.gamma[0];
    for (std::size_t s = 1; s < ind.path.breaks.size(); ++s)
        queue_.push(Breakpoint{now + ind.path.breaks[s], k, ind.epoch, static_cast<std::uint32_t>(s)});
}

void PopulationState::process_breakpoint(const Breakpoint& b) {
    Individual& ind = indiv_[b.individual];
    if (b.epoch != ind.epoch) return; // stale entry from a replaced path
    const std::uint32_t prev = ind.seg;
    ind.seg = b.seg;
    sum_lambda_ += ind.path.lambda[b.seg] - ind.path.lambda[prev];
    sum_gamma_ += ind.path.gamma[b.seg] - ind.path.gamma[prev];
    if (ind.infectious && ind.path.breaks[b.seg] >= ind.path.eta) {
        ind.infectious = false;
        --infectious_;
    }
    ++events_processed_;
}

void PopulationState::drain_breakpoints(double t, bool inclusive) {
    while (!queue_.empty()) {
        const Breakpoint& top = queue_.top();
        if (inclusive ? top.t > t : top.t >= t) break;
        Breakpoint b = top;
        queue_.pop();
        process_breakpoint(b);
    }
    clock_ = std::max(clock_, t);
}

void PopulationState::rebuild_aggregates() {
    sum_lambda_ = recomputed_F();
    sum_gamma_ = recomputed_S();
}

double PopulationState::recomputed_F() const {
    double s = 0.0;
    for (const auto& ind : indiv_) s += ind.path.lambda[ind.seg];
    return s;
}

double PopulationState::recomputed_S() const {
    double s = 0.0;
    for (const auto& ind : indiv_) s += ind.path.gamma[ind.seg];
    return s;
}

std::pair<TrajectoryGrid, EventLog> run(PopulationState& state, double T, double grid_dt,
                                        const RunOptions& opts) {
    if (T <= 0.0 || grid_dt <= 0.0) throw std::invalid_argument("run: T and grid_dt must be > 0");
    const int n = state.size();
    const double lambda_star = state.law_.lambda_star_effective();
    const double cand_rate = n * lambda_star;
    const int ngrid = static_cast<int>(std::llround(T / grid_dt));

    TrajectoryGrid grid;
    grid.dt = grid_dt;
    grid.times.reserve(ngrid + 1);
    EventLog log;

    auto rs_cand = state.root_.derive(kTagCandidates);
    double t_cand = cand_rate > 0.0 ? rs_cand.exponential(cand_rate) : kInf;
    int gi = 0;
    std::uint64_t last_rebuild = 0;

    // Full rebuild at every grid time or every rebuild_interval events,
    // whichever comes first, to bound floating-point drift in the aggregates.
    auto rebuild = [&](double at) {
        if (opts.consistency_checks) {
            const double fr = state.recomputed_F();
            const double sr = state.recomputed_S();
            const double tol = 1e-9 * n * std::max(1.0, lambda_star);
            if (std::abs(fr - state.sum_lambda_) > tol || std::abs(sr - state.sum_gamma_) > tol)
                throw std::logic_error("aggregate drift beyond tolerance at t=" + std::to_string(at));
        }
        state.rebuild_aggregates();
        last_rebuild = state.events_processed_;
    };

    auto sample_grid = [&](double tg) {
        // Left limits: only breakpoints strictly before tg are applied.
        state.drain_breakpoints(tg, false);
        rebuild(tg);
        grid.times.push_back(tg);
        grid.F_bar.push_back(state.sum_lambda_ / n);
        grid.S_bar.push_back(state.sum_gamma_ / n);
        grid.I_bar.push_back(static_cast<double>(state.infectious_) / n);
        grid.U_bar.push_back(static_cast<double>(n - state.infectious_) / n);
    };

    while (gi <= ngrid) {
        const double tg = gi * grid_dt;
        if (tg <= t_cand) {
            sample_grid(tg);
            ++gi;
            continue;
        }
        // Candidate event at t_cand.
        state.drain_breakpoints(t_cand, false);
        if (state.events_processed_ - last_rebuild >= opts.rebuild_interval) rebuild(t_cand);
        const auto k = static_cast<std::uint32_t>(rs_cand.uniform() * n);
        const double u = rs_cand.uniform();
        auto& ind = state.indiv_[k];
        const double age = t_cand - ind.tau;
        const double g = ind.path.gamma[ind.seg];
        const double fbar = state.sum_lambda_ / n;
        const double p_accept = g * fbar / lambda_star;
        if (p_accept > 1.0 + 1e-12)
            throw std::logic_error("thinning acceptance probability above 1: lambda_star bound breached");
        if (u < p_accept) {
            if (age < ind.path.eta - 1e-12)
                throw std::logic_error("accepted an infection while still infectious");
            // Remove the old path's current contribution before replacing it.
            state.sum_lambda_ -= ind.path.lambda[ind.seg];
            state.sum_gamma_ -= ind.path.gamma[ind.seg];
            if (ind.infectious) {
                ind.infectious = false;
                --state.infectious_;
            }
            ++ind.count;
            ++ind.epoch;
            auto rs_path = state.root_.derive(kTagPath, static_cast<std::uint64_t>(k),
                                              static_cast<std::uint64_t>(ind.count));
            KernelPath fresh = sample_kernel(state.law_, rs_path);
            state.attach_path(k, std::move(fresh), t_cand);
            ++state.events_processed_;
            ++log.total_infections;
            if (opts.record_events) {
                if (log.events.size() < opts.max_events)
                    log.events.push_back(EventRecord{t_cand, k, ind.count});
                else
                    log.truncated = true;
            }
        }
        t_cand += rs_cand.exponential(cand_rate);
    }
    return {std::move(grid), std::move(log)};
}

} // namespace episim
