#pragma once

#include <cstdint>
#include <queue>
#include <string>
#include <vector>

#include "episim/kernel.hpp"
#include "episim/trajectory.hpp"

namespace episim {

struct EventRecord {
    double t = 0.0;
    std::uint32_t individual = 0;
    std::uint32_t infection_count = 0;
};

struct EventLog {
    std::vector<EventRecord> events;
    bool truncated = false; // recording stopped at the size threshold
    std::uint64_t total_infections = 0;
};

void write_event_log_csv(const EventLog& log, const std::string& path);

struct RunOptions {
    bool record_events = true;
    std::size_t max_events = 10000000;       // log disabled beyond this
    std::uint64_t rebuild_interval = 1000000; // full aggregate rebuild period (events)
    bool consistency_checks = true;           // compare incremental vs rebuilt aggregates
};

// N-individual state: per-individual infection history plus incrementally
// maintained population aggregates, kept current through a breakpoint queue.
class PopulationState {
public:
    // Draws every individual's initial path independently (Binomial split
    // between the initial groups).
    PopulationState(const KernelLaw& law, const InitialLaw& init, int n, std::uint64_t seed);
    // Explicit initial paths (test harness; the paths must satisfy the law's
    // invariants).
    PopulationState(const KernelLaw& law, std::vector<KernelPath> paths, std::uint64_t seed);

    int size() const { return static_cast<int>(indiv_.size()); }
    double time() const { return clock_; }
    double aggregate_F() const { return sum_lambda_; } // sum over individuals of lambda_k
    double aggregate_S() const { return sum_gamma_; }
    int infectious_count() const { return infectious_; }
    std::uint32_t infection_count(int k) const { return indiv_[k].count; }
    const KernelLaw& law() const { return law_; }

    // Exact O(N) recomputation of both aggregates (drift control).
    void rebuild_aggregates();
    double recomputed_F() const;
    double recomputed_S() const;

private:
    friend std::pair<TrajectoryGrid, EventLog> run(PopulationState&, double, double,
                                                   const RunOptions&);

    struct Individual {
        KernelPath path;
        double tau = 0.0;          // last infection time (0 for the initial path)
        std::uint32_t count = 0;   // A_k
        std::uint32_t epoch = 0;   // invalidates stale queue entries
        std::uint32_t seg = 0;     // current interval of `path`
        bool infectious = false;
    };

    struct Breakpoint {
        double t;
        std::uint32_t individual;
        std::uint32_t epoch;
        std::uint32_t seg; // interval that starts at t
        bool operator>(const Breakpoint& o) const {
            if (t != o.t) return t > o.t;
            return individual > o.individual;
        }
    };

    void attach_path(std::uint32_t k, KernelPath&& p, double now);
    void process_breakpoint(const Breakpoint& b);
    // Advances the queue through every breakpoint with time < t (or <= t when
    // `inclusive`), in (time, individual) order.
    void drain_breakpoints(double t, bool inclusive);

    KernelLaw law_;
    std::vector<Individual> indiv_;
    std::priority_queue<Breakpoint, std::vector<Breakpoint>, std::greater<Breakpoint>> queue_;
    RandomStream root_;
    double clock_ = 0.0;
    double sum_lambda_ = 0.0;
    double sum_gamma_ = 0.0;
    int infectious_ = 0;
    std::uint64_t events_processed_ = 0;
};

// Exact simulation by thinning a homogeneous Poisson stream of candidate
// events at rate N * lambda_star; samples the aggregates at grid multiples of
// grid_dt (left limits: breakpoints at exactly a grid time are applied after
// the sample is taken).
std::pair<TrajectoryGrid, EventLog> run(PopulationState& state, double T, double grid_dt,
                                        const RunOptions& opts = {});

} // namespace episim
