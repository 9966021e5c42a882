#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "episim/random.hpp"

namespace episim {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Nonnegative scalar laws used for durations (eta, theta, zeta offsets),
// infection ages (xi) and recovery ages (vartheta).

struct Deterministic {
    double value = 0.0;
};

struct Exponential {
    double rate = 1.0;
};

struct UniformDist {
    double lo = 0.0;
    double hi = 1.0;
};

// Finite mixture of atoms.
struct DiscreteAtoms {
    std::vector<double> values;
    std::vector<double> probs;
};

// Piecewise-constant density on cells [breaks[i], breaks[i+1]); zero beyond.
struct PiecewiseDensity {
    std::vector<double> breaks; // size m+1, strictly increasing, breaks[0] >= 0
    std::vector<double> values; // size m, nonnegative; normalized on construction
};

// Piecewise-constant hazard on [breaks[i], breaks[i+1]); the last rate applies
// beyond the final break and must be positive for the law to be proper.
struct PiecewiseHazard {
    std::vector<double> breaks; // size m, breaks[0] == 0
    std::vector<double> rates;  // size m, nonnegative
};

using Distribution =
    std::variant<Deterministic, Exponential, UniformDist, DiscreteAtoms, PiecewiseDensity, PiecewiseHazard>;

void validate(const Distribution& d, const std::string& field);

double mean(const Distribution& d);

// P(X > t) for t >= 0.
double survival(const Distribution& d, double t);

// Exact value of \int_a^b P(X > t) dt, 0 <= a <= b (b may be +inf).
double integral_survival(const Distribution& d, double a, double b);

double sample(const Distribution& d, RandomStream& rng);

// Sample from the law of X conditioned on X > x. Throws if P(X > x) == 0.
double sample_conditional_exceed(const Distribution& d, double x, RandomStream& rng);

// Smallest u with P(X > u) == 0 (+inf when the tail never vanishes).
double support_upper(const Distribution& d);

// True when the law has an everywhere-positive density tail (no atoms at its
// supremum); used to decide whether conditional sampling can hit the boundary.
bool has_atom_at(const Distribution& d, double x);

} // namespace episim
