#include "episim/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace episim {

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
    if (!ok) throw std::invalid_argument(field + ": " + what);
}

double cum_hazard(const PiecewiseHazard& h, double t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < h.rates.size(); ++i) {
        const double lo = h.breaks[i];
        const double hi = (i + 1 < h.breaks.size()) ? h.breaks[i + 1] : kInf;
        if (t <= lo) break;
        acc += h.rates[i] * (std::min(t, hi) - lo);
    }
    return acc;
}

// Solve cum_hazard(t) == target; target >= 0. Returns +inf if unreachable.
double inv_cum_hazard(const PiecewiseHazard& h, double target) {
    double acc = 0.0;
    for (std::size_t i = 0; i < h.rates.size(); ++i) {
        const double lo = h.breaks[i];
        const double hi = (i + 1 < h.breaks.size()) ? h.breaks[i + 1] : kInf;
        const double seg = h.rates[i] * (hi - lo);
        if (target <= acc + seg || i + 1 == h.rates.size()) {
            if (h.rates[i] <= 0.0) return kInf;
            return lo + (target - acc) / h.rates[i];
        }
        acc += seg;
    }
    return kInf;
}

double uniform_survival_integral(const UniformDist& u, double a, double b) {
    // F^c is 1 on [0,lo], linear on [lo,hi], 0 after.
    auto seg = [&](double x) {
        // antiderivative of F^c from 0 to x
        if (x <= u.lo) return x;
        double v = u.lo;
        const double y = std::min(x, u.hi);
        // integral of (hi - t)/(hi - lo) over [lo, y]
        v += ((u.hi - u.lo) * (u.hi - u.lo) - (u.hi - y) * (u.hi - y)) / (2.0 * (u.hi - u.lo));
        return v;
    };
    const double bb = std::min(b, u.hi);
    if (a >= bb) return 0.0;
    return seg(bb) - seg(a);
}

} // namespace

void validate(const Distribution& d, const std::string& field) {
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Deterministic>) {
                require(v.value >= 0.0, field, "deterministic value must be >= 0");
            } else if constexpr (std::is_same_v<T, Exponential>) {
                require(v.rate > 0.0, field, "exponential rate must be > 0");
            } else if constexpr (std::is_same_v<T, UniformDist>) {
                require(v.lo >= 0.0 && v.hi > v.lo, field, "uniform requires 0 <= lo < hi");
            } else if constexpr (std::is_same_v<T, DiscreteAtoms>) {
                require(!v.values.empty() && v.values.size() == v.probs.size(), field,
                        "atoms need matching nonempty values/probs");
                double total = 0.0;
                for (std::size_t i = 0; i < v.values.size(); ++i) {
                    require(v.values[i] >= 0.0, field, "atom values must be >= 0");
                    require(v.probs[i] >= 0.0, field, "atom probabilities must be >= 0");
                    total += v.probs[i];
                }
                require(std::abs(total - 1.0) <= 1e-9, field, "atom probabilities must sum to 1");
            } else if constexpr (std::is_same_v<T, PiecewiseDensity>) {
                require(v.breaks.size() >= 2 && v.values.size() + 1 == v.breaks.size(), field,
                        "density needs breaks (m+1) and values (m)");
                require(v.breaks.front() >= 0.0, field, "density support must be >= 0");
                double massv = 0.0;
                for (std::size_t i = 0; i < v.values.size(); ++i) {
                    require(v.breaks[i + 1] > v.breaks[i], field, "density breaks must increase");
                    require(v.values[i] >= 0.0, field, "density values must be >= 0");
                    massv += v.values[i] * (v.breaks[i + 1] - v.breaks[i]);
                }
                require(std::abs(massv - 1.0) <= 1e-6, field, "density must integrate to 1");
            } else if constexpr (std::is_same_v<T, PiecewiseHazard>) {
                require(!v.breaks.empty() && v.breaks.size() == v.rates.size(), field,
                        "hazard needs matching breaks/rates");
                require(v.breaks.front() == 0.0, field, "hazard breaks must start at 0");
                for (std::size_t i = 0; i < v.rates.size(); ++i) {
                    require(v.rates[i] >= 0.0, field, "hazard rates must be >= 0");
                    if (i + 1 < v.breaks.size())
                        require(v.breaks[i + 1] > v.breaks[i], field, "hazard breaks must increase");
                }
                require(v.rates.back() > 0.0, field, "final hazard rate must be > 0");
            }
        },
        d);
}

double mean(const Distribution& d) { return integral_survival(d, 0.0, kInf); }

double survival(const Distribution& d, double t) {
    return std::visit(
        [&](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Deterministic>) {
                return t < v.value ? 1.0 : 0.0;
            } else if constexpr (std::is_same_v<T, Exponential>) {
                return std::exp(-v.rate * t);
            } else if constexpr (std::is_same_v<T, UniformDist>) {
                if (t <= v.lo) return 1.0;
                if (t >= v.hi) return 0.0;
                return (v.hi - t) / (v.hi - v.lo);
            } else if constexpr (std::is_same_v<T, DiscreteAtoms>) {
                double s = 0.0;
                for (std::size_t i = 0; i < v.values.size(); ++i)
                    if (v.values[i] > t) s += v.probs[i];
                return s;
            } else if constexpr (std::is_same_v<T, PiecewiseDensity>) {
                if (t <= v.breaks.front()) return 1.0;
                if (t >= v.breaks.back()) return 0.0;
                double tail = 0.0;
                for (std::size_t i = 0; i < v.values.size(); ++i) {
                    const double lo = v.breaks[i], hi = v.breaks[i + 1];
                    if (hi <= t) continue;
                    tail += v.values[i] * (hi - std::max(lo, t));
                }
                return tail;
            } else {
                return std::exp(-cum_hazard(v, t));
            }
        },
        d);
}

double integral_survival(const Distribution& d, double a, double b) {
    if (b <= a) return 0.0;
    return std::visit(
        [&](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Deterministic>) {
                return std::max(0.0, std::min(b, v.value) - a);
            } else if constexpr (std::is_same_v<T, Exponential>) {
                const double hi = std::isinf(b) ? 0.0 : std::exp(-v.rate * b);
                return (std::exp(-v.rate * a) - hi) / v.rate;
            } else if constexpr (std::is_same_v<T, UniformDist>) {
                return uniform_survival_integral(v, a, b);
            } else if constexpr (std::is_same_v<T, DiscreteAtoms>) {
                double s = 0.0;
                for (std::size_t i = 0; i < v.values.size(); ++i)
                    if (v.values[i] > a) s += v.probs[i] * (std::min(b, v.values[i]) - a);
                return s;
            } else if constexpr (std::is_same_v<T, PiecewiseDensity>) {
                // Survival is piecewise linear; integrate exactly between knots.
                double acc = 0.0;
                double lo = a;
                const double hi = std::min(b, v.breaks.back());
                for (std::size_t i = 0; i + 1 < v.breaks.size() && lo < hi; ++i) {
                    const double seghi = std::min(v.breaks[i + 1], hi);
                    if (seghi <= lo) continue;
                    acc += 0.5 * (survival(d, lo) + survival(d, seghi)) * (seghi - lo);
                    lo = seghi;
                }
                if (a < v.breaks.front()) acc += std::min(b, v.breaks.front()) - std::min(a, v.breaks.front());
                return acc;
            } else {
                // Piecewise-exponential survival: exact per hazard segment.
                double acc = 0.0;
                double lo = a;
                double chlo = cum_hazard(v, lo);
                for (std::size_t i = 0; i < v.rates.size() && lo < b; ++i) {
                    const double seghi = (i + 1 < v.breaks.size()) ? v.breaks[i + 1] : kInf;
                    if (seghi <= lo) continue;
                    const double hi = std::min(seghi, b);
                    const double r = v.rates[i];
                    const double slo = std::exp(-chlo);
                    if (r <= 0.0) {
                        if (std::isinf(hi)) return kInf;
                        acc += slo * (hi - lo);
                    } else {
                        const double decay = std::isinf(hi) ? 0.0 : std::exp(-r * (hi - lo));
                        acc += slo * (1.0 - decay) / r;
                        chlo += r * (hi - lo);
                    }
                    lo = hi;
                }
                return acc;
            }
        },
        d);
}

double sample(const Distribution& d, RandomStream& rng) {
    return std::visit(
        [&](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Deterministic>) {
                return v.value;
            } else if constexpr (std::is_same_v<T, Exponential>) {
                return rng.exponential(v.rate);
            } else if constexpr (std::is_same_v<T, UniformDist>) {
                return rng.uniform(v.lo, v.hi);
            } else if constexpr (std::is_same_v<T, DiscreteAtoms>) {
                return v.values[rng.categorical(v.probs)];
            } else if constexpr (std::is_same_v<T, PiecewiseDensity>) {
                double u = rng.uniform();
                for (std::size_t i = 0; i < v.values.size(); ++i) {
                    const double cellmass = v.values[i] * (v.breaks[i + 1] - v.breaks[i]);
                    if (u <= cellmass || i + 1 == v.values.size()) {
                        if (cellmass <= 0.0) continue;
                        return v.breaks[i] + (v.breaks[i + 1] - v.breaks[i]) * std::min(1.0, u / cellmass);
                    }
                    u -= cellmass;
                }
                return v.breaks.back();
            } else {
                return inv_cum_hazard(v, rng.exponential(1.0));
            }
        },
        d);
}

double sample_conditional_exceed(const Distribution& d, double x, RandomStream& rng) {
    if (x <= 0.0) return sample(d, rng);
    return std::visit(
        [&](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Deterministic>) {
                if (v.value <= x)
                    throw std::runtime_error("conditional sample beyond deterministic support");
                return v.value;
            } else if constexpr (std::is_same_v<T, Exponential>) {
                return x + rng.exponential(v.rate);
            } else if constexpr (std::is_same_v<T, UniformDist>) {
                if (x >= v.hi) throw std::runtime_error("conditional sample beyond uniform support");
                return rng.uniform(std::max(v.lo, x), v.hi);
            } else if constexpr (std::is_same_v<T, DiscreteAtoms>) {
                std::vector<double> vals, probs;
                double total = 0.0;
                for (std::size_t i = 0; i < v.values.size(); ++i)
                    if (v.values[i] > x) {
                        vals.push_back(v.values[i]);
                        probs.push_back(v.probs[i]);
                        total += v.probs[i];
                    }
                if (total <= 0.0) throw std::runtime_error("conditional sample beyond atom support");
                for (auto& p : probs) p /= total;
                return vals[rng.categorical(probs)];
            } else if constexpr (std::is_same_v<T, PiecewiseDensity>) {
                const double tail = survival(d, x);
                if (tail <= 0.0) throw std::runtime_error("conditional sample beyond density support");
                // Inverse CDF restricted to (x, sup].
                double u = rng.uniform() * tail;
                for (std::size_t i = 0; i < v.values.size(); ++i) {
                    const double lo = std::max(v.breaks[i], x);
                    const double hi = v.breaks[i + 1];
                    if (hi <= lo) continue;
                    const double cellmass = v.values[i] * (hi - lo);
                    if (u <= cellmass || i + 1 == v.values.size()) {
                        if (cellmass <= 0.0) continue;
                        return lo + (hi - lo) * std::min(1.0, u / cellmass);
                    }
                    u -= cellmass;
                }
                return v.breaks.back();
            } else {
                return inv_cum_hazard(v, cum_hazard(v, x) + rng.exponential(1.0));
            }
        },
        d);
}

double support_upper(const Distribution& d) {
    return std::visit(
        [&](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Deterministic>) {
                return v.value;
            } else if constexpr (std::is_same_v<T, Exponential>) {
                return kInf;
            } else if constexpr (std::is_same_v<T, UniformDist>) {
                return v.hi;
            } else if constexpr (std::is_same_v<T, DiscreteAtoms>) {
                return *std::max_element(v.values.begin(), v.values.end());
            } else if constexpr (std::is_same_v<T, PiecewiseDensity>) {
                return v.breaks.back();
            } else {
                return kInf;
            }
        },
        d);
}

bool has_atom_at(const Distribution& d, double x) {
    if (const auto* det = std::get_if<Deterministic>(&d)) return det->value == x;
    if (const auto* at = std::get_if<DiscreteAtoms>(&d))
        return std::find(at->values.begin(), at->values.end(), x) != at->values.end();
    return false;
}

} // namespace episim
