#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace episim {

// Right-continuous piecewise-constant function on [0, inf):
// values[i] on [breaks[i], breaks[i+1]), values.back() from breaks.back() on.
struct PiecewiseConst {
    std::vector<double> breaks;
    std::vector<double> values;

    bool empty() const { return values.empty(); }

    double operator()(double t) const {
        if (values.empty()) return 0.0;
        auto it = std::upper_bound(breaks.begin(), breaks.end(), t);
        const auto idx = static_cast<std::size_t>(it - breaks.begin());
        if (idx == 0) return 0.0; // t below the support start
        return values[idx - 1];
    }

    double integral(double a, double b) const {
        if (values.empty() || b <= a) return 0.0;
        double acc = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (values[i] == 0.0) continue;
            const double lo = std::max(a, breaks[i]);
            const double hi = (i + 1 < breaks.size()) ? std::min(b, breaks[i + 1]) : b;
            if (hi > lo) acc += values[i] * (hi - lo); // may be +inf on the last piece
        }
        return acc;
    }

    double max_value() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, v);
        return m;
    }

    void check_valid(const char* name) const {
        if (breaks.size() != values.size())
            throw std::invalid_argument(std::string(name) + ": breaks/values size mismatch");
        for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
            if (breaks[i + 1] <= breaks[i])
                throw std::invalid_argument(std::string(name) + ": breaks must be strictly increasing");
        if (!breaks.empty() && breaks.front() < 0.0)
            throw std::invalid_argument(std::string(name) + ": breaks must be >= 0");
    }
};

} // namespace episim
