#pragma once

#include <cmath>
#include <string>

#include "toruslab/toruslab.hpp"

namespace toruslab::testing {

// f = 1 + 0.3 cos 2 pi x, g = 1.
inline MetricSpec liouville() {
    return MetricSpec::liouville(TrigPoly(1.0, {{1, 0.3, 0.0}}), TrigPoly(1.0, {}), "liouville-cos");
}

inline std::string config(const std::string& name) { return std::string(TORUSLAB_CONFIG_DIR) + "/" + name; }

// Composite Simpson rule on [a, b] with n (even) panels.
template <class F>
double simpson(F f, double a, double b, int n = 2000) {
    double h = (b - a) / n, s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

// Length of a horizontal period for the Liouville test metric.
inline double horizontal_period_length() {
    return simpson([](double x) { return std::sqrt(2.0 + 0.3 * std::cos(2 * M_PI * x)); }, 0.0, 1.0);
}

}  // namespace toruslab::testing
