#pragma once

#include "nlflow/grid.hpp"
#include "nlflow/rng.hpp"

#include <cmath>
#include <cstdint>

namespace testing {

inline double bump1(double x, double c, double r) {
    const double q = (x - c) * (x - c) / (r * r);
    return q < 1.0 ? std::pow(1.0 - q, 3) : 0.0;
}

inline nlflow::Field bump(const nlflow::Grid& g, nlflow::Point c, double r, double amp = 1.0) {
    return nlflow::Field::from_function(g, [&](const nlflow::Point& x) {
        double q = (x[0] - c[0]) * (x[0] - c[0]);
        if (g.dim == 2) q += (x[1] - c[1]) * (x[1] - c[1]);
        q /= r * r;
        return q < 1.0 ? amp * std::pow(1.0 - q, 3) : 0.0;
    });
}

inline nlflow::Field random_field(const nlflow::Grid& g, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    const nlflow::CounterRng rng(seed, 77);
    nlflow::Field f(g);
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = rng.uniform(k, lo, hi);
    return f;
}

} // namespace testing
