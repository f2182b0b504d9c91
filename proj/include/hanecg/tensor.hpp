#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace hanecg {

// Dense row-major matrix of doubles.
struct Tensor2 {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> values;

    Tensor2() = default;
    Tensor2(size_t r, size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}

    double& at(size_t r, size_t c) { return values[r * cols + c]; }
    double at(size_t r, size_t c) const { return values[r * cols + c]; }

    std::span<double> row(size_t r) { return {values.data() + r * cols, cols}; }
    std::span<const double> row(size_t r) const { return {values.data() + r * cols, cols}; }

    bool all_finite() const {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace hanecg
