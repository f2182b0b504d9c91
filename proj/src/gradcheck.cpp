#include "hanecg/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "hanecg/errors.hpp"

namespace hanecg {

double max_relative_fd_error(const std::function<double()>& loss, std::span<double> coords,
                             std::span<const double> analytic, double step, size_t max_coords,
                             Rng* rng) {
    if (coords.size() != analytic.size())
        throw ShapeError("gradient_check: coords/analytic size mismatch");

    std::vector<size_t> idx(coords.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (max_coords < idx.size()) {
        if (!rng) throw ConfigError("gradient_check: rng required for subset sampling");
        shuffle(idx, *rng);
        idx.resize(max_coords);
    }

    double worst = 0.0;
    for (size_t i : idx) {
        const double saved = coords[i];
        coords[i] = saved + step;
        const double up = loss();
        coords[i] = saved - step;
        const double down = loss();
        coords[i] = saved;
        if (!std::isfinite(up) || !std::isfinite(down))
            throw NumericError("gradient_check: non-finite loss during perturbation");
        const double numeric = (up - down) / (2.0 * step);
        const double a = analytic[i];
        const double rel = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
        worst = std::max(worst, rel);
    }
    return worst;
}

}  // namespace hanecg
