#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "hanecg/rng.hpp"

namespace hanecg {

// Central finite-difference check of an analytic gradient.
//
// `loss` re-evaluates the scalar objective from the current contents of
// `coords` (which this function perturbs in place and restores).
// Returns max over checked coordinates of |analytic - numeric| /
// max(1, |analytic|, |numeric|). When `max_coords` is smaller than the
// coordinate count, a random subset is checked (rng required then).
double max_relative_fd_error(const std::function<double()>& loss, std::span<double> coords,
                             std::span<const double> analytic, double step = 1e-5,
                             size_t max_coords = static_cast<size_t>(-1), Rng* rng = nullptr);

}  // namespace hanecg
