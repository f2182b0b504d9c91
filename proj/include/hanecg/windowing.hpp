#pragma once

#include <cstddef>
#include <vector>

#include "hanecg/record.hpp"
#include "hanecg/tensor.hpp"

namespace hanecg {

struct WindowExtraction {
    std::vector<BeatWindow> windows;
    size_t skipped = 0;  // peaks too close to a record boundary
};

// Cuts [p - before, p + after) around each R-peak. Window length is
// before + after and r_peak_offset == before in every emitted window.
// Boundary peaks are dropped, not padded, and counted in `skipped`.
WindowExtraction window_beats(const Record& record, const std::vector<size_t>& r_peaks,
                              size_t before, size_t after);

// Reshapes a window into [num_segments x window/num_segments], row i being
// the contiguous slice starting at i * segment_len. Errors when the length
// is not divisible.
Tensor2 segment(const std::vector<double>& window, size_t num_segments);

}  // namespace hanecg
