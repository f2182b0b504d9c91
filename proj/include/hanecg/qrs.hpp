#pragma once

#include <cstddef>
#include <vector>

#include "hanecg/record.hpp"

namespace hanecg {

// Pan-Tompkins style R-peak detector: band-pass (~5-15 Hz) -> five-point
// derivative -> squaring -> 150 ms moving-window integral -> adaptive
// dual-threshold peak picking with search-back, then refinement of each
// detection onto the band-passed waveform. Returns ascending sample indices.
//
// Records shorter than 2 s are rejected (the thresholds are seeded from the
// first 2 s), as are sampling rates too low to carry the 5-15 Hz pass band.
std::vector<size_t> detect_r_peaks(const Record& record);

}  // namespace hanecg
