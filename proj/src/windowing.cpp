#include "hanecg/windowing.hpp"

#include "hanecg/errors.hpp"

namespace hanecg {

WindowExtraction window_beats(const Record& record, const std::vector<size_t>& r_peaks,
                              size_t before, size_t after) {
    if (before == 0 || after == 0)
        throw ConfigError("window_beats: before and after must be positive");
    WindowExtraction out;
    const size_t n = record.samples.size();
    for (size_t p : r_peaks) {
        if (p < before || p + after > n) {
            ++out.skipped;
            continue;
        }
        BeatWindow w;
        w.samples.assign(record.samples.begin() + static_cast<long>(p - before),
                         record.samples.begin() + static_cast<long>(p + after));
        w.r_peak_offset = before;
        w.source_record = record.record_id;
        out.windows.push_back(std::move(w));
    }
    return out;
}

Tensor2 segment(const std::vector<double>& window, size_t num_segments) {
    if (num_segments == 0) throw ConfigError("segment: num_segments must be positive");
    if (window.size() % num_segments != 0)
        throw ShapeError("segment: window length " + std::to_string(window.size()) +
                         " not divisible by " + std::to_string(num_segments));
    const size_t seg_len = window.size() / num_segments;
    Tensor2 t(num_segments, seg_len);
    for (size_t i = 0; i < window.size(); ++i) t.values[i] = window[i];
    return t;
}

}  // namespace hanecg
