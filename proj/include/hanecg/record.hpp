#pragma once

#include <string>
#include <vector>

namespace hanecg {

// A sampled single-lead ECG signal, amplitudes in millivolts.
struct Record {
    std::vector<double> samples;
    double sampling_rate = 0.0;  // Hz
    std::string lead_name;
    std::string record_id;
};

// Fixed-length sample window centered on an R-peak.
struct BeatWindow {
    std::vector<double> samples;
    size_t r_peak_offset = 0;  // == `before` used at windowing time
    int label = 0;             // class index, 0..4
    std::string source_record;
};

}  // namespace hanecg
