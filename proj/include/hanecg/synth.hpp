#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hanecg/dataset.hpp"
#include "hanecg/record.hpp"

namespace hanecg {

// One Gaussian component of a beat, placed relative to the R-peak.
struct GaussianBump {
    double amplitude = 0.0;  // mV
    double center_s = 0.0;   // seconds relative to R
    double width_s = 0.0;    // Gaussian sigma, seconds
};

struct BeatMorphology {
    std::vector<GaussianBump> bumps;
    char symbol = 'N';  // annotation symbol emitted for beats of this shape
};

// Five separable beat shapes keyed by class index: normal, atrial premature
// (no P wave), ventricular (wide tall R, deep S, inverted T), fusion
// (intermediate), unknown (low, wide, featureless).
std::map<int, BeatMorphology> default_morphologies();

struct SynthConfig {
    double bpm = 75.0;
    double duration_s = 60.0;
    double sampling_rate = 360.0;
    double noise_snr_db = 20.0;
    bool add_noise = true;
    uint64_t seed = 1;
    std::vector<int> beat_classes = {0};  // cycled beat by beat
    std::map<int, BeatMorphology> morphologies = default_morphologies();
    std::string record_id = "synth";
    std::string lead_name = "MLII";
};

struct SynthResult {
    Record record;
    std::vector<Annotation> annotations;  // ground-truth R sample per beat
};

// Beats at exact round(fs * 60/bpm) spacing, first R half a period in;
// additive seeded Gaussian noise scaled to the requested SNR.
SynthResult synth_ecg(const SynthConfig& config);

}  // namespace hanecg
