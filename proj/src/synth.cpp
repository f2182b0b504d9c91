#include "hanecg/synth.hpp"

#include <cmath>

#include "hanecg/errors.hpp"
#include "hanecg/rng.hpp"

namespace hanecg {

std::map<int, BeatMorphology> default_morphologies() {
    std::map<int, BeatMorphology> m;
    // amplitude, center offset (s), sigma (s)
    m[0] = {{{0.15, -0.160, 0.025},   // P
             {-0.12, -0.030, 0.009},  // Q
             {1.00, 0.000, 0.012},    // R
             {-0.25, 0.030, 0.009},   // S
             {0.30, 0.220, 0.050}},   // T
            'N'};
    m[1] = {{{-0.10, -0.028, 0.009},  // no discernible P wave
             {0.95, 0.000, 0.011},
             {-0.20, 0.028, 0.009},
             {0.35, 0.190, 0.045}},
            'A'};
    m[2] = {{{1.35, 0.000, 0.030},  // wide, tall R
             {-0.55, 0.045, 0.020},
             {-0.35, 0.240, 0.060}},  // inverted T
            'V'};
    m[3] = {{{0.07, -0.150, 0.020},
             {1.15, 0.000, 0.020},
             {-0.35, 0.035, 0.014},
             {0.18, 0.220, 0.050}},
            'F'};
    m[4] = {{{0.55, 0.000, 0.040},  // low and featureless
             {-0.10, 0.050, 0.020},
             {0.10, 0.230, 0.050}},
            'Q'};
    return m;
}

SynthResult synth_ecg(const SynthConfig& config) {
    if (config.bpm <= 0.0) throw ConfigError("synth_ecg: bpm must be positive");
    if (config.duration_s <= 0.0) throw ConfigError("synth_ecg: duration must be positive");
    if (config.sampling_rate <= 0.0)
        throw ConfigError("synth_ecg: sampling_rate must be positive");
    if (config.beat_classes.empty())
        throw ConfigError("synth_ecg: beat_classes must not be empty");
    for (int cls : config.beat_classes)
        if (!config.morphologies.count(cls))
            throw ConfigError("synth_ecg: no morphology for class " + std::to_string(cls));

    const double fs = config.sampling_rate;
    const size_t n = static_cast<size_t>(config.duration_s * fs);
    const size_t period = static_cast<size_t>(std::lround(fs * 60.0 / config.bpm));
    if (period == 0) throw ConfigError("synth_ecg: bpm too high for the sampling rate");
    const size_t tail_margin = static_cast<size_t>(std::lround(0.35 * fs));

    SynthResult out;
    out.record.sampling_rate = fs;
    out.record.record_id = config.record_id;
    out.record.lead_name = config.lead_name;
    out.record.samples.assign(n, 0.0);

    size_t beat_index = 0;
    for (size_t r = period / 2; r + tail_margin < n; r += period, ++beat_index) {
        const int cls = config.beat_classes[beat_index % config.beat_classes.size()];
        const BeatMorphology& shape = config.morphologies.at(cls);
        for (const GaussianBump& bump : shape.bumps) {
            const double center = static_cast<double>(r) + bump.center_s * fs;
            const double sigma = bump.width_s * fs;
            const long lo = std::lround(center - 4.0 * sigma);
            const long hi = std::lround(center + 4.0 * sigma);
            for (long i = std::max<long>(lo, 0);
                 i <= std::min<long>(hi, static_cast<long>(n) - 1); ++i) {
                const double d = (static_cast<double>(i) - center) / sigma;
                out.record.samples[static_cast<size_t>(i)] += bump.amplitude * std::exp(-0.5 * d * d);
            }
        }
        out.annotations.push_back({r, shape.symbol});
    }

    if (config.add_noise) {
        double power = 0.0;
        for (double v : out.record.samples) power += v * v;
        power /= static_cast<double>(n);
        const double sigma = std::sqrt(power / std::pow(10.0, config.noise_snr_db / 10.0));
        Rng rng(config.seed);
        for (double& v : out.record.samples) v += sigma * rng.normal();
    }
    return out;
}

}  // namespace hanecg
