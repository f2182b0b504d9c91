#pragma once

#include <string>
#include <vector>

#include "hanecg/record.hpp"

namespace hanecg {

// Multilevel DWT coefficients. details are ordered coarse -> fine, i.e.
// details[0] belongs to the deepest decomposition level.
struct WaveletCoeffs {
    std::vector<double> approximation;
    std::vector<std::vector<double>> details;
    std::string wavelet_id;
    size_t original_length = 0;
};

enum class ThresholdMode { Hard, Soft };

struct DenoiseConfig {
    std::string wavelet_id = "db4";
    size_t levels = 4;
    ThresholdMode mode = ThresholdMode::Soft;
    // < 0 selects the universal threshold sigma*sqrt(2 ln N) with
    // sigma = median(|finest detail|) / 0.6745
    double threshold = -1.0;
};

// Supported wavelet_id values: "haar", "db2", "db4".
// Boundary handling is half-sample symmetric extension.
WaveletCoeffs dwt_decompose(const std::vector<double>& signal, const std::string& wavelet_id,
                            size_t levels);

// Shrinks detail bands only; the approximation is untouched. threshold must
// be >= 0 here — the auto choice lives in DenoiseConfig / universal_threshold.
WaveletCoeffs dwt_threshold(const WaveletCoeffs& coeffs, ThresholdMode mode, double threshold);

std::vector<double> dwt_reconstruct(const WaveletCoeffs& coeffs);

// decompose -> threshold -> reconstruct; sampling rate and length preserved.
Record denoise(const Record& record, const DenoiseConfig& config = {});

// The universal threshold value the auto mode would pick for these coeffs.
double universal_threshold(const WaveletCoeffs& coeffs);

}  // namespace hanecg
