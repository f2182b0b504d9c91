#include "hanecg/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "hanecg/errors.hpp"

namespace hanecg {

namespace {

struct FilterBank {
    std::vector<double> dec_lo, dec_hi, rec_lo, rec_hi;
    size_t taps() const { return dec_lo.size(); }
};

FilterBank make_bank(const std::string& wavelet_id) {
    std::vector<double> lo;
    if (wavelet_id == "haar") {
        lo = {0.7071067811865476, 0.7071067811865476};
    } else if (wavelet_id == "db2") {
        lo = {-0.12940952255092145, 0.22414386804185735, 0.836516303737469,
              0.48296291314469025};
    } else if (wavelet_id == "db4") {
        lo = {-0.010597401784997278, 0.032883011666982945, 0.030841381835986965,
              -0.18703481171888114,  -0.02798376941698385, 0.6308807679295904,
              0.7148465705525415,    0.23037781330885523};
    } else {
        throw ConfigError("dwt: unknown wavelet '" + wavelet_id + "'");
    }
    const size_t f = lo.size();
    FilterBank bank;
    bank.dec_lo = lo;
    bank.dec_hi.resize(f);
    for (size_t k = 0; k < f; ++k)
        bank.dec_hi[k] = (k % 2 == 0 ? -1.0 : 1.0) * lo[f - 1 - k];
    bank.rec_lo.assign(lo.rbegin(), lo.rend());
    bank.rec_hi.assign(bank.dec_hi.rbegin(), bank.dec_hi.rend());
    return bank;
}

// half-sample symmetric reflection, folded until in range
size_t sym_index(long idx, size_t n) {
    const long ln = static_cast<long>(n);
    while (idx < 0 || idx >= ln) {
        if (idx < 0) idx = -idx - 1;
        if (idx >= ln) idx = 2 * ln - 1 - idx;
    }
    return static_cast<size_t>(idx);
}

size_t coeff_len(size_t n, size_t taps) { return (n + taps - 1) / 2; }

// single-level analysis: out[k] = sum_j filter[j] * x[2k + 1 - j]
void dwt_single(const std::vector<double>& x, const FilterBank& bank, std::vector<double>& approx,
                std::vector<double>& detail) {
    const size_t n = x.size();
    const size_t f = bank.taps();
    const size_t out_len = coeff_len(n, f);
    approx.assign(out_len, 0.0);
    detail.assign(out_len, 0.0);
    for (size_t k = 0; k < out_len; ++k) {
        double a = 0.0, d = 0.0;
        for (size_t j = 0; j < f; ++j) {
            const double v = x[sym_index(static_cast<long>(2 * k + 1) - static_cast<long>(j), n)];
            a += bank.dec_lo[j] * v;
            d += bank.dec_hi[j] * v;
        }
        approx[k] = a;
        detail[k] = d;
    }
}

// single-level synthesis, exact inverse of dwt_single for the first
// target_len samples
std::vector<double> idwt_single(const std::vector<double>& approx,
                                const std::vector<double>& detail, const FilterBank& bank,
                                size_t target_len) {
    const size_t f = bank.taps();
    if (approx.size() != detail.size())
        throw ShapeError("dwt_reconstruct: approximation/detail length mismatch");
    const size_t o = approx.size();
    std::vector<double> out(target_len, 0.0);
    for (size_t m = 0; m < target_len; ++m) {
        // filter index m - 2k + f - 2 must lie in [0, f)
        const long kmin = static_cast<long>(m / 2);
        double acc = 0.0;
        for (long k = kmin; k < static_cast<long>(o); ++k) {
            const long j = static_cast<long>(m) - 2 * k + static_cast<long>(f) - 2;
            if (j < 0) break;  // j decreases as k grows
            acc += approx[k] * bank.rec_lo[j] + detail[k] * bank.rec_hi[j];
        }
        out[m] = acc;
    }
    return out;
}

// input length at each level: chain[0] = original, chain[l] = coeff_len(chain[l-1])
std::vector<size_t> length_chain(size_t original, size_t levels, size_t taps) {
    std::vector<size_t> chain(levels + 1);
    chain[0] = original;
    for (size_t l = 1; l <= levels; ++l) chain[l] = coeff_len(chain[l - 1], taps);
    return chain;
}

}  // namespace

WaveletCoeffs dwt_decompose(const std::vector<double>& signal, const std::string& wavelet_id,
                            size_t levels) {
    const FilterBank bank = make_bank(wavelet_id);
    if (levels < 1) throw ConfigError("dwt_decompose: levels must be >= 1");
    if (signal.size() < bank.taps())
        throw ShapeError("dwt_decompose: signal length " + std::to_string(signal.size()) +
                         " shorter than filter " + std::to_string(bank.taps()));

    WaveletCoeffs coeffs;
    coeffs.wavelet_id = wavelet_id;
    coeffs.original_length = signal.size();
    coeffs.details.resize(levels);

    std::vector<double> cur = signal;
    for (size_t l = 0; l < levels; ++l) {
        std::vector<double> approx, detail;
        dwt_single(cur, bank, approx, detail);
        coeffs.details[levels - 1 - l] = std::move(detail);  // store coarse -> fine
        cur = std::move(approx);
    }
    coeffs.approximation = std::move(cur);
    return coeffs;
}

WaveletCoeffs dwt_threshold(const WaveletCoeffs& coeffs, ThresholdMode mode, double threshold) {
    if (threshold < 0.0)
        throw ConfigError("dwt_threshold: negative threshold " + std::to_string(threshold));
    WaveletCoeffs out = coeffs;
    for (auto& band : out.details) {
        for (double& c : band) {
            if (mode == ThresholdMode::Hard) {
                if (std::abs(c) < threshold) c = 0.0;
            } else {
                const double mag = std::abs(c) - threshold;
                c = mag > 0.0 ? (c > 0.0 ? mag : -mag) : 0.0;
            }
        }
    }
    return out;
}

double universal_threshold(const WaveletCoeffs& coeffs) {
    if (coeffs.details.empty()) throw ShapeError("universal_threshold: no detail bands");
    const auto& finest = coeffs.details.back();
    if (finest.empty()) return 0.0;
    std::vector<double> mags(finest.size());
    for (size_t i = 0; i < finest.size(); ++i) mags[i] = std::abs(finest[i]);
    std::sort(mags.begin(), mags.end());
    const size_t n = mags.size();
    const double median = n % 2 == 1 ? mags[n / 2] : 0.5 * (mags[n / 2 - 1] + mags[n / 2]);
    const double sigma = median / 0.6745;
    return sigma * std::sqrt(2.0 * std::log(static_cast<double>(coeffs.original_length)));
}

std::vector<double> dwt_reconstruct(const WaveletCoeffs& coeffs) {
    const FilterBank bank = make_bank(coeffs.wavelet_id);
    const size_t levels = coeffs.details.size();
    if (levels < 1) throw ShapeError("dwt_reconstruct: no detail bands");
    const auto chain = length_chain(coeffs.original_length, levels, bank.taps());

    if (coeffs.approximation.size() != chain[levels])
        throw ShapeError("dwt_reconstruct: approximation length " +
                         std::to_string(coeffs.approximation.size()) + " inconsistent, expected " +
                         std::to_string(chain[levels]));

    std::vector<double> cur = coeffs.approximation;
    for (size_t i = 0; i < levels; ++i) {
        const size_t level = levels - i;  // details[i] is the coarsest remaining
        if (coeffs.details[i].size() != chain[level])
            throw ShapeError("dwt_reconstruct: detail band " + std::to_string(i) + " has length " +
                             std::to_string(coeffs.details[i].size()) + ", expected " +
                             std::to_string(chain[level]));
        cur = idwt_single(cur, coeffs.details[i], bank, chain[level - 1]);
    }
    return cur;
}

Record denoise(const Record& record, const DenoiseConfig& config) {
    WaveletCoeffs coeffs = dwt_decompose(record.samples, config.wavelet_id, config.levels);
    const double t = config.threshold >= 0.0 ? config.threshold : universal_threshold(coeffs);
    WaveletCoeffs shrunk = dwt_threshold(coeffs, config.mode, t);
    Record out = record;
    out.samples = dwt_reconstruct(shrunk);
    return out;
}

}  // namespace hanecg
