#include "hanecg/qrs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "hanecg/errors.hpp"

namespace hanecg {

namespace {

struct Biquad {
    double b0, b1, b2, a1, a2;  // a0 normalized to 1
};

// RBJ band-pass with 0 dB peak gain, centered geometrically in [5, 15] Hz
Biquad design_bandpass(double fs) {
    const double f_lo = 5.0, f_hi = 15.0;
    const double f0 = std::sqrt(f_lo * f_hi);
    const double q = f0 / (f_hi - f_lo);
    const double w0 = 2.0 * M_PI * f0 / fs;
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    Biquad f;
    f.b0 = alpha / a0;
    f.b1 = 0.0;
    f.b2 = -alpha / a0;
    f.a1 = -2.0 * std::cos(w0) / a0;
    f.a2 = (1.0 - alpha) / a0;
    return f;
}

std::vector<double> biquad_pass(const Biquad& f, const std::vector<double>& x) {
    std::vector<double> y(x.size());
    double x1 = 0.0, x2 = 0.0, y1 = 0.0, y2 = 0.0;
    for (size_t n = 0; n < x.size(); ++n) {
        const double v = f.b0 * x[n] + f.b1 * x1 + f.b2 * x2 - f.a1 * y1 - f.a2 * y2;
        x2 = x1;
        x1 = x[n];
        y2 = y1;
        y1 = v;
        y[n] = v;
    }
    return y;
}

// forward-backward for zero phase, so the refined peaks line up with the input
std::vector<double> bandpass_zero_phase(const std::vector<double>& x, double fs) {
    const Biquad f = design_bandpass(fs);
    std::vector<double> y = biquad_pass(f, x);
    std::reverse(y.begin(), y.end());
    y = biquad_pass(f, y);
    std::reverse(y.begin(), y.end());
    return y;
}

// y[n] = (2x[n] + x[n-1] - x[n-3] - 2x[n-4]) / 8, two samples of group delay
std::vector<double> five_point_derivative(const std::vector<double>& x) {
    std::vector<double> y(x.size(), 0.0);
    for (size_t n = 4; n < x.size(); ++n)
        y[n] = (2.0 * x[n] + x[n - 1] - x[n - 3] - 2.0 * x[n - 4]) / 8.0;
    return y;
}

std::vector<double> moving_window_integral(const std::vector<double>& x, size_t width) {
    std::vector<double> y(x.size(), 0.0);
    double acc = 0.0;
    for (size_t n = 0; n < x.size(); ++n) {
        acc += x[n];
        if (n >= width) acc -= x[n - width];
        y[n] = acc / static_cast<double>(width);
    }
    return y;
}

struct LocalMax {
    size_t index;
    double value;
};

std::vector<LocalMax> local_maxima(const std::vector<double>& x) {
    std::vector<LocalMax> out;
    for (size_t n = 1; n + 1 < x.size(); ++n)
        if (x[n] > x[n - 1] && x[n] > x[n + 1]) out.push_back({n, x[n]});
    return out;
}

}  // namespace

std::vector<size_t> detect_r_peaks(const Record& record) {
    const double fs = record.sampling_rate;
    if (fs < 40.0)
        throw ConfigError("detect_r_peaks: sampling rate " + std::to_string(fs) +
                          " cannot carry the 5-15 Hz pass band");
    const auto& x = record.samples;
    if (static_cast<double>(x.size()) < 2.0 * fs)
        throw ShapeError("detect_r_peaks: record shorter than 2 s (" +
                         std::to_string(x.size()) + " samples at " + std::to_string(fs) + " Hz)");

    const std::vector<double> bp = bandpass_zero_phase(x, fs);
    const std::vector<double> deriv = five_point_derivative(bp);
    std::vector<double> squared(deriv.size());
    for (size_t n = 0; n < deriv.size(); ++n) squared[n] = deriv[n] * deriv[n];
    const size_t mwi_width = std::max<size_t>(1, static_cast<size_t>(std::lround(0.150 * fs)));
    const std::vector<double> mwi = moving_window_integral(squared, mwi_width);

    const std::vector<LocalMax> maxima = local_maxima(mwi);
    if (maxima.empty()) return {};

    // seed the running estimates from the first 2 s
    const size_t init_len = static_cast<size_t>(2.0 * fs);
    double init_max = 0.0, init_mean = 0.0;
    for (size_t n = 0; n < init_len && n < mwi.size(); ++n) {
        init_max = std::max(init_max, mwi[n]);
        init_mean += mwi[n];
    }
    init_mean /= static_cast<double>(std::min(init_len, mwi.size()));
    double spki = init_max;
    double npki = init_mean;

    const double refractory = 0.200 * fs;
    const double searchback_factor = 1.66;
    std::vector<size_t> accepted;        // indices into mwi
    std::deque<double> rr_intervals;     // last 8 accepted RR intervals
    auto rr_average = [&]() {
        if (rr_intervals.empty()) return fs;  // assume 60 bpm until measured
        return std::accumulate(rr_intervals.begin(), rr_intervals.end(), 0.0) /
               static_cast<double>(rr_intervals.size());
    };
    auto push_rr = [&](size_t prev, size_t cur) {
        rr_intervals.push_back(static_cast<double>(cur - prev));
        if (rr_intervals.size() > 8) rr_intervals.pop_front();
    };

    for (size_t i = 0; i < maxima.size(); ++i) {
        const size_t idx = maxima[i].index;
        const double v = maxima[i].value;

        if (!accepted.empty() &&
            static_cast<double>(idx - accepted.back()) < refractory) {
            npki = 0.125 * v + 0.875 * npki;
            continue;
        }

        double thr1 = npki + 0.25 * (spki - npki);

        // search-back: a long gap means a beat was probably missed below thr1
        if (!accepted.empty() &&
            static_cast<double>(idx - accepted.back()) > searchback_factor * rr_average()) {
            const double thr2 = 0.5 * thr1;
            size_t best_j = maxima.size();
            double best_v = thr2;
            for (size_t j = 0; j < i; ++j) {
                const size_t cand = maxima[j].index;
                if (cand <= accepted.back()) continue;
                if (static_cast<double>(cand - accepted.back()) < refractory) continue;
                if (static_cast<double>(idx - cand) < refractory) continue;
                if (maxima[j].value > best_v) {
                    best_v = maxima[j].value;
                    best_j = j;
                }
            }
            if (best_j != maxima.size()) {
                spki = 0.25 * best_v + 0.75 * spki;
                push_rr(accepted.back(), maxima[best_j].index);
                accepted.push_back(maxima[best_j].index);
                thr1 = npki + 0.25 * (spki - npki);
            }
        }

        if (v > thr1) {
            spki = 0.125 * v + 0.875 * spki;
            if (!accepted.empty()) push_rr(accepted.back(), idx);
            accepted.push_back(idx);
        } else {
            npki = 0.125 * v + 0.875 * npki;
        }
    }

    // map each MWI detection back onto the band-passed waveform; the MWI peak
    // trails the QRS by roughly half the integration window plus the
    // derivative delay
    const long delay = static_cast<long>((mwi_width - 1) / 2) + 2;
    const long half_window = std::lround(0.100 * fs);
    const long n_total = static_cast<long>(x.size());
    std::vector<size_t> refined;
    for (size_t idx : accepted) {
        const long center = static_cast<long>(idx) - delay;
        const long lo = std::clamp<long>(center - half_window, 0, n_total - 1);
        const long hi = std::clamp<long>(center + half_window, 0, n_total - 1);
        long best = lo;
        for (long n = lo; n <= hi; ++n)
            if (bp[static_cast<size_t>(n)] > bp[static_cast<size_t>(best)]) best = n;
        refined.push_back(static_cast<size_t>(best));
    }

    std::sort(refined.begin(), refined.end());
    // collapse refinements that landed on the same beat
    std::vector<size_t> out;
    for (size_t p : refined) {
        if (!out.empty() && static_cast<double>(p - out.back()) < refractory) {
            if (bp[p] > bp[out.back()]) out.back() = p;
        } else {
            out.push_back(p);
        }
    }
    return out;
}

}  // namespace hanecg
