#include <cmath>
#include <vector>

#include "doctest.h"
#include "hanecg/errors.hpp"
#include "hanecg/qrs.hpp"
#include "hanecg/rng.hpp"

using namespace hanecg;

namespace {

void add_bump(std::vector<double>& x, double fs, double center_s, double amp, double sigma_s) {
    const long c = std::lround(center_s * fs);
    const long half = std::lround(4.0 * sigma_s * fs);
    for (long i = c - half; i <= c + half; ++i) {
        if (i < 0 || i >= static_cast<long>(x.size())) continue;
        const double t = (static_cast<double>(i) / fs) - center_s;
        x[static_cast<size_t>(i)] += amp * std::exp(-t * t / (2.0 * sigma_s * sigma_s));
    }
}

struct ToyEcg {
    Record record;
    std::vector<size_t> truth;  // R sample indices
};

ToyEcg make_ecg(double bpm, double fs, double duration_s, double noise_sigma, uint64_t seed) {
    ToyEcg out;
    out.record.sampling_rate = fs;
    out.record.record_id = "toy";
    out.record.samples.assign(static_cast<size_t>(duration_s * fs), 0.0);
    const double period = 60.0 / bpm;
    for (double t = period / 2.0; t + 0.3 < duration_s; t += period) {
        add_bump(out.record.samples, fs, t - 0.16, 0.15, 0.025);  // P
        add_bump(out.record.samples, fs, t, 1.0, 0.010);          // R
        add_bump(out.record.samples, fs, t + 0.025, -0.25, 0.008);  // S
        add_bump(out.record.samples, fs, t + 0.22, 0.25, 0.050);  // T
        out.truth.push_back(static_cast<size_t>(std::lround(t * fs)));
    }
    if (noise_sigma > 0.0) {
        Rng rng(seed);
        for (double& v : out.record.samples) v += noise_sigma * rng.normal();
    }
    return out;
}

struct MatchStats {
    size_t matched = 0;
    size_t truth_count = 0;
    size_t detected_count = 0;
};

MatchStats match(const std::vector<size_t>& truth, const std::vector<size_t>& detected, double fs,
                 double tol_s = 0.025) {
    MatchStats s;
    s.truth_count = truth.size();
    s.detected_count = detected.size();
    const double tol = tol_s * fs;
    std::vector<bool> used(detected.size(), false);
    for (size_t t : truth) {
        for (size_t j = 0; j < detected.size(); ++j) {
            if (used[j]) continue;
            if (std::abs(static_cast<double>(detected[j]) - static_cast<double>(t)) <= tol) {
                used[j] = true;
                ++s.matched;
                break;
            }
        }
    }
    return s;
}

}  // namespace

TEST_SUITE("qrs") {
    TEST_CASE("clean 60 bpm: every beat found, nothing extra") {
        ToyEcg ecg = make_ecg(60.0, 250.0, 60.0, 0.0, 0);
        std::vector<size_t> det = detect_r_peaks(ecg.record);
        MatchStats s = match(ecg.truth, det, 250.0);
        CHECK(s.matched == s.truth_count);
        CHECK(s.detected_count == s.truth_count);
    }

    TEST_CASE("clean 120 bpm") {
        ToyEcg ecg = make_ecg(120.0, 250.0, 60.0, 0.0, 0);
        REQUIRE(ecg.truth.size() >= 118);
        std::vector<size_t> det = detect_r_peaks(ecg.record);
        MatchStats s = match(ecg.truth, det, 250.0);
        CHECK(s.matched == s.truth_count);
        CHECK(s.detected_count == s.truth_count);
    }

    TEST_CASE("mild noise at 72 bpm, 360 Hz") {
        ToyEcg ecg = make_ecg(72.0, 360.0, 60.0, 0.05, 99);
        std::vector<size_t> det = detect_r_peaks(ecg.record);
        MatchStats s = match(ecg.truth, det, 360.0);
        const double sens = static_cast<double>(s.matched) / static_cast<double>(s.truth_count);
        const double prec = static_cast<double>(s.matched) / static_cast<double>(s.detected_count);
        CHECK(sens >= 0.99);
        CHECK(prec >= 0.99);
    }

    TEST_CASE("flat signal yields no detections") {
        Record flat;
        flat.sampling_rate = 250.0;
        flat.samples.assign(250 * 60, 0.0);
        CHECK(detect_r_peaks(flat).empty());
    }

    TEST_CASE("detections are strictly ascending and in range") {
        ToyEcg ecg = make_ecg(90.0, 250.0, 30.0, 0.02, 5);
        std::vector<size_t> det = detect_r_peaks(ecg.record);
        REQUIRE(!det.empty());
        for (size_t i = 1; i < det.size(); ++i) CHECK(det[i] > det[i - 1]);
        CHECK(det.back() < ecg.record.samples.size());
    }

    TEST_CASE("short record and bad rate are rejected") {
        Record r;
        r.sampling_rate = 250.0;
        r.samples.assign(250, 0.0);  // one second
        CHECK_THROWS_AS(detect_r_peaks(r), ShapeError);
        r.sampling_rate = 30.0;
        r.samples.assign(300, 0.0);
        CHECK_THROWS_AS(detect_r_peaks(r), ConfigError);
    }
}
