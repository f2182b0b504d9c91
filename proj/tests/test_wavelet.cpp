#include <cmath>
#include <vector>

#include "doctest.h"
#include "hanecg/errors.hpp"
#include "hanecg/rng.hpp"
#include "hanecg/wavelet.hpp"

using namespace hanecg;

namespace {

std::vector<double> random_signal(size_t n, uint64_t seed) {
    Rng rng(seed);
    std::vector<double> x(n);
    for (double& v : x) v = rng.uniform(-2.0, 2.0);
    return x;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_SUITE("wavelet") {
    TEST_CASE("haar single level matches the hand example") {
        WaveletCoeffs c = dwt_decompose({1.0, 2.0, 3.0, 4.0}, "haar", 1);
        REQUIRE(c.approximation.size() == 2);
        REQUIRE(c.details.size() == 1);
        REQUIRE(c.details[0].size() == 2);
        CHECK(c.approximation[0] == doctest::Approx(2.1213).epsilon(1e-4));
        CHECK(c.approximation[1] == doctest::Approx(4.9497).epsilon(1e-4));
        CHECK(c.details[0][0] == doctest::Approx(-0.7071).epsilon(1e-4));
        CHECK(c.details[0][1] == doctest::Approx(-0.7071).epsilon(1e-4));
    }

    TEST_CASE("coefficient lengths follow the half-plus-filter rule") {
        // length (n + taps - 1) / 2 per level
        WaveletCoeffs c = dwt_decompose(random_signal(300, 1), "db4", 3);
        CHECK(c.details[2].size() == (300 + 7) / 2);   // 153
        CHECK(c.details[1].size() == (153 + 7) / 2);   // 80
        CHECK(c.details[0].size() == (80 + 7) / 2);    // 43
        CHECK(c.approximation.size() == c.details[0].size());
        CHECK(c.original_length == 300);
    }

    TEST_CASE("perfect reconstruction across lengths, wavelets, depths") {
        const size_t lengths[] = {256, 300, 1024};
        const char* wavelets[] = {"haar", "db2", "db4"};
        uint64_t seed = 100;
        for (size_t n : lengths) {
            for (const char* w : wavelets) {
                for (size_t levels = 1; levels <= 4; ++levels) {
                    std::vector<double> x = random_signal(n, seed++);
                    WaveletCoeffs c = dwt_decompose(x, w, levels);
                    std::vector<double> y = dwt_reconstruct(c);
                    REQUIRE(y.size() == n);
                    CHECK(max_abs_diff(x, y) <= 1e-8);
                }
            }
        }
    }

    TEST_CASE("perfect reconstruction on odd and awkward lengths") {
        for (size_t n : {37u, 101u, 299u}) {
            std::vector<double> x = random_signal(n, 7000 + n);
            WaveletCoeffs c = dwt_decompose(x, "db2", 2);
            CHECK(max_abs_diff(x, dwt_reconstruct(c)) <= 1e-8);
        }
    }

    TEST_CASE("hard and soft thresholding") {
        WaveletCoeffs c;
        c.wavelet_id = "haar";
        c.original_length = 8;
        c.approximation = {5.0, -6.0};
        c.details = {{0.5, -1.2, 2.0}};

        WaveletCoeffs hard = dwt_threshold(c, ThresholdMode::Hard, 1.3);
        CHECK(hard.details[0][0] == 0.0);
        CHECK(hard.details[0][1] == 0.0);
        CHECK(hard.details[0][2] == 2.0);

        WaveletCoeffs soft = dwt_threshold(c, ThresholdMode::Soft, 1.3);
        CHECK(soft.details[0][0] == 0.0);
        CHECK(soft.details[0][1] == 0.0);
        CHECK(soft.details[0][2] == doctest::Approx(0.7).epsilon(1e-12));

        // approximation passes through untouched in both modes
        CHECK(hard.approximation == c.approximation);
        CHECK(soft.approximation == c.approximation);

        CHECK_THROWS_AS(dwt_threshold(c, ThresholdMode::Soft, -0.5), ConfigError);
    }

    TEST_CASE("universal threshold follows the MAD formula") {
        WaveletCoeffs c;
        c.wavelet_id = "haar";
        c.original_length = 16;
        c.approximation = {0.0};
        c.details = {{9.0, 9.0}, {1.0, -2.0, 3.0, -4.0}};  // finest band is last
        const double median = 2.5;  // |finest| sorted: 1 2 3 4
        const double expected = median / 0.6745 * std::sqrt(2.0 * std::log(16.0));
        CHECK(universal_threshold(c) == doctest::Approx(expected).epsilon(1e-12));
    }

    TEST_CASE("denoise preserves shape and improves a noisy smooth signal") {
        const size_t n = 1024;
        Record clean;
        clean.sampling_rate = 256.0;
        clean.record_id = "clean";
        clean.samples.resize(n);
        for (size_t i = 0; i < n; ++i)
            clean.samples[i] = std::sin(2.0 * M_PI * 3.0 * static_cast<double>(i) / 256.0);

        Rng rng(55);
        Record noisy = clean;
        noisy.record_id = "noisy";
        for (double& v : noisy.samples) v += 0.25 * rng.normal();

        Record out = denoise(noisy, DenoiseConfig{});
        REQUIRE(out.samples.size() == n);
        CHECK(out.sampling_rate == 256.0);
        CHECK(out.record_id == "noisy");

        double mse_noisy = 0.0, mse_out = 0.0;
        for (size_t i = 0; i < n; ++i) {
            mse_noisy += std::pow(noisy.samples[i] - clean.samples[i], 2);
            mse_out += std::pow(out.samples[i] - clean.samples[i], 2);
        }
        CHECK(mse_out < 0.5 * mse_noisy);
    }

    TEST_CASE("zero threshold leaves coefficients alone") {
        std::vector<double> x = random_signal(128, 77);
        WaveletCoeffs c = dwt_decompose(x, "db2", 3);
        WaveletCoeffs t = dwt_threshold(c, ThresholdMode::Soft, 0.0);
        CHECK(max_abs_diff(dwt_reconstruct(t), x) <= 1e-8);
    }

    TEST_CASE("input validation") {
        CHECK_THROWS_AS(dwt_decompose(random_signal(64, 1), "sym5", 2), ConfigError);
        CHECK_THROWS_AS(dwt_decompose(random_signal(64, 1), "db4", 0), ConfigError);
        CHECK_THROWS_AS(dwt_decompose({1.0, 2.0}, "db4", 1), ShapeError);

        WaveletCoeffs broken = dwt_decompose(random_signal(64, 2), "db2", 2);
        broken.details[1].pop_back();
        CHECK_THROWS_AS(dwt_reconstruct(broken), ShapeError);
        WaveletCoeffs empty;
        empty.wavelet_id = "haar";
        CHECK_THROWS_AS(dwt_reconstruct(empty), ShapeError);
        CHECK_THROWS_AS(universal_threshold(empty), ShapeError);
    }
}
