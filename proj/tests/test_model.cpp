#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "hanecg/errors.hpp"
#include "hanecg/gradcheck.hpp"
#include "hanecg/model.hpp"

using namespace hanecg;

namespace {

HanConfig tiny_config() {
    HanConfig c;
    c.num_segments = 2;
    c.segment_len = 24;
    c.conv_filters = 3;
    c.conv_kernel = 5;
    c.conv_stride = 2;
    c.lstm_units = 4;
    c.fc_units = 6;
    c.num_classes = 3;
    c.dropout_rate = 0.0;
    return c;
}

std::vector<double> random_window(const HanConfig& c, uint64_t seed) {
    Rng rng(seed);
    std::vector<double> w(c.window_len());
    for (double& x : w) x = rng.uniform(-1.0, 1.0);
    return w;
}

// FD-checks every parameter block of `m` against the analytic grads from
// backward(); window/label fixed, dropout replayed via a fixed-seed rng.
void check_model_gradients(HanModel& m, const std::vector<double>& window, size_t label,
                           bool train_mode) {
    Rng grad_rng(7);
    BackwardResult res = backward(m, window, label, train_mode, grad_rng);

    auto loss_fn = [&]() {
        Rng r(7);  // same seed => same dropout mask on every evaluation
        ForwardResult f = forward(m, window, train_mode, r);
        return softmax_cross_entropy(f.logits, label).loss;
    };

    auto params = param_blocks(m);
    auto grads = const_param_blocks(res.grads);
    REQUIRE(params.size() == grads.size());
    for (size_t b = 0; b < params.size(); ++b) {
        INFO("block ", params[b].name);
        std::vector<double> analytic(grads[b].values.begin(), grads[b].values.end());
        double err = max_relative_fd_error(loss_fn, params[b].values, analytic);
        CHECK(err < 1e-4);
    }
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("default parameter count is 63207 and inside the target band") {
    HanConfig c;
    CHECK(param_count(c) == 63207);
    CHECK(param_count(c) >= 50000);
    CHECK(param_count(c) <= 110000);
}

TEST_CASE("closed-form parameter count matches the allocated blocks") {
    for (size_t levels : {size_t{2}, size_t{3}}) {
        for (bool bidir : {false, true}) {
            HanConfig c = tiny_config();
            c.hierarchy_levels = levels;
            c.level3_groups = 2;
            c.bidirectional = bidir;
            HanModel m = build(c, 11);
            CHECK(param_count(c) == param_count(m));
        }
    }
    HanConfig full;  // defaults
    HanModel m = build(full, 1);
    CHECK(param_count(full) == param_count(m));
}

TEST_CASE("third hierarchy level adds one LSTM and one attention block") {
    HanConfig two;  // defaults, 2 levels
    HanConfig three = two;
    three.hierarchy_levels = 3;
    three.level3_groups = 2;
    const size_t enc_dim = two.lstm_units;  // unidirectional
    const size_t lstm = 4 * two.lstm_units * (enc_dim + two.lstm_units) + 4 * two.lstm_units;
    CHECK(param_count(three) == param_count(two) + lstm + enc_dim + 1);
    CHECK(param_count(three) == 96296);
    CHECK(param_count(three) > param_count(two));
}

TEST_CASE("build is deterministic in the seed") {
    HanConfig c = tiny_config();
    HanModel a = build(c, 42);
    HanModel b = build(c, 42);
    HanModel other = build(c, 43);
    auto ba = const_param_blocks(a);
    auto bb = const_param_blocks(b);
    auto bo = const_param_blocks(other);
    REQUIRE(ba.size() == bb.size());
    bool any_diff = false;
    for (size_t i = 0; i < ba.size(); ++i) {
        REQUIRE(ba[i].values.size() == bb[i].values.size());
        for (size_t j = 0; j < ba[i].values.size(); ++j) {
            CHECK(ba[i].values[j] == bb[i].values[j]);
            if (ba[i].values[j] != bo[i].values[j]) any_diff = true;
        }
    }
    CHECK(any_diff);
}

TEST_CASE("initialization: forget-gate bias 1, other biases 0, weights bounded") {
    HanConfig c = tiny_config();
    HanModel m = build(c, 5);
    const size_t h = c.lstm_units;
    for (size_t j = 0; j < 4 * h; ++j) {
        double expected = (j >= h && j < 2 * h) ? 1.0 : 0.0;
        CHECK(m.segment_lstm.fwd.b[j] == expected);
        CHECK(m.sequence_lstm.fwd.b[j] == expected);
    }
    for (double b : m.conv.bias) CHECK(b == 0.0);
    for (double b : m.fc.bias) CHECK(b == 0.0);
    for (double b : m.output.bias) CHECK(b == 0.0);
    CHECK(m.segment_attention.b == 0.0);

    const double conv_limit = 1.0 / std::sqrt(static_cast<double>(c.conv_kernel));
    for (double w : m.conv.kernels) {
        CHECK(w >= -conv_limit);
        CHECK(w < conv_limit);
    }
    bool any_nonzero = std::any_of(m.fc.weights.begin(), m.fc.weights.end(),
                                   [](double w) { return w != 0.0; });
    CHECK(any_nonzero);
}

TEST_CASE("forward: probabilities and attention maps obey their laws") {
    HanConfig c;  // full-size defaults
    HanModel m = build(c, 3);
    std::vector<double> window = random_window(c, 99);
    ForwardResult f = forward(m, window);

    REQUIRE(f.probs.size() == c.num_classes);
    double psum = 0.0;
    for (double p : f.probs) {
        CHECK(p >= 0.0);
        psum += p;
    }
    CHECK(psum == doctest::Approx(1.0).epsilon(1e-12));

    const AttentionMap& att = f.attention;
    REQUIRE(att.segment_weights.size() == c.num_segments);
    REQUIRE(att.sequence_weights.size() == c.num_segments);
    REQUIRE(att.sequence_alignment.size() == c.num_segments);

    double seq_sum = 0.0;
    for (double w : att.sequence_weights) {
        CHECK(w >= 0.0);
        seq_sum += w;
    }
    CHECK(seq_sum == doctest::Approx(1.0).epsilon(1e-12));

    for (size_t s = 0; s < c.num_segments; ++s) {
        // sequence alignment tiles the window exactly
        CHECK(att.sequence_alignment[s].begin == s * c.segment_len);
        CHECK(att.sequence_alignment[s].end == (s + 1) * c.segment_len);

        REQUIRE(att.segment_weights[s].size() == c.conv_steps());
        double sum = 0.0;
        for (double w : att.segment_weights[s]) {
            CHECK(w >= 0.0);
            sum += w;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

        REQUIRE(att.segment_alignment[s].size() == c.conv_steps());
        for (size_t t = 0; t < c.conv_steps(); ++t) {
            const SampleRange r = att.segment_alignment[s][t];
            CHECK(r.begin == s * c.segment_len + t * c.conv_stride);
            CHECK(r.end == r.begin + c.conv_kernel);
            CHECK(r.end <= c.window_len());
        }
    }
}

TEST_CASE("three-level forward still produces normalized per-segment weights") {
    HanConfig c = tiny_config();
    c.num_segments = 4;
    c.segment_len = 12;
    c.hierarchy_levels = 3;
    c.level3_groups = 2;
    HanModel m = build(c, 17);
    std::vector<double> window = random_window(c, 5);
    ForwardResult f = forward(m, window);

    REQUIRE(f.attention.sequence_weights.size() == 4);
    double sum = 0.0;
    for (double w : f.attention.sequence_weights) {
        CHECK(w >= 0.0);
        sum += w;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    double psum = 0.0;
    for (double p : f.probs) psum += p;
    CHECK(psum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("eval forward ignores dropout and the rng") {
    HanConfig c = tiny_config();
    c.dropout_rate = 0.5;
    HanModel m = build(c, 2);
    std::vector<double> window = random_window(c, 8);
    ForwardResult a = forward(m, window);
    Rng r1(123), r2(999);
    ForwardResult b = forward(m, window, false, r1);
    ForwardResult d = forward(m, window, false, r2);
    for (size_t i = 0; i < a.logits.size(); ++i) {
        CHECK(a.logits[i] == b.logits[i]);
        CHECK(a.logits[i] == d.logits[i]);
    }
}

TEST_CASE("gradients match finite differences (two-level)") {
    HanConfig c = tiny_config();
    HanModel m = build(c, 21);
    std::vector<double> window = random_window(c, 31);
    check_model_gradients(m, window, 1, false);
}

TEST_CASE("gradients match finite differences (three-level)") {
    HanConfig c = tiny_config();
    c.num_segments = 4;
    c.segment_len = 12;
    c.hierarchy_levels = 3;
    c.level3_groups = 2;
    HanModel m = build(c, 22);
    std::vector<double> window = random_window(c, 32);
    check_model_gradients(m, window, 2, false);
}

TEST_CASE("gradients match finite differences (bidirectional)") {
    HanConfig c = tiny_config();
    c.bidirectional = true;
    HanModel m = build(c, 23);
    std::vector<double> window = random_window(c, 33);
    check_model_gradients(m, window, 0, false);
}

TEST_CASE("gradients match finite differences through a fixed dropout mask") {
    HanConfig c = tiny_config();
    c.dropout_rate = 0.25;
    HanModel m = build(c, 24);
    std::vector<double> window = random_window(c, 34);
    check_model_gradients(m, window, 1, true);
}

TEST_CASE("zeroed output weights cut gradient flow to everything upstream") {
    HanConfig c = tiny_config();
    HanModel m = build(c, 4);
    std::fill(m.output.weights.begin(), m.output.weights.end(), 0.0);
    std::fill(m.output.bias.begin(), m.output.bias.end(), 0.0);
    std::vector<double> window = random_window(c, 6);
    const size_t label = 2;
    Rng rng(1);
    BackwardResult res = backward(m, window, label, false, rng);

    // logits are all zero -> uniform probabilities
    for (double p : res.probs) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    // bias gradient is exactly probs - onehot
    for (size_t k = 0; k < c.num_classes; ++k) {
        double expected = res.probs[k] - (k == label ? 1.0 : 0.0);
        CHECK(res.grads.output.bias[k] == doctest::Approx(expected).epsilon(1e-12));
    }
    // nothing flows past the zero weight matrix
    for (double v : res.grads.conv.kernels) CHECK(v == 0.0);
    for (double v : res.grads.fc.weights) CHECK(v == 0.0);
    for (double v : res.grads.segment_attention.w) CHECK(v == 0.0);
}

TEST_CASE("add_scaled and zeros_like") {
    HanConfig c = tiny_config();
    HanModel m = build(c, 9);
    HanModel acc = zeros_like(m);
    for (const ConstParamBlock& b : const_param_blocks(acc))
        for (double v : b.values) CHECK(v == 0.0);

    add_scaled(acc, m, 2.0);
    auto got = const_param_blocks(acc);
    auto src = const_param_blocks(m);
    for (size_t i = 0; i < got.size(); ++i)
        for (size_t j = 0; j < got[i].values.size(); ++j)
            CHECK(got[i].values[j] == 2.0 * src[i].values[j]);
}

TEST_CASE("weights round-trip bit-exactly through save/load") {
    HanConfig c = tiny_config();
    c.hierarchy_levels = 3;
    c.num_segments = 4;
    c.segment_len = 12;
    c.level3_groups = 2;
    c.bidirectional = true;
    HanModel m = build(c, 77);
    auto path = std::filesystem::temp_directory_path() / "hanecg_roundtrip.hanw";
    save_weights(m, path.string());

    HanModel loaded = load_weights(path.string());
    CHECK(loaded.config.num_segments == c.num_segments);
    CHECK(loaded.config.hierarchy_levels == 3);
    CHECK(loaded.config.bidirectional == true);
    CHECK(loaded.config.dropout_rate == c.dropout_rate);

    auto a = const_param_blocks(m);
    auto b = const_param_blocks(loaded);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].values.size() == b[i].values.size());
        for (size_t j = 0; j < a[i].values.size(); ++j) CHECK(a[i].values[j] == b[i].values[j]);
    }

    // identical forward pass after the round trip
    std::vector<double> window = random_window(c, 55);
    ForwardResult fa = forward(m, window);
    ForwardResult fb = forward(loaded, window);
    for (size_t i = 0; i < fa.logits.size(); ++i) CHECK(fa.logits[i] == fb.logits[i]);

    std::filesystem::remove(path);
}

TEST_CASE("load with an expected config rejects mismatches") {
    HanConfig c = tiny_config();
    HanModel m = build(c, 1);
    auto path = std::filesystem::temp_directory_path() / "hanecg_expected.hanw";
    save_weights(m, path.string());

    CHECK_NOTHROW(load_weights(path.string(), c));
    HanConfig other = c;
    other.lstm_units = 8;
    CHECK_THROWS_AS(load_weights(path.string(), other), ConfigError);
    std::filesystem::remove(path);
}

TEST_CASE("corrupt weight files are rejected") {
    HanConfig c = tiny_config();
    HanModel m = build(c, 1);
    auto dir = std::filesystem::temp_directory_path();
    auto path = dir / "hanecg_corrupt.hanw";
    save_weights(m, path.string());

    std::ifstream in(path, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();

    SUBCASE("bad magic") {
        auto p = dir / "hanecg_bad_magic.hanw";
        std::vector<char> mod = bytes;
        mod[0] = 'X';
        std::ofstream(p, std::ios::binary).write(mod.data(), static_cast<long>(mod.size()));
        CHECK_THROWS_AS(load_weights(p.string()), ParseError);
        std::filesystem::remove(p);
    }
    SUBCASE("truncated") {
        auto p = dir / "hanecg_truncated.hanw";
        std::ofstream(p, std::ios::binary).write(bytes.data(), static_cast<long>(bytes.size() / 2));
        CHECK_THROWS_AS(load_weights(p.string()), ParseError);
        std::filesystem::remove(p);
    }
    SUBCASE("trailing bytes") {
        auto p = dir / "hanecg_trailing.hanw";
        std::vector<char> mod = bytes;
        mod.push_back('\0');
        std::ofstream(p, std::ios::binary).write(mod.data(), static_cast<long>(mod.size()));
        CHECK_THROWS_AS(load_weights(p.string()), ParseError);
        std::filesystem::remove(p);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_weights((dir / "hanecg_nope.hanw").string()), IoError);
    }
    std::filesystem::remove(path);
}

TEST_CASE("config validation rejects broken setups") {
    auto check_throws = [](HanConfig c) { CHECK_THROWS_AS(c.validate(), ConfigError); };
    HanConfig c = tiny_config();

    HanConfig bad = c;
    bad.hierarchy_levels = 4;
    check_throws(bad);

    bad = c;
    bad.segment_len = 3;  // shorter than the conv kernel
    check_throws(bad);

    bad = c;
    bad.dropout_rate = 1.0;
    check_throws(bad);

    bad = c;
    bad.num_classes = 1;
    check_throws(bad);

    bad = c;
    bad.hierarchy_levels = 3;
    bad.num_segments = 3;
    bad.level3_groups = 2;  // 3 % 2 != 0
    check_throws(bad);

    bad = c;
    bad.conv_stride = 0;
    check_throws(bad);
}

TEST_CASE("forward rejects a window of the wrong length") {
    HanConfig c = tiny_config();
    HanModel m = build(c, 1);
    std::vector<double> window(c.window_len() + 1, 0.0);
    CHECK_THROWS_AS(forward(m, window), ShapeError);
}

}  // TEST_SUITE
