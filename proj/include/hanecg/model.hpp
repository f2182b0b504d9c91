#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hanecg/adam.hpp"
#include "hanecg/layers.hpp"
#include "hanecg/rng.hpp"

namespace hanecg {

struct HanConfig {
    size_t num_segments = 10;
    size_t segment_len = 30;
    size_t conv_filters = 16;
    size_t conv_kernel = 21;
    size_t conv_stride = 1;
    size_t lstm_units = 64;
    size_t fc_units = 128;
    size_t num_classes = 5;
    double dropout_rate = 0.2;
    size_t hierarchy_levels = 2;  // 2 or 3
    size_t level3_groups = 2;     // sub-sequences the segment summaries form at 3 levels
    bool bidirectional = false;

    void validate() const;
    size_t window_len() const { return num_segments * segment_len; }
    // post-conv steps per segment under valid padding
    size_t conv_steps() const { return (segment_len - conv_kernel) / conv_stride + 1; }
};

// One recurrent encoder; when bidirectional, a second LSTM runs over the
// reversed sequence and its states are concatenated per step.
struct LstmEncoder {
    LstmParams fwd;
    LstmParams bwd;
    bool bidirectional = false;

    size_t out_dim() const { return fwd.hidden * (bidirectional ? 2 : 1); }
};

struct HanModel {
    HanConfig config;
    Conv1dParams conv;
    LstmEncoder segment_lstm;
    AttentionParams segment_attention;
    LstmEncoder sequence_lstm;
    AttentionParams sequence_attention;
    LstmEncoder level3_lstm;           // populated only at hierarchy_levels == 3
    AttentionParams level3_attention;  //
    DenseParams fc;
    DenseParams output;
};

// Half-open raw-sample range covered by one attention weight.
struct SampleRange {
    size_t begin = 0;
    size_t end = 0;
};

struct AttentionMap {
    // weights over post-conv steps, one vector per segment; each sums to 1
    std::vector<std::vector<double>> segment_weights;
    std::vector<std::vector<SampleRange>> segment_alignment;  // conv receptive fields
    // one weight per segment, summing to 1; with a third level these are
    // the per-group weights scaled by their group's top-level weight
    std::vector<double> sequence_weights;
    std::vector<SampleRange> sequence_alignment;  // tiles [0, window_len) exactly
};

struct ForwardResult {
    std::vector<double> logits;
    std::vector<double> probs;
    AttentionMap attention;
};

struct BackwardResult {
    double loss = 0.0;
    std::vector<double> probs;
    HanModel grads;  // same shapes as the model, gradient values
};

// Scaled-uniform fan-in init, LSTM forget-gate biases at 1; deterministic
// for a fixed seed.
HanModel build(const HanConfig& config, uint64_t seed);

// Same shapes as m, all parameters zero — gradient/accumulator container.
HanModel zeros_like(const HanModel& m);

// Every trainable parameter array in fixed declaration order (the order of
// the HanModel fields; fwd before bwd inside an encoder). Serialization,
// Adam state, and gradient reduction all rely on this order.
std::vector<ParamBlock> param_blocks(HanModel& m);
std::vector<ConstParamBlock> const_param_blocks(const HanModel& m);

// acc += scale * g, blockwise.
void add_scaled(HanModel& acc, const HanModel& g, double scale);

size_t param_count(const HanConfig& config);  // closed form from shapes
size_t param_count(const HanModel& m);        // sum over actual blocks

// window.size() must equal config.window_len(). rng drives dropout only.
ForwardResult forward(const HanModel& m, std::span<const double> window, bool train_mode,
                      Rng& rng);
ForwardResult forward(const HanModel& m, std::span<const double> window);  // eval mode

BackwardResult backward(const HanModel& m, std::span<const double> window, size_t label,
                        bool train_mode, Rng& rng);

// Binary format: "HANW", u32 version, config fields, then every parameter
// block little-endian f64 in declaration order.
void save_weights(const HanModel& m, const std::string& path);
HanModel load_weights(const std::string& path);
// Throws ConfigError when the stored config differs from `expected`.
HanModel load_weights(const std::string& path, const HanConfig& expected);

}  // namespace hanecg
