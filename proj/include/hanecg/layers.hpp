#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hanecg/rng.hpp"
#include "hanecg/tensor.hpp"

namespace hanecg {

// ---------------------------------------------------------------------------
// 1-D convolution, valid (no padding) correlation.
// kernels laid out [out_channel][in_channel][tap], row-major.

struct Conv1dParams {
    size_t out_channels = 0;
    size_t in_channels = 0;
    size_t kernel_size = 0;
    size_t stride = 1;
    std::vector<double> kernels;  // out_channels * in_channels * kernel_size
    std::vector<double> bias;     // out_channels

    static Conv1dParams zeros(size_t out_ch, size_t in_ch, size_t ksize, size_t stride);
    size_t out_steps(size_t input_steps) const;
};

struct Conv1dGrad {
    Tensor2 input;                // same shape as forward input
    std::vector<double> kernels;  // congruent to params
    std::vector<double> bias;
};

// input [T x Cin] -> [T' x Cout], T' = (T - kernel)/stride + 1
Tensor2 conv1d_forward(const Tensor2& input, const Conv1dParams& p);
Conv1dGrad conv1d_backward(const Tensor2& input, const Conv1dParams& p, const Tensor2& grad_out);

// ---------------------------------------------------------------------------
// LSTM, unidirectional left-to-right.
// Gate order throughout: input, forget, candidate, output.

struct LstmParams {
    size_t input_dim = 0;
    size_t hidden = 0;
    std::vector<double> wx;  // 4 * hidden * input_dim, [gate][unit][in]
    std::vector<double> wh;  // 4 * hidden * hidden,    [gate][unit][unit_prev]
    std::vector<double> b;   // 4 * hidden

    static LstmParams zeros(size_t input_dim, size_t hidden);
};

struct LstmCache {
    Tensor2 x;  // input copy [T x D]
    Tensor2 gate_i, gate_f, gate_g, gate_o;
    Tensor2 c, tanh_c, h;  // all [T x H]
    std::vector<double> h0, c0;
};

struct LstmGrad {
    std::vector<double> wx, wh, b;
    Tensor2 input;
    std::vector<double> h0, c0;
};

// inputs [T x D] -> hidden states [T x H]; cache (when given) enables backward
Tensor2 lstm_forward(const Tensor2& inputs, const LstmParams& p,
                     std::span<const double> h0, std::span<const double> c0,
                     LstmCache* cache = nullptr);

// grad_h [T x H]: upstream gradient w.r.t. every hidden state
LstmGrad lstm_backward(const LstmParams& p, const LstmCache& cache, const Tensor2& grad_h);

// ---------------------------------------------------------------------------
// Attention pooling: v = tanh(X w + b), alpha = softmax(v), pooled = sum alpha_i X_i.

struct AttentionParams {
    size_t dim = 0;
    std::vector<double> w;  // dim
    double b = 0.0;

    static AttentionParams zeros(size_t dim);
};

struct AttentionCache {
    Tensor2 x;
    std::vector<double> scores;  // tanh(X w + b)
    std::vector<double> alpha;
};

struct AttentionResult {
    std::vector<double> weights;  // n, sums to 1
    std::vector<double> pooled;   // dim
};

struct AttentionGrad {
    Tensor2 input;
    std::vector<double> w;
    double b = 0.0;
};

AttentionResult attention_pool(const Tensor2& x, const AttentionParams& p,
                               AttentionCache* cache = nullptr);
AttentionGrad attention_backward(const AttentionParams& p, const AttentionCache& cache,
                                 std::span<const double> grad_pooled);

// ---------------------------------------------------------------------------
// Dense (affine) layer: y = W x + b.

struct DenseParams {
    size_t in = 0;
    size_t out = 0;
    std::vector<double> weights;  // out x in, row-major
    std::vector<double> bias;     // out

    static DenseParams zeros(size_t in, size_t out);
};

struct DenseGrad {
    std::vector<double> input, weights, bias;
};

std::vector<double> dense_forward(std::span<const double> x, const DenseParams& p);
DenseGrad dense_backward(const DenseParams& p, std::span<const double> x,
                         std::span<const double> grad_y);

// ---------------------------------------------------------------------------
// Inverted dropout. In train mode each coordinate is zeroed with probability
// `rate`, survivors scaled by 1/(1-rate); eval mode is the identity.
// mask (when given) receives the per-coordinate scale for backward.

std::vector<double> dropout(std::span<const double> x, double rate, bool train_mode, Rng& rng,
                            std::vector<double>* mask = nullptr);

// ---------------------------------------------------------------------------
// Softmax cross-entropy head.

struct SoftmaxCeResult {
    double loss = 0.0;
    std::vector<double> probs;
    std::vector<double> grad_logits;  // probs - onehot(label)
};

SoftmaxCeResult softmax_cross_entropy(std::span<const double> logits, size_t label);

// Stable softmax with max subtraction.
std::vector<double> softmax(std::span<const double> v);

}  // namespace hanecg
