#include "hanecg/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hanecg/errors.hpp"

namespace hanecg {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// conv1d

Conv1dParams Conv1dParams::zeros(size_t out_ch, size_t in_ch, size_t ksize, size_t stride) {
    Conv1dParams p;
    p.out_channels = out_ch;
    p.in_channels = in_ch;
    p.kernel_size = ksize;
    p.stride = stride;
    p.kernels.assign(out_ch * in_ch * ksize, 0.0);
    p.bias.assign(out_ch, 0.0);
    return p;
}

size_t Conv1dParams::out_steps(size_t input_steps) const {
    return (input_steps - kernel_size) / stride + 1;
}

Tensor2 conv1d_forward(const Tensor2& input, const Conv1dParams& p) {
    if (p.kernel_size < 1 || p.stride < 1)
        throw ConfigError("conv1d: kernel_size and stride must be >= 1");
    if (input.cols != p.in_channels)
        throw ShapeError("conv1d: input has " + std::to_string(input.cols) +
                         " channels, params expect " + std::to_string(p.in_channels));
    if (input.rows < p.kernel_size)
        throw ShapeError("conv1d: input length " + std::to_string(input.rows) +
                         " shorter than kernel " + std::to_string(p.kernel_size));
    if (!input.all_finite()) throw NumericError("conv1d: non-finite input");

    const size_t t_out = p.out_steps(input.rows);
    const size_t cin = p.in_channels;
    const size_t k = p.kernel_size;
    Tensor2 out(t_out, p.out_channels);
    for (size_t t = 0; t < t_out; ++t) {
        const size_t base = t * p.stride;
        for (size_t o = 0; o < p.out_channels; ++o) {
            double acc = p.bias[o];
            const double* ker = p.kernels.data() + (o * cin) * k;
            for (size_t c = 0; c < cin; ++c) {
                const double* kc = ker + c * k;
                for (size_t j = 0; j < k; ++j) acc += kc[j] * input.at(base + j, c);
            }
            out.at(t, o) = acc;
        }
    }
    return out;
}

Conv1dGrad conv1d_backward(const Tensor2& input, const Conv1dParams& p, const Tensor2& grad_out) {
    const size_t t_out = p.out_steps(input.rows);
    if (grad_out.rows != t_out || grad_out.cols != p.out_channels)
        throw ShapeError("conv1d: grad_out shape mismatch");

    Conv1dGrad g;
    g.input = Tensor2(input.rows, input.cols);
    g.kernels.assign(p.kernels.size(), 0.0);
    g.bias.assign(p.bias.size(), 0.0);
    const size_t cin = p.in_channels;
    const size_t k = p.kernel_size;
    for (size_t t = 0; t < t_out; ++t) {
        const size_t base = t * p.stride;
        for (size_t o = 0; o < p.out_channels; ++o) {
            const double go = grad_out.at(t, o);
            if (go == 0.0) continue;
            g.bias[o] += go;
            const double* ker = p.kernels.data() + (o * cin) * k;
            double* gker = g.kernels.data() + (o * cin) * k;
            for (size_t c = 0; c < cin; ++c) {
                for (size_t j = 0; j < k; ++j) {
                    gker[c * k + j] += go * input.at(base + j, c);
                    g.input.at(base + j, c) += go * ker[c * k + j];
                }
            }
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// LSTM

LstmParams LstmParams::zeros(size_t input_dim, size_t hidden) {
    LstmParams p;
    p.input_dim = input_dim;
    p.hidden = hidden;
    p.wx.assign(4 * hidden * input_dim, 0.0);
    p.wh.assign(4 * hidden * hidden, 0.0);
    p.b.assign(4 * hidden, 0.0);
    return p;
}

Tensor2 lstm_forward(const Tensor2& inputs, const LstmParams& p,
                     std::span<const double> h0, std::span<const double> c0, LstmCache* cache) {
    const size_t T = inputs.rows;
    const size_t D = p.input_dim;
    const size_t H = p.hidden;
    if (inputs.cols != D)
        throw ShapeError("lstm: input dim " + std::to_string(inputs.cols) + " != params " +
                         std::to_string(D));
    if (h0.size() != H || c0.size() != H) throw ShapeError("lstm: h0/c0 size != hidden");

    Tensor2 h(T, H), c(T, H);
    Tensor2 gi(T, H), gf(T, H), gg(T, H), go(T, H), tc(T, H);
    std::vector<double> hprev(h0.begin(), h0.end());
    std::vector<double> cprev(c0.begin(), c0.end());

    for (size_t t = 0; t < T; ++t) {
        std::span<const double> xt = inputs.row(t);
        for (size_t gate = 0; gate < 4; ++gate) {
            for (size_t u = 0; u < H; ++u) {
                const double* wxr = p.wx.data() + (gate * H + u) * D;
                const double* whr = p.wh.data() + (gate * H + u) * H;
                double pre = p.b[gate * H + u];
                pre += dot({wxr, D}, xt);
                pre += dot({whr, H}, {hprev.data(), H});
                switch (gate) {
                    case 0: gi.at(t, u) = sigmoid(pre); break;
                    case 1: gf.at(t, u) = sigmoid(pre); break;
                    case 2: gg.at(t, u) = std::tanh(pre); break;
                    case 3: go.at(t, u) = sigmoid(pre); break;
                }
            }
        }
        for (size_t u = 0; u < H; ++u) {
            const double cv = gf.at(t, u) * cprev[u] + gi.at(t, u) * gg.at(t, u);
            c.at(t, u) = cv;
            tc.at(t, u) = std::tanh(cv);
            h.at(t, u) = go.at(t, u) * tc.at(t, u);
        }
        for (size_t u = 0; u < H; ++u) {
            hprev[u] = h.at(t, u);
            cprev[u] = c.at(t, u);
        }
    }

    if (cache) {
        cache->x = inputs;
        cache->gate_i = std::move(gi);
        cache->gate_f = std::move(gf);
        cache->gate_g = std::move(gg);
        cache->gate_o = std::move(go);
        cache->c = c;
        cache->tanh_c = std::move(tc);
        cache->h = h;
        cache->h0.assign(h0.begin(), h0.end());
        cache->c0.assign(c0.begin(), c0.end());
    }
    return h;
}

LstmGrad lstm_backward(const LstmParams& p, const LstmCache& cache, const Tensor2& grad_h) {
    const size_t T = cache.x.rows;
    const size_t D = p.input_dim;
    const size_t H = p.hidden;
    if (grad_h.rows != T || grad_h.cols != H) throw ShapeError("lstm: grad_h shape mismatch");

    LstmGrad g;
    g.wx.assign(p.wx.size(), 0.0);
    g.wh.assign(p.wh.size(), 0.0);
    g.b.assign(p.b.size(), 0.0);
    g.input = Tensor2(T, D);
    g.h0.assign(H, 0.0);
    g.c0.assign(H, 0.0);

    std::vector<double> dh_carry(H, 0.0), dc_carry(H, 0.0);
    std::vector<double> dpre(4 * H);

    for (size_t tt = T; tt-- > 0;) {
        for (size_t u = 0; u < H; ++u) {
            const double dh = grad_h.at(tt, u) + dh_carry[u];
            const double i = cache.gate_i.at(tt, u);
            const double f = cache.gate_f.at(tt, u);
            const double gg = cache.gate_g.at(tt, u);
            const double o = cache.gate_o.at(tt, u);
            const double tc = cache.tanh_c.at(tt, u);
            const double cprev = tt > 0 ? cache.c.at(tt - 1, u) : cache.c0[u];

            const double do_ = dh * tc;
            const double dc = dc_carry[u] + dh * o * (1.0 - tc * tc);
            dpre[0 * H + u] = dc * gg * i * (1.0 - i);
            dpre[1 * H + u] = dc * cprev * f * (1.0 - f);
            dpre[2 * H + u] = dc * i * (1.0 - gg * gg);
            dpre[3 * H + u] = do_ * o * (1.0 - o);
            dc_carry[u] = dc * f;
        }
        std::span<const double> xt = cache.x.row(tt);
        std::span<const double> hprev =
            tt > 0 ? cache.h.row(tt - 1) : std::span<const double>(cache.h0);
        std::fill(dh_carry.begin(), dh_carry.end(), 0.0);
        std::span<double> dxt = g.input.row(tt);
        for (size_t gate = 0; gate < 4; ++gate) {
            for (size_t u = 0; u < H; ++u) {
                const double d = dpre[gate * H + u];
                if (d == 0.0) continue;
                g.b[gate * H + u] += d;
                double* gwx = g.wx.data() + (gate * H + u) * D;
                const double* wxr = p.wx.data() + (gate * H + u) * D;
                for (size_t j = 0; j < D; ++j) {
                    gwx[j] += d * xt[j];
                    dxt[j] += d * wxr[j];
                }
                double* gwh = g.wh.data() + (gate * H + u) * H;
                const double* whr = p.wh.data() + (gate * H + u) * H;
                for (size_t j = 0; j < H; ++j) {
                    gwh[j] += d * hprev[j];
                    dh_carry[j] += d * whr[j];
                }
            }
        }
    }
    g.h0 = dh_carry;
    g.c0 = dc_carry;
    return g;
}

// ---------------------------------------------------------------------------
// attention pooling

AttentionParams AttentionParams::zeros(size_t dim) {
    AttentionParams p;
    p.dim = dim;
    p.w.assign(dim, 0.0);
    p.b = 0.0;
    return p;
}

std::vector<double> softmax(std::span<const double> v) {
    double mx = v[0];
    for (double x : v) mx = std::max(mx, x);
    std::vector<double> e(v.size());
    double sum = 0.0;
    for (size_t i = 0; i < v.size(); ++i) {
        e[i] = std::exp(v[i] - mx);
        sum += e[i];
    }
    for (double& x : e) x /= sum;
    return e;
}

AttentionResult attention_pool(const Tensor2& x, const AttentionParams& p, AttentionCache* cache) {
    if (x.rows == 0) throw ShapeError("attention_pool: empty input");
    if (x.cols != p.dim)
        throw ShapeError("attention_pool: input dim " + std::to_string(x.cols) + " != params " +
                         std::to_string(p.dim));

    const size_t n = x.rows;
    const size_t d = x.cols;
    std::vector<double> scores(n);
    for (size_t i = 0; i < n; ++i) scores[i] = std::tanh(dot(x.row(i), p.w) + p.b);

    AttentionResult res;
    res.weights = softmax(scores);
    res.pooled.assign(d, 0.0);
    for (size_t i = 0; i < n; ++i) {
        const double a = res.weights[i];
        std::span<const double> xi = x.row(i);
        for (size_t j = 0; j < d; ++j) res.pooled[j] += a * xi[j];
    }

    if (cache) {
        cache->x = x;
        cache->scores = std::move(scores);
        cache->alpha = res.weights;
    }
    return res;
}

AttentionGrad attention_backward(const AttentionParams& p, const AttentionCache& cache,
                                 std::span<const double> grad_pooled) {
    const size_t n = cache.x.rows;
    const size_t d = cache.x.cols;
    if (grad_pooled.size() != d) throw ShapeError("attention_pool: grad_pooled size mismatch");

    AttentionGrad g;
    g.input = Tensor2(n, d);
    g.w.assign(d, 0.0);
    g.b = 0.0;

    // d(pooled)/d(alpha_i) and d(pooled)/dX via the weighted sum
    std::vector<double> dalpha(n);
    for (size_t i = 0; i < n; ++i) {
        dalpha[i] = dot(grad_pooled, cache.x.row(i));
        std::span<double> gxi = g.input.row(i);
        const double a = cache.alpha[i];
        for (size_t j = 0; j < d; ++j) gxi[j] += a * grad_pooled[j];
    }
    // softmax backward
    double inner = 0.0;
    for (size_t i = 0; i < n; ++i) inner += cache.alpha[i] * dalpha[i];
    for (size_t i = 0; i < n; ++i) {
        const double dv = cache.alpha[i] * (dalpha[i] - inner);
        const double s = cache.scores[i];
        const double dpre = dv * (1.0 - s * s);  // through tanh
        g.b += dpre;
        std::span<const double> xi = cache.x.row(i);
        std::span<double> gxi = g.input.row(i);
        for (size_t j = 0; j < d; ++j) {
            g.w[j] += dpre * xi[j];
            gxi[j] += dpre * p.w[j];
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// dense

DenseParams DenseParams::zeros(size_t in, size_t out) {
    DenseParams p;
    p.in = in;
    p.out = out;
    p.weights.assign(out * in, 0.0);
    p.bias.assign(out, 0.0);
    return p;
}

std::vector<double> dense_forward(std::span<const double> x, const DenseParams& p) {
    if (x.size() != p.in)
        throw ShapeError("dense: input size " + std::to_string(x.size()) + " != params " +
                         std::to_string(p.in));
    std::vector<double> y(p.out);
    for (size_t o = 0; o < p.out; ++o)
        y[o] = p.bias[o] + dot({p.weights.data() + o * p.in, p.in}, x);
    return y;
}

DenseGrad dense_backward(const DenseParams& p, std::span<const double> x,
                         std::span<const double> grad_y) {
    if (x.size() != p.in || grad_y.size() != p.out)
        throw ShapeError("dense: backward shape mismatch");
    DenseGrad g;
    g.input.assign(p.in, 0.0);
    g.weights.assign(p.weights.size(), 0.0);
    g.bias.assign(grad_y.begin(), grad_y.end());
    for (size_t o = 0; o < p.out; ++o) {
        const double gy = grad_y[o];
        const double* wr = p.weights.data() + o * p.in;
        double* gw = g.weights.data() + o * p.in;
        for (size_t j = 0; j < p.in; ++j) {
            gw[j] += gy * x[j];
            g.input[j] += gy * wr[j];
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// dropout

std::vector<double> dropout(std::span<const double> x, double rate, bool train_mode, Rng& rng,
                            std::vector<double>* mask) {
    if (rate < 0.0 || rate >= 1.0)
        throw ConfigError("dropout: rate must be in [0, 1), got " + std::to_string(rate));
    std::vector<double> y(x.begin(), x.end());
    if (mask) mask->assign(x.size(), 1.0);
    if (!train_mode || rate == 0.0) return y;

    const double scale = 1.0 / (1.0 - rate);
    for (size_t i = 0; i < y.size(); ++i) {
        const double m = rng.uniform() < rate ? 0.0 : scale;
        y[i] *= m;
        if (mask) (*mask)[i] = m;
    }
    return y;
}

// ---------------------------------------------------------------------------
// softmax cross-entropy

SoftmaxCeResult softmax_cross_entropy(std::span<const double> logits, size_t label) {
    if (label >= logits.size())
        throw ShapeError("softmax_cross_entropy: label " + std::to_string(label) +
                         " out of range for " + std::to_string(logits.size()) + " classes");
    SoftmaxCeResult r;
    r.probs = softmax(logits);
    r.loss = -std::log(std::max(r.probs[label], 1e-300));
    r.grad_logits = r.probs;
    r.grad_logits[label] -= 1.0;
    return r;
}

}  // namespace hanecg
