#include "hanecg/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "hanecg/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "weight serialization assumes a little-endian host");

namespace hanecg {

namespace {

constexpr uint32_t kWeightsVersion = 1;

void vec_add(std::vector<double>& a, const std::vector<double>& b) {
    for (size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

Tensor2 reverse_rows(const Tensor2& x) {
    Tensor2 out(x.rows, x.cols);
    for (size_t r = 0; r < x.rows; ++r)
        for (size_t c = 0; c < x.cols; ++c) out.at(r, c) = x.at(x.rows - 1 - r, c);
    return out;
}

struct EncoderCache {
    LstmCache fwd, bwd;
};

Tensor2 encoder_forward(const LstmEncoder& enc, const Tensor2& x, EncoderCache* cache) {
    const size_t h = enc.fwd.hidden;
    const std::vector<double> zero(h, 0.0);
    Tensor2 hf = lstm_forward(x, enc.fwd, zero, zero, cache ? &cache->fwd : nullptr);
    if (!enc.bidirectional) return hf;

    Tensor2 hb = lstm_forward(reverse_rows(x), enc.bwd, zero, zero, cache ? &cache->bwd : nullptr);
    Tensor2 out(x.rows, 2 * h);
    for (size_t t = 0; t < x.rows; ++t) {
        for (size_t j = 0; j < h; ++j) {
            out.at(t, j) = hf.at(t, j);
            out.at(t, h + j) = hb.at(x.rows - 1 - t, j);
        }
    }
    return out;
}

struct EncoderGrad {
    LstmGrad fwd, bwd;
    Tensor2 input;
    bool has_bwd = false;
};

EncoderGrad encoder_backward(const LstmEncoder& enc, const EncoderCache& cache,
                             const Tensor2& grad_out) {
    const size_t h = enc.fwd.hidden;
    const size_t t_len = grad_out.rows;
    EncoderGrad out;
    if (!enc.bidirectional) {
        out.fwd = lstm_backward(enc.fwd, cache.fwd, grad_out);
        out.input = out.fwd.input;
        return out;
    }
    Tensor2 gf(t_len, h), gb(t_len, h);
    for (size_t t = 0; t < t_len; ++t)
        for (size_t j = 0; j < h; ++j) {
            gf.at(t, j) = grad_out.at(t, j);
            // the backward LSTM saw the sequence reversed
            gb.at(t, j) = grad_out.at(t_len - 1 - t, h + j);
        }
    out.fwd = lstm_backward(enc.fwd, cache.fwd, gf);
    out.bwd = lstm_backward(enc.bwd, cache.bwd, gb);
    out.has_bwd = true;
    out.input = out.fwd.input;
    for (size_t t = 0; t < t_len; ++t)
        for (size_t c = 0; c < out.input.cols; ++c)
            out.input.at(t, c) += out.bwd.input.at(t_len - 1 - t, c);
    return out;
}

void accumulate_encoder(LstmEncoder& acc, const EncoderGrad& g) {
    vec_add(acc.fwd.wx, g.fwd.wx);
    vec_add(acc.fwd.wh, g.fwd.wh);
    vec_add(acc.fwd.b, g.fwd.b);
    if (g.has_bwd) {
        vec_add(acc.bwd.wx, g.bwd.wx);
        vec_add(acc.bwd.wh, g.bwd.wh);
        vec_add(acc.bwd.b, g.bwd.b);
    }
}

// allocates every parameter array for the config, all zeros
HanModel make_empty(const HanConfig& config) {
    config.validate();
    HanModel m;
    m.config = config;
    const size_t dir_in = config.conv_filters;
    m.conv = Conv1dParams::zeros(config.conv_filters, 1, config.conv_kernel, config.conv_stride);

    auto make_encoder = [&](size_t input_dim) {
        LstmEncoder enc;
        enc.bidirectional = config.bidirectional;
        enc.fwd = LstmParams::zeros(input_dim, config.lstm_units);
        if (config.bidirectional) enc.bwd = LstmParams::zeros(input_dim, config.lstm_units);
        return enc;
    };
    m.segment_lstm = make_encoder(dir_in);
    const size_t enc_dim = m.segment_lstm.out_dim();
    m.segment_attention = AttentionParams::zeros(enc_dim);
    m.sequence_lstm = make_encoder(enc_dim);
    m.sequence_attention = AttentionParams::zeros(m.sequence_lstm.out_dim());
    if (config.hierarchy_levels == 3) {
        m.level3_lstm = make_encoder(m.sequence_lstm.out_dim());
        m.level3_attention = AttentionParams::zeros(m.level3_lstm.out_dim());
    }
    const size_t top_dim = config.hierarchy_levels == 3 ? m.level3_lstm.out_dim()
                                                        : m.sequence_lstm.out_dim();
    m.fc = DenseParams::zeros(top_dim, config.fc_units);
    m.output = DenseParams::zeros(config.fc_units, config.num_classes);
    return m;
}

void init_uniform(std::vector<double>& v, size_t fan_in, Rng& rng) {
    const double limit = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& x : v) x = rng.uniform(-limit, limit);
}

void init_lstm(LstmParams& p, Rng& rng) {
    init_uniform(p.wx, p.input_dim, rng);
    init_uniform(p.wh, p.hidden, rng);
    // forget-gate biases start at 1 so early training does not flush state
    std::fill(p.b.begin(), p.b.end(), 0.0);
    std::fill(p.b.begin() + static_cast<long>(p.hidden),
              p.b.begin() + static_cast<long>(2 * p.hidden), 1.0);
}

void init_encoder(LstmEncoder& enc, Rng& rng) {
    init_lstm(enc.fwd, rng);
    if (enc.bidirectional) init_lstm(enc.bwd, rng);
}

template <typename Block, typename ModelT>
std::vector<Block> enumerate_blocks(ModelT& m) {
    std::vector<Block> out;
    auto push = [&](const std::string& name, auto& vec) {
        out.push_back({name, {vec.data(), vec.size()}});
    };
    auto push_scalar = [&](const std::string& name, auto& scalar) {
        out.push_back({name, {&scalar, 1}});
    };
    auto push_encoder = [&](const std::string& prefix, auto& enc) {
        push(prefix + ".fwd.wx", enc.fwd.wx);
        push(prefix + ".fwd.wh", enc.fwd.wh);
        push(prefix + ".fwd.b", enc.fwd.b);
        if (enc.bidirectional) {
            push(prefix + ".bwd.wx", enc.bwd.wx);
            push(prefix + ".bwd.wh", enc.bwd.wh);
            push(prefix + ".bwd.b", enc.bwd.b);
        }
    };
    push("conv.kernels", m.conv.kernels);
    push("conv.bias", m.conv.bias);
    push_encoder("segment_lstm", m.segment_lstm);
    push("segment_attention.w", m.segment_attention.w);
    push_scalar("segment_attention.b", m.segment_attention.b);
    push_encoder("sequence_lstm", m.sequence_lstm);
    push("sequence_attention.w", m.sequence_attention.w);
    push_scalar("sequence_attention.b", m.sequence_attention.b);
    if (m.config.hierarchy_levels == 3) {
        push_encoder("level3_lstm", m.level3_lstm);
        push("level3_attention.w", m.level3_attention.w);
        push_scalar("level3_attention.b", m.level3_attention.b);
    }
    push("fc.weights", m.fc.weights);
    push("fc.bias", m.fc.bias);
    push("output.weights", m.output.weights);
    push("output.bias", m.output.bias);
    return out;
}

}  // namespace

void HanConfig::validate() const {
    if (num_segments < 1 || segment_len < 1)
        throw ConfigError("HanConfig: num_segments and segment_len must be positive");
    if (conv_filters < 1 || conv_kernel < 1 || conv_stride < 1)
        throw ConfigError("HanConfig: conv shape fields must be positive");
    if (segment_len < conv_kernel)
        throw ConfigError("HanConfig: segment_len " + std::to_string(segment_len) +
                          " shorter than conv_kernel " + std::to_string(conv_kernel));
    if (lstm_units < 1 || fc_units < 1) throw ConfigError("HanConfig: layer widths must be positive");
    if (num_classes < 2) throw ConfigError("HanConfig: need at least 2 classes");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw ConfigError("HanConfig: dropout_rate must be in [0, 1)");
    if (hierarchy_levels != 2 && hierarchy_levels != 3)
        throw ConfigError("HanConfig: hierarchy_levels must be 2 or 3");
    if (hierarchy_levels == 3) {
        if (level3_groups < 1 || level3_groups > num_segments)
            throw ConfigError("HanConfig: level3_groups out of range");
        if (num_segments % level3_groups != 0)
            throw ConfigError("HanConfig: num_segments " + std::to_string(num_segments) +
                              " not divisible by level3_groups " + std::to_string(level3_groups));
    }
}

HanModel build(const HanConfig& config, uint64_t seed) {
    HanModel m = make_empty(config);
    Rng rng(seed);
    init_uniform(m.conv.kernels, m.conv.in_channels * m.conv.kernel_size, rng);
    init_encoder(m.segment_lstm, rng);
    init_uniform(m.segment_attention.w, m.segment_attention.dim, rng);
    init_encoder(m.sequence_lstm, rng);
    init_uniform(m.sequence_attention.w, m.sequence_attention.dim, rng);
    if (config.hierarchy_levels == 3) {
        init_encoder(m.level3_lstm, rng);
        init_uniform(m.level3_attention.w, m.level3_attention.dim, rng);
    }
    init_uniform(m.fc.weights, m.fc.in, rng);
    init_uniform(m.output.weights, m.output.in, rng);
    return m;
}

HanModel zeros_like(const HanModel& m) { return make_empty(m.config); }

std::vector<ParamBlock> param_blocks(HanModel& m) { return enumerate_blocks<ParamBlock>(m); }

std::vector<ConstParamBlock> const_param_blocks(const HanModel& m) {
    return enumerate_blocks<ConstParamBlock>(m);
}

void add_scaled(HanModel& acc, const HanModel& g, double scale) {
    auto dst = param_blocks(acc);
    auto src = const_param_blocks(g);
    if (dst.size() != src.size()) throw ShapeError("add_scaled: block count mismatch");
    for (size_t b = 0; b < dst.size(); ++b) {
        if (dst[b].values.size() != src[b].values.size())
            throw ShapeError("add_scaled: block '" + dst[b].name + "' shape mismatch");
        for (size_t i = 0; i < dst[b].values.size(); ++i)
            dst[b].values[i] += scale * src[b].values[i];
    }
}

size_t param_count(const HanConfig& config) {
    config.validate();
    const size_t dir = config.bidirectional ? 2 : 1;
    const size_t h = config.lstm_units;
    const size_t enc_dim = h * dir;
    auto lstm = [&](size_t input_dim) { return dir * (4 * h * (input_dim + h) + 4 * h); };
    size_t total = 0;
    total += config.conv_filters * config.conv_kernel + config.conv_filters;
    total += lstm(config.conv_filters);
    total += enc_dim + 1;  // segment attention
    total += lstm(enc_dim);
    total += enc_dim + 1;  // sequence attention
    if (config.hierarchy_levels == 3) {
        total += lstm(enc_dim);
        total += enc_dim + 1;
    }
    total += config.fc_units * enc_dim + config.fc_units;
    total += config.num_classes * config.fc_units + config.num_classes;
    return total;
}

size_t param_count(const HanModel& m) {
    size_t total = 0;
    for (const ConstParamBlock& b : const_param_blocks(m)) total += b.values.size();
    return total;
}

namespace {

struct SegmentCache {
    Tensor2 conv_in, conv_out, enc_out;
    EncoderCache enc;
    AttentionCache att;
};

struct FullCache {
    std::vector<SegmentCache> segments;
    Tensor2 pooled;  // [num_segments x enc_dim]
    // 2-level path: one entry; 3-level path: one per group
    std::vector<Tensor2> seq_enc_out;
    std::vector<EncoderCache> seq_enc;
    std::vector<AttentionCache> seq_att;
    // 3-level extras
    Tensor2 group_pooled;  // [groups x enc_dim]
    Tensor2 l3_enc_out;
    EncoderCache l3_enc;
    AttentionCache l3_att;
    std::vector<double> top_pooled;
    std::vector<double> dropout_mask;
    std::vector<double> dropped;
    std::vector<double> fc_act;  // tanh(fc pre-activation)
    std::vector<double> logits;
};

ForwardResult run_forward(const HanModel& m, std::span<const double> window, bool train_mode,
                          Rng& rng, FullCache* cache) {
    const HanConfig& cfg = m.config;
    if (window.size() != cfg.window_len())
        throw ShapeError("forward: window length " + std::to_string(window.size()) +
                         " != " + std::to_string(cfg.window_len()));

    const size_t s_count = cfg.num_segments;
    const size_t t_conv = cfg.conv_steps();
    const size_t enc_dim = m.segment_lstm.out_dim();

    ForwardResult res;
    res.attention.segment_weights.resize(s_count);
    res.attention.segment_alignment.resize(s_count);
    res.attention.sequence_weights.assign(s_count, 0.0);
    res.attention.sequence_alignment.resize(s_count);

    if (cache) cache->segments.resize(s_count);
    Tensor2 pooled(s_count, enc_dim);

    for (size_t s = 0; s < s_count; ++s) {
        Tensor2 xs(cfg.segment_len, 1);
        for (size_t t = 0; t < cfg.segment_len; ++t) xs.at(t, 0) = window[s * cfg.segment_len + t];

        SegmentCache local;
        SegmentCache* sc = cache ? &cache->segments[s] : &local;
        sc->conv_in = xs;
        sc->conv_out = conv1d_forward(xs, m.conv);
        sc->enc_out = encoder_forward(m.segment_lstm, sc->conv_out, cache ? &sc->enc : nullptr);
        AttentionResult att = attention_pool(sc->enc_out, m.segment_attention,
                                             cache ? &sc->att : nullptr);
        for (size_t j = 0; j < enc_dim; ++j) pooled.at(s, j) = att.pooled[j];

        res.attention.segment_weights[s] = att.weights;
        std::vector<SampleRange>& ranges = res.attention.segment_alignment[s];
        ranges.resize(t_conv);
        for (size_t t = 0; t < t_conv; ++t) {
            const size_t begin = s * cfg.segment_len + t * cfg.conv_stride;
            ranges[t] = {begin, begin + cfg.conv_kernel};
        }
        res.attention.sequence_alignment[s] = {s * cfg.segment_len, (s + 1) * cfg.segment_len};
    }
    if (cache) cache->pooled = pooled;

    std::vector<double> top_pooled;
    if (cfg.hierarchy_levels == 2) {
        EncoderCache local_enc;
        AttentionCache local_att;
        if (cache) {
            cache->seq_enc.resize(1);
            cache->seq_att.resize(1);
            cache->seq_enc_out.resize(1);
        }
        Tensor2 seq_out = encoder_forward(m.sequence_lstm, pooled,
                                          cache ? &cache->seq_enc[0] : nullptr);
        if (cache) cache->seq_enc_out[0] = seq_out;
        AttentionResult att = attention_pool(seq_out, m.sequence_attention,
                                             cache ? &cache->seq_att[0] : nullptr);
        res.attention.sequence_weights = att.weights;
        top_pooled = att.pooled;
    } else {
        const size_t groups = cfg.level3_groups;
        const size_t group_len = s_count / groups;
        const size_t seq_dim = m.sequence_lstm.out_dim();
        Tensor2 group_pooled(groups, seq_dim);
        if (cache) {
            cache->seq_enc.resize(groups);
            cache->seq_att.resize(groups);
            cache->seq_enc_out.resize(groups);
        }
        std::vector<std::vector<double>> group_weights(groups);
        for (size_t g = 0; g < groups; ++g) {
            Tensor2 sub(group_len, enc_dim);
            for (size_t i = 0; i < group_len; ++i)
                for (size_t j = 0; j < enc_dim; ++j)
                    sub.at(i, j) = pooled.at(g * group_len + i, j);
            Tensor2 seq_out = encoder_forward(m.sequence_lstm, sub,
                                              cache ? &cache->seq_enc[g] : nullptr);
            if (cache) cache->seq_enc_out[g] = seq_out;
            AttentionResult att = attention_pool(seq_out, m.sequence_attention,
                                                 cache ? &cache->seq_att[g] : nullptr);
            group_weights[g] = att.weights;
            for (size_t j = 0; j < seq_dim; ++j) group_pooled.at(g, j) = att.pooled[j];
        }
        if (cache) cache->group_pooled = group_pooled;
        Tensor2 l3_out = encoder_forward(m.level3_lstm, group_pooled,
                                         cache ? &cache->l3_enc : nullptr);
        if (cache) cache->l3_enc_out = l3_out;
        AttentionResult top = attention_pool(l3_out, m.level3_attention,
                                             cache ? &cache->l3_att : nullptr);
        top_pooled = top.pooled;
        // effective per-segment weight: group weight scaled by its group's
        // top-level weight — still sums to 1
        for (size_t g = 0; g < groups; ++g)
            for (size_t i = 0; i < group_len; ++i)
                res.attention.sequence_weights[g * group_len + i] =
                    top.weights[g] * group_weights[g][i];
    }

    std::vector<double>* mask_ptr = nullptr;
    std::vector<double> local_mask;
    if (cache) {
        cache->top_pooled = top_pooled;
        mask_ptr = &cache->dropout_mask;
    } else {
        mask_ptr = &local_mask;
    }
    std::vector<double> dropped = dropout(top_pooled, cfg.dropout_rate, train_mode, rng, mask_ptr);
    if (cache) cache->dropped = dropped;

    std::vector<double> fc_pre = dense_forward(dropped, m.fc);
    std::vector<double> fc_act(fc_pre.size());
    for (size_t i = 0; i < fc_pre.size(); ++i) fc_act[i] = std::tanh(fc_pre[i]);
    if (cache) cache->fc_act = fc_act;

    res.logits = dense_forward(fc_act, m.output);
    res.probs = softmax(res.logits);
    if (cache) cache->logits = res.logits;
    return res;
}

}  // namespace

ForwardResult forward(const HanModel& m, std::span<const double> window, bool train_mode,
                      Rng& rng) {
    return run_forward(m, window, train_mode, rng, nullptr);
}

ForwardResult forward(const HanModel& m, std::span<const double> window) {
    Rng dummy(0);
    return run_forward(m, window, false, dummy, nullptr);
}

BackwardResult backward(const HanModel& m, std::span<const double> window, size_t label,
                        bool train_mode, Rng& rng) {
    const HanConfig& cfg = m.config;
    FullCache cache;
    ForwardResult fwd = run_forward(m, window, train_mode, rng, &cache);

    SoftmaxCeResult head = softmax_cross_entropy(cache.logits, label);

    BackwardResult out;
    out.loss = head.loss;
    out.probs = head.probs;
    out.grads = zeros_like(m);
    HanModel& g = out.grads;

    // output layer
    DenseGrad g_out = dense_backward(m.output, cache.fc_act, head.grad_logits);
    vec_add(g.output.weights, g_out.weights);
    vec_add(g.output.bias, g_out.bias);

    // tanh activation of the fc layer
    std::vector<double> grad_fc_pre(cache.fc_act.size());
    for (size_t i = 0; i < cache.fc_act.size(); ++i)
        grad_fc_pre[i] = g_out.input[i] * (1.0 - cache.fc_act[i] * cache.fc_act[i]);

    DenseGrad g_fc = dense_backward(m.fc, cache.dropped, grad_fc_pre);
    vec_add(g.fc.weights, g_fc.weights);
    vec_add(g.fc.bias, g_fc.bias);

    // dropout scales gradients by the saved mask
    std::vector<double> grad_top(cache.top_pooled.size());
    for (size_t i = 0; i < grad_top.size(); ++i)
        grad_top[i] = g_fc.input[i] * cache.dropout_mask[i];

    // back through the upper hierarchy into the pooled segment matrix
    Tensor2 grad_pooled(cache.pooled.rows, cache.pooled.cols);
    if (cfg.hierarchy_levels == 2) {
        AttentionGrad g_att = attention_backward(m.sequence_attention, cache.seq_att[0], grad_top);
        vec_add(g.sequence_attention.w, g_att.w);
        g.sequence_attention.b += g_att.b;
        EncoderGrad g_enc = encoder_backward(m.sequence_lstm, cache.seq_enc[0], g_att.input);
        accumulate_encoder(g.sequence_lstm, g_enc);
        grad_pooled = g_enc.input;
    } else {
        AttentionGrad g_top = attention_backward(m.level3_attention, cache.l3_att, grad_top);
        vec_add(g.level3_attention.w, g_top.w);
        g.level3_attention.b += g_top.b;
        EncoderGrad g_l3 = encoder_backward(m.level3_lstm, cache.l3_enc, g_top.input);
        accumulate_encoder(g.level3_lstm, g_l3);

        const size_t groups = cfg.level3_groups;
        const size_t group_len = cfg.num_segments / groups;
        for (size_t grp = 0; grp < groups; ++grp) {
            std::vector<double> grad_gp(cache.group_pooled.cols);
            for (size_t j = 0; j < grad_gp.size(); ++j) grad_gp[j] = g_l3.input.at(grp, j);
            AttentionGrad g_att = attention_backward(m.sequence_attention, cache.seq_att[grp],
                                                     grad_gp);
            vec_add(g.sequence_attention.w, g_att.w);
            g.sequence_attention.b += g_att.b;
            EncoderGrad g_enc = encoder_backward(m.sequence_lstm, cache.seq_enc[grp], g_att.input);
            accumulate_encoder(g.sequence_lstm, g_enc);
            for (size_t i = 0; i < group_len; ++i)
                for (size_t j = 0; j < grad_pooled.cols; ++j)
                    grad_pooled.at(grp * group_len + i, j) = g_enc.input.at(i, j);
        }
    }

    // per-segment lower hierarchy; conv, LSTM, and attention weights are
    // shared across segments, so their gradients accumulate
    for (size_t s = 0; s < cfg.num_segments; ++s) {
        SegmentCache& sc = cache.segments[s];
        std::vector<double> grad_seg_pooled(grad_pooled.cols);
        for (size_t j = 0; j < grad_pooled.cols; ++j) grad_seg_pooled[j] = grad_pooled.at(s, j);

        AttentionGrad g_att = attention_backward(m.segment_attention, sc.att, grad_seg_pooled);
        vec_add(g.segment_attention.w, g_att.w);
        g.segment_attention.b += g_att.b;

        EncoderGrad g_enc = encoder_backward(m.segment_lstm, sc.enc, g_att.input);
        accumulate_encoder(g.segment_lstm, g_enc);

        Conv1dGrad g_conv = conv1d_backward(sc.conv_in, m.conv, g_enc.input);
        vec_add(g.conv.kernels, g_conv.kernels);
        vec_add(g.conv.bias, g_conv.bias);
    }
    return out;
}

void save_weights(const HanModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("save_weights: cannot write '" + path + "'");
    out.write("HANW", 4);
    const uint32_t version = kWeightsVersion;
    out.write(reinterpret_cast<const char*>(&version), 4);

    const HanConfig& c = m.config;
    const uint64_t fields[] = {c.num_segments,    c.segment_len, c.conv_filters,
                               c.conv_kernel,     c.conv_stride, c.lstm_units,
                               c.fc_units,        c.num_classes, c.hierarchy_levels,
                               c.level3_groups,   c.bidirectional ? 1ULL : 0ULL};
    out.write(reinterpret_cast<const char*>(fields), sizeof(fields));
    out.write(reinterpret_cast<const char*>(&c.dropout_rate), 8);

    for (const ConstParamBlock& b : const_param_blocks(m))
        out.write(reinterpret_cast<const char*>(b.values.data()),
                  static_cast<long>(b.values.size() * 8));
    if (!out) throw IoError("save_weights: write failed for '" + path + "'");
}

HanModel load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("load_weights: cannot open '" + path + "'");

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "HANW", 4) != 0)
        throw ParseError("load_weights: '" + path + "' has no HANW magic");
    uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), 4);
    if (!in || version != kWeightsVersion)
        throw ParseError("load_weights: unsupported version " + std::to_string(version));

    uint64_t fields[11];
    in.read(reinterpret_cast<char*>(fields), sizeof(fields));
    double dropout_rate = 0.0;
    in.read(reinterpret_cast<char*>(&dropout_rate), 8);
    if (!in) throw ParseError("load_weights: '" + path + "' truncated in config");

    HanConfig c;
    c.num_segments = fields[0];
    c.segment_len = fields[1];
    c.conv_filters = fields[2];
    c.conv_kernel = fields[3];
    c.conv_stride = fields[4];
    c.lstm_units = fields[5];
    c.fc_units = fields[6];
    c.num_classes = fields[7];
    c.hierarchy_levels = fields[8];
    c.level3_groups = fields[9];
    c.bidirectional = fields[10] != 0;
    c.dropout_rate = dropout_rate;

    HanModel m = make_empty(c);
    for (ParamBlock& b : param_blocks(m)) {
        in.read(reinterpret_cast<char*>(b.values.data()), static_cast<long>(b.values.size() * 8));
        if (!in)
            throw ParseError("load_weights: '" + path + "' truncated in block '" + b.name + "'");
    }
    in.peek();
    if (!in.eof()) throw ParseError("load_weights: trailing bytes in '" + path + "'");
    return m;
}

HanModel load_weights(const std::string& path, const HanConfig& expected) {
    HanModel m = load_weights(path);
    const HanConfig& c = m.config;
    const bool same = c.num_segments == expected.num_segments &&
                      c.segment_len == expected.segment_len &&
                      c.conv_filters == expected.conv_filters &&
                      c.conv_kernel == expected.conv_kernel &&
                      c.conv_stride == expected.conv_stride &&
                      c.lstm_units == expected.lstm_units && c.fc_units == expected.fc_units &&
                      c.num_classes == expected.num_classes &&
                      c.hierarchy_levels == expected.hierarchy_levels &&
                      c.level3_groups == expected.level3_groups &&
                      c.bidirectional == expected.bidirectional;
    if (!same) throw ConfigError("load_weights: stored config does not match the expected one");
    return m;
}

}  // namespace hanecg
