#include "hanecg/adam.hpp"

#include <cmath>

#include "hanecg/errors.hpp"

namespace hanecg {

AdamState AdamState::make(std::span<const ConstParamBlock> blocks, double learning_rate) {
    AdamState s;
    s.learning_rate = learning_rate;
    s.m.reserve(blocks.size());
    s.v.reserve(blocks.size());
    for (const auto& b : blocks) {
        s.m.emplace_back(b.values.size(), 0.0);
        s.v.emplace_back(b.values.size(), 0.0);
    }
    return s;
}

void adam_step(std::span<ParamBlock> params, std::span<const ConstParamBlock> grads,
               AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw ShapeError("adam_step: block count mismatch");

    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

    for (size_t i = 0; i < params.size(); ++i) {
        auto p = params[i].values;
        auto g = grads[i].values;
        auto& m = state.m[i];
        auto& v = state.v[i];
        if (p.size() != g.size() || p.size() != m.size())
            throw ShapeError("adam_step: block '" + params[i].name + "' shape mismatch");
        for (size_t j = 0; j < p.size(); ++j) {
            const double gj = g[j];
            if (!std::isfinite(gj))
                throw NumericError("adam_step: non-finite gradient in block '" + params[i].name +
                                   "' at index " + std::to_string(j));
            m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * gj;
            v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * gj * gj;
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            p[j] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

}  // namespace hanecg
