#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hanecg {

// A named view over one contiguous parameter (or gradient) array.
struct ParamBlock {
    std::string name;
    std::span<double> values;
};

struct ConstParamBlock {
    std::string name;
    std::span<const double> values;
};

// Adam with bias-corrected moments. Moment arrays are kept congruent to the
// parameter blocks the state was built from.
struct AdamState {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    uint64_t step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;

    static AdamState make(std::span<const ConstParamBlock> blocks, double learning_rate);
};

// In-place update: params -= lr * m_hat / (sqrt(v_hat) + eps).
// Throws NumericError naming the block if any gradient entry is non-finite.
void adam_step(std::span<ParamBlock> params, std::span<const ConstParamBlock> grads,
               AdamState& state);

}  // namespace hanecg
