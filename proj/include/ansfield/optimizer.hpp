#pragma once

#include <cstdint>

#include "ansfield/denoiser.hpp"

namespace ansfield {

struct AdamWConfig {
    double learning_rate = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    /// Decoupled: p -= lr * weight_decay * p, independent of the moments.
    double weight_decay = 0.0;
};

struct OptimizerState {
    AdamWConfig config;
    ParameterSet first;
    ParameterSet second;
    std::int64_t step = 0;

    static OptimizerState for_params(const ParameterSet& params, AdamWConfig config);
};

/// One AdamW update of `params` in place. Throws ShapeMismatch on layout mismatch.
void optimizer_step(OptimizerState& state, ParameterSet& params, const ParameterSet& grads);

}  // namespace ansfield
