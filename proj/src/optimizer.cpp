#include "ansfield/optimizer.hpp"

#include <cmath>

#include "ansfield/errors.hpp"

namespace ansfield {

OptimizerState OptimizerState::for_params(const ParameterSet& params, AdamWConfig config) {
    return {config, params.zeros_like(), params.zeros_like(), 0};
}

void optimizer_step(OptimizerState& state, ParameterSet& params, const ParameterSet& grads) {
    auto& pe = params.entries();
    const auto& ge = grads.entries();
    if (pe.size() != ge.size() || state.first.entries().size() != pe.size()) {
        throw ShapeMismatch("optimizer: parameter, gradient and moment sets differ in length");
    }
    for (std::size_t i = 0; i < pe.size(); ++i) {
        if (pe[i].value.shape() != ge[i].value.shape() || state.first.entries()[i].value.shape() != pe[i].value.shape()) {
            throw ShapeMismatch("optimizer: shape mismatch at " + pe[i].name);
        }
    }
    const auto& c = state.config;
    ++state.step;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < pe.size(); ++i) {
        auto& p = pe[i].value;
        const auto& g = ge[i].value;
        auto& m = state.first.entries()[i].value;
        auto& v = state.second.entries()[i].value;
        for (std::size_t k = 0; k < p.size(); ++k) {
            m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
            v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
            const double mhat = m[k] / bc1;
            const double vhat = v[k] / bc2;
            p[k] -= c.learning_rate * (mhat / (std::sqrt(vhat) + c.epsilon) + c.weight_decay * p[k]);
        }
    }
}

}  // namespace ansfield
