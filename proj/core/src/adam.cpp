#include "gfsl/adam.hpp"

#include <cmath>

#include "gfsl/error.hpp"

namespace gfsl {

AdamState AdamState::for_param(const Tensor& param, float lr) {
    AdamState state;
    state.m = Tensor(param.shape());
    state.v = Tensor(param.shape());
    state.lr = lr;
    return state;
}

void adam_step(Tensor& param, const Tensor& grad, AdamState& state) {
    if (!param.same_shape(grad) || !param.same_shape(state.m) || !param.same_shape(state.v)) {
        throw ShapeError("adam_step: param " + param.shape_str() + ", grad " + grad.shape_str() +
                         ", state " + state.m.shape_str() + " must all match");
    }
    state.t += 1;
    const float bc1 = 1.0f - std::pow(state.beta1, static_cast<float>(state.t));
    const float bc2 = 1.0f - std::pow(state.beta2, static_cast<float>(state.t));
    for (std::size_t i = 0; i < param.size(); ++i) {
        const float g = grad[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0f - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0f - state.beta2) * g * g;
        const float m_hat = state.m[i] / bc1;
        const float v_hat = state.v[i] / bc2;
        param[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
    ensure_finite(param, "adam_step");
}

}  // namespace gfsl
