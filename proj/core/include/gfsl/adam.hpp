#pragma once

#include <cstdint>

#include "gfsl/tensor.hpp"

namespace gfsl {

// Per-parameter Adam state. m and v always match the parameter shape;
// t counts completed steps.
struct AdamState {
    Tensor m;
    Tensor v;
    std::int64_t t = 0;
    float lr = 1e-3f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float epsilon = 1e-8f;

    static AdamState for_param(const Tensor& param, float lr = 1e-3f);
};

// One bias-corrected Adam update, in place.
void adam_step(Tensor& param, const Tensor& grad, AdamState& state);

}  // namespace gfsl
