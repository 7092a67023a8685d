#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gfsl/tensor.hpp"

namespace gfsl {

// Central finite differences of a scalar function, one element at a time:
// (f(x + eps*e_i) - f(x - eps*e_i)) / (2*eps).
Tensor finite_diff_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                            float eps);

// ||a - b||_inf / max(1, ||a||_inf, ||b||_inf)
double relative_error(const Tensor& a, const Tensor& b);

struct GradCheckEntry {
    std::string layer;      // e.g. "conv2d/grad_weights"
    double max_rel_error;   // worst case over all random instances
    double tolerance;
    bool passed;
};

// Checks every layer's analytic backward against finite differences on
// random small instances (at least five per layer, eps = 1e-3).
// Tolerance is 1e-3, tightened to 1e-4 for the smooth elementwise ops.
std::vector<GradCheckEntry> run_gradient_checks(std::uint64_t seed);

inline constexpr float kGradCheckEps = 1e-3f;
inline constexpr double kGradCheckTol = 1e-3;
inline constexpr double kGradCheckTolSmooth = 1e-4;

}  // namespace gfsl
