#pragma once

#include <cstddef>
#include <vector>

#include "gfsl/tensor.hpp"

namespace gfsl {

// Geometry of one (transposed) convolution layer.
struct ConvSpec {
    int in_channels = 0;
    int out_channels = 0;
    int kernel_h = 0;
    int kernel_w = 0;
    int stride = 1;
    int padding = 0;

    // Throws GeometryError if any field is out of contract.
    void validate() const;

    // floor((in + 2*padding - kernel) / stride) + 1
    int conv_out_dim(int in, int kernel) const;

    // (in - 1)*stride - 2*padding + kernel
    int deconv_out_dim(int in, int kernel) const;
};

// --- Convolution (cross-correlation, zero padding) -------------------------
//
// input NCHW, weights OIHW, bias O. No kernel flip.

Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias,
                      const ConvSpec& spec);

struct ConvGrads {
    Tensor input;
    Tensor weights;
    Tensor bias;
};

ConvGrads conv2d_backward(const Tensor& input, const Tensor& weights, const ConvSpec& spec,
                          const Tensor& grad_output);

// --- Transposed convolution -------------------------------------------------
//
// input NCHW, weights IOHW (first axis = spec.in_channels), bias O.
// Output spatial dims follow deconv_out_dim.

Tensor conv_transpose2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias,
                                const ConvSpec& spec);

ConvGrads conv_transpose2d_backward(const Tensor& input, const Tensor& weights,
                                    const ConvSpec& spec, const Tensor& grad_output);

// --- Max pooling ------------------------------------------------------------

struct MaxPoolResult {
    Tensor output;
    // Flat index into the input tensor of each window's maximum,
    // one per output element. Ties break to the lowest flat index.
    std::vector<std::size_t> argmax;
};

MaxPoolResult maxpool2d_forward(const Tensor& input, int window, int stride);

Tensor maxpool2d_backward(const std::vector<std::size_t>& argmax, const Tensor& grad_output,
                          const std::vector<int>& input_shape);

// --- Elementwise ------------------------------------------------------------

// relu(x) = max(0, x); subgradient at 0 is 0.
Tensor relu_forward(const Tensor& input);
Tensor relu_backward(const Tensor& input, const Tensor& grad_output);

// sigmoid(x) = 1 / (1 + exp(-x)); derivative s * (1 - s).
Tensor sigmoid_forward(const Tensor& input);
// `output` is the forward result for the same input.
Tensor sigmoid_backward(const Tensor& output, const Tensor& grad_output);

// --- Fully connected --------------------------------------------------------
//
// input N x F, weights G x F, bias G -> output N x G = input * weights^T + bias.

Tensor linear_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

struct LinearGrads {
    Tensor input;
    Tensor weights;
    Tensor bias;
};

LinearGrads linear_backward(const Tensor& input, const Tensor& weights,
                            const Tensor& grad_output);

// --- Losses -----------------------------------------------------------------

struct LossResult {
    double value = 0.0;
    Tensor grad;  // d value / d first-argument, elementwise
};

// Mean over all elements of (prediction - target)^2.
LossResult mse_loss(const Tensor& prediction, const Tensor& target);

// Binary cross-entropy, averaged over the batch. Scores are probabilities,
// clamped to [1e-7, 1 - 1e-7] before the logarithm; the gradient is taken
// at the clamped value. Labels must be 0 or 1.
LossResult bce_loss(const Tensor& scores, const Tensor& labels);

inline constexpr float kBceClamp = 1e-7f;

}  // namespace gfsl
