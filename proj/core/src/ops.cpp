#include "gfsl/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gfsl/error.hpp"

namespace gfsl {

namespace {

void require_shape(bool ok, const std::string& msg) {
    if (!ok) throw ShapeError(msg);
}

// Smallest out-index t >= 0 with t*stride + offset >= 0.
int span_lo(int offset, int stride) {
    return offset >= 0 ? 0 : (-offset + stride - 1) / stride;
}

// Largest out-index t <= cap with t*stride + offset <= limit - 1, or -1 if none.
int span_hi(int offset, int stride, int limit, int cap) {
    const int numer = limit - 1 - offset;
    if (numer < 0) return -1;
    return std::min(cap, numer / stride);
}

void check_conv_args(const Tensor& input, const Tensor& weights, const Tensor* bias,
                     const ConvSpec& spec, bool transposed, const char* op) {
    spec.validate();
    const std::string name(op);
    require_shape(input.rank() == 4, name + ": input must be NCHW, got " + input.shape_str());
    require_shape(input.dim(1) == spec.in_channels,
                  name + ": input has " + std::to_string(input.dim(1)) + " channels, spec expects " +
                      std::to_string(spec.in_channels));
    require_shape(weights.rank() == 4, name + ": weights must be rank 4, got " + weights.shape_str());
    const int w0 = transposed ? spec.in_channels : spec.out_channels;
    const int w1 = transposed ? spec.out_channels : spec.in_channels;
    require_shape(weights.dim(0) == w0 && weights.dim(1) == w1 && weights.dim(2) == spec.kernel_h &&
                      weights.dim(3) == spec.kernel_w,
                  name + ": weights shape " + weights.shape_str() + " inconsistent with spec (" +
                      std::to_string(w0) + ", " + std::to_string(w1) + ", " +
                      std::to_string(spec.kernel_h) + ", " + std::to_string(spec.kernel_w) + ")");
    if (bias != nullptr) {
        require_shape(bias->rank() == 1 && bias->dim(0) == spec.out_channels,
                      name + ": bias shape " + bias->shape_str() + " must be [" +
                          std::to_string(spec.out_channels) + "]");
    }
}

}  // namespace

void ConvSpec::validate() const {
    if (in_channels < 1 || out_channels < 1 || kernel_h < 1 || kernel_w < 1 || stride < 1 ||
        padding < 0) {
        throw GeometryError("invalid ConvSpec: in=" + std::to_string(in_channels) + " out=" +
                            std::to_string(out_channels) + " kernel=" + std::to_string(kernel_h) +
                            "x" + std::to_string(kernel_w) + " stride=" + std::to_string(stride) +
                            " padding=" + std::to_string(padding));
    }
}

int ConvSpec::conv_out_dim(int in, int kernel) const {
    return (in + 2 * padding - kernel) / stride + 1;
}

int ConvSpec::deconv_out_dim(int in, int kernel) const {
    return (in - 1) * stride - 2 * padding + kernel;
}

Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias,
                      const ConvSpec& spec) {
    check_conv_args(input, weights, &bias, spec, false, "conv2d_forward");
    const int n_batch = input.dim(0), in_h = input.dim(2), in_w = input.dim(3);
    const int out_h = spec.conv_out_dim(in_h, spec.kernel_h);
    const int out_w = spec.conv_out_dim(in_w, spec.kernel_w);
    if (out_h < 1 || out_w < 1) {
        throw GeometryError("conv2d_forward: output would be " + std::to_string(out_h) + "x" +
                            std::to_string(out_w) + " for input " + input.shape_str());
    }

    Tensor output({n_batch, spec.out_channels, out_h, out_w});
    const float* in = input.data();
    const float* w = weights.data();
    float* out = output.data();
    const std::size_t in_plane = static_cast<std::size_t>(in_h) * in_w;
    const std::size_t out_plane = static_cast<std::size_t>(out_h) * out_w;

    for (int n = 0; n < n_batch; ++n) {
        for (int o = 0; o < spec.out_channels; ++o) {
            float* out_ch = out + (static_cast<std::size_t>(n) * spec.out_channels + o) * out_plane;
            std::fill(out_ch, out_ch + out_plane, bias[static_cast<std::size_t>(o)]);
            for (int i = 0; i < spec.in_channels; ++i) {
                const float* in_ch =
                    in + (static_cast<std::size_t>(n) * spec.in_channels + i) * in_plane;
                const float* w_k =
                    w + ((static_cast<std::size_t>(o) * spec.in_channels + i) * spec.kernel_h) *
                            spec.kernel_w;
                for (int kh = 0; kh < spec.kernel_h; ++kh) {
                    const int oh_lo = span_lo(kh - spec.padding, spec.stride);
                    const int oh_hi = span_hi(kh - spec.padding, spec.stride, in_h, out_h - 1);
                    for (int kw = 0; kw < spec.kernel_w; ++kw) {
                        const float wv = w_k[kh * spec.kernel_w + kw];
                        if (wv == 0.0f) continue;
                        const int ow_lo = span_lo(kw - spec.padding, spec.stride);
                        const int ow_hi = span_hi(kw - spec.padding, spec.stride, in_w, out_w - 1);
                        for (int oh = oh_lo; oh <= oh_hi; ++oh) {
                            const int ih = oh * spec.stride + kh - spec.padding;
                            const float* in_row = in_ch + static_cast<std::size_t>(ih) * in_w;
                            float* out_row = out_ch + static_cast<std::size_t>(oh) * out_w;
                            for (int ow = ow_lo; ow <= ow_hi; ++ow) {
                                out_row[ow] += wv * in_row[ow * spec.stride + kw - spec.padding];
                            }
                        }
                    }
                }
            }
        }
    }
    ensure_finite(output, "conv2d_forward");
    return output;
}

ConvGrads conv2d_backward(const Tensor& input, const Tensor& weights, const ConvSpec& spec,
                          const Tensor& grad_output) {
    check_conv_args(input, weights, nullptr, spec, false, "conv2d_backward");
    const int n_batch = input.dim(0), in_h = input.dim(2), in_w = input.dim(3);
    const int out_h = spec.conv_out_dim(in_h, spec.kernel_h);
    const int out_w = spec.conv_out_dim(in_w, spec.kernel_w);
    require_shape(grad_output.shape() == std::vector<int>{n_batch, spec.out_channels, out_h, out_w},
                  "conv2d_backward: grad_output shape " + grad_output.shape_str() +
                      " does not match forward output [" + std::to_string(n_batch) + ", " +
                      std::to_string(spec.out_channels) + ", " + std::to_string(out_h) + ", " +
                      std::to_string(out_w) + "]");

    ConvGrads grads{Tensor(input.shape()), Tensor(weights.shape()),
                    Tensor({spec.out_channels})};
    const float* in = input.data();
    const float* w = weights.data();
    const float* gout = grad_output.data();
    float* gin = grads.input.data();
    float* gw = grads.weights.data();
    float* gb = grads.bias.data();
    const std::size_t in_plane = static_cast<std::size_t>(in_h) * in_w;
    const std::size_t out_plane = static_cast<std::size_t>(out_h) * out_w;

    for (int n = 0; n < n_batch; ++n) {
        for (int o = 0; o < spec.out_channels; ++o) {
            const float* gout_ch =
                gout + (static_cast<std::size_t>(n) * spec.out_channels + o) * out_plane;
            float bias_acc = 0.0f;
            for (std::size_t k = 0; k < out_plane; ++k) bias_acc += gout_ch[k];
            gb[o] += bias_acc;
            for (int i = 0; i < spec.in_channels; ++i) {
                const float* in_ch =
                    in + (static_cast<std::size_t>(n) * spec.in_channels + i) * in_plane;
                float* gin_ch = gin + (static_cast<std::size_t>(n) * spec.in_channels + i) * in_plane;
                const std::size_t w_base =
                    (static_cast<std::size_t>(o) * spec.in_channels + i) *
                    static_cast<std::size_t>(spec.kernel_h) * spec.kernel_w;
                for (int kh = 0; kh < spec.kernel_h; ++kh) {
                    const int oh_lo = span_lo(kh - spec.padding, spec.stride);
                    const int oh_hi = span_hi(kh - spec.padding, spec.stride, in_h, out_h - 1);
                    for (int kw = 0; kw < spec.kernel_w; ++kw) {
                        const float wv = w[w_base + static_cast<std::size_t>(kh) * spec.kernel_w + kw];
                        const int ow_lo = span_lo(kw - spec.padding, spec.stride);
                        const int ow_hi = span_hi(kw - spec.padding, spec.stride, in_w, out_w - 1);
                        float w_acc = 0.0f;
                        for (int oh = oh_lo; oh <= oh_hi; ++oh) {
                            const int ih = oh * spec.stride + kh - spec.padding;
                            const float* in_row = in_ch + static_cast<std::size_t>(ih) * in_w;
                            float* gin_row = gin_ch + static_cast<std::size_t>(ih) * in_w;
                            const float* gout_row = gout_ch + static_cast<std::size_t>(oh) * out_w;
                            for (int ow = ow_lo; ow <= ow_hi; ++ow) {
                                const float g = gout_row[ow];
                                const int iw = ow * spec.stride + kw - spec.padding;
                                w_acc += g * in_row[iw];
                                gin_row[iw] += wv * g;
                            }
                        }
                        gw[w_base + static_cast<std::size_t>(kh) * spec.kernel_w + kw] += w_acc;
                    }
                }
            }
        }
    }
    ensure_finite(grads.input, "conv2d_backward");
    ensure_finite(grads.weights, "conv2d_backward");
    ensure_finite(grads.bias, "conv2d_backward");
    return grads;
}

Tensor conv_transpose2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias,
                                const ConvSpec& spec) {
    check_conv_args(input, weights, &bias, spec, true, "conv_transpose2d_forward");
    const int n_batch = input.dim(0), in_h = input.dim(2), in_w = input.dim(3);
    const int out_h = spec.deconv_out_dim(in_h, spec.kernel_h);
    const int out_w = spec.deconv_out_dim(in_w, spec.kernel_w);
    if (out_h < 1 || out_w < 1) {
        throw GeometryError("conv_transpose2d_forward: output would be " + std::to_string(out_h) +
                            "x" + std::to_string(out_w) + " for input " + input.shape_str());
    }

    Tensor output({n_batch, spec.out_channels, out_h, out_w});
    const float* in = input.data();
    const float* w = weights.data();
    float* out = output.data();
    const std::size_t in_plane = static_cast<std::size_t>(in_h) * in_w;
    const std::size_t out_plane = static_cast<std::size_t>(out_h) * out_w;

    for (int n = 0; n < n_batch; ++n) {
        for (int o = 0; o < spec.out_channels; ++o) {
            float* out_ch = out + (static_cast<std::size_t>(n) * spec.out_channels + o) * out_plane;
            std::fill(out_ch, out_ch + out_plane, bias[static_cast<std::size_t>(o)]);
            for (int i = 0; i < spec.in_channels; ++i) {
                const float* in_ch =
                    in + (static_cast<std::size_t>(n) * spec.in_channels + i) * in_plane;
                const float* w_k =
                    w + ((static_cast<std::size_t>(i) * spec.out_channels + o) * spec.kernel_h) *
                            spec.kernel_w;
                for (int kh = 0; kh < spec.kernel_h; ++kh) {
                    // oh = ih*stride - padding + kh
                    const int ih_lo = span_lo(kh - spec.padding, spec.stride);
                    const int ih_hi = span_hi(kh - spec.padding, spec.stride, out_h, in_h - 1);
                    for (int kw = 0; kw < spec.kernel_w; ++kw) {
                        const float wv = w_k[kh * spec.kernel_w + kw];
                        if (wv == 0.0f) continue;
                        const int iw_lo = span_lo(kw - spec.padding, spec.stride);
                        const int iw_hi = span_hi(kw - spec.padding, spec.stride, out_w, in_w - 1);
                        for (int ih = ih_lo; ih <= ih_hi; ++ih) {
                            const int oh = ih * spec.stride + kh - spec.padding;
                            const float* in_row = in_ch + static_cast<std::size_t>(ih) * in_w;
                            float* out_row = out_ch + static_cast<std::size_t>(oh) * out_w;
                            for (int iw = iw_lo; iw <= iw_hi; ++iw) {
                                out_row[iw * spec.stride + kw - spec.padding] += wv * in_row[iw];
                            }
                        }
                    }
                }
            }
        }
    }
    ensure_finite(output, "conv_transpose2d_forward");
    return output;
}

ConvGrads conv_transpose2d_backward(const Tensor& input, const Tensor& weights,
                                    const ConvSpec& spec, const Tensor& grad_output) {
    check_conv_args(input, weights, nullptr, spec, true, "conv_transpose2d_backward");
    const int n_batch = input.dim(0), in_h = input.dim(2), in_w = input.dim(3);
    const int out_h = spec.deconv_out_dim(in_h, spec.kernel_h);
    const int out_w = spec.deconv_out_dim(in_w, spec.kernel_w);
    require_shape(grad_output.shape() == std::vector<int>{n_batch, spec.out_channels, out_h, out_w},
                  "conv_transpose2d_backward: grad_output shape " + grad_output.shape_str() +
                      " does not match forward output [" + std::to_string(n_batch) + ", " +
                      std::to_string(spec.out_channels) + ", " + std::to_string(out_h) + ", " +
                      std::to_string(out_w) + "]");

    ConvGrads grads{Tensor(input.shape()), Tensor(weights.shape()),
                    Tensor({spec.out_channels})};
    const float* in = input.data();
    const float* w = weights.data();
    const float* gout = grad_output.data();
    float* gin = grads.input.data();
    float* gw = grads.weights.data();
    float* gb = grads.bias.data();
    const std::size_t in_plane = static_cast<std::size_t>(in_h) * in_w;
    const std::size_t out_plane = static_cast<std::size_t>(out_h) * out_w;

    for (int n = 0; n < n_batch; ++n) {
        for (int o = 0; o < spec.out_channels; ++o) {
            const float* gout_ch =
                gout + (static_cast<std::size_t>(n) * spec.out_channels + o) * out_plane;
            float bias_acc = 0.0f;
            for (std::size_t k = 0; k < out_plane; ++k) bias_acc += gout_ch[k];
            gb[o] += bias_acc;
            for (int i = 0; i < spec.in_channels; ++i) {
                const float* in_ch =
                    in + (static_cast<std::size_t>(n) * spec.in_channels + i) * in_plane;
                float* gin_ch = gin + (static_cast<std::size_t>(n) * spec.in_channels + i) * in_plane;
                const std::size_t w_base =
                    (static_cast<std::size_t>(i) * spec.out_channels + o) *
                    static_cast<std::size_t>(spec.kernel_h) * spec.kernel_w;
                for (int kh = 0; kh < spec.kernel_h; ++kh) {
                    const int ih_lo = span_lo(kh - spec.padding, spec.stride);
                    const int ih_hi = span_hi(kh - spec.padding, spec.stride, out_h, in_h - 1);
                    for (int kw = 0; kw < spec.kernel_w; ++kw) {
                        const float wv = w[w_base + static_cast<std::size_t>(kh) * spec.kernel_w + kw];
                        const int iw_lo = span_lo(kw - spec.padding, spec.stride);
                        const int iw_hi = span_hi(kw - spec.padding, spec.stride, out_w, in_w - 1);
                        float w_acc = 0.0f;
                        for (int ih = ih_lo; ih <= ih_hi; ++ih) {
                            const int oh = ih * spec.stride + kh - spec.padding;
                            const float* in_row = in_ch + static_cast<std::size_t>(ih) * in_w;
                            float* gin_row = gin_ch + static_cast<std::size_t>(ih) * in_w;
                            const float* gout_row = gout_ch + static_cast<std::size_t>(oh) * out_w;
                            for (int iw = iw_lo; iw <= iw_hi; ++iw) {
                                const float g = gout_row[iw * spec.stride + kw - spec.padding];
                                w_acc += g * in_row[iw];
                                gin_row[iw] += wv * g;
                            }
                        }
                        gw[w_base + static_cast<std::size_t>(kh) * spec.kernel_w + kw] += w_acc;
                    }
                }
            }
        }
    }
    ensure_finite(grads.input, "conv_transpose2d_backward");
    ensure_finite(grads.weights, "conv_transpose2d_backward");
    ensure_finite(grads.bias, "conv_transpose2d_backward");
    return grads;
}

MaxPoolResult maxpool2d_forward(const Tensor& input, int window, int stride) {
    require_shape(input.rank() == 4, "maxpool2d_forward: input must be NCHW, got " + input.shape_str());
    if (window < 1 || stride < 1) {
        throw GeometryError("maxpool2d_forward: window and stride must be >= 1");
    }
    const int n_batch = input.dim(0), channels = input.dim(1);
    const int in_h = input.dim(2), in_w = input.dim(3);
    const int out_h = (in_h - window) / stride + 1;
    const int out_w = (in_w - window) / stride + 1;
    if (in_h < window || in_w < window || out_h < 1 || out_w < 1) {
        throw GeometryError("maxpool2d_forward: window " + std::to_string(window) +
                            " does not fit input " + input.shape_str());
    }

    MaxPoolResult result;
    result.output = Tensor({n_batch, channels, out_h, out_w});
    result.argmax.resize(result.output.size());
    const float* in = input.data();
    float* out = result.output.data();
    std::size_t k = 0;
    for (int n = 0; n < n_batch; ++n) {
        for (int c = 0; c < channels; ++c) {
            const std::size_t ch_base =
                (static_cast<std::size_t>(n) * channels + c) * static_cast<std::size_t>(in_h) * in_w;
            for (int oh = 0; oh < out_h; ++oh) {
                for (int ow = 0; ow < out_w; ++ow) {
                    float best = -std::numeric_limits<float>::infinity();
                    std::size_t best_idx = 0;
                    for (int wh = 0; wh < window; ++wh) {
                        for (int ww = 0; ww < window; ++ww) {
                            const std::size_t idx =
                                ch_base + static_cast<std::size_t>(oh * stride + wh) * in_w +
                                static_cast<std::size_t>(ow * stride + ww);
                            if (in[idx] > best) {  // strict: ties keep the lowest flat index
                                best = in[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    out[k] = best;
                    result.argmax[k] = best_idx;
                    ++k;
                }
            }
        }
    }
    ensure_finite(result.output, "maxpool2d_forward");
    return result;
}

Tensor maxpool2d_backward(const std::vector<std::size_t>& argmax, const Tensor& grad_output,
                          const std::vector<int>& input_shape) {
    require_shape(argmax.size() == grad_output.size(),
                  "maxpool2d_backward: argmax count " + std::to_string(argmax.size()) +
                      " != grad_output size " + std::to_string(grad_output.size()));
    Tensor grad_input(input_shape);
    for (std::size_t k = 0; k < argmax.size(); ++k) {
        if (argmax[k] >= grad_input.size()) {
            throw ShapeError("maxpool2d_backward: argmax index out of range for input shape " +
                             shape_to_string(input_shape));
        }
        grad_input[argmax[k]] += grad_output[k];
    }
    return grad_input;
}

Tensor relu_forward(const Tensor& input) {
    Tensor out(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) {
        out[i] = input[i] > 0.0f ? input[i] : 0.0f;
    }
    ensure_finite(out, "relu_forward");
    return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_output) {
    require_shape(input.same_shape(grad_output),
                  "relu_backward: grad_output shape " + grad_output.shape_str() +
                      " != input shape " + input.shape_str());
    Tensor grad(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) {
        grad[i] = input[i] > 0.0f ? grad_output[i] : 0.0f;
    }
    ensure_finite(grad, "relu_backward");
    return grad;
}

Tensor sigmoid_forward(const Tensor& input) {
    Tensor out(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) {
        const float x = input[i];
        if (x >= 0.0f) {
            out[i] = 1.0f / (1.0f + std::exp(-x));
        } else {
            const float e = std::exp(x);
            out[i] = e / (1.0f + e);
        }
    }
    ensure_finite(out, "sigmoid_forward");
    return out;
}

Tensor sigmoid_backward(const Tensor& output, const Tensor& grad_output) {
    require_shape(output.same_shape(grad_output),
                  "sigmoid_backward: grad_output shape " + grad_output.shape_str() +
                      " != output shape " + output.shape_str());
    Tensor grad(output.shape());
    for (std::size_t i = 0; i < output.size(); ++i) {
        grad[i] = grad_output[i] * output[i] * (1.0f - output[i]);
    }
    ensure_finite(grad, "sigmoid_backward");
    return grad;
}

Tensor linear_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    require_shape(input.rank() == 2, "linear_forward: input must be N x F, got " + input.shape_str());
    require_shape(weights.rank() == 2 && weights.dim(1) == input.dim(1),
                  "linear_forward: weights " + weights.shape_str() + " incompatible with input " +
                      input.shape_str());
    require_shape(bias.rank() == 1 && bias.dim(0) == weights.dim(0),
                  "linear_forward: bias " + bias.shape_str() + " must be [" +
                      std::to_string(weights.dim(0)) + "]");
    const int n_batch = input.dim(0), features = input.dim(1), out_features = weights.dim(0);
    Tensor out({n_batch, out_features});
    for (int n = 0; n < n_batch; ++n) {
        const float* in_row = input.data() + static_cast<std::size_t>(n) * features;
        float* out_row = out.data() + static_cast<std::size_t>(n) * out_features;
        for (int g = 0; g < out_features; ++g) {
            const float* w_row = weights.data() + static_cast<std::size_t>(g) * features;
            float acc = bias[static_cast<std::size_t>(g)];
            for (int f = 0; f < features; ++f) {
                acc += in_row[f] * w_row[f];
            }
            out_row[g] = acc;
        }
    }
    ensure_finite(out, "linear_forward");
    return out;
}

LinearGrads linear_backward(const Tensor& input, const Tensor& weights,
                            const Tensor& grad_output) {
    require_shape(input.rank() == 2 && weights.rank() == 2 && weights.dim(1) == input.dim(1),
                  "linear_backward: input " + input.shape_str() + " / weights " +
                      weights.shape_str() + " mismatch");
    require_shape(grad_output.rank() == 2 && grad_output.dim(0) == input.dim(0) &&
                      grad_output.dim(1) == weights.dim(0),
                  "linear_backward: grad_output shape " + grad_output.shape_str() +
                      " does not match forward output");
    const int n_batch = input.dim(0), features = input.dim(1), out_features = weights.dim(0);
    LinearGrads grads{Tensor(input.shape()), Tensor(weights.shape()), Tensor({out_features})};
    for (int n = 0; n < n_batch; ++n) {
        const float* in_row = input.data() + static_cast<std::size_t>(n) * features;
        const float* gout_row = grad_output.data() + static_cast<std::size_t>(n) * out_features;
        float* gin_row = grads.input.data() + static_cast<std::size_t>(n) * features;
        for (int g = 0; g < out_features; ++g) {
            const float go = gout_row[g];
            const float* w_row = weights.data() + static_cast<std::size_t>(g) * features;
            float* gw_row = grads.weights.data() + static_cast<std::size_t>(g) * features;
            grads.bias[static_cast<std::size_t>(g)] += go;
            for (int f = 0; f < features; ++f) {
                gin_row[f] += go * w_row[f];
                gw_row[f] += go * in_row[f];
            }
        }
    }
    ensure_finite(grads.input, "linear_backward");
    ensure_finite(grads.weights, "linear_backward");
    ensure_finite(grads.bias, "linear_backward");
    return grads;
}

LossResult mse_loss(const Tensor& prediction, const Tensor& target) {
    require_shape(prediction.same_shape(target), "mse_loss: prediction " + prediction.shape_str() +
                                                     " and target " + target.shape_str() +
                                                     " differ");
    require_shape(!prediction.empty(), "mse_loss: empty tensors");
    const std::size_t count = prediction.size();
    LossResult result;
    result.grad = Tensor(prediction.shape());
    double acc = 0.0;
    const float scale = 2.0f / static_cast<float>(count);
    for (std::size_t i = 0; i < count; ++i) {
        // Difference of two floats is exact in double; the loss value stays
        // at full double precision so finite differences against it are sharp.
        const double d = static_cast<double>(prediction[i]) - static_cast<double>(target[i]);
        acc += d * d;
        result.grad[i] = scale * static_cast<float>(d);
    }
    result.value = acc / static_cast<double>(count);
    if (!std::isfinite(result.value)) throw NumericsError("mse_loss produced a non-finite value");
    ensure_finite(result.grad, "mse_loss");
    return result;
}

LossResult bce_loss(const Tensor& scores, const Tensor& labels) {
    require_shape(scores.same_shape(labels), "bce_loss: scores " + scores.shape_str() +
                                                 " and labels " + labels.shape_str() + " differ");
    require_shape(!scores.empty(), "bce_loss: empty tensors");
    const std::size_t count = scores.size();
    LossResult result;
    result.grad = Tensor(scores.shape());
    double acc = 0.0;
    const float inv_count = 1.0f / static_cast<float>(count);
    for (std::size_t i = 0; i < count; ++i) {
        const float y = labels[i];
        if (y != 0.0f && y != 1.0f) {
            throw DataError("bce_loss: label must be 0 or 1, got " + std::to_string(y));
        }
        const float p = std::clamp(scores[i], kBceClamp, 1.0f - kBceClamp);
        acc -= static_cast<double>(y) * std::log(static_cast<double>(p)) +
               (1.0 - static_cast<double>(y)) * std::log(1.0 - static_cast<double>(p));
        result.grad[i] = (p - y) / (p * (1.0f - p)) * inv_count;
    }
    result.value = acc / static_cast<double>(count);
    if (!std::isfinite(result.value)) throw NumericsError("bce_loss produced a non-finite value");
    ensure_finite(result.grad, "bce_loss");
    return result;
}

}  // namespace gfsl
