#include "gfsl/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "gfsl/error.hpp"
#include "gfsl/ops.hpp"
#include "gfsl/rng.hpp"

namespace gfsl {

Tensor finite_diff_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                            float eps) {
    Tensor grad(x.shape());
    Tensor probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const float orig = probe[i];
        const float xp = orig + eps;
        const float xm = orig - eps;
        probe[i] = xp;
        const double fp = f(probe);
        probe[i] = xm;
        const double fm = f(probe);
        probe[i] = orig;
        // Use the realized step, not the nominal one; the float additions round.
        const double denom = static_cast<double>(xp) - static_cast<double>(xm);
        if (denom == 0.0) {
            throw NumericsError("finite_diff_gradient: step vanished at element " +
                                std::to_string(i));
        }
        grad[i] = static_cast<float>((fp - fm) / denom);
    }
    return grad;
}

double relative_error(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw ShapeError("relative_error: shapes " + a.shape_str() + " and " + b.shape_str() +
                         " differ");
    }
    double diff = 0.0, norm_a = 0.0, norm_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff = std::max(diff, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
        norm_a = std::max(norm_a, std::abs(static_cast<double>(a[i])));
        norm_b = std::max(norm_b, std::abs(static_cast<double>(b[i])));
    }
    return diff / std::max({1.0, norm_a, norm_b});
}

namespace {

constexpr int kInstancesPerLayer = 6;

Tensor random_tensor(const std::vector<int>& shape, Rng& rng, float lo, float hi) {
    Tensor t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

// Distinct values with pairwise gaps well above the probe step, shuffled.
// Keeps maxpool argmax stable under +/- eps perturbation.
Tensor well_separated_tensor(const std::vector<int>& shape, Rng& rng) {
    Tensor t(shape);
    std::vector<float> values(t.size());
    const float gap = 6.0f / static_cast<float>(t.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = -3.0f + gap * static_cast<float>(i);
    }
    rng.shuffle(values);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = values[i];
    return t;
}

// Sum of elementwise products, accumulated in double. Projecting a tensor
// output to a scalar this way lets one backward call with grad_output = proj
// be checked against finite differences of the scalar.
double proj_sum(const Tensor& t, const Tensor& proj) {
    double acc = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        acc += static_cast<double>(t[i]) * static_cast<double>(proj[i]);
    }
    return acc;
}

struct Tracker {
    double max_rel = 0.0;
    void update(const Tensor& analytic, const Tensor& fd) {
        max_rel = std::max(max_rel, relative_error(analytic, fd));
    }
};

GradCheckEntry make_entry(const std::string& layer, const Tracker& t, double tol) {
    return GradCheckEntry{layer, t.max_rel, tol, t.max_rel <= tol};
}

void check_conv2d(Rng& rng, std::vector<GradCheckEntry>& out) {
    Tracker input_t, weights_t, bias_t;
    for (int inst = 0; inst < kInstancesPerLayer; ++inst) {
        ConvSpec spec;
        spec.in_channels = 1 + rng.uniform_int(3);
        spec.out_channels = 1 + rng.uniform_int(3);
        spec.kernel_h = 1 + rng.uniform_int(3);
        spec.kernel_w = 1 + rng.uniform_int(3);
        spec.stride = 1 + rng.uniform_int(2);
        spec.padding = rng.uniform_int(2);
        const int n = 1 + rng.uniform_int(2);
        const int h = spec.kernel_h + 2 + rng.uniform_int(3);
        const int w = spec.kernel_w + 2 + rng.uniform_int(3);
        const Tensor input = random_tensor({n, spec.in_channels, h, w}, rng, -1.0f, 1.0f);
        const Tensor weights = random_tensor(
            {spec.out_channels, spec.in_channels, spec.kernel_h, spec.kernel_w}, rng, -0.5f, 0.5f);
        const Tensor bias = random_tensor({spec.out_channels}, rng, -0.5f, 0.5f);
        const Tensor proj =
            random_tensor(conv2d_forward(input, weights, bias, spec).shape(), rng, -1.0f, 1.0f);

        const ConvGrads grads = conv2d_backward(input, weights, spec, proj);
        input_t.update(grads.input,
                       finite_diff_gradient(
                           [&](const Tensor& x) {
                               return proj_sum(conv2d_forward(x, weights, bias, spec), proj);
                           },
                           input, kGradCheckEps));
        weights_t.update(grads.weights,
                         finite_diff_gradient(
                             [&](const Tensor& w_) {
                                 return proj_sum(conv2d_forward(input, w_, bias, spec), proj);
                             },
                             weights, kGradCheckEps));
        bias_t.update(grads.bias,
                      finite_diff_gradient(
                          [&](const Tensor& b_) {
                              return proj_sum(conv2d_forward(input, weights, b_, spec), proj);
                          },
                          bias, kGradCheckEps));
    }
    out.push_back(make_entry("conv2d/grad_input", input_t, kGradCheckTol));
    out.push_back(make_entry("conv2d/grad_weights", weights_t, kGradCheckTol));
    out.push_back(make_entry("conv2d/grad_bias", bias_t, kGradCheckTol));
}

void check_conv_transpose2d(Rng& rng, std::vector<GradCheckEntry>& out) {
    Tracker input_t, weights_t, bias_t;
    for (int inst = 0; inst < kInstancesPerLayer; ++inst) {
        ConvSpec spec;
        spec.in_channels = 1 + rng.uniform_int(3);
        spec.out_channels = 1 + rng.uniform_int(3);
        spec.kernel_h = 2 + rng.uniform_int(3);
        spec.kernel_w = 2 + rng.uniform_int(3);
        spec.stride = 1 + rng.uniform_int(2);
        spec.padding = rng.uniform_int(2);
        const int n = 1 + rng.uniform_int(2);
        int h = 2 + rng.uniform_int(4);
        int w = 2 + rng.uniform_int(4);
        while (spec.deconv_out_dim(h, spec.kernel_h) < 1) ++h;
        while (spec.deconv_out_dim(w, spec.kernel_w) < 1) ++w;
        const Tensor input = random_tensor({n, spec.in_channels, h, w}, rng, -1.0f, 1.0f);
        const Tensor weights = random_tensor(
            {spec.in_channels, spec.out_channels, spec.kernel_h, spec.kernel_w}, rng, -0.5f, 0.5f);
        const Tensor bias = random_tensor({spec.out_channels}, rng, -0.5f, 0.5f);
        const Tensor proj = random_tensor(
            conv_transpose2d_forward(input, weights, bias, spec).shape(), rng, -1.0f, 1.0f);

        const ConvGrads grads = conv_transpose2d_backward(input, weights, spec, proj);
        input_t.update(grads.input,
                       finite_diff_gradient(
                           [&](const Tensor& x) {
                               return proj_sum(conv_transpose2d_forward(x, weights, bias, spec),
                                               proj);
                           },
                           input, kGradCheckEps));
        weights_t.update(grads.weights,
                         finite_diff_gradient(
                             [&](const Tensor& w_) {
                                 return proj_sum(conv_transpose2d_forward(input, w_, bias, spec),
                                                 proj);
                             },
                             weights, kGradCheckEps));
        bias_t.update(grads.bias,
                      finite_diff_gradient(
                          [&](const Tensor& b_) {
                              return proj_sum(conv_transpose2d_forward(input, weights, b_, spec),
                                              proj);
                          },
                          bias, kGradCheckEps));
    }
    out.push_back(make_entry("conv_transpose2d/grad_input", input_t, kGradCheckTol));
    out.push_back(make_entry("conv_transpose2d/grad_weights", weights_t, kGradCheckTol));
    out.push_back(make_entry("conv_transpose2d/grad_bias", bias_t, kGradCheckTol));
}

void check_maxpool(Rng& rng, std::vector<GradCheckEntry>& out) {
    Tracker input_t;
    for (int inst = 0; inst < kInstancesPerLayer; ++inst) {
        const int window = 2 + rng.uniform_int(2);
        const int stride = 1 + rng.uniform_int(3);
        const int n = 1 + rng.uniform_int(2);
        const int c = 1 + rng.uniform_int(3);
        const int h = window + 2 + rng.uniform_int(3);
        const int w = window + 2 + rng.uniform_int(3);
        const Tensor input = well_separated_tensor({n, c, h, w}, rng);
        const MaxPoolResult fwd = maxpool2d_forward(input, window, stride);
        const Tensor proj = random_tensor(fwd.output.shape(), rng, -1.0f, 1.0f);

        const Tensor analytic = maxpool2d_backward(fwd.argmax, proj, input.shape());
        input_t.update(analytic,
                       finite_diff_gradient(
                           [&](const Tensor& x) {
                               return proj_sum(maxpool2d_forward(x, window, stride).output, proj);
                           },
                           input, kGradCheckEps));
    }
    out.push_back(make_entry("maxpool2d/grad_input", input_t, kGradCheckTol));
}

void check_linear(Rng& rng, std::vector<GradCheckEntry>& out) {
    Tracker input_t, weights_t, bias_t;
    for (int inst = 0; inst < kInstancesPerLayer; ++inst) {
        const int n = 1 + rng.uniform_int(4);
        const int f = 2 + rng.uniform_int(5);
        const int g = 1 + rng.uniform_int(4);
        const Tensor input = random_tensor({n, f}, rng, -1.0f, 1.0f);
        const Tensor weights = random_tensor({g, f}, rng, -0.5f, 0.5f);
        const Tensor bias = random_tensor({g}, rng, -0.5f, 0.5f);
        const Tensor proj = random_tensor({n, g}, rng, -1.0f, 1.0f);

        const LinearGrads grads = linear_backward(input, weights, proj);
        input_t.update(grads.input, finite_diff_gradient(
                                        [&](const Tensor& x) {
                                            return proj_sum(linear_forward(x, weights, bias), proj);
                                        },
                                        input, kGradCheckEps));
        weights_t.update(grads.weights,
                         finite_diff_gradient(
                             [&](const Tensor& w_) {
                                 return proj_sum(linear_forward(input, w_, bias), proj);
                             },
                             weights, kGradCheckEps));
        bias_t.update(grads.bias, finite_diff_gradient(
                                      [&](const Tensor& b_) {
                                          return proj_sum(linear_forward(input, weights, b_), proj);
                                      },
                                      bias, kGradCheckEps));
    }
    out.push_back(make_entry("linear/grad_input", input_t, kGradCheckTol));
    out.push_back(make_entry("linear/grad_weights", weights_t, kGradCheckTol));
    out.push_back(make_entry("linear/grad_bias", bias_t, kGradCheckTol));
}

void check_relu(Rng& rng, std::vector<GradCheckEntry>& out) {
    Tracker t;
    for (int inst = 0; inst < kInstancesPerLayer; ++inst) {
        const int n = 4 + rng.uniform_int(12);
        Tensor input({n});
        for (int i = 0; i < n; ++i) {
            // Keep a margin around the kink at 0 so +/- eps cannot cross it.
            const float magnitude = rng.uniform(0.01f, 1.0f);
            input[static_cast<std::size_t>(i)] = rng.bernoulli(0.5) ? magnitude : -magnitude;
        }
        const Tensor proj = random_tensor({n}, rng, -1.0f, 1.0f);
        const Tensor analytic = relu_backward(input, proj);
        t.update(analytic, finite_diff_gradient(
                               [&](const Tensor& x) { return proj_sum(relu_forward(x), proj); },
                               input, kGradCheckEps));
    }
    out.push_back(make_entry("relu/grad_input", t, kGradCheckTol));
}

void check_sigmoid(Rng& rng, std::vector<GradCheckEntry>& out) {
    Tracker t;
    for (int inst = 0; inst < kInstancesPerLayer; ++inst) {
        const int n = 4 + rng.uniform_int(12);
        const Tensor input = random_tensor({n}, rng, -3.0f, 3.0f);
        const Tensor proj = random_tensor({n}, rng, -1.0f, 1.0f);
        const Tensor analytic = sigmoid_backward(sigmoid_forward(input), proj);
        t.update(analytic, finite_diff_gradient(
                               [&](const Tensor& x) { return proj_sum(sigmoid_forward(x), proj); },
                               input, kGradCheckEps));
    }
    out.push_back(make_entry("sigmoid/grad_input", t, kGradCheckTolSmooth));
}

void check_mse(Rng& rng, std::vector<GradCheckEntry>& out) {
    Tracker t;
    for (int inst = 0; inst < kInstancesPerLayer; ++inst) {
        const int n = 4 + rng.uniform_int(12);
        const Tensor prediction = random_tensor({n}, rng, 0.0f, 1.0f);
        const Tensor target = random_tensor({n}, rng, 0.0f, 1.0f);
        const Tensor analytic = mse_loss(prediction, target).grad;
        t.update(analytic,
                 finite_diff_gradient([&](const Tensor& p) { return mse_loss(p, target).value; },
                                      prediction, kGradCheckEps));
    }
    out.push_back(make_entry("mse_loss/grad", t, kGradCheckTolSmooth));
}

void check_bce(Rng& rng, std::vector<GradCheckEntry>& out) {
    Tracker t;
    for (int inst = 0; inst < kInstancesPerLayer; ++inst) {
        const int n = 4 + rng.uniform_int(12);
        // Away from the clamp region, where the loss is smooth.
        const Tensor scores = random_tensor({n}, rng, 0.2f, 0.8f);
        Tensor labels({n});
        for (int i = 0; i < n; ++i) {
            labels[static_cast<std::size_t>(i)] = rng.bernoulli(0.5) ? 1.0f : 0.0f;
        }
        const Tensor analytic = bce_loss(scores, labels).grad;
        t.update(analytic,
                 finite_diff_gradient([&](const Tensor& s) { return bce_loss(s, labels).value; },
                                      scores, kGradCheckEps));
    }
    out.push_back(make_entry("bce_loss/grad", t, kGradCheckTolSmooth));
}

}  // namespace

std::vector<GradCheckEntry> run_gradient_checks(std::uint64_t seed) {
    std::vector<GradCheckEntry> entries;
    Rng rng = Rng::derive(seed, 0x6772616463686Bull);  // "gradchk"
    check_conv2d(rng, entries);
    check_conv_transpose2d(rng, entries);
    check_maxpool(rng, entries);
    check_linear(rng, entries);
    check_relu(rng, entries);
    check_sigmoid(rng, entries);
    check_mse(rng, entries);
    check_bce(rng, entries);
    return entries;
}

}  // namespace gfsl
