#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gfsl/adam.hpp"
#include "gfsl/error.hpp"
#include "gfsl/gradcheck.hpp"
#include "gfsl/ops.hpp"
#include "gfsl/rng.hpp"

using namespace gfsl;

namespace {

// Independent convolution oracle: plain quadruple loops over every output
// element, no bounds tricks shared with the implementation.
Tensor conv2d_reference(const Tensor& input, const Tensor& weights, const Tensor& bias,
                        const ConvSpec& s) {
    const int n_batch = input.dim(0), in_h = input.dim(2), in_w = input.dim(3);
    const int out_h = (in_h + 2 * s.padding - s.kernel_h) / s.stride + 1;
    const int out_w = (in_w + 2 * s.padding - s.kernel_w) / s.stride + 1;
    Tensor out({n_batch, s.out_channels, out_h, out_w});
    for (int n = 0; n < n_batch; ++n)
        for (int o = 0; o < s.out_channels; ++o)
            for (int oh = 0; oh < out_h; ++oh)
                for (int ow = 0; ow < out_w; ++ow) {
                    float acc = bias[(std::size_t)o];
                    for (int i = 0; i < s.in_channels; ++i)
                        for (int kh = 0; kh < s.kernel_h; ++kh)
                            for (int kw = 0; kw < s.kernel_w; ++kw) {
                                const int ih = oh * s.stride - s.padding + kh;
                                const int iw = ow * s.stride - s.padding + kw;
                                if (ih < 0 || ih >= in_h || iw < 0 || iw >= in_w) continue;
                                acc += input[input.offset4(n, i, ih, iw)] *
                                       weights[weights.offset4(o, i, kh, kw)];
                            }
                    out[out.offset4(n, o, oh, ow)] = acc;
                }
    return out;
}

Tensor conv_transpose2d_reference(const Tensor& input, const Tensor& weights, const Tensor& bias,
                                  const ConvSpec& s) {
    const int n_batch = input.dim(0), in_h = input.dim(2), in_w = input.dim(3);
    const int out_h = (in_h - 1) * s.stride - 2 * s.padding + s.kernel_h;
    const int out_w = (in_w - 1) * s.stride - 2 * s.padding + s.kernel_w;
    Tensor out({n_batch, s.out_channels, out_h, out_w});
    for (int n = 0; n < n_batch; ++n)
        for (int o = 0; o < s.out_channels; ++o) {
            for (int oh = 0; oh < out_h; ++oh)
                for (int ow = 0; ow < out_w; ++ow)
                    out[out.offset4(n, o, oh, ow)] = bias[(std::size_t)o];
            for (int i = 0; i < s.in_channels; ++i)
                for (int ih = 0; ih < in_h; ++ih)
                    for (int iw = 0; iw < in_w; ++iw)
                        for (int kh = 0; kh < s.kernel_h; ++kh)
                            for (int kw = 0; kw < s.kernel_w; ++kw) {
                                const int oh = ih * s.stride - s.padding + kh;
                                const int ow = iw * s.stride - s.padding + kw;
                                if (oh < 0 || oh >= out_h || ow < 0 || ow >= out_w) continue;
                                out[out.offset4(n, o, oh, ow)] +=
                                    input[input.offset4(n, i, ih, iw)] *
                                    weights[weights.offset4(i, o, kh, kw)];
                            }
        }
    return out;
}

Tensor random_tensor(const std::vector<int>& shape, Rng& rng, float lo = -1.0f, float hi = 1.0f) {
    Tensor t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

}  // namespace

TEST_CASE("tensor shape and data invariants") {
    Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK(t.size() == 6);
    CHECK(t.rank() == 2);
    CHECK_THROWS_AS(Tensor({2, 3}, {1, 2}), ShapeError);
    CHECK_THROWS_AS(Tensor({0, 3}), ShapeError);
    CHECK_THROWS_AS(Tensor({-1}), ShapeError);
    CHECK(Tensor::full({2}, 0.5f)[1] == 0.5f);
}

TEST_CASE("conv2d identity kernel") {
    ConvSpec spec{1, 1, 1, 1, 1, 0};
    const Tensor input({1, 1, 1, 1}, {3.0f});
    const Tensor kernel({1, 1, 1, 1}, {1.0f});
    const Tensor bias({1}, {0.0f});
    const Tensor out = conv2d_forward(input, kernel, bias, spec);
    CHECK(out.shape() == std::vector<int>{1, 1, 1, 1});
    CHECK(out[0] == 3.0f);
}

TEST_CASE("conv2d 1x1 all-ones kernel is the identity on single-channel input") {
    ConvSpec spec{1, 1, 1, 1, 1, 0};
    const Tensor kernel({1, 1, 1, 1}, {1.0f});
    const Tensor bias({1}, {0.0f});
    Rng rng(42);
    const Tensor input = random_tensor({2, 1, 5, 7}, rng);
    const Tensor out = conv2d_forward(input, kernel, bias, spec);
    CHECK(out == input);
}

TEST_CASE("conv2d hand-summed 2x2 windows") {
    ConvSpec spec{1, 1, 2, 2, 1, 0};
    const Tensor input({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    const Tensor kernel({1, 1, 2, 2}, {1, 1, 1, 1});
    const Tensor bias({1}, {0.0f});
    const Tensor out = conv2d_forward(input, kernel, bias, spec);
    CHECK(out.shape() == std::vector<int>{1, 1, 2, 2});
    CHECK(out[0] == 12.0f);
    CHECK(out[1] == 16.0f);
    CHECK(out[2] == 24.0f);
    CHECK(out[3] == 28.0f);
    // cross-check against the independent loop oracle
    CHECK(out == conv2d_reference(input, kernel, bias, spec));
}

TEST_CASE("conv2d zero kernel and bias annihilate") {
    ConvSpec spec{2, 3, 3, 3, 1, 1};
    Rng rng(7);
    const Tensor input = random_tensor({1, 2, 4, 4}, rng);
    const Tensor kernel({3, 2, 3, 3});
    const Tensor bias({3});
    const Tensor out = conv2d_forward(input, kernel, bias, spec);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == 0.0f);
}

TEST_CASE("conv2d matches the reference oracle on random geometry") {
    Rng rng(1234);
    for (int trial = 0; trial < 20; ++trial) {
        ConvSpec spec;
        spec.in_channels = 1 + rng.uniform_int(3);
        spec.out_channels = 1 + rng.uniform_int(3);
        spec.kernel_h = 1 + rng.uniform_int(3);
        spec.kernel_w = 1 + rng.uniform_int(3);
        spec.stride = 1 + rng.uniform_int(2);
        spec.padding = rng.uniform_int(2);
        const int h = spec.kernel_h + rng.uniform_int(5);
        const int w = spec.kernel_w + rng.uniform_int(5);
        const Tensor input = random_tensor({1 + rng.uniform_int(2), spec.in_channels, h, w}, rng);
        const Tensor kernel = random_tensor(
            {spec.out_channels, spec.in_channels, spec.kernel_h, spec.kernel_w}, rng);
        const Tensor bias = random_tensor({spec.out_channels}, rng);
        const Tensor expected = conv2d_reference(input, kernel, bias, spec);
        const Tensor actual = conv2d_forward(input, kernel, bias, spec);
        REQUIRE(actual.shape() == expected.shape());
        for (std::size_t i = 0; i < actual.size(); ++i) {
            CHECK(actual[i] == doctest::Approx(expected[i]).epsilon(1e-5));
        }
    }
}

TEST_CASE("conv2d shape errors are descriptive") {
    ConvSpec spec{2, 1, 3, 3, 1, 0};
    const Tensor input({1, 1, 4, 4});  // one channel, spec wants two
    const Tensor kernel({1, 2, 3, 3});
    const Tensor bias({1});
    CHECK_THROWS_AS(conv2d_forward(input, kernel, bias, spec), ShapeError);

    ConvSpec shrink{1, 1, 5, 5, 1, 0};
    const Tensor small({1, 1, 3, 3});
    const Tensor big_kernel({1, 1, 5, 5});
    CHECK_THROWS_AS(conv2d_forward(small, big_kernel, bias, shrink), GeometryError);
}

TEST_CASE("conv2d backward identity case") {
    ConvSpec spec{1, 1, 1, 1, 1, 0};
    const Tensor input({1, 1, 1, 1}, {3.0f});
    const Tensor kernel({1, 1, 1, 1}, {1.0f});
    const Tensor grad_out({1, 1, 1, 1}, {1.0f});
    const ConvGrads grads = conv2d_backward(input, kernel, spec, grad_out);
    CHECK(grads.input[0] == 1.0f);
    CHECK(grads.weights[0] == 3.0f);
    CHECK(grads.bias[0] == 1.0f);
}

TEST_CASE("conv2d backward zero grad_output gives zero gradients") {
    ConvSpec spec{2, 3, 3, 3, 2, 1};
    Rng rng(5);
    const Tensor input = random_tensor({2, 2, 6, 6}, rng);
    const Tensor kernel = random_tensor({3, 2, 3, 3}, rng);
    const Tensor bias = random_tensor({3}, rng);
    const Tensor out = conv2d_forward(input, kernel, bias, spec);
    const ConvGrads grads = conv2d_backward(input, kernel, spec, Tensor(out.shape()));
    for (std::size_t i = 0; i < grads.input.size(); ++i) CHECK(grads.input[i] == 0.0f);
    for (std::size_t i = 0; i < grads.weights.size(); ++i) CHECK(grads.weights[i] == 0.0f);
    for (std::size_t i = 0; i < grads.bias.size(); ++i) CHECK(grads.bias[i] == 0.0f);
}

TEST_CASE("conv2d backward matches finite differences on the documented instance") {
    // random 2x4x5x5 input, 3x4x3x3 kernel
    ConvSpec spec{4, 3, 3, 3, 1, 0};
    Rng rng(99);
    const Tensor input = random_tensor({2, 4, 5, 5}, rng);
    const Tensor kernel = random_tensor({3, 4, 3, 3}, rng, -0.5f, 0.5f);
    const Tensor bias = random_tensor({3}, rng, -0.5f, 0.5f);
    const Tensor out = conv2d_forward(input, kernel, bias, spec);
    const Tensor proj = random_tensor(out.shape(), rng);

    const ConvGrads grads = conv2d_backward(input, kernel, spec, proj);
    const auto f = [&](const Tensor& x) {
        const Tensor y = conv2d_forward(x, kernel, bias, spec);
        double acc = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) acc += (double)y[i] * (double)proj[i];
        return acc;
    };
    const Tensor fd = finite_diff_gradient(f, input, 1e-3f);
    CHECK(relative_error(grads.input, fd) < 1e-3);
}

TEST_CASE("conv_transpose2d broadcasts one pixel through the kernel") {
    ConvSpec spec{1, 1, 2, 2, 2, 0};
    const Tensor input({1, 1, 1, 1}, {2.0f});
    const Tensor kernel({1, 1, 2, 2}, {1, 1, 1, 1});
    const Tensor bias({1}, {0.0f});
    const Tensor out = conv_transpose2d_forward(input, kernel, bias, spec);
    CHECK(out.shape() == std::vector<int>{1, 1, 2, 2});
    for (std::size_t i = 0; i < 4; ++i) CHECK(out[i] == 2.0f);
    CHECK(out == conv_transpose2d_reference(input, kernel, bias, spec));
}

TEST_CASE("conv_transpose2d zero input leaves only the bias") {
    ConvSpec spec{3, 2, 4, 4, 2, 1};
    const Tensor input({1, 3, 4, 4});
    Rng rng(3);
    const Tensor kernel = random_tensor({3, 2, 4, 4}, rng);
    const Tensor bias({2}, {0.25f, -0.5f});
    const Tensor out = conv_transpose2d_forward(input, kernel, bias, spec);
    for (int o = 0; o < 2; ++o)
        for (int y = 0; y < out.dim(2); ++y)
            for (int x = 0; x < out.dim(3); ++x)
                CHECK(out[out.offset4(0, o, y, x)] == bias[(std::size_t)o]);
}

TEST_CASE("conv_transpose2d matches the reference oracle on random geometry") {
    Rng rng(4321);
    for (int trial = 0; trial < 20; ++trial) {
        ConvSpec spec;
        spec.in_channels = 1 + rng.uniform_int(3);
        spec.out_channels = 1 + rng.uniform_int(3);
        spec.kernel_h = 2 + rng.uniform_int(3);
        spec.kernel_w = 2 + rng.uniform_int(3);
        spec.stride = 1 + rng.uniform_int(2);
        spec.padding = rng.uniform_int(2);
        int h = 2 + rng.uniform_int(4), w = 2 + rng.uniform_int(4);
        while (spec.deconv_out_dim(h, spec.kernel_h) < 1) ++h;
        while (spec.deconv_out_dim(w, spec.kernel_w) < 1) ++w;
        const Tensor input = random_tensor({1 + rng.uniform_int(2), spec.in_channels, h, w}, rng);
        const Tensor kernel = random_tensor(
            {spec.in_channels, spec.out_channels, spec.kernel_h, spec.kernel_w}, rng);
        const Tensor bias = random_tensor({spec.out_channels}, rng);
        const Tensor expected = conv_transpose2d_reference(input, kernel, bias, spec);
        const Tensor actual = conv_transpose2d_forward(input, kernel, bias, spec);
        REQUIRE(actual.shape() == expected.shape());
        for (std::size_t i = 0; i < actual.size(); ++i) {
            CHECK(actual[i] == doctest::Approx(expected[i]).epsilon(1e-5));
        }
    }
}

TEST_CASE("conv_transpose2d backward matches finite differences") {
    ConvSpec spec{3, 2, 3, 3, 2, 1};
    Rng rng(17);
    const Tensor input = random_tensor({2, 3, 3, 3}, rng);
    const Tensor kernel = random_tensor({3, 2, 3, 3}, rng, -0.5f, 0.5f);
    const Tensor bias = random_tensor({2}, rng, -0.5f, 0.5f);
    const Tensor out = conv_transpose2d_forward(input, kernel, bias, spec);
    const Tensor proj = random_tensor(out.shape(), rng);

    const ConvGrads grads = conv_transpose2d_backward(input, kernel, spec, proj);
    const auto sum_proj = [&proj](const Tensor& y) {
        double acc = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) acc += (double)y[i] * (double)proj[i];
        return acc;
    };
    const Tensor fd_input = finite_diff_gradient(
        [&](const Tensor& x) { return sum_proj(conv_transpose2d_forward(x, kernel, bias, spec)); },
        input, 1e-3f);
    const Tensor fd_weights = finite_diff_gradient(
        [&](const Tensor& w) { return sum_proj(conv_transpose2d_forward(input, w, bias, spec)); },
        kernel, 1e-3f);
    CHECK(relative_error(grads.input, fd_input) < 1e-3);
    CHECK(relative_error(grads.weights, fd_weights) < 1e-3);
}

TEST_CASE("maxpool picks the maximum and routes gradients to it") {
    const Tensor input({1, 1, 2, 2}, {1, 2, 3, 4});
    const MaxPoolResult r = maxpool2d_forward(input, 2, 2);
    CHECK(r.output.size() == 1);
    CHECK(r.output[0] == 4.0f);
    CHECK(r.argmax[0] == 3);

    const Tensor grad = maxpool2d_backward(r.argmax, Tensor({1, 1, 1, 1}, {1.0f}), input.shape());
    CHECK(grad[0] == 0.0f);
    CHECK(grad[1] == 0.0f);
    CHECK(grad[2] == 0.0f);
    CHECK(grad[3] == 1.0f);
}

TEST_CASE("maxpool ties break to the lowest flat index") {
    const Tensor input = Tensor::full({1, 1, 4, 4}, 0.5f);
    const MaxPoolResult r = maxpool2d_forward(input, 2, 2);
    CHECK(r.argmax[0] == 0);
    CHECK(r.argmax[1] == 2);
    CHECK(r.argmax[2] == 8);
    CHECK(r.argmax[3] == 10);
}

TEST_CASE("maxpool backward conserves gradient mass on non-overlapping windows") {
    Rng rng(11);
    const Tensor input = random_tensor({2, 3, 6, 6}, rng);
    const MaxPoolResult r = maxpool2d_forward(input, 2, 2);
    const Tensor grad_out = random_tensor(r.output.shape(), rng);
    const Tensor grad_in = maxpool2d_backward(r.argmax, grad_out, input.shape());
    double sum_in = 0.0, sum_out = 0.0;
    for (std::size_t i = 0; i < grad_in.size(); ++i) sum_in += grad_in[i];
    for (std::size_t i = 0; i < grad_out.size(); ++i) sum_out += grad_out[i];
    CHECK(sum_in == doctest::Approx(sum_out).epsilon(1e-6));
}

TEST_CASE("relu and sigmoid definitions") {
    const Tensor x({3}, {-1.0f, 0.0f, 2.0f});
    const Tensor y = relu_forward(x);
    CHECK(y[0] == 0.0f);
    CHECK(y[1] == 0.0f);
    CHECK(y[2] == 2.0f);
    const Tensor g = relu_backward(x, Tensor({3}, {1, 1, 1}));
    CHECK(g[0] == 0.0f);
    CHECK(g[1] == 0.0f);  // subgradient at exactly 0 is 0
    CHECK(g[2] == 1.0f);

    const Tensor s = sigmoid_forward(Tensor({1}, {0.0f}));
    CHECK(s[0] == 0.5f);
    const Tensor s2 = sigmoid_forward(Tensor({2}, {30.0f, -30.0f}));
    CHECK(s2[0] > 0.999f);
    CHECK(s2[1] < 0.001f);
}

TEST_CASE("linear forward examples") {
    // identity weights, zero bias
    const Tensor identity({2, 2}, {1, 0, 0, 1});
    const Tensor zero_bias({2});
    const Tensor input({1, 2}, {3.5f, -1.25f});
    const Tensor out = linear_forward(input, identity, zero_bias);
    CHECK(out == input);

    // [[1,2]] * [[3,4]]^T + [5] = [[16]]
    const Tensor in2({1, 2}, {1, 2});
    const Tensor w2({1, 2}, {3, 4});
    const Tensor b2({1}, {5});
    CHECK(linear_forward(in2, w2, b2)[0] == 16.0f);
}

TEST_CASE("linear backward matches finite differences") {
    Rng rng(23);
    const Tensor input = random_tensor({3, 5}, rng);
    const Tensor weights = random_tensor({2, 5}, rng, -0.5f, 0.5f);
    const Tensor bias = random_tensor({2}, rng, -0.5f, 0.5f);
    const Tensor proj = random_tensor({3, 2}, rng);
    const LinearGrads grads = linear_backward(input, weights, proj);

    const auto sum_proj = [&proj](const Tensor& y) {
        double acc = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) acc += (double)y[i] * (double)proj[i];
        return acc;
    };
    const Tensor fd_w = finite_diff_gradient(
        [&](const Tensor& w) { return sum_proj(linear_forward(input, w, bias)); }, weights, 1e-3f);
    const Tensor fd_b = finite_diff_gradient(
        [&](const Tensor& b) { return sum_proj(linear_forward(input, weights, b)); }, bias, 1e-3f);
    CHECK(relative_error(grads.weights, fd_w) < 1e-3);
    CHECK(relative_error(grads.bias, fd_b) < 1e-3);
}

TEST_CASE("mse loss values and gradient") {
    const Tensor a({2}, {1.0f, 1.0f});
    CHECK(mse_loss(a, a).value == 0.0);

    const Tensor p({2}, {1.0f, 1.0f});
    const Tensor t({2}, {0.0f, 2.0f});
    const LossResult r = mse_loss(p, t);
    CHECK(r.value == doctest::Approx(1.0));
    CHECK(r.grad[0] == doctest::Approx(1.0f));   // 2*(1-0)/2
    CHECK(r.grad[1] == doctest::Approx(-1.0f));  // 2*(1-2)/2
}

TEST_CASE("bce loss values, clamp, and gradient") {
    const Tensor half({1}, {0.5f});
    const Tensor one({1}, {1.0f});
    CHECK(bce_loss(half, one).value == doctest::Approx(std::log(2.0)).epsilon(1e-6));

    // saturated score stays bounded by the clamp
    const Tensor saturated({1}, {1.0f});
    const double v = bce_loss(saturated, one).value;
    CHECK(v >= 0.0);
    CHECK(v < 1e-5);

    const Tensor bad({1}, {0.5f});
    const Tensor bad_label({1}, {0.25f});
    CHECK_THROWS_AS(bce_loss(bad, bad_label), DataError);
}

TEST_CASE("adam zero gradient leaves the parameter bit-identical") {
    Tensor param({3}, {1.0f, -2.0f, 0.5f});
    const Tensor before = param;
    AdamState state = AdamState::for_param(param);
    for (int i = 0; i < 5; ++i) {
        adam_step(param, Tensor({3}), state);
    }
    CHECK(param == before);
    CHECK(state.t == 5);
}

TEST_CASE("adam first step on a scalar matches the hand evaluation") {
    // m_hat = 1, v_hat = 1 after bias correction: update = lr / (1 + eps)
    Tensor param({1}, {1.0f});
    AdamState state = AdamState::for_param(param);
    adam_step(param, Tensor({1}, {1.0f}), state);
    CHECK(param[0] == doctest::Approx(1.0f - 1e-3f).epsilon(1e-6));
    CHECK(state.t == 1);
    adam_step(param, Tensor({1}, {1.0f}), state);
    CHECK(state.t == 2);
}

TEST_CASE("finite_diff_gradient sanity") {
    // f(x) = x^2 at x = 3
    const Tensor x({1}, {3.0f});
    const Tensor g = finite_diff_gradient(
        [](const Tensor& t) { return (double)t[0] * (double)t[0]; }, x, 1e-3f);
    CHECK(g[0] == doctest::Approx(6.0f).epsilon(1e-4));

    // f = sum of elements -> all-ones gradient
    Rng rng(2);
    const Tensor y = random_tensor({7}, rng);
    const Tensor gs = finite_diff_gradient(
        [](const Tensor& t) {
            double acc = 0.0;
            for (std::size_t i = 0; i < t.size(); ++i) acc += (double)t[i];
            return acc;
        },
        y, 1e-3f);
    for (std::size_t i = 0; i < gs.size(); ++i) CHECK(gs[i] == doctest::Approx(1.0f).epsilon(1e-4));
}

TEST_CASE("forward ops are deterministic within a build") {
    Rng rng(71);
    ConvSpec spec{2, 2, 3, 3, 2, 1};
    const Tensor input = random_tensor({1, 2, 8, 8}, rng);
    const Tensor kernel = random_tensor({2, 2, 3, 3}, rng);
    const Tensor bias = random_tensor({2}, rng);
    const Tensor a = conv2d_forward(input, kernel, bias, spec);
    const Tensor b = conv2d_forward(input, kernel, bias, spec);
    CHECK(a == b);
}

TEST_CASE("full gradient check suite passes") {
    const auto entries = run_gradient_checks(2024);
    CHECK(entries.size() >= 8);
    for (const auto& entry : entries) {
        INFO(entry.layer, " max rel err ", entry.max_rel_error);
        CHECK(entry.passed);
    }
}
