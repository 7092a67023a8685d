#include "gfsl/model.hpp"

#include <cmath>

#include "gfsl/error.hpp"
#include "gfsl/rng.hpp"

namespace gfsl {

Param& ParameterSet::add(const std::string& name, Tensor value, bool frozen) {
    if (contains(name)) {
        throw Error("ParameterSet: duplicate parameter '" + name + "'");
    }
    Param p;
    p.name = name;
    p.grad = Tensor(value.shape());
    p.value = std::move(value);
    p.frozen = frozen;
    index_[name] = params_.size();
    params_.push_back(std::move(p));
    return params_.back();
}

Param& ParameterSet::at(const std::string& name) {
    const auto it = index_.find(name);
    if (it == index_.end()) {
        throw Error("ParameterSet: no parameter named '" + name + "'");
    }
    return params_[it->second];
}

const Param& ParameterSet::at(const std::string& name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) {
        throw Error("ParameterSet: no parameter named '" + name + "'");
    }
    return params_[it->second];
}

void ParameterSet::zero_grads() {
    for (auto& p : params_) {
        std::fill(p.grad.values().begin(), p.grad.values().end(), 0.0f);
    }
}

void ModelArch::validate() const {
    if (image_size < 8 || image_size % 8 != 0) {
        throw GeometryError("image_size must be a positive multiple of 8, got " +
                            std::to_string(image_size));
    }
    if (channels1 < 1 || channels2 < 1 || channels3 < 1 || fc_width < 1) {
        throw GeometryError("channel widths and fc_width must be >= 1");
    }
}

void embed_arch(ParameterSet& params, const ModelArch& arch) {
    Tensor meta({5}, {static_cast<float>(arch.image_size), static_cast<float>(arch.channels1),
                      static_cast<float>(arch.channels2), static_cast<float>(arch.channels3),
                      static_cast<float>(arch.fc_width)});
    if (params.contains("meta.arch")) {
        params.at("meta.arch").value = std::move(meta);
    } else {
        params.add("meta.arch", std::move(meta), true);
    }
}

ModelArch extract_arch(const ParameterSet& params) {
    if (!params.contains("meta.arch")) {
        throw TransferError("checkpoint has no 'meta.arch' entry");
    }
    const Tensor& meta = params.at("meta.arch").value;
    if (meta.size() != 5) {
        throw TransferError("'meta.arch' entry must have 5 values, got " +
                            std::to_string(meta.size()));
    }
    ModelArch arch;
    arch.image_size = static_cast<int>(meta[0]);
    arch.channels1 = static_cast<int>(meta[1]);
    arch.channels2 = static_cast<int>(meta[2]);
    arch.channels3 = static_cast<int>(meta[3]);
    arch.fc_width = static_cast<int>(meta[4]);
    arch.validate();
    return arch;
}

namespace {

ConvSpec conv_spec(int in_c, int out_c) {
    ConvSpec s;
    s.in_channels = in_c;
    s.out_channels = out_c;
    s.kernel_h = s.kernel_w = 3;
    s.stride = 2;
    s.padding = 1;
    return s;
}

ConvSpec deconv_spec(int in_c, int out_c) {
    ConvSpec s;
    s.in_channels = in_c;
    s.out_channels = out_c;
    s.kernel_h = s.kernel_w = 4;
    s.stride = 2;
    s.padding = 1;
    return s;
}

// Fan-in-scaled uniform: U(-b, b) with b = sqrt(1 / fan_in). Biases stay zero.
Tensor init_weight(const std::vector<int>& shape, int fan_in, Rng& rng) {
    Tensor w(shape);
    const float bound = std::sqrt(1.0f / static_cast<float>(fan_in));
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = rng.uniform(-bound, bound);
    }
    return w;
}

void add_conv_params(ParameterSet& params, const std::string& prefix, const ConvSpec& spec,
                     Rng& rng) {
    const int fan_in = spec.in_channels * spec.kernel_h * spec.kernel_w;
    params.add(prefix + ".weight",
               init_weight({spec.out_channels, spec.in_channels, spec.kernel_h, spec.kernel_w},
                           fan_in, rng));
    params.add(prefix + ".bias", Tensor({spec.out_channels}));
}

void add_deconv_params(ParameterSet& params, const std::string& prefix, const ConvSpec& spec,
                       Rng& rng) {
    const int fan_in = spec.in_channels * spec.kernel_h * spec.kernel_w;
    params.add(prefix + ".weight",
               init_weight({spec.in_channels, spec.out_channels, spec.kernel_h, spec.kernel_w},
                           fan_in, rng));
    params.add(prefix + ".bias", Tensor({spec.out_channels}));
}

void add_linear_params(ParameterSet& params, const std::string& prefix, int in_features,
                       int out_features, Rng& rng) {
    params.add(prefix + ".weight", init_weight({out_features, in_features}, in_features, rng));
    params.add(prefix + ".bias", Tensor({out_features}));
}

Tensor flatten_batch(const Tensor& t) {
    const int n = t.dim(0);
    const int features = static_cast<int>(t.size()) / n;
    return Tensor({n, features}, t.values());
}

}  // namespace

std::vector<std::string> encoder_param_names() {
    return {"encoder.conv1.weight", "encoder.conv1.bias", "encoder.conv2.weight",
            "encoder.conv2.bias",   "encoder.conv3.weight", "encoder.conv3.bias"};
}

AutoencoderModel build_autoencoder(const ModelArch& arch, std::uint64_t seed) {
    arch.validate();
    AutoencoderModel model;
    model.arch = arch;
    model.enc1 = conv_spec(1, arch.channels1);
    model.enc2 = conv_spec(arch.channels1, arch.channels2);
    model.enc3 = conv_spec(arch.channels2, arch.channels3);
    model.dec1 = deconv_spec(arch.channels3, arch.channels2);
    model.dec2 = deconv_spec(arch.channels2, arch.channels1);
    model.dec3 = deconv_spec(arch.channels1, 1);

    Rng rng = Rng::derive(seed, 0x6D6F64656Cull);  // "model"
    add_conv_params(model.params, "encoder.conv1", model.enc1, rng);
    add_conv_params(model.params, "encoder.conv2", model.enc2, rng);
    add_conv_params(model.params, "encoder.conv3", model.enc3, rng);
    add_deconv_params(model.params, "decoder.deconv1", model.dec1, rng);
    add_deconv_params(model.params, "decoder.deconv2", model.dec2, rng);
    add_deconv_params(model.params, "decoder.deconv3", model.dec3, rng);
    embed_arch(model.params, arch);
    return model;
}

AutoencoderModel build_autoencoder(int image_size, std::uint64_t seed) {
    ModelArch arch;
    arch.image_size = image_size;
    return build_autoencoder(arch, seed);
}

AutoencoderOutput autoencoder_forward(const AutoencoderModel& model, const Tensor& batch,
                                      AutoencoderTrace* trace) {
    if (batch.rank() != 4 || batch.dim(1) != 1 || batch.dim(2) != model.arch.image_size ||
        batch.dim(3) != model.arch.image_size) {
        throw ShapeError("autoencoder_forward: batch must be Nx1x" +
                         std::to_string(model.arch.image_size) + "x" +
                         std::to_string(model.arch.image_size) + ", got " + batch.shape_str());
    }
    const ParameterSet& p = model.params;
    AutoencoderTrace local;
    AutoencoderTrace& t = trace ? *trace : local;

    t.input = batch;
    t.pre1 = conv2d_forward(batch, p.at("encoder.conv1.weight").value,
                            p.at("encoder.conv1.bias").value, model.enc1);
    t.act1 = relu_forward(t.pre1);
    t.pre2 = conv2d_forward(t.act1, p.at("encoder.conv2.weight").value,
                            p.at("encoder.conv2.bias").value, model.enc2);
    t.act2 = relu_forward(t.pre2);
    t.pre3 = conv2d_forward(t.act2, p.at("encoder.conv3.weight").value,
                            p.at("encoder.conv3.bias").value, model.enc3);
    t.latent = relu_forward(t.pre3);

    t.dpre1 = conv_transpose2d_forward(t.latent, p.at("decoder.deconv1.weight").value,
                                       p.at("decoder.deconv1.bias").value, model.dec1);
    t.dact1 = relu_forward(t.dpre1);
    t.dpre2 = conv_transpose2d_forward(t.dact1, p.at("decoder.deconv2.weight").value,
                                       p.at("decoder.deconv2.bias").value, model.dec2);
    t.dact2 = relu_forward(t.dpre2);
    t.dpre3 = conv_transpose2d_forward(t.dact2, p.at("decoder.deconv3.weight").value,
                                       p.at("decoder.deconv3.bias").value, model.dec3);
    t.reconstruction = sigmoid_forward(t.dpre3);

    return AutoencoderOutput{t.reconstruction, t.latent};
}

namespace {

void accumulate(Tensor& dst, const Tensor& src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

void autoencoder_backward(AutoencoderModel& model, const AutoencoderTrace& trace,
                          const Tensor& grad_reconstruction) {
    ParameterSet& p = model.params;
    Tensor g = sigmoid_backward(trace.reconstruction, grad_reconstruction);

    ConvGrads d3 = conv_transpose2d_backward(trace.dact2, p.at("decoder.deconv3.weight").value,
                                             model.dec3, g);
    accumulate(p.at("decoder.deconv3.weight").grad, d3.weights);
    accumulate(p.at("decoder.deconv3.bias").grad, d3.bias);
    g = relu_backward(trace.dpre2, d3.input);

    ConvGrads d2 = conv_transpose2d_backward(trace.dact1, p.at("decoder.deconv2.weight").value,
                                             model.dec2, g);
    accumulate(p.at("decoder.deconv2.weight").grad, d2.weights);
    accumulate(p.at("decoder.deconv2.bias").grad, d2.bias);
    g = relu_backward(trace.dpre1, d2.input);

    ConvGrads d1 = conv_transpose2d_backward(trace.latent, p.at("decoder.deconv1.weight").value,
                                             model.dec1, g);
    accumulate(p.at("decoder.deconv1.weight").grad, d1.weights);
    accumulate(p.at("decoder.deconv1.bias").grad, d1.bias);
    g = relu_backward(trace.pre3, d1.input);

    ConvGrads e3 = conv2d_backward(trace.act2, p.at("encoder.conv3.weight").value, model.enc3, g);
    accumulate(p.at("encoder.conv3.weight").grad, e3.weights);
    accumulate(p.at("encoder.conv3.bias").grad, e3.bias);
    g = relu_backward(trace.pre2, e3.input);

    ConvGrads e2 = conv2d_backward(trace.act1, p.at("encoder.conv2.weight").value, model.enc2, g);
    accumulate(p.at("encoder.conv2.weight").grad, e2.weights);
    accumulate(p.at("encoder.conv2.bias").grad, e2.bias);
    g = relu_backward(trace.pre1, e2.input);

    ConvGrads e1 = conv2d_backward(trace.input, p.at("encoder.conv1.weight").value, model.enc1, g);
    accumulate(p.at("encoder.conv1.weight").grad, e1.weights);
    accumulate(p.at("encoder.conv1.bias").grad, e1.bias);
}

ClassifierModel build_classifier_from_encoder(const ParameterSet& checkpoint,
                                              const ModelArch& arch, std::uint64_t head_seed) {
    arch.validate();
    ClassifierModel model;
    model.arch = arch;
    model.enc1 = conv_spec(1, arch.channels1);
    model.enc2 = conv_spec(arch.channels1, arch.channels2);
    model.enc3 = conv_spec(arch.channels2, arch.channels3);

    // Expected encoder shapes for this arch.
    AutoencoderModel reference = build_autoencoder(arch, 0);
    for (const std::string& name : encoder_param_names()) {
        if (!checkpoint.contains(name)) {
            throw TransferError("checkpoint is missing encoder entry '" + name + "'");
        }
        const Tensor& src = checkpoint.at(name).value;
        const Tensor& expected = reference.params.at(name).value;
        if (!src.same_shape(expected)) {
            throw TransferError("checkpoint entry '" + name + "' has shape " + src.shape_str() +
                                ", expected " + expected.shape_str());
        }
        model.params.add(name, src, /*frozen=*/true);
    }

    Rng rng = Rng::derive(head_seed, 0x68656164ull);  // "head"
    add_linear_params(model.params, "head.fc1", arch.latent_size(), arch.fc_width, rng);
    add_linear_params(model.params, "head.fc2", arch.fc_width, 1, rng);
    embed_arch(model.params, arch);
    return model;
}

ClassifierModel restore_classifier(const ParameterSet& checkpoint) {
    const ModelArch arch = extract_arch(checkpoint);
    ClassifierModel model = build_classifier_from_encoder(checkpoint, arch, 0);
    for (const char* name : {"head.fc1.weight", "head.fc1.bias", "head.fc2.weight",
                             "head.fc2.bias"}) {
        if (!checkpoint.contains(name)) {
            throw TransferError("checkpoint is missing head entry '" + std::string(name) + "'");
        }
        Tensor& dst = model.params.at(name).value;
        const Tensor& src = checkpoint.at(name).value;
        if (!src.same_shape(dst)) {
            throw TransferError("checkpoint entry '" + std::string(name) + "' has shape " +
                                src.shape_str() + ", expected " + dst.shape_str());
        }
        dst = src;
    }
    return model;
}

Tensor classifier_forward(const ClassifierModel& model, const Tensor& batch,
                          ClassifierTrace* trace) {
    if (batch.rank() != 4 || batch.dim(1) != 1 || batch.dim(2) != model.arch.image_size ||
        batch.dim(3) != model.arch.image_size) {
        throw ShapeError("classifier_forward: batch must be Nx1x" +
                         std::to_string(model.arch.image_size) + "x" +
                         std::to_string(model.arch.image_size) + ", got " + batch.shape_str());
    }
    const ParameterSet& p = model.params;
    ClassifierTrace local;
    ClassifierTrace& t = trace ? *trace : local;

    Tensor x = conv2d_forward(batch, p.at("encoder.conv1.weight").value,
                              p.at("encoder.conv1.bias").value, model.enc1);
    x = relu_forward(x);
    x = conv2d_forward(x, p.at("encoder.conv2.weight").value, p.at("encoder.conv2.bias").value,
                       model.enc2);
    x = relu_forward(x);
    x = conv2d_forward(x, p.at("encoder.conv3.weight").value, p.at("encoder.conv3.bias").value,
                       model.enc3);
    x = relu_forward(x);

    t.flat = flatten_batch(x);
    t.head_pre1 = linear_forward(t.flat, p.at("head.fc1.weight").value, p.at("head.fc1.bias").value);
    t.head_act1 = relu_forward(t.head_pre1);
    t.head_pre2 =
        linear_forward(t.head_act1, p.at("head.fc2.weight").value, p.at("head.fc2.bias").value);
    Tensor prob2d = sigmoid_forward(t.head_pre2);
    t.probabilities = Tensor({prob2d.dim(0)}, prob2d.values());
    return t.probabilities;
}

void classifier_backward(ClassifierModel& model, const ClassifierTrace& trace,
                         const Tensor& grad_probabilities) {
    if (grad_probabilities.size() != trace.probabilities.size()) {
        throw ShapeError("classifier_backward: gradient size " +
                         std::to_string(grad_probabilities.size()) + " != batch size " +
                         std::to_string(trace.probabilities.size()));
    }
    ParameterSet& p = model.params;
    const Tensor prob2d({trace.head_pre2.dim(0), 1}, trace.probabilities.values());
    const Tensor grad2d({trace.head_pre2.dim(0), 1}, grad_probabilities.values());

    Tensor g = sigmoid_backward(prob2d, grad2d);
    LinearGrads fc2 = linear_backward(trace.head_act1, p.at("head.fc2.weight").value, g);
    accumulate(p.at("head.fc2.weight").grad, fc2.weights);
    accumulate(p.at("head.fc2.bias").grad, fc2.bias);
    g = relu_backward(trace.head_pre1, fc2.input);

    LinearGrads fc1 = linear_backward(trace.flat, p.at("head.fc1.weight").value, g);
    accumulate(p.at("head.fc1.weight").grad, fc1.weights);
    accumulate(p.at("head.fc1.bias").grad, fc1.bias);
    // The gradient stops here: the encoder is frozen by contract.
}

}  // namespace gfsl
