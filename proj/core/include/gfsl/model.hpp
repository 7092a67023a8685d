#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "gfsl/ops.hpp"
#include "gfsl/tensor.hpp"

namespace gfsl {

struct Param {
    std::string name;
    Tensor value;
    Tensor grad;  // same shape as value
    bool frozen = false;
};

// Named tensors in registration order, with matching gradient buffers.
// The unit of checkpointing and transfer.
class ParameterSet {
public:
    Param& add(const std::string& name, Tensor value, bool frozen = false);
    bool contains(const std::string& name) const { return index_.count(name) > 0; }
    Param& at(const std::string& name);
    const Param& at(const std::string& name) const;
    std::vector<Param>& all() { return params_; }
    const std::vector<Param>& all() const { return params_; }
    std::size_t size() const { return params_.size(); }
    void zero_grads();

private:
    std::vector<Param> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Architecture knobs shared by both models. The encoder downsamples by 8x
// over three stride-2 stages, so image_size must be divisible by 8.
struct ModelArch {
    int image_size = 64;
    int channels1 = 16;
    int channels2 = 32;
    int channels3 = 64;
    int fc_width = 128;

    int latent_spatial() const { return image_size / 8; }
    int latent_size() const { return channels3 * latent_spatial() * latent_spatial(); }
    void validate() const;
    bool operator==(const ModelArch&) const = default;
};

// Stores/reads the architecture as a "meta.arch" entry so checkpoints are
// self-describing. Extra named entries do not disturb weight transfer.
void embed_arch(ParameterSet& params, const ModelArch& arch);
ModelArch extract_arch(const ParameterSet& params);

// --- Autoencoder ------------------------------------------------------------
//
// encoder: three Conv(3x3, stride 2, pad 1) + ReLU stages (1 -> c1 -> c2 -> c3)
// decoder: three ConvTranspose(4x4, stride 2, pad 1) stages mirroring the
// channel counts (c3 -> c2 -> c1 -> 1), ReLU between, sigmoid at the end.
// The 4x4 transposed kernels double each spatial dim exactly.

struct AutoencoderModel {
    ModelArch arch;
    ConvSpec enc1, enc2, enc3;
    ConvSpec dec1, dec2, dec3;
    ParameterSet params;
};

AutoencoderModel build_autoencoder(const ModelArch& arch, std::uint64_t seed);
AutoencoderModel build_autoencoder(int image_size, std::uint64_t seed);

// Every intermediate the backward pass needs.
struct AutoencoderTrace {
    Tensor input;
    Tensor pre1, act1, pre2, act2, pre3, latent;
    Tensor dpre1, dact1, dpre2, dact2, dpre3;
    Tensor reconstruction;
};

struct AutoencoderOutput {
    Tensor reconstruction;
    Tensor latent;
};

AutoencoderOutput autoencoder_forward(const AutoencoderModel& model, const Tensor& batch,
                                      AutoencoderTrace* trace = nullptr);

// Accumulates parameter gradients for d(loss)/d(reconstruction).
void autoencoder_backward(AutoencoderModel& model, const AutoencoderTrace& trace,
                          const Tensor& grad_reconstruction);

// --- Classifier -------------------------------------------------------------
//
// encoder: identical stack and parameter names as the autoencoder encoder.
// head: flatten -> FC(latent -> fc_width) + ReLU -> FC(fc_width -> 1) + sigmoid.

struct ClassifierModel {
    ModelArch arch;
    ConvSpec enc1, enc2, enc3;
    ParameterSet params;  // encoder.* frozen, head.* trainable
};

// Copies all encoder tensors bit-exactly from the checkpoint (throws
// TransferError naming any missing or shape-mismatched entry), freshly
// initializes the head from head_seed, and freezes the encoder.
ClassifierModel build_classifier_from_encoder(const ParameterSet& checkpoint,
                                              const ModelArch& arch, std::uint64_t head_seed);

// Rebuilds a fine-tuned classifier from a full checkpoint (encoder, head and
// meta.arch all present).
ClassifierModel restore_classifier(const ParameterSet& checkpoint);

struct ClassifierTrace {
    Tensor flat;          // N x latent_size
    Tensor head_pre1, head_act1, head_pre2;
    Tensor probabilities; // N
};

// One probability in (0, 1) per batch item.
Tensor classifier_forward(const ClassifierModel& model, const Tensor& batch,
                          ClassifierTrace* trace = nullptr);

// Accumulates head gradients only; frozen encoder parameters are never
// touched.
void classifier_backward(ClassifierModel& model, const ClassifierTrace& trace,
                         const Tensor& grad_probabilities);

// Names of the encoder parameters for the given arch, in layer order.
std::vector<std::string> encoder_param_names();

}  // namespace gfsl
