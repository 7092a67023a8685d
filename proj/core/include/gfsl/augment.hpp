#pragma once

#include "gfsl/rng.hpp"
#include "gfsl/tensor.hpp"

namespace gfsl {

struct AugmentationConfig {
    float rotation_max_degrees = 15.0f;
    float horizontal_flip_probability = 0.5f;
    float random_crop_fraction = 0.9f;
    bool enabled = true;

    void validate() const;
};

// Applies, in order: rotation by an angle uniform in [-max, +max] degrees
// about the image center (bilinear, zero fill); horizontal flip with the
// configured probability; a random square crop of side fraction*size resized
// back to the original size. A disabled config returns the input unchanged.
Tensor augment(const Tensor& image, const AugmentationConfig& config, Rng& rng);

}  // namespace gfsl
