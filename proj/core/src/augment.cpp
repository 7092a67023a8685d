#include "gfsl/augment.hpp"

#include <algorithm>
#include <cmath>

#include "gfsl/dataset.hpp"
#include "gfsl/error.hpp"

namespace gfsl {

void AugmentationConfig::validate() const {
    if (rotation_max_degrees < 0.0f) {
        throw DataError("augmentation: rotation_max_degrees must be >= 0");
    }
    if (horizontal_flip_probability < 0.0f || horizontal_flip_probability > 1.0f) {
        throw DataError("augmentation: horizontal_flip_probability must be in [0, 1]");
    }
    if (random_crop_fraction <= 0.0f || random_crop_fraction > 1.0f) {
        throw DataError("augmentation: random_crop_fraction must be in (0, 1]");
    }
}

namespace {

// Rotation about the image center, inverse-mapped with bilinear sampling and
// zero fill outside the source.
Tensor rotate(const Tensor& image, float degrees) {
    const int h = image.dim(1), w = image.dim(2);
    const float radians = degrees * 3.14159265358979323846f / 180.0f;
    const float c = std::cos(radians);
    const float s = std::sin(radians);
    const float cx = static_cast<float>(w - 1) / 2.0f;
    const float cy = static_cast<float>(h - 1) / 2.0f;

    Tensor out({1, h, w});
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const float dx = static_cast<float>(x) - cx;
            const float dy = static_cast<float>(y) - cy;
            const float sx = c * dx + s * dy + cx;
            const float sy = -s * dx + c * dy + cy;
            const int x0 = static_cast<int>(std::floor(sx));
            const int y0 = static_cast<int>(std::floor(sy));
            const float fx = sx - static_cast<float>(x0);
            const float fy = sy - static_cast<float>(y0);
            const auto sample = [&](int yy, int xx) -> float {
                if (yy < 0 || yy >= h || xx < 0 || xx >= w) return 0.0f;
                return image[static_cast<std::size_t>(yy) * w + xx];
            };
            const float top = sample(y0, x0) + (sample(y0, x0 + 1) - sample(y0, x0)) * fx;
            const float bottom =
                sample(y0 + 1, x0) + (sample(y0 + 1, x0 + 1) - sample(y0 + 1, x0)) * fx;
            out[static_cast<std::size_t>(y) * w + x] = top + (bottom - top) * fy;
        }
    }
    return out;
}

Tensor flip_horizontal(const Tensor& image) {
    const int h = image.dim(1), w = image.dim(2);
    Tensor out({1, h, w});
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            out[static_cast<std::size_t>(y) * w + x] =
                image[static_cast<std::size_t>(y) * w + (w - 1 - x)];
        }
    }
    return out;
}

}  // namespace

Tensor augment(const Tensor& image, const AugmentationConfig& config, Rng& rng) {
    if (image.rank() != 3 || image.dim(0) != 1 || image.dim(1) != image.dim(2)) {
        throw ShapeError("augment: image must be 1xSxS, got " + image.shape_str());
    }
    if (!config.enabled) {
        return image;
    }
    config.validate();
    const int size = image.dim(1);

    // Draw order is fixed (angle, flip, crop y, crop x) so streams are stable.
    const float angle = rng.uniform(-config.rotation_max_degrees, config.rotation_max_degrees);
    const bool flip = rng.bernoulli(config.horizontal_flip_probability);
    const int side = std::clamp(
        static_cast<int>(std::lround(config.random_crop_fraction * static_cast<float>(size))), 1,
        size);
    const int oy = rng.uniform_int(size - side + 1);
    const int ox = rng.uniform_int(size - side + 1);

    Tensor out = rotate(image, angle);
    if (flip) {
        out = flip_horizontal(out);
    }
    if (side != size || oy != 0 || ox != 0) {
        Tensor crop({1, side, side});
        for (int y = 0; y < side; ++y) {
            for (int x = 0; x < side; ++x) {
                crop[static_cast<std::size_t>(y) * side + x] =
                    out[static_cast<std::size_t>(y + oy) * size + (x + ox)];
            }
        }
        out = preprocess(crop, size);
    }
    ensure_finite(out, "augment");
    return out;
}

}  // namespace gfsl
