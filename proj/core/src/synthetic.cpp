#include "gfsl/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "gfsl/error.hpp"
#include "gfsl/pgm.hpp"
#include "gfsl/rng.hpp"

namespace gfsl {

namespace {

struct Ellipse {
    float cx, cy, ax, ay;

    // Squared normalized radius: < 1 inside.
    float radius2(float x, float y) const {
        const float dx = (x - cx) / ax;
        const float dy = (y - cy) / ay;
        return dx * dx + dy * dy;
    }
};

float smoothstep(float lo, float hi, float v) {
    const float t = std::clamp((v - lo) / (hi - lo), 0.0f, 1.0f);
    return t * t * (3.0f - 2.0f * t);
}

}  // namespace

Tensor synthetic_image(int label, int index, int image_size, std::uint64_t seed) {
    if (label != 0 && label != 1) {
        throw DataError("synthetic_image: label must be 0 or 1");
    }
    if (image_size < 16) {
        throw DataError("synthetic_image: image_size must be >= 16");
    }
    const float s = static_cast<float>(image_size);
    Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(label) * 0x100000ull +
                                    static_cast<std::uint64_t>(index));

    // Jittered scene: a bright ramp, two dark "lung" ellipses, and for the
    // positive class a few bright blobs inside them. Exposure and contrast
    // jitter plus heavy film grain are class-irrelevant nuisance.
    const float base = rng.uniform(0.52f, 0.72f);
    const float ramp = rng.uniform(0.10f, 0.20f);
    const float dark = rng.uniform(0.14f, 0.30f);

    Ellipse lungs[2];
    for (int k = 0; k < 2; ++k) {
        const float cx0 = k == 0 ? 0.32f : 0.68f;
        lungs[k].cx = (cx0 + rng.uniform(-0.025f, 0.025f)) * s;
        lungs[k].cy = (0.52f + rng.uniform(-0.03f, 0.03f)) * s;
        lungs[k].ax = (0.13f + rng.uniform(-0.02f, 0.02f)) * s;
        lungs[k].ay = (0.26f + rng.uniform(-0.03f, 0.03f)) * s;
    }

    struct Blob {
        float cx, cy, sigma, amplitude;
    };
    Blob blobs[3];
    int n_blobs = 0;
    if (label == 1) {
        n_blobs = 1 + rng.uniform_int(3);
        for (int k = 0; k < n_blobs; ++k) {
            const Ellipse& host = lungs[rng.uniform_int(2)];
            blobs[k].cx = host.cx + rng.uniform(-0.5f, 0.5f) * host.ax;
            blobs[k].cy = host.cy + rng.uniform(-0.5f, 0.5f) * host.ay;
            blobs[k].sigma = rng.uniform(0.055f, 0.095f) * s;
            blobs[k].amplitude = rng.uniform(0.16f, 0.30f);
        }
    }

    Tensor image({1, image_size, image_size});
    for (int y = 0; y < image_size; ++y) {
        for (int x = 0; x < image_size; ++x) {
            const float fx = static_cast<float>(x);
            const float fy = static_cast<float>(y);
            float v = base + ramp * (fy / (s - 1.0f));
            for (const Ellipse& lung : lungs) {
                // Soft boundary between background and the dark interior.
                const float r2 = lung.radius2(fx, fy);
                const float inside = 1.0f - smoothstep(0.85f, 1.15f, r2);
                v = v + (dark - v) * inside;
            }
            for (int k = 0; k < n_blobs; ++k) {
                const float dx = fx - blobs[k].cx;
                const float dy = fy - blobs[k].cy;
                const float d2 = (dx * dx + dy * dy) / (2.0f * blobs[k].sigma * blobs[k].sigma);
                v += blobs[k].amplitude * std::exp(-d2);
            }
            v += rng.uniform(-0.10f, 0.10f);  // film grain
            // Quantize exactly as write_pgm will, so the in-memory image and
            // the file round-trip bit-identically.
            const float q = static_cast<float>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
            image[static_cast<std::size_t>(y) * image_size + x] = q / 255.0f;
        }
    }
    return image;
}

void generate_synthetic_dataset(int n_per_class, int image_size, std::uint64_t seed,
                                const std::filesystem::path& out_dir) {
    if (n_per_class < 1) {
        throw DataError("generate_synthetic_dataset: n_per_class must be >= 1");
    }
    namespace fs = std::filesystem;
    std::error_code ec;
    for (int label = 0; label < 2; ++label) {
        const fs::path class_dir = out_dir / kSyntheticClassNames[label];
        fs::create_directories(class_dir, ec);
        if (ec) {
            throw IoError("cannot create " + class_dir.string() + ": " + ec.message());
        }
        for (int index = 0; index < n_per_class; ++index) {
            char name[32];
            std::snprintf(name, sizeof(name), "img_%04d.pgm", index);
            write_pgm(synthetic_image(label, index, image_size, seed), class_dir / name);
        }
    }
}

}  // namespace gfsl
