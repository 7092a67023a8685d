#pragma once

#include <cstdint>
#include <filesystem>

#include "gfsl/tensor.hpp"

namespace gfsl {

// Writes a two-class synthetic grayscale dataset of chest-film-like images:
//   <out_dir>/normal/img_NNNN.pgm   — two dark elliptical regions on a bright ramp
//   <out_dir>/opacity/img_NNNN.pgm  — the same, plus 1-3 bright blobs inside the ellipses
// Geometry is jittered per image from a stream derived from (seed, class,
// index), so output is byte-identical for identical arguments regardless of
// generation order.
void generate_synthetic_dataset(int n_per_class, int image_size, std::uint64_t seed,
                                const std::filesystem::path& out_dir);

// The single image for (label, index) under the given seed; 1xSxS in [0, 1],
// quantized to 1/255 steps exactly as the PGM on disk.
Tensor synthetic_image(int label, int index, int image_size, std::uint64_t seed);

inline constexpr const char* kSyntheticClassNames[2] = {"normal", "opacity"};

}  // namespace gfsl
