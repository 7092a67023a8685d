#pragma once

#include <filesystem>

#include "gfsl/tensor.hpp"

namespace gfsl {

// Reads a binary PGM ("P5") file into a 1xHxW tensor with values in [0, 1]
// (pixel / maxval). Header comments starting with '#' are allowed. Rejects
// ASCII PGM ("P2"), maxval outside [1, 255], and truncated payloads with a
// ParseError naming the offending field.
Tensor load_pgm(const std::filesystem::path& path);

// Writes a 1xHxW (or HxW) tensor as binary PGM with maxval 255; values are
// clamped to [0, 1] and quantized with round-to-nearest. load_pgm(write_pgm(t))
// is bit-exact for tensors already quantized to 1/255 steps.
void write_pgm(const Tensor& image, const std::filesystem::path& path);

}  // namespace gfsl
