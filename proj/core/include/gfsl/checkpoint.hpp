#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include "gfsl/model.hpp"

namespace gfsl {

// Checkpoint file layout (all integers little-endian):
//   magic   4 bytes "GFSL"
//   version u32 (currently 1)
//   count   u32
//   entry*  { name_len u32, name bytes, rank u32, dims u32[rank],
//             payload f32[prod(dims)] }
//   crc     u32, CRC-32 of every preceding byte
// Entries are written in parameter order, so identical parameters produce
// byte-identical files.

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const ParameterSet& params, const std::filesystem::path& path);

// Validates magic, version and CRC; throws CheckpointError with a distinct
// message for each failure mode. Loaded parameters are unfrozen with zero
// gradients.
ParameterSet load_checkpoint(const std::filesystem::path& path);

// Standard CRC-32 (reflected, polynomial 0xEDB88320).
std::uint32_t crc32(const unsigned char* data, std::size_t size);

}  // namespace gfsl
