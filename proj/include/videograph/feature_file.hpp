#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "videograph/tensor.hpp"

namespace videograph {

/// "VGFT" per-video feature container, all fields little-endian:
///
///   offset 0   magic "VGFT"
///   offset 4   u16 version (= 1)
///   offset 6   u32 T, H, W, C
///   offset 22  T*H*W*C IEEE-754 binary32 values, row-major [T,H,W,C]
///   trailer    u32 CRC-32 (zlib polynomial) of the payload bytes
inline constexpr std::uint16_t kFeatureFileVersion = 1;
inline constexpr std::size_t kFeatureHeaderBytes = 22;

std::vector<std::uint8_t> encode_feature_file(const Tensor& features);
Tensor decode_feature_file(std::span<const std::uint8_t> bytes);

void write_feature_file(const std::filesystem::path& path, const Tensor& features);
Tensor read_feature_file(const std::filesystem::path& path);

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);

}  // namespace videograph
