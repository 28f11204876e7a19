#pragma once

#include <filesystem>

#include "videograph/trainer.hpp"

namespace videograph {

/// Element type of the weights.bin payload. float32 is the interchange
/// default; float64 keeps 64-bit runs bitwise resumable.
enum class PayloadType { kFloat32, kFloat64 };

/// Writes `dir/manifest.json` and `dir/weights.bin`: parameters, optimizer
/// velocities and batch-norm running statistics, little-endian, in manifest
/// order, with a crc32 of the payload.
void save_checkpoint(const TrainingSession& session, const std::filesystem::path& dir,
                     PayloadType type = PayloadType::kFloat32);

/// Rebuilds model and optimizer from a checkpoint. The metric log starts empty.
/// Throws FormatError on crc mismatch, unknown format version, missing or
/// mis-shaped parameter records.
TrainingSession load_checkpoint(const std::filesystem::path& dir);

}  // namespace videograph
