#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "grcan/model.hpp"

namespace grcan {

// Checkpoint container, little-endian throughout:
//
//   bytes 0..7   magic "GRCANCKP"
//   bytes 8..11  u32 format version (currently 1)
//   bytes 12..19 u64 payload length
//   payload      config JSON blob, seed, epoch counter, then every state
//                tensor (trainable parameters plus the feature scaler) as
//                name / dims / f64 values, in declared order
//   trailing u64 FNV-1a checksum over the payload
//
// The checksum is verified before any payload field is parsed.
constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[8] = {'G', 'R', 'C', 'A', 'N', 'C', 'K', 'P'};

// Serializes the model and writes it via a temp file + rename, so an
// interrupted save never clobbers an existing checkpoint.
void save_checkpoint(Model& model, const std::string& path);

Model load_checkpoint(const std::string& path);

std::vector<std::uint8_t> checkpoint_bytes(Model& model);
Model model_from_checkpoint_bytes(const std::vector<std::uint8_t>& bytes,
                                  const std::string& origin);

namespace detail {
// fail_before_rename simulates a crash after the temp file is complete but
// before it replaces the target.
void atomic_write(const std::string& path, const std::vector<std::uint8_t>& bytes,
                  bool fail_before_rename = false);
std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n);
}  // namespace detail

}  // namespace grcan
