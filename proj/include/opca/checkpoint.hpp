#pragma once

// Binary checkpoint:
//
//   "OPCA" | u32 version | section*
//   section = u64 byte length | payload
//
// Sections in order: meta (image and latent shapes), encoder, decoder,
// layout, rng, step. All numbers are little-endian u64 or IEEE-754 f64.
// Encoder and decoder sections carry the Adam moments with the weights.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "opca/autoencoder.hpp"

namespace opca {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  AutoencoderModel model;
  /// Shuffling for epoch e is seeded from (rng_seed, e).
  std::uint64_t rng_seed = 0;
  std::uint64_t epochs_completed = 0;
  std::uint64_t step = 0;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::string encode_checkpoint(const Checkpoint& ckpt);

/// Throws InputError with kind bad_magic, truncated, version_mismatch or
/// malformed_header.
Checkpoint decode_checkpoint(std::string_view bytes);

/// Writes to a sibling temporary file, then renames over `path`.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace opca
