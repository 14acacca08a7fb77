#pragma once

// Binary training checkpoints. Layout (all integers little-endian):
//
//   "DRAG"  u32 version  u64 total_length
//   u32 config_length, config text
//   u32 entries, per entry: u32 name_length, name, u32 rank, u64 dims[rank]
//   f32 buffers for every entry, in census order
//   optimizer states: generator, then one per critic; each is
//     u64 step, f32 m buffers, f32 v buffers
//   i64 iteration  u64 rng_seed  u64 rng_position
//   u64 checksum (FNV-1a over every preceding byte)

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "dragan/trainer.hpp"

namespace dragan {

inline constexpr uint32_t kCheckpointVersion = 1;

struct CheckpointError : std::runtime_error {
  CheckpointError(uint64_t offset, const std::string& what)
      : std::runtime_error("checkpoint byte " + std::to_string(offset) + ": " + what), offset(offset) {}
  uint64_t offset;
};

std::string encode_checkpoint(const TrainState& state, const TrainConfig& config);

struct LoadedCheckpoint {
  TrainConfig config;
  TrainState state;
};

/// Rebuilds the models from the embedded config and fills them.
LoadedCheckpoint decode_checkpoint(const std::string& bytes);

/// Restores into an existing state. The file's census must match the
/// state's exactly; nothing is modified unless the whole file validates.
/// Returns the embedded config.
TrainConfig restore_checkpoint(const std::string& bytes, TrainState& state);

/// Written to a temporary file first and renamed into place.
void save_checkpoint(const TrainState& state, const TrainConfig& config, const std::filesystem::path& path);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dragan
