#pragma once

// Binary checkpoint:
//   "SQSLCKPT" | u32 version | u64 n + n bytes of JSON (config, vocabulary,
//   training metadata) | u64 tensor count | per tensor: u32 name length,
//   name, u32 rank, u64 dims..., f64 little-endian payload.
// Optimizer moments are stored as tensors named "opt/m/<param>" and
// "opt/v/<param>".

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "seqslice/corpus.hpp"
#include "seqslice/error.hpp"
#include "seqslice/model.hpp"

namespace seqslice::model {

SEQSLICE_DEFINE_ERROR(CheckpointError, true);

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct TrainingState {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double best_valid_loss = std::numeric_limits<double>::infinity();
  /// AdamW moments in parameter order; empty when not saved.
  std::vector<std::vector<double>> first_moments;
  std::vector<std::vector<double>> second_moments;
};

struct Checkpoint {
  ModelConfig config;
  ModelParams params;
  corpus::Vocabulary vocab;
  std::uint64_t seed = 0;
  TrainingState state;

  Model model() const { return Model(config, params); }
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Validates every tensor against the shapes implied by the config; nothing
/// is returned unless the whole file reads cleanly.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace seqslice::model
