#pragma once

#include <map>

#include "tan/training.hpp"

namespace tanet {

// Binary checkpoint: 8-byte magic "TANCKPT1", u32 version, u32 entry count,
// then per entry: u32 name length, utf-8 name, u32 rank, u32 dims[rank],
// raw f32 data. Everything little-endian. Tensors round-trip bit-exactly.

inline constexpr char kCheckpointMagic[8] = {'T', 'A', 'N', 'C', 'K', 'P', 'T', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointEntry {
    std::string name;
    Tensor tensor;
};

void write_checkpoint_entries(const std::string& path, const std::vector<CheckpointEntry>& entries);
std::vector<CheckpointEntry> read_checkpoint_entries(const std::string& path);

/// Model parameters with their checkpoint-scoped names (g1./g2./d1./d2.).
std::vector<std::pair<std::string, Param*>> model_named_params(TanModelT<float>& model);

void save_checkpoint(const std::string& path, TanModelT<float>& model, const TanOptimizersT<float>* opt = nullptr);

struct LoadedCheckpoint {
    TransNetConfig config;
    std::unique_ptr<TanModelT<float>> model;
    bool has_optimizer_state = false;
    std::map<std::string, Tensor> entries;
};

/// Validates magic, version and the parameter-name inventory implied by the
/// stored config before populating the model.
LoadedCheckpoint load_checkpoint(const std::string& path);

/// Rebuilds Adam moments and step counters from a loaded checkpoint.
void restore_optimizer_state(const LoadedCheckpoint& ckpt, TanModelT<float>& model, TanOptimizersT<float>& opt);

}  // namespace tanet
