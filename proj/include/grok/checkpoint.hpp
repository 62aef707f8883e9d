#pragma once

#include <string>
#include <vector>

#include "grok/model.hpp"

// Binary weight container plus a JSON sidecar (<path>.json) carrying the model
// config, the modulus, the task tag, and which token ids the training data
// actually used. Layout: magic "GROKCKPT", u32 version, u32 tensor count, then
// per tensor u32 name length, name bytes, u32 rank, u32 dims, raw f32 data,
// all little-endian.
namespace grok {

inline constexpr char kCheckpointMagic[8] = {'G', 'R', 'O', 'K', 'C', 'K', 'P', 'T'};
inline constexpr uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  ModelConfig config;
  int p = 0;
  std::string task;
  std::vector<int> used_tokens;
};

struct TensorBlob {
  std::string name;
  std::vector<long> dims;
  std::vector<float> data;
};

struct Checkpoint {
  CheckpointMeta meta;
  std::vector<TensorBlob> tensors;

  const TensorBlob* find(const std::string& name) const {
    for (const auto& t : tensors) {
      if (t.name == name) return &t;
    }
    return nullptr;
  }
};

void save_checkpoint(const std::string& path, const Model& model,
                     const CheckpointMeta& meta);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace grok
