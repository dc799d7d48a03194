// Copyright 2026 The Clause Arena Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CLAUSE_ARENA_NN_CHECKPOINT_H_
#define CLAUSE_ARENA_NN_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "clause_arena/nn/parameters.h"
#include "json.hpp"

namespace clause_arena::nn {

inline constexpr int kCheckpointFormatVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainingMeta {
  int64_t episodes_seen = 0;
  int epoch = 0;
  std::string rng_algorithm;
  uint64_t seed = 0;
  // Free-form additions (final evaluation summary, source checkpoints, ...).
  nlohmann::json extra = nlohmann::json::object();

  friend bool operator==(const TrainingMeta&, const TrainingMeta&) = default;
};

struct Checkpoint {
  std::string behavior_tag;
  nlohmann::json hyperparameters = nlohmann::json::object();
  std::vector<LayerSpec> layer_specs;
  ParameterStore store;
  TrainingMeta training_meta;
};

nlohmann::json LayerSpecToJson(const LayerSpec& spec);
LayerSpec LayerSpecFromJson(const nlohmann::json& j);

// Single JSON document; every real is written with 17 significant digits so
// save -> load -> save is byte-identical.
std::string SerializeCheckpoint(const Checkpoint& ckpt);
Checkpoint ParseCheckpoint(const std::string& text);

void SaveCheckpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace clause_arena::nn

#endif  // CLAUSE_ARENA_NN_CHECKPOINT_H_
