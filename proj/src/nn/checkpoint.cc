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

#include "clause_arena/nn/checkpoint.h"

#include <charconv>
#include <cmath>

#include "clause_arena/transcript_io.h"

namespace clause_arena::nn {

using nlohmann::json;

json LayerSpecToJson(const LayerSpec& spec) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Mlp2Spec>) {
          return {{"kind", "mlp2"}, {"name", s.name}, {"in", s.in},
                  {"hidden", s.hidden}, {"out", s.out}, {"activation", "relu"}};
        } else if constexpr (std::is_same_v<T, EmbeddingSpec>) {
          return {{"kind", "embedding"}, {"name", s.name}, {"rows", s.rows}, {"dim", s.dim}};
        } else if constexpr (std::is_same_v<T, GruSpec>) {
          return {{"kind", "gru"}, {"name", s.name}, {"input_dim", s.input_dim},
                  {"hidden_dim", s.hidden_dim}, {"layers", s.layers}};
        } else {
          return {{"kind", "linear"}, {"name", s.name}, {"in", s.in},
                  {"out", s.out}, {"bias", s.bias}};
        }
      },
      spec);
}

LayerSpec LayerSpecFromJson(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const std::string name = j.at("name").get<std::string>();
  LayerSpec spec;
  if (kind == "mlp2") {
    spec = Mlp2Spec{name, j.at("in"), j.at("hidden"), j.at("out")};
  } else if (kind == "embedding") {
    spec = EmbeddingSpec{name, j.at("rows"), j.at("dim")};
  } else if (kind == "gru") {
    spec = GruSpec{name, j.at("input_dim"), j.at("hidden_dim"), j.at("layers")};
  } else if (kind == "linear") {
    spec = LinearSpec{name, j.at("in"), j.at("out"), j.at("bias")};
  } else {
    throw CheckpointError("unknown layer kind '" + kind + "'");
  }
  ValidateLayerSpec(spec);
  return spec;
}

namespace {

void AppendReal(std::string& out, double v) {
  if (v == 0.0) {
    out += std::signbit(v) ? "-0.0" : "0.0";
    return;
  }
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, 17);
  out.append(buf, end);
}

void AppendTensorMap(std::string& out, const std::map<std::string, Tensor>& m) {
  out += "{";
  bool first = true;
  for (const auto& [name, t] : m) {
    if (!first) out += ",";
    first = false;
    out += "\n    " + json(name).dump() + ": {\"shape\": " + json(t.shape()).dump() +
           ", \"data\": [";
    for (size_t i = 0; i < t.size(); ++i) {
      if (i) out += ",";
      AppendReal(out, t[i]);
    }
    out += "]}";
  }
  out += "\n  }";
}

Tensor TensorFromJson(const json& j) {
  return Tensor(j.at("shape").get<std::vector<size_t>>(),
                j.at("data").get<std::vector<double>>());
}

}  // namespace

std::string SerializeCheckpoint(const Checkpoint& ckpt) {
  json specs = json::array();
  for (const LayerSpec& s : ckpt.layer_specs) specs.push_back(LayerSpecToJson(s));
  const TrainingMeta& m = ckpt.training_meta;
  json meta = {{"episodes_seen", m.episodes_seen},
               {"epoch", m.epoch},
               {"rng_algorithm", m.rng_algorithm},
               {"seed", m.seed}};
  for (const auto& [k, v] : m.extra.items()) meta[k] = v;

  std::string out = "{\n  \"format_version\": " +
                    std::to_string(kCheckpointFormatVersion) + ",\n";
  out += "  \"behavior_tag\": " + json(ckpt.behavior_tag).dump() + ",\n";
  out += "  \"hyperparameters\": " + ckpt.hyperparameters.dump() + ",\n";
  out += "  \"layer_specs\": " + specs.dump() + ",\n";
  out += "  \"parameters\": ";
  AppendTensorMap(out, ckpt.store.parameters());
  out += ",\n  \"velocities\": ";
  AppendTensorMap(out, ckpt.store.velocities());
  out += ",\n  \"training_meta\": " + meta.dump() + "\n}\n";
  return out;
}

Checkpoint ParseCheckpoint(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CheckpointError(std::string("malformed checkpoint JSON: ") + e.what());
  }
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw CheckpointError("unsupported checkpoint format_version " +
                            std::to_string(version) + " (expected " +
                            std::to_string(kCheckpointFormatVersion) + ")");
    }
    Checkpoint ckpt;
    ckpt.behavior_tag = j.at("behavior_tag").get<std::string>();
    ckpt.hyperparameters = j.at("hyperparameters");
    for (const json& s : j.at("layer_specs")) {
      ckpt.layer_specs.push_back(LayerSpecFromJson(s));
    }
    for (const auto& [name, t] : j.at("parameters").items()) {
      ckpt.store.Add(name, TensorFromJson(t));
    }
    for (const auto& [name, t] : j.at("velocities").items()) {
      Tensor v = TensorFromJson(t);
      if (!ckpt.store.Contains(name)) {
        throw CheckpointError("velocity for unknown parameter " + name);
      }
      CheckSameShape(ckpt.store.Get(name), v, "velocity " + name);
      ckpt.store.MutableVelocity(name) = std::move(v);
    }
    json meta = j.at("training_meta");
    TrainingMeta& m = ckpt.training_meta;
    m.episodes_seen = meta.at("episodes_seen").get<int64_t>();
    m.epoch = meta.at("epoch").get<int>();
    m.rng_algorithm = meta.at("rng_algorithm").get<std::string>();
    m.seed = meta.at("seed").get<uint64_t>();
    for (const char* k : {"episodes_seen", "epoch", "rng_algorithm", "seed"}) meta.erase(k);
    m.extra = std::move(meta);
    return ckpt;
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("invalid checkpoint: ") + e.what());
  }
}

void SaveCheckpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  WriteFile(path, SerializeCheckpoint(ckpt));
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::string text;
  try {
    text = ReadFile(path);
  } catch (const std::exception& e) {
    throw CheckpointError(e.what());
  }
  try {
    return ParseCheckpoint(text);
  } catch (const CheckpointError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

}  // namespace clause_arena::nn
