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

// The learned negotiator. A recurrent policy decides how many bits of the
// received offer to flip; a fixed rule decides which ones.

#ifndef CLAUSE_ARENA_AGENT_H_
#define CLAUSE_ARENA_AGENT_H_

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clause_arena/env.h"
#include "clause_arena/nn/checkpoint.h"
#include "clause_arena/nn/tape.h"

namespace clause_arena {

// Parameter names of the policy network.
inline constexpr const char* kOfferMlp = "offer_mlp";
inline constexpr const char* kAgentLookup = "agent_lookup";
inline constexpr const char* kTurnLookup = "turn_lookup";
inline constexpr const char* kGru = "gru";
inline constexpr const char* kPolicyHead = "policy_head";

struct PolicyNetConfig {
  int n_clauses = kDefaultClauses;
  int mlp_hidden = 64;
  int mlp_out = 64;
  int embed_dim = 32;
  int max_turns = 30;
  int gru_hidden = 256;
  int gru_layers = 2;
  // Logits over this many choices; n_clauses + 1 for the base policy.
  int head_outputs = kDefaultClauses + 1;
  // Extra candidate offers folded into the encoding (4 for the selector).
  int candidate_offers = 0;

  int EncodingDim() const {
    return (2 + candidate_offers) * mlp_out + 2 * embed_dim;
  }
  std::vector<nn::LayerSpec> LayerSpecs() const;
  static PolicyNetConfig FromLayerSpecs(std::span<const nn::LayerSpec> specs);

  friend bool operator==(const PolicyNetConfig&, const PolicyNetConfig&) = default;
};

nn::ParameterStore InitPolicyParameters(const PolicyNetConfig& cfg, Rng& rng);
nn::ParameterStore ZeroPolicyParameters(const PolicyNetConfig& cfg);

// Recurrent state for one agent within one episode, living on `tape`.
struct PolicyState {
  std::vector<nn::Var> hidden;  // one vector per GRU layer

  static PolicyState Initial(nn::Tape& tape, const PolicyNetConfig& cfg);
};

// [OfferMLP(u ++ opponent_offer), OfferMLP(u ++ own_previous_offer),
//  AgentLookup(id), TurnLookup(turn - 1)] followed by OfferMLP(u ++ c) for
// each extra candidate offer c.
nn::Var EncodeState(nn::Tape& tape, const PolicyNetConfig& cfg,
                    const Observation& obs,
                    std::span<const Offer> candidates = {});

struct PolicyOutput {
  nn::Var logits;
  std::vector<double> probs;
  PolicyState state;
};

PolicyOutput PolicyForward(nn::Tape& tape, const PolicyNetConfig& cfg,
                           nn::Var encoded, const PolicyState& state);

enum class ActionMode { kSample, kGreedy };

// Greedy: argmax, lowest index on ties. Sample: inverse CDF on one uniform.
int SelectAction(std::span<const double> probs, ActionMode mode, Rng* rng);

// Flips the k clauses with the largest gain (1 - 2 ref_i) * u_i, ties to the
// lowest index.
Offer ApplyRule(const Offer& reference, const UtilityVector& utility, int k);

struct StepRecord {
  int turn = 0;
  int action = 0;
  nn::Var logits;
  std::vector<double> probs;
};

// A network-driven Negotiator. The parameter store must outlive the agent.
class PolicyAgent : public Negotiator {
 public:
  PolicyAgent(const nn::ParameterStore& params, PolicyNetConfig cfg,
              ActionMode mode, Rng* rng = nullptr,
              std::optional<Seat> identity = std::nullopt);

  void BeginEpisode(const UtilityVector& utility, Seat seat) override;
  Offer Act(const Observation& obs) override;

  // When set and returning a value, that action replaces the policy's choice
  // (the policy still runs so its recurrent state advances).
  void SetActionOverride(std::function<std::optional<int>(int turn)> f) {
    override_ = std::move(f);
  }

  const PolicyNetConfig& config() const { return cfg_; }
  nn::Tape& tape() { return tape_; }
  const std::vector<StepRecord>& steps() const { return steps_; }
  const PolicyState& state() const { return state_; }
  // The agent-ID input this agent feeds to its network for `seat`.
  Seat IdentityFor(Seat seat) const { return identity_.value_or(seat); }

 private:
  PolicyNetConfig cfg_;
  ActionMode mode_;
  Rng* rng_;
  std::optional<Seat> identity_;
  nn::Tape tape_;
  PolicyState state_;
  std::vector<StepRecord> steps_;
  std::function<std::optional<int>(int)> override_;
};

// A checkpoint plus the network shape recovered from its layer specs.
struct PolicyModel {
  nn::Checkpoint checkpoint;
  PolicyNetConfig config;

  const nn::ParameterStore& params() const { return checkpoint.store; }
};

PolicyModel LoadPolicyModel(const std::filesystem::path& path);

// "path/to/checkpoint.json#A" -> (path, seat). The seat defaults to A.
struct AgentRef {
  std::filesystem::path path;
  Seat role = Seat::kA;
};
AgentRef ParseAgentRef(const std::string& text);

}  // namespace clause_arena

#endif  // CLAUSE_ARENA_AGENT_H_
