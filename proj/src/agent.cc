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

#include "clause_arena/agent.h"

#include <algorithm>
#include <numeric>

namespace clause_arena {

std::vector<nn::LayerSpec> PolicyNetConfig::LayerSpecs() const {
  return {
      nn::Mlp2Spec{kOfferMlp, 2 * n_clauses, mlp_hidden, mlp_out},
      nn::EmbeddingSpec{kAgentLookup, 2, embed_dim},
      nn::EmbeddingSpec{kTurnLookup, max_turns, embed_dim},
      nn::GruSpec{kGru, EncodingDim(), gru_hidden, gru_layers},
      nn::LinearSpec{kPolicyHead, gru_hidden, head_outputs, false},
  };
}

PolicyNetConfig PolicyNetConfig::FromLayerSpecs(
    std::span<const nn::LayerSpec> specs) {
  PolicyNetConfig cfg;
  int found = 0, gru_input = 0;
  for (const nn::LayerSpec& spec : specs) {
    if (auto* m = std::get_if<nn::Mlp2Spec>(&spec); m && m->name == kOfferMlp) {
      cfg.n_clauses = m->in / 2;
      cfg.mlp_hidden = m->hidden;
      cfg.mlp_out = m->out;
      ++found;
    } else if (auto* e = std::get_if<nn::EmbeddingSpec>(&spec)) {
      cfg.embed_dim = e->dim;
      if (e->name == kTurnLookup) cfg.max_turns = e->rows;
      ++found;
    } else if (auto* g = std::get_if<nn::GruSpec>(&spec); g && g->name == kGru) {
      cfg.gru_hidden = g->hidden_dim;
      cfg.gru_layers = g->layers;
      gru_input = g->input_dim;
      ++found;
    } else if (auto* l = std::get_if<nn::LinearSpec>(&spec);
               l && l->name == kPolicyHead) {
      cfg.head_outputs = l->out;
      ++found;
    }
  }
  if (found != 5) throw ContractViolation("layer specs do not describe a policy network");
  cfg.candidate_offers = (gru_input - 2 * cfg.embed_dim) / cfg.mlp_out - 2;
  if (cfg.EncodingDim() != gru_input || cfg.candidate_offers < 0) {
    throw ContractViolation("GRU input size does not match the encoder");
  }
  return cfg;
}

nn::ParameterStore InitPolicyParameters(const PolicyNetConfig& cfg, Rng& rng) {
  nn::ParameterStore store;
  for (const nn::LayerSpec& spec : cfg.LayerSpecs()) {
    nn::InitializeLayer(store, spec, rng);
  }
  return store;
}

nn::ParameterStore ZeroPolicyParameters(const PolicyNetConfig& cfg) {
  nn::ParameterStore store;
  for (const nn::LayerSpec& spec : cfg.LayerSpecs()) nn::AddZeroLayer(store, spec);
  return store;
}

PolicyState PolicyState::Initial(nn::Tape& tape, const PolicyNetConfig& cfg) {
  PolicyState s;
  for (int l = 0; l < cfg.gru_layers; ++l) {
    s.hidden.push_back(tape.Constant(nn::Tensor::Zeros(cfg.gru_hidden)));
  }
  return s;
}

namespace {

nn::Var OfferFeatures(nn::Tape& tape, const UtilityVector& u, const Offer& o) {
  std::vector<double> x;
  x.reserve(u.size() + o.size());
  for (int v : u.values()) x.push_back(v);
  for (uint8_t b : o.bits()) x.push_back(b);
  return nn::Mlp2(tape, kOfferMlp, tape.Constant(nn::Tensor::FromVector(std::move(x))));
}

}  // namespace

nn::Var EncodeState(nn::Tape& tape, const PolicyNetConfig& cfg,
                    const Observation& obs, std::span<const Offer> candidates) {
  if (obs.utility == nullptr || obs.utility->size() != cfg.n_clauses ||
      obs.opponent_offer.size() != cfg.n_clauses ||
      obs.own_previous_offer.size() != cfg.n_clauses) {
    throw ContractViolation("observation does not match the network's clause count");
  }
  if (obs.turn < 1 || obs.turn > cfg.max_turns) {
    throw ContractViolation("turn " + std::to_string(obs.turn) + " outside [1, " +
                            std::to_string(cfg.max_turns) + "]");
  }
  if (static_cast<int>(candidates.size()) != cfg.candidate_offers) {
    throw ContractViolation("expected " + std::to_string(cfg.candidate_offers) +
                            " candidate offers");
  }
  std::vector<nn::Var> parts{
      OfferFeatures(tape, *obs.utility, obs.opponent_offer),
      OfferFeatures(tape, *obs.utility, obs.own_previous_offer),
      nn::Embedding(tape, kAgentLookup, Index(obs.agent_id)),
      nn::Embedding(tape, kTurnLookup, obs.turn - 1),
  };
  for (const Offer& c : candidates) {
    if (c.size() != cfg.n_clauses) throw ContractViolation("candidate offer of wrong size");
    parts.push_back(OfferFeatures(tape, *obs.utility, c));
  }
  return nn::Concat(tape, parts);
}

PolicyOutput PolicyForward(nn::Tape& tape, const PolicyNetConfig& cfg,
                           nn::Var encoded, const PolicyState& state) {
  if (static_cast<int>(state.hidden.size()) != cfg.gru_layers) {
    throw ContractViolation("policy state has the wrong number of GRU layers");
  }
  PolicyOutput out;
  out.state.hidden = nn::GruStep(tape, kGru, encoded, state.hidden);
  out.logits = nn::Linear(tape, std::string(kPolicyHead) + ".W", out.state.hidden.back());
  out.probs = nn::SoftmaxValues(tape.Value(out.logits).values());
  return out;
}

int SelectAction(std::span<const double> probs, ActionMode mode, Rng* rng) {
  if (probs.empty()) throw ContractViolation("empty distribution");
  if (mode == ActionMode::kGreedy) {
    return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
  }
  if (rng == nullptr) throw ContractViolation("sampling requires a random source");
  const double u = UniformReal(*rng);
  double cumulative = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    cumulative += probs[i];
    if (u < cumulative) return static_cast<int>(i);
  }
  // Rounding left u above the final partial sum; take the last nonzero entry.
  for (size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

Offer ApplyRule(const Offer& reference, const UtilityVector& utility, int k) {
  const int n = reference.size();
  if (utility.size() != n) throw ContractViolation("utility/offer size mismatch");
  if (k < 0 || k > n) throw ContractViolation("k out of range");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto gain = [&](int i) { return (1 - 2 * reference[i]) * utility[i]; };
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return gain(a) > gain(b); });
  Offer out = reference;
  for (int i = 0; i < k; ++i) out.Flip(order[i]);
  return out;
}

// ---------------------------------------------------------- PolicyAgent

PolicyAgent::PolicyAgent(const nn::ParameterStore& params, PolicyNetConfig cfg,
                         ActionMode mode, Rng* rng, std::optional<Seat> identity)
    : cfg_(cfg), mode_(mode), rng_(rng), identity_(identity), tape_(params) {
  if (cfg_.head_outputs != cfg_.n_clauses + 1 || cfg_.candidate_offers != 0) {
    throw ContractViolation("PolicyAgent needs a base policy network");
  }
}

void PolicyAgent::BeginEpisode(const UtilityVector&, Seat) {
  tape_.Clear();
  steps_.clear();
  state_ = PolicyState::Initial(tape_, cfg_);
}

Offer PolicyAgent::Act(const Observation& obs) {
  if (state_.hidden.empty()) state_ = PolicyState::Initial(tape_, cfg_);
  Observation own = obs;
  own.agent_id = IdentityFor(obs.agent_id);
  nn::Var encoded = EncodeState(tape_, cfg_, own);
  PolicyOutput out = PolicyForward(tape_, cfg_, encoded, state_);
  int k = SelectAction(out.probs, mode_, rng_);
  if (override_) {
    if (std::optional<int> forced = override_(obs.turn)) k = *forced;
  }
  state_ = std::move(out.state);
  steps_.push_back(StepRecord{obs.turn, k, out.logits, std::move(out.probs)});
  return ApplyRule(obs.opponent_offer, *obs.utility, k);
}

PolicyModel LoadPolicyModel(const std::filesystem::path& path) {
  PolicyModel model;
  model.checkpoint = nn::LoadCheckpoint(path);
  model.config = PolicyNetConfig::FromLayerSpecs(model.checkpoint.layer_specs);
  return model;
}

AgentRef ParseAgentRef(const std::string& text) {
  AgentRef ref;
  const auto hash = text.rfind('#');
  if (hash == std::string::npos) {
    ref.path = text;
  } else {
    ref.path = text.substr(0, hash);
    ref.role = ParseSeat(text.substr(hash + 1));
  }
  if (ref.path.empty()) throw ContractViolation("empty checkpoint path in '" + text + "'");
  return ref;
}

}  // namespace clause_arena
