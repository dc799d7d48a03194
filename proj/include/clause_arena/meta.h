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

// The meta agent: the four frozen behavior agents propose offers and a
// trained selector picks one of them each turn.

#ifndef CLAUSE_ARENA_META_H_
#define CLAUSE_ARENA_META_H_

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "clause_arena/agent.h"
#include "clause_arena/eval.h"
#include "clause_arena/training.h"

namespace clause_arena {

// Candidate order; selector action j picks kCandidateTags[j].
inline constexpr std::array<const char*, 4> kCandidateTags = {"pp", "ss", "ps", "sp"};

struct BehaviorCheckpoints {
  PolicyModel pp;
  PolicyModel ss;
  PolicyModel sp_ps;  // seat A plays sp, seat B plays ps
};

// Reads pp.json, ss.json and sp-ps.json from `dir`.
BehaviorCheckpoints LoadBehaviorCheckpoints(const std::filesystem::path& dir);

// The model behind a tag and the identity it plays with; nullopt means "the
// seat it occupies".
struct CandidateSource {
  const PolicyModel* model;
  std::optional<Seat> identity;
};
CandidateSource CandidateFor(const BehaviorCheckpoints& base, const std::string& tag);

// Base network plus four candidate-offer inputs and a four-way head.
PolicyNetConfig SelectorNetConfig();

class MetaAgent : public Negotiator {
 public:
  // `selector` (and `base`) must outlive the agent.
  MetaAgent(const BehaviorCheckpoints& base, const nn::ParameterStore& selector,
            PolicyNetConfig cfg, ActionMode mode, Rng* rng);
  MetaAgent(const BehaviorCheckpoints& base, const PolicyModel& selector,
            ActionMode mode, Rng* rng)
      : MetaAgent(base, selector.params(), selector.config, mode, rng) {}

  void BeginEpisode(const UtilityVector& utility, Seat seat) override;
  Offer Act(const Observation& obs) override;

  nn::Tape& tape() { return tape_; }
  const std::vector<StepRecord>& steps() const { return steps_; }
  // Selected candidate index per own turn.
  std::vector<int> selections() const;
  const std::array<Offer, 4>& last_candidates() const { return last_candidates_; }
  PolicyAgent& candidate(int j) { return *candidates_[j]; }
  const std::vector<Observation>& observations() const { return observations_; }

 private:
  PolicyNetConfig cfg_;
  ActionMode mode_;
  Rng* rng_;
  std::vector<std::unique_ptr<PolicyAgent>> candidates_;
  nn::Tape tape_;
  PolicyState state_;
  std::vector<StepRecord> steps_;
  std::array<Offer, 4> last_candidates_;
  std::vector<Observation> observations_;
  std::unique_ptr<UtilityVector> utility_;
};

// Sum of both sides' rewards: normalized joint score on agreement, twice the
// disagreement penalty otherwise.
double MetaShapeReward(const Transcript& t, Seat meta_side, const RewardConfig& cfg = {});

struct MetaConfig {
  TrainConfig train;
  int batch_episodes = 100;  // episodes per sampled opponent

  // As TrainConfig::Profile, evaluating on 500 games once per epoch.
  static MetaConfig Profile(const std::string& name);
  Json ToJson() const;
};

struct MetaCurvePoint {
  int64_t episode = 0;
  std::string opponent;
  double joint_score = 0.0;
  double agreement_rate = 0.0;
  double optimality_rate = 0.0;
};
std::string MetaCurveCsv(std::span<const MetaCurvePoint> points);

struct MetaTrainResult {
  nn::Checkpoint checkpoint;
  std::vector<MetaCurvePoint> curve;
  Json final_eval;  // opponent tag -> metrics + joint score
};

// The meta agent always sits in seat A; the opponent (greedy, frozen) in B.
MetaTrainResult MetaTrain(const BehaviorCheckpoints& base, const MetaConfig& cfg,
                          const ProgressFn& progress = {});

// Greedy meta agent against one frozen opponent.
MatchResult PlayMeta(const BehaviorCheckpoints& base, const PolicyModel& selector,
                     const std::string& opponent_tag, std::span<const UtilityPair> test_set,
                     const NegotiationConfig& cfg, uint64_t seed,
                     std::vector<std::vector<int>>* selections = nullptr);

struct SelectionExport {
  // (opponent tag, comma-joined selections) -> games
  std::map<std::pair<std::string, std::string>, int64_t> counts;

  std::string Csv() const;
  // Top sequences over all opponents, each with the longer frequent sequences
  // it is a prefix of or a contiguous part of.
  Json AnalysisJson(size_t top) const;
};

SelectionExport ExportSelectionSequences(const BehaviorCheckpoints& base,
                                         const PolicyModel& selector,
                                         std::span<const UtilityPair> test_set,
                                         const NegotiationConfig& cfg, uint64_t seed);

std::string JoinInts(const std::vector<int>& v);

}  // namespace clause_arena

#endif  // CLAUSE_ARENA_META_H_
