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

// Metrics over finished games, the match runner, and the two scripted
// baselines.

#ifndef CLAUSE_ARENA_EVAL_H_
#define CLAUSE_ARENA_EVAL_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "clause_arena/agent.h"
#include "clause_arena/env.h"
#include "clause_arena/transcript_io.h"

namespace clause_arena {

struct MetricsReport {
  int64_t games = 0;
  double dialog_length = 0.0;           // mean offers per game
  double agreement_rate = 0.0;          // percent of games
  double optimality_rate_overall = 0.0;  // percent of games
  double optimality_rate_on_agreed = 0.0;  // percent of agreed games
  // Mean normalized score; a disagreement counts as no deal (0).
  double avg_score_a = 0.0;
  double avg_score_b = 0.0;
  // Same, with the disagreement penalty applied.
  double avg_reward_a = 0.0;
  double avg_reward_b = 0.0;

  double avg_score(Seat s) const { return s == Seat::kA ? avg_score_a : avg_score_b; }
  Json ToJson() const;
  static MetricsReport FromJson(const Json& j);

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

MetricsReport ComputeMetrics(std::span<const Transcript> transcripts,
                             double normalizer = 12.0);

struct MatchResult {
  MetricsReport report;
  std::vector<Transcript> transcripts;
};

// Plays every pair once. Game i uses the sub-seed MixSeed(seed, i) for its
// first-mover coin flip and is named "g<i>".
MatchResult RunMatch(Negotiator& agent_a, Negotiator& agent_b,
                     std::span<const UtilityPair> test_set,
                     const NegotiationConfig& cfg, uint64_t seed);

// Flips a uniformly drawn number of bits (0..n) each turn.
class RandomAgent : public Negotiator {
 public:
  explicit RandomAgent(Rng* rng) : rng_(rng) {}
  Offer Act(const Observation& obs) override;

 private:
  Rng* rng_;
};

// The intersection baseline, built directly: each side opens with its own
// positive clauses, the first mover proposes the intersection, and the other
// side accepts it (4 offers) unless it is empty (disagreement after 3).
Transcript CommonTranscript(const UtilityVector& ua, const UtilityVector& ub,
                            Seat first_mover, const NegotiationConfig& cfg);
MatchResult RunCommon(std::span<const UtilityPair> test_set,
                      const NegotiationConfig& cfg, uint64_t seed);

// ------------------------------------------------------ Action sequences

struct SequenceStats {
  int64_t count = 0;
  int64_t optimal = 0;
};

// Key: comma-joined k-values in move order.
std::map<std::string, SequenceStats> ActionSequenceHistogram(
    std::span<const Transcript> transcripts);

// Most frequent first; ties by key.
std::vector<std::pair<std::string, SequenceStats>> TopSequences(
    const std::map<std::string, SequenceStats>& histogram, size_t limit);

std::string HistogramCsv(const std::map<std::string, SequenceStats>& histogram);

std::vector<int> ParseActionKey(const std::string& key);

struct ForcedSequenceResult {
  std::string sequence;
  int64_t free_count = 0;  // occurrences in free play
  MetricsReport forced;    // metrics when every game is forced onto it
};

// Replays the test set with both agents' actions forced move-by-move onto
// `sequence`. A game that ends early ends naturally; once the sequence is
// exhausted the agents revert to their own greedy choices.
MetricsReport PlayForcedSequence(const PolicyModel& model_a, Seat role_a,
                                 const PolicyModel& model_b, Seat role_b,
                                 const std::vector<int>& sequence,
                                 std::span<const UtilityPair> test_set,
                                 const NegotiationConfig& cfg, uint64_t seed);

// ------------------------------------------------------------ Interplay

// A named participant: checkpoint plus the seat whose identity it plays with.
struct TaggedModel {
  std::string tag;  // "pp", "ss", "ps", "sp"
  const PolicyModel* model = nullptr;
  Seat role = Seat::kA;
};

// The five cross pairings reported for trained agents, A side first.
std::vector<std::pair<std::string, std::string>> InterplayPairs();
// Row/column order of the score-difference matrix.
std::vector<std::string> DifferenceOrder();

struct InterplayResult {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::vector<MetricsReport> reports;
  // diff[i][j] = avg score of order[i] minus avg score of order[j] when i plays
  // seat A against j in seat B.
  std::vector<std::string> order;
  std::vector<std::vector<double>> diff;
  bool rows_monotone = false;
  bool cols_monotone = false;

  Json ToJson() const;
  std::string PairsCsv() const;
  std::string DifferenceCsv() const;
};

// `models` maps tag -> participant; all four tags must be present.
InterplayResult InterplayMatrix(const std::map<std::string, TaggedModel>& models,
                                std::span<const UtilityPair> test_set,
                                const NegotiationConfig& cfg, uint64_t seed);

// Plays two tagged checkpoints against each other greedily.
MatchResult PlayModels(const TaggedModel& a, const TaggedModel& b,
                       std::span<const UtilityPair> test_set,
                       const NegotiationConfig& cfg, uint64_t seed);

}  // namespace clause_arena

#endif  // CLAUSE_ARENA_EVAL_H_
