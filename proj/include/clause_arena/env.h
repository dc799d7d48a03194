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

// The contract negotiation game: private utilities over clauses, alternating
// bit-vector offers, acceptance by echo, and exhaustive optimality oracles.

#ifndef CLAUSE_ARENA_ENV_H_
#define CLAUSE_ARENA_ENV_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "clause_arena/random.h"

namespace clause_arena {

// A precondition or invariant was violated by the caller.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// An agent broke the offer protocol (e.g. emitted an offer of the wrong size).
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kDefaultClauses = 6;
inline constexpr int kUtilityMass = 12;
// Exhaustive 2^n oracles are capped here.
inline constexpr int kMaxOracleClauses = 20;

enum class Seat : int { kA = 0, kB = 1 };

inline Seat Other(Seat s) { return s == Seat::kA ? Seat::kB : Seat::kA; }
inline int Index(Seat s) { return static_cast<int>(s); }
inline char SeatName(Seat s) { return s == Seat::kA ? 'A' : 'B'; }
Seat ParseSeat(const std::string& name);

// A proposal: bit i says whether clause i is included in the contract.
class Offer {
 public:
  Offer() = default;
  explicit Offer(std::vector<uint8_t> bits);
  Offer(std::initializer_list<int> bits);

  static Offer Zeros(int n);
  static Offer Ones(int n);
  // Big-endian: bit 0 is the most significant.
  static Offer FromIndex(uint64_t index, int n);

  int size() const { return static_cast<int>(bits_.size()); }
  int operator[](int i) const { return bits_[i]; }
  std::span<const uint8_t> bits() const { return bits_; }
  uint64_t ToIndex() const;
  void Flip(int i) { bits_[i] ^= 1; }
  std::string ToString() const;  // e.g. "101001"

  friend bool operator==(const Offer&, const Offer&) = default;

 private:
  std::vector<uint8_t> bits_;
};

int HammingDistance(const Offer& a, const Offer& b);

// Per-clause private valuation: no zeros, positives sum to +12, negatives to
// -12.
class UtilityVector {
 public:
  UtilityVector() = default;
  // Throws ContractViolation when `values` breaks an invariant.
  explicit UtilityVector(std::vector<int> values);
  UtilityVector(std::initializer_list<int> values);

  // Returns an empty string when valid, else a description of the violation.
  static std::string Check(std::span<const int> values);
  static bool IsValid(std::span<const int> values) {
    return Check(values).empty();
  }

  int size() const { return static_cast<int>(values_.size()); }
  int operator[](int i) const { return values_[i]; }
  std::span<const int> values() const { return values_; }
  UtilityVector Negated() const;

  friend bool operator==(const UtilityVector&, const UtilityVector&) = default;

 private:
  std::vector<int> values_;
};

struct NegotiationConfig {
  int n_clauses = kDefaultClauses;
  int max_offers = 30;
  double disagreement_reward = -0.5;
  double score_normalizer = 12.0;

  void Validate() const;
};

struct Move {
  Seat agent = Seat::kA;
  int turn = 0;    // global move index, starting at 1
  int action = 0;  // bits flipped relative to the offer just received
  Offer offer;

  friend bool operator==(const Move&, const Move&) = default;
};

struct Transcript {
  std::string game_id;
  uint64_t seed = 0;
  UtilityVector utility_a;
  UtilityVector utility_b;
  Seat first_mover = Seat::kA;
  std::vector<Move> moves;
  std::optional<Offer> deal;  // set iff the game ended in agreement
  std::array<int, 2> raw_scores{0, 0};
  std::array<double, 2> normalized_scores{0.0, 0.0};
  bool optimal = false;

  bool agreed() const { return deal.has_value(); }
  int length() const { return static_cast<int>(moves.size()); }
  const UtilityVector& utility(Seat s) const {
    return s == Seat::kA ? utility_a : utility_b;
  }
  // k-values in move order, comma-joined: "3,0".
  std::string ActionKey() const;

  friend bool operator==(const Transcript&, const Transcript&) = default;
};

// Fills scores and the optimality flag from `deal` (or the disagreement
// penalty when there is none).
void FinalizeTranscript(Transcript& t, const NegotiationConfig& cfg);

// Returns an empty string if `t` satisfies the transcript invariants.
std::string CheckTranscript(const Transcript& t, const NegotiationConfig& cfg);

// What an agent sees when it is asked for an offer.
struct Observation {
  const UtilityVector* utility = nullptr;
  Offer opponent_offer;      // all zeros before the opponent has moved
  Offer own_previous_offer;  // all zeros before this agent has moved
  Seat agent_id = Seat::kA;
  int turn = 1;
};

// One side of a negotiation. Implementations keep per-episode state and serve
// one episode at a time.
class Negotiator {
 public:
  virtual ~Negotiator() = default;
  virtual void BeginEpisode(const UtilityVector& /*utility*/, Seat /*seat*/) {}
  virtual Offer Act(const Observation& obs) = 0;
};

// Draws the split point k uniformly, then uniform compositions of 12 into k
// positive and n-k negative parts, then shuffles.
UtilityVector SampleUtility(Rng& rng, int n_clauses = kDefaultClauses);

int Score(const Offer& deal, const UtilityVector& utility);

enum class Dominance {
  // d dominates e if it is no worse for both and strictly better for one.
  kStrict,
  // d dominates e only if it is strictly better for both.
  kWeak,
};

bool IsParetoOptimal(const Offer& deal, const UtilityVector& ua,
                     const UtilityVector& ub,
                     Dominance rule = Dominance::kStrict);

// Weakly Pareto optimal and strictly positive for both sides. Weak dominance
// is what reproduces the published COMMON/RANDOM optimality figures.
bool IsOptimalDeal(const Offer& deal, const UtilityVector& ua,
                   const UtilityVector& ub);

struct JointDeal {
  Offer deal;
  double joint = 0.0;  // (score_a + score_b) / normalizer
};

// Best optimal deal by joint reward; ties go to the smallest big-endian deal.
std::optional<JointDeal> BestJointDeal(const UtilityVector& ua,
                                       const UtilityVector& ub,
                                       double normalizer = 12.0);

// Joint value used for the max-joint-reward statistic: BestJointDeal's value,
// or the unconstrained maximum over all deals when no deal is optimal.
double MaxJointReward(const UtilityVector& ua, const UtilityVector& ub,
                      double normalizer = 12.0);

// One episode advanced one offer at a time.
class NegotiationGame {
 public:
  NegotiationGame(const UtilityVector& ua, const UtilityVector& ub, Seat first_mover,
                  const NegotiationConfig& cfg);

  bool finished() const { return finished_; }
  Seat to_move() const { return to_move_; }
  int next_turn() const { return t_.length() + 1; }
  // The offer an acceptance must echo; empty before the first move.
  std::optional<Offer> last_offer() const;
  // What the seat to move observes. Valid until the next Submit().
  Observation CurrentObservation() const;
  // Records `offer` for the seat to move; ends the game on an echo or when
  // the offer limit is reached. Throws ProtocolError on a malformed offer.
  void Submit(const Offer& offer);
  // Scored once finished().
  const Transcript& transcript() const { return t_; }

 private:
  NegotiationConfig cfg_;
  Transcript t_;
  std::array<Offer, 2> last_;
  Seat to_move_;
  bool finished_ = false;
};

// Plays one episode with a fixed first mover.
Transcript PlayNegotiation(Negotiator& agent_a, Negotiator& agent_b,
                           const UtilityVector& ua, const UtilityVector& ub,
                           Seat first_mover, const NegotiationConfig& cfg);

// Same, with the first mover chosen by a fair coin drawn from `rng`.
Transcript RunNegotiation(Negotiator& agent_a, Negotiator& agent_b,
                          const UtilityVector& ua, const UtilityVector& ub,
                          const NegotiationConfig& cfg, Rng& rng);

using UtilityPair = std::pair<UtilityVector, UtilityVector>;

std::vector<UtilityPair> GenerateTestSet(uint64_t seed, int count,
                                         int n_clauses = kDefaultClauses);

}  // namespace clause_arena

#endif  // CLAUSE_ARENA_ENV_H_
