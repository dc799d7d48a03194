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

#include "clause_arena/env.h"

#include <algorithm>
#include <limits>
#include <numeric>

namespace clause_arena {

Seat ParseSeat(const std::string& name) {
  if (name == "A" || name == "a" || name == "0") return Seat::kA;
  if (name == "B" || name == "b" || name == "1") return Seat::kB;
  throw ContractViolation("unknown seat '" + name + "' (expected A or B)");
}

// ---------------------------------------------------------------- Offer

Offer::Offer(std::vector<uint8_t> bits) : bits_(std::move(bits)) {
  for (uint8_t b : bits_) {
    if (b > 1) throw ContractViolation("offer bits must be 0 or 1");
  }
}

Offer::Offer(std::initializer_list<int> bits) {
  bits_.reserve(bits.size());
  for (int b : bits) {
    if (b != 0 && b != 1) throw ContractViolation("offer bits must be 0 or 1");
    bits_.push_back(static_cast<uint8_t>(b));
  }
}

Offer Offer::Zeros(int n) { return Offer(std::vector<uint8_t>(n, 0)); }
Offer Offer::Ones(int n) { return Offer(std::vector<uint8_t>(n, 1)); }

Offer Offer::FromIndex(uint64_t index, int n) {
  std::vector<uint8_t> bits(n);
  for (int i = 0; i < n; ++i) bits[i] = (index >> (n - 1 - i)) & 1;
  return Offer(std::move(bits));
}

uint64_t Offer::ToIndex() const {
  uint64_t index = 0;
  for (uint8_t b : bits_) index = (index << 1) | b;
  return index;
}

std::string Offer::ToString() const {
  std::string s;
  for (uint8_t b : bits_) s.push_back(b ? '1' : '0');
  return s;
}

int HammingDistance(const Offer& a, const Offer& b) {
  if (a.size() != b.size()) throw ContractViolation("offer size mismatch");
  int d = 0;
  for (int i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

// -------------------------------------------------------- UtilityVector

UtilityVector::UtilityVector(std::vector<int> values)
    : values_(std::move(values)) {
  if (std::string why = Check(values_); !why.empty()) {
    throw ContractViolation("invalid utility: " + why);
  }
}

UtilityVector::UtilityVector(std::initializer_list<int> values)
    : UtilityVector(std::vector<int>(values)) {}

std::string UtilityVector::Check(std::span<const int> values) {
  if (values.size() < 2) return "fewer than two clauses";
  int pos = 0, neg = 0;
  for (int v : values) {
    if (v == 0) return "zero-valued clause";
    (v > 0 ? pos : neg) += v;
  }
  if (pos != kUtilityMass) return "positive values sum to " + std::to_string(pos);
  if (neg != -kUtilityMass) return "negative values sum to " + std::to_string(neg);
  return {};
}

UtilityVector UtilityVector::Negated() const {
  std::vector<int> v(values_);
  for (int& x : v) x = -x;
  return UtilityVector(std::move(v));
}

void NegotiationConfig::Validate() const {
  if (n_clauses < 2) throw ContractViolation("n_clauses must be at least 2");
  if (max_offers <= 0 || max_offers % 2 != 0) {
    throw ContractViolation("max_offers must be positive and even");
  }
  if (!(score_normalizer > 0)) {
    throw ContractViolation("score_normalizer must be positive");
  }
}

std::string Transcript::ActionKey() const {
  std::string key;
  for (const Move& m : moves) {
    if (!key.empty()) key.push_back(',');
    key += std::to_string(m.action);
  }
  return key;
}

// ------------------------------------------------------------- Sampling

namespace {

// Uniform composition of `total` into `parts` positive integers: choose
// parts-1 distinct cut points among 1..total-1.
std::vector<int> SampleComposition(Rng& rng, int total, int parts) {
  std::vector<int> points(total - 1);
  std::iota(points.begin(), points.end(), 1);
  for (int i = 0; i < parts - 1; ++i) {
    int j = i + static_cast<int>(UniformInt(rng, points.size() - i));
    std::swap(points[i], points[j]);
  }
  std::vector<int> cuts(points.begin(), points.begin() + (parts - 1));
  std::sort(cuts.begin(), cuts.end());
  std::vector<int> out;
  out.reserve(parts);
  int prev = 0;
  for (int c : cuts) {
    out.push_back(c - prev);
    prev = c;
  }
  out.push_back(total - prev);
  return out;
}

}  // namespace

UtilityVector SampleUtility(Rng& rng, int n_clauses) {
  if (n_clauses < 2 || n_clauses > 2 * kUtilityMass) {
    throw ContractViolation("n_clauses must be in [2, 24]");
  }
  const int k_lo = std::max(1, n_clauses - kUtilityMass);
  const int k_hi = std::min(n_clauses - 1, kUtilityMass);
  const int k = UniformInt(rng, k_lo, k_hi);
  std::vector<int> values = SampleComposition(rng, kUtilityMass, k);
  for (int v : SampleComposition(rng, kUtilityMass, n_clauses - k)) {
    values.push_back(-v);
  }
  for (int i = n_clauses - 1; i > 0; --i) {
    std::swap(values[i], values[UniformInt(rng, static_cast<uint64_t>(i) + 1)]);
  }
  return UtilityVector(std::move(values));
}

std::vector<UtilityPair> GenerateTestSet(uint64_t seed, int count,
                                         int n_clauses) {
  if (count < 1) throw ContractViolation("test set count must be >= 1");
  Rng rng(seed);
  std::vector<UtilityPair> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    UtilityVector a = SampleUtility(rng, n_clauses);
    UtilityVector b = SampleUtility(rng, n_clauses);
    out.emplace_back(std::move(a), std::move(b));
  }
  return out;
}

// -------------------------------------------------------------- Oracles

int Score(const Offer& deal, const UtilityVector& utility) {
  if (deal.size() != utility.size()) {
    throw ContractViolation("deal and utility lengths differ");
  }
  int s = 0;
  for (int i = 0; i < deal.size(); ++i) s += deal[i] * utility[i];
  return s;
}

namespace {

void CheckOracleSizes(const Offer* deal, const UtilityVector& ua,
                      const UtilityVector& ub) {
  if (ua.size() != ub.size() || (deal && deal->size() != ua.size())) {
    throw ContractViolation("inconsistent clause counts");
  }
  if (ua.size() > kMaxOracleClauses) {
    throw ContractViolation("too many clauses for exhaustive oracle");
  }
}

// Scores of every deal, indexed by its big-endian integer.
std::vector<std::array<int, 2>> AllScores(const UtilityVector& ua,
                                          const UtilityVector& ub) {
  const int n = ua.size();
  const uint64_t count = uint64_t{1} << n;
  std::vector<std::array<int, 2>> scores(count);
  for (uint64_t d = 0; d < count; ++d) {
    int sa = 0, sb = 0;
    for (int i = 0; i < n; ++i) {
      if ((d >> (n - 1 - i)) & 1) {
        sa += ua[i];
        sb += ub[i];
      }
    }
    scores[d] = {sa, sb};
  }
  return scores;
}

bool Dominates(const std::array<int, 2>& e, const std::array<int, 2>& d,
               Dominance rule) {
  if (rule == Dominance::kWeak) return e[0] > d[0] && e[1] > d[1];
  return e[0] >= d[0] && e[1] >= d[1] && (e[0] > d[0] || e[1] > d[1]);
}

}  // namespace

bool IsParetoOptimal(const Offer& deal, const UtilityVector& ua,
                     const UtilityVector& ub, Dominance rule) {
  CheckOracleSizes(&deal, ua, ub);
  const std::array<int, 2> mine{Score(deal, ua), Score(deal, ub)};
  const int n = ua.size();
  for (uint64_t e = 0; e < (uint64_t{1} << n); ++e) {
    Offer other = Offer::FromIndex(e, n);
    if (Dominates({Score(other, ua), Score(other, ub)}, mine, rule)) {
      return false;
    }
  }
  return true;
}

bool IsOptimalDeal(const Offer& deal, const UtilityVector& ua,
                   const UtilityVector& ub) {
  CheckOracleSizes(&deal, ua, ub);
  if (Score(deal, ua) <= 0 || Score(deal, ub) <= 0) return false;
  return IsParetoOptimal(deal, ua, ub, Dominance::kWeak);
}

std::optional<JointDeal> BestJointDeal(const UtilityVector& ua,
                                       const UtilityVector& ub,
                                       double normalizer) {
  CheckOracleSizes(nullptr, ua, ub);
  const auto scores = AllScores(ua, ub);
  // Scores lie in [-12, 12]; bucket by A's score so the weak-dominance test
  // is a lookup: is there a deal with a strictly higher A score and a strictly
  // higher B score?
  constexpr int kOffset = kUtilityMass;
  constexpr int kBuckets = 2 * kUtilityMass + 2;
  constexpr int kNone = std::numeric_limits<int>::min();
  std::array<int, kBuckets> best_b;
  best_b.fill(kNone);
  for (const auto& s : scores) {
    best_b[s[0] + kOffset] = std::max(best_b[s[0] + kOffset], s[1]);
  }
  std::array<int, kBuckets + 1> best_b_above;  // max B over A-score > bucket
  best_b_above[kBuckets] = kNone;
  best_b_above[kBuckets - 1] = kNone;
  for (int i = kBuckets - 2; i >= 0; --i) {
    best_b_above[i] = std::max(best_b_above[i + 1], best_b[i + 1]);
  }
  std::optional<JointDeal> best;
  int best_sum = kNone;
  for (uint64_t d = 0; d < scores.size(); ++d) {
    const auto& s = scores[d];
    if (s[0] <= 0 || s[1] <= 0) continue;
    if (best_b_above[s[0] + kOffset] > s[1]) continue;
    if (s[0] + s[1] > best_sum) {
      best_sum = s[0] + s[1];
      best = JointDeal{Offer::FromIndex(d, ua.size()), best_sum / normalizer};
    }
  }
  return best;
}

double MaxJointReward(const UtilityVector& ua, const UtilityVector& ub,
                      double normalizer) {
  if (auto best = BestJointDeal(ua, ub, normalizer)) return best->joint;
  int best_sum = std::numeric_limits<int>::min();
  for (const auto& s : AllScores(ua, ub)) best_sum = std::max(best_sum, s[0] + s[1]);
  return best_sum / normalizer;
}

// ------------------------------------------------------------- Protocol

void FinalizeTranscript(Transcript& t, const NegotiationConfig& cfg) {
  if (t.deal) {
    t.raw_scores = {Score(*t.deal, t.utility_a), Score(*t.deal, t.utility_b)};
    t.normalized_scores = {t.raw_scores[0] / cfg.score_normalizer,
                           t.raw_scores[1] / cfg.score_normalizer};
    t.optimal = IsOptimalDeal(*t.deal, t.utility_a, t.utility_b);
  } else {
    t.raw_scores = {0, 0};
    t.normalized_scores = {cfg.disagreement_reward, cfg.disagreement_reward};
    t.optimal = false;
  }
}

std::string CheckTranscript(const Transcript& t, const NegotiationConfig& cfg) {
  if (t.length() > cfg.max_offers) return "more moves than max_offers";
  Seat expected = t.first_mover;
  for (int i = 0; i < t.length(); ++i) {
    const Move& m = t.moves[i];
    if (m.agent != expected) return "moves do not alternate";
    if (m.turn != i + 1) return "turn indices are not 1..n";
    if (m.offer.size() != cfg.n_clauses) return "offer of wrong size";
    const Offer reference =
        i == 0 ? Offer::Zeros(cfg.n_clauses) : t.moves[i - 1].offer;
    if (m.action != HammingDistance(reference, m.offer)) {
      return "action does not match bits flipped";
    }
    expected = Other(expected);
  }
  if (t.deal) {
    if (t.length() < 2) return "agreement needs at least two moves";
    if (!(t.moves.back().offer == t.moves[t.length() - 2].offer)) {
      return "agreement without echo";
    }
    if (!(*t.deal == t.moves.back().offer)) return "deal differs from last offer";
    if (t.raw_scores[0] != Score(*t.deal, t.utility_a) ||
        t.raw_scores[1] != Score(*t.deal, t.utility_b)) {
      return "raw scores do not match deal";
    }
  }
  return {};
}

NegotiationGame::NegotiationGame(const UtilityVector& ua, const UtilityVector& ub,
                                 Seat first_mover, const NegotiationConfig& cfg)
    : cfg_(cfg), to_move_(first_mover) {
  cfg_.Validate();
  if (ua.size() != cfg_.n_clauses || ub.size() != cfg_.n_clauses) {
    throw ContractViolation("utility length differs from n_clauses");
  }
  t_.utility_a = ua;
  t_.utility_b = ub;
  t_.first_mover = first_mover;
  last_ = {Offer::Zeros(cfg_.n_clauses), Offer::Zeros(cfg_.n_clauses)};
}

std::optional<Offer> NegotiationGame::last_offer() const {
  if (t_.moves.empty()) return std::nullopt;
  return t_.moves.back().offer;
}

Observation NegotiationGame::CurrentObservation() const {
  return Observation{&t_.utility(to_move_), last_[Index(Other(to_move_))],
                     last_[Index(to_move_)], to_move_, next_turn()};
}

void NegotiationGame::Submit(const Offer& offer) {
  if (finished_) throw ContractViolation("negotiation already finished");
  if (offer.size() != cfg_.n_clauses) {
    throw ProtocolError("episode aborted: agent " + std::string(1, SeatName(to_move_)) +
                        " emitted an offer of size " + std::to_string(offer.size()));
  }
  const int turn = next_turn();
  const Offer reference = turn == 1 ? Offer::Zeros(cfg_.n_clauses) : t_.moves.back().offer;
  const bool accepted = turn > 1 && offer == reference;
  t_.moves.push_back(Move{to_move_, turn, HammingDistance(reference, offer), offer});
  if (accepted) {
    t_.deal = offer;
    finished_ = true;
  } else {
    last_[Index(to_move_)] = offer;
    to_move_ = Other(to_move_);
    finished_ = turn == cfg_.max_offers;
  }
  if (finished_) FinalizeTranscript(t_, cfg_);
}

Transcript PlayNegotiation(Negotiator& agent_a, Negotiator& agent_b,
                           const UtilityVector& ua, const UtilityVector& ub,
                           Seat first_mover, const NegotiationConfig& cfg) {
  NegotiationGame game(ua, ub, first_mover, cfg);
  agent_a.BeginEpisode(ua, Seat::kA);
  agent_b.BeginEpisode(ub, Seat::kB);
  while (!game.finished()) {
    Negotiator& agent = game.to_move() == Seat::kA ? agent_a : agent_b;
    game.Submit(agent.Act(game.CurrentObservation()));
  }
  return game.transcript();
}

Transcript RunNegotiation(Negotiator& agent_a, Negotiator& agent_b,
                          const UtilityVector& ua, const UtilityVector& ub,
                          const NegotiationConfig& cfg, Rng& rng) {
  const Seat first = CoinFlip(rng) ? Seat::kB : Seat::kA;
  return PlayNegotiation(agent_a, agent_b, ua, ub, first, cfg);
}

}  // namespace clause_arena
