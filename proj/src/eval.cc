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

#include "clause_arena/eval.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace clause_arena {

namespace {

double Percent(int64_t num, int64_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

Json NullableNumber(double v) { return std::isnan(v) ? Json(nullptr) : Json(v); }

}  // namespace

Json MetricsReport::ToJson() const {
  return {{"games", games},
          {"dialog_length", dialog_length},
          {"agreement_rate", agreement_rate},
          {"optimality_rate_overall", optimality_rate_overall},
          {"optimality_rate_on_agreed", optimality_rate_on_agreed},
          {"avg_score_a", avg_score_a},
          {"avg_score_b", avg_score_b},
          {"avg_reward_a", avg_reward_a},
          {"avg_reward_b", avg_reward_b}};
}

MetricsReport MetricsReport::FromJson(const Json& j) {
  MetricsReport r;
  r.games = j.at("games").get<int64_t>();
  r.dialog_length = j.at("dialog_length").get<double>();
  r.agreement_rate = j.at("agreement_rate").get<double>();
  r.optimality_rate_overall = j.at("optimality_rate_overall").get<double>();
  r.optimality_rate_on_agreed = j.at("optimality_rate_on_agreed").get<double>();
  r.avg_score_a = j.at("avg_score_a").get<double>();
  r.avg_score_b = j.at("avg_score_b").get<double>();
  r.avg_reward_a = j.at("avg_reward_a").get<double>();
  r.avg_reward_b = j.at("avg_reward_b").get<double>();
  return r;
}

MetricsReport ComputeMetrics(std::span<const Transcript> transcripts, double normalizer) {
  MetricsReport r;
  r.games = static_cast<int64_t>(transcripts.size());
  if (r.games == 0) return r;
  int64_t agreed = 0, optimal = 0, offers = 0;
  double score_a = 0, score_b = 0, reward_a = 0, reward_b = 0;
  for (const Transcript& t : transcripts) {
    offers += t.length();
    reward_a += t.normalized_scores[0];
    reward_b += t.normalized_scores[1];
    if (!t.agreed()) continue;
    ++agreed;
    if (t.optimal) ++optimal;
    score_a += t.raw_scores[0] / normalizer;
    score_b += t.raw_scores[1] / normalizer;
  }
  const double n = static_cast<double>(r.games);
  r.dialog_length = offers / n;
  r.agreement_rate = Percent(agreed, r.games);
  r.optimality_rate_overall = Percent(optimal, r.games);
  r.optimality_rate_on_agreed = Percent(optimal, agreed);
  r.avg_score_a = score_a / n;
  r.avg_score_b = score_b / n;
  r.avg_reward_a = reward_a / n;
  r.avg_reward_b = reward_b / n;
  return r;
}

MatchResult RunMatch(Negotiator& agent_a, Negotiator& agent_b,
                     std::span<const UtilityPair> test_set,
                     const NegotiationConfig& cfg, uint64_t seed) {
  MatchResult out;
  out.transcripts.reserve(test_set.size());
  for (size_t i = 0; i < test_set.size(); ++i) {
    const uint64_t game_seed = MixSeed(seed, i);
    Rng rng(game_seed);
    Transcript t = RunNegotiation(agent_a, agent_b, test_set[i].first,
                                  test_set[i].second, cfg, rng);
    t.game_id = "g" + std::to_string(i);
    t.seed = game_seed;
    out.transcripts.push_back(std::move(t));
  }
  out.report = ComputeMetrics(out.transcripts, cfg.score_normalizer);
  return out;
}

Offer RandomAgent::Act(const Observation& obs) {
  const int n = obs.opponent_offer.size();
  const int k = static_cast<int>(UniformInt(*rng_, static_cast<uint64_t>(n + 1)));
  return ApplyRule(obs.opponent_offer, *obs.utility, k);
}

namespace {

Offer PositiveSupport(const UtilityVector& u) {
  std::vector<uint8_t> bits(u.size());
  for (int i = 0; i < u.size(); ++i) bits[i] = u[i] > 0 ? 1 : 0;
  return Offer(std::move(bits));
}

}  // namespace

Transcript CommonTranscript(const UtilityVector& ua, const UtilityVector& ub,
                            Seat first_mover, const NegotiationConfig& cfg) {
  Transcript t;
  t.utility_a = ua;
  t.utility_b = ub;
  t.first_mover = first_mover;
  const Seat second = Other(first_mover);
  const Offer opening = PositiveSupport(t.utility(first_mover));
  const Offer reply = PositiveSupport(t.utility(second));
  std::vector<uint8_t> both(opening.size());
  for (int i = 0; i < opening.size(); ++i) both[i] = opening[i] & reply[i];
  const Offer intersection(std::move(both));

  auto push = [&](Seat who, const Offer& reference, const Offer& offer) {
    t.moves.push_back(Move{who, t.length() + 1, HammingDistance(reference, offer), offer});
  };
  push(first_mover, Offer::Zeros(opening.size()), opening);
  push(second, opening, reply);
  push(first_mover, reply, intersection);
  if (intersection != Offer::Zeros(intersection.size())) {
    push(second, intersection, intersection);
    t.deal = intersection;
  }
  FinalizeTranscript(t, cfg);
  return t;
}

MatchResult RunCommon(std::span<const UtilityPair> test_set,
                      const NegotiationConfig& cfg, uint64_t seed) {
  MatchResult out;
  for (size_t i = 0; i < test_set.size(); ++i) {
    const uint64_t game_seed = MixSeed(seed, i);
    Rng rng(game_seed);
    const Seat first = CoinFlip(rng) ? Seat::kB : Seat::kA;
    Transcript t = CommonTranscript(test_set[i].first, test_set[i].second, first, cfg);
    t.game_id = "g" + std::to_string(i);
    t.seed = game_seed;
    out.transcripts.push_back(std::move(t));
  }
  out.report = ComputeMetrics(out.transcripts, cfg.score_normalizer);
  return out;
}

// ------------------------------------------------------ Action sequences

std::map<std::string, SequenceStats> ActionSequenceHistogram(
    std::span<const Transcript> transcripts) {
  std::map<std::string, SequenceStats> h;
  for (const Transcript& t : transcripts) {
    SequenceStats& s = h[t.ActionKey()];
    ++s.count;
    if (t.optimal) ++s.optimal;
  }
  return h;
}

std::vector<std::pair<std::string, SequenceStats>> TopSequences(
    const std::map<std::string, SequenceStats>& histogram, size_t limit) {
  std::vector<std::pair<std::string, SequenceStats>> v(histogram.begin(), histogram.end());
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    return a.second.count > b.second.count;
  });
  if (v.size() > limit) v.resize(limit);
  return v;
}

std::string HistogramCsv(const std::map<std::string, SequenceStats>& histogram) {
  std::ostringstream out;
  out << "sequence,count,optimal_count\n";
  for (const auto& [key, s] : TopSequences(histogram, histogram.size())) {
    out << '"' << key << "\"," << s.count << ',' << s.optimal << '\n';
  }
  return out.str();
}

std::vector<int> ParseActionKey(const std::string& key) {
  std::vector<int> out;
  std::stringstream in(key);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ContractViolation("bad action sequence '" + key + "'");
    }
  }
  return out;
}

MetricsReport PlayForcedSequence(const PolicyModel& model_a, Seat role_a,
                                 const PolicyModel& model_b, Seat role_b,
                                 const std::vector<int>& sequence,
                                 std::span<const UtilityPair> test_set,
                                 const NegotiationConfig& cfg, uint64_t seed) {
  PolicyAgent a(model_a.params(), model_a.config, ActionMode::kGreedy, nullptr, role_a);
  PolicyAgent b(model_b.params(), model_b.config, ActionMode::kGreedy, nullptr, role_b);
  auto forced = [&sequence](int turn) -> std::optional<int> {
    if (turn - 1 < static_cast<int>(sequence.size())) return sequence[turn - 1];
    return std::nullopt;
  };
  a.SetActionOverride(forced);
  b.SetActionOverride(forced);
  return RunMatch(a, b, test_set, cfg, seed).report;
}

// ------------------------------------------------------------ Interplay

std::vector<std::pair<std::string, std::string>> InterplayPairs() {
  return {{"sp", "ss"}, {"pp", "ps"}, {"pp", "ss"}, {"sp", "pp"}, {"ss", "ps"}};
}

std::vector<std::string> DifferenceOrder() { return {"ss", "sp", "ps", "pp"}; }

MatchResult PlayModels(const TaggedModel& a, const TaggedModel& b,
                       std::span<const UtilityPair> test_set,
                       const NegotiationConfig& cfg, uint64_t seed) {
  if (a.model == nullptr || b.model == nullptr) {
    throw ContractViolation("missing model for " + a.tag + " vs " + b.tag);
  }
  PolicyAgent pa(a.model->params(), a.model->config, ActionMode::kGreedy, nullptr, a.role);
  PolicyAgent pb(b.model->params(), b.model->config, ActionMode::kGreedy, nullptr, b.role);
  return RunMatch(pa, pb, test_set, cfg, seed);
}

InterplayResult InterplayMatrix(const std::map<std::string, TaggedModel>& models,
                                std::span<const UtilityPair> test_set,
                                const NegotiationConfig& cfg, uint64_t seed) {
  auto get = [&](const std::string& tag) -> const TaggedModel& {
    auto it = models.find(tag);
    if (it == models.end() || it->second.model == nullptr) {
      throw ContractViolation("interplay needs a checkpoint for '" + tag + "'");
    }
    return it->second;
  };
  InterplayResult r;
  r.pairs = InterplayPairs();
  for (const auto& [ta, tb] : r.pairs) {
    r.reports.push_back(PlayModels(get(ta), get(tb), test_set, cfg, seed).report);
  }
  r.order = DifferenceOrder();
  const size_t n = r.order.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.diff.assign(n, std::vector<double>(n, nan));
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      const MetricsReport m =
          PlayModels(get(r.order[i]), get(r.order[j]), test_set, cfg, seed).report;
      r.diff[i][j] = m.avg_score_a - m.avg_score_b;
    }
  }
  r.rows_monotone = r.cols_monotone = true;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 2; j < n; ++j) {
      if (!(r.diff[i][j] > r.diff[i][j - 1])) r.rows_monotone = false;
    }
  }
  for (size_t j = 0; j < n; ++j) {
    for (size_t i = 1; i < j; ++i) {
      if (!(r.diff[i][j] < r.diff[i - 1][j])) r.cols_monotone = false;
    }
  }
  return r;
}

Json InterplayResult::ToJson() const {
  Json j;
  j["pairs"] = Json::array();
  for (size_t i = 0; i < pairs.size(); ++i) {
    j["pairs"].push_back({{"agent_a", pairs[i].first},
                          {"agent_b", pairs[i].second},
                          {"metrics", reports[i].ToJson()}});
  }
  Json m = Json::array();
  for (const auto& row : diff) {
    Json jr = Json::array();
    for (double v : row) jr.push_back(NullableNumber(v));
    m.push_back(jr);
  }
  j["difference"] = {{"order", order},
                     {"matrix", m},
                     {"rows_increasing", rows_monotone},
                     {"columns_decreasing", cols_monotone}};
  return j;
}

std::string InterplayResult::PairsCsv() const {
  std::ostringstream out;
  out << "agent_a,agent_b,games,dialog_length,agreement_rate,optimality_rate_overall,"
         "optimality_rate_on_agreed,avg_score_a,avg_score_b\n";
  for (size_t i = 0; i < pairs.size(); ++i) {
    const MetricsReport& m = reports[i];
    out << pairs[i].first << ',' << pairs[i].second << ',' << m.games << ','
        << m.dialog_length << ',' << m.agreement_rate << ',' << m.optimality_rate_overall
        << ',' << m.optimality_rate_on_agreed << ',' << m.avg_score_a << ','
        << m.avg_score_b << '\n';
  }
  return out.str();
}

std::string InterplayResult::DifferenceCsv() const {
  std::ostringstream out;
  out << "agent_a";
  for (const auto& t : order) out << ',' << t;
  out << '\n';
  for (size_t i = 0; i < order.size(); ++i) {
    out << order[i];
    for (double v : diff[i]) {
      out << ',';
      if (!std::isnan(v)) out << v;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace clause_arena
