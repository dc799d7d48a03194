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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "clause_arena/training.h"

namespace clause_arena {
namespace {

// Echoes whatever it receives; opens with every clause.
class EchoAgent : public Negotiator {
 public:
  Offer Act(const Observation& obs) override {
    return obs.turn == 1 ? Offer::Ones(obs.opponent_offer.size()) : obs.opponent_offer;
  }
};

// Always proposes the complement of what it received, so nothing is echoed.
class ContraryAgent : public Negotiator {
 public:
  Offer Act(const Observation& obs) override {
    Offer o = obs.opponent_offer;
    for (int i = 0; i < o.size(); ++i) o.Flip(i);
    return o;
  }
};

TEST(MetricsTest, EchoPairAlwaysAgreesAtMoveTwo) {
  EchoAgent a, b;
  const auto set = GenerateTestSet(3, 500);
  const MatchResult r = RunMatch(a, b, set, {}, 11);
  EXPECT_EQ(r.report.games, 500);
  EXPECT_EQ(r.report.agreement_rate, 100.0);
  EXPECT_EQ(r.report.dialog_length, 2.0);
  // The all-ones deal is worth exactly 0 to both sides.
  EXPECT_EQ(r.report.avg_score_a, 0.0);
  EXPECT_EQ(r.report.optimality_rate_overall, 0.0);
}

TEST(MetricsTest, NeverAgreeingPairTimesOut) {
  ContraryAgent a, b;
  const auto set = GenerateTestSet(4, 300);
  const MatchResult r = RunMatch(a, b, set, {}, 12);
  EXPECT_EQ(r.report.agreement_rate, 0.0);
  EXPECT_EQ(r.report.dialog_length, 30.0);
  EXPECT_EQ(r.report.optimality_rate_overall, 0.0);
  EXPECT_EQ(r.report.optimality_rate_on_agreed, 0.0);
  EXPECT_EQ(r.report.avg_score_a, 0.0);
  EXPECT_EQ(r.report.avg_reward_a, -0.5);
  EXPECT_EQ(r.report.avg_reward_b, -0.5);
}

TEST(MetricsTest, HandComputedReport) {
  std::vector<Transcript> ts(4);
  const UtilityVector ua{9, -5, 2, -1, -6, 1}, ub{-5, 9, 2, 1, -6, -1};
  for (Transcript& t : ts) {
    t.utility_a = ua;
    t.utility_b = ub;
  }
  ts[0].moves.resize(2);
  ts[0].deal = Offer{1, 1, 1, 0, 0, 0};  // (6, 6), optimal
  ts[1].moves.resize(4);
  ts[1].deal = Offer{0, 0, 1, 0, 0, 0};  // (2, 2), dominated by 111000
  ts[2].moves.resize(30);                // disagreement
  ts[3].moves.resize(8);
  ts[3].deal = Offer{1, 0, 1, 0, 0, 1};  // (12, -4)
  for (Transcript& t : ts) FinalizeTranscript(t, {});
  ASSERT_TRUE(ts[0].optimal);
  ASSERT_FALSE(ts[1].optimal);

  const MetricsReport m = ComputeMetrics(ts);
  EXPECT_EQ(m.games, 4);
  EXPECT_DOUBLE_EQ(m.dialog_length, 11.0);
  EXPECT_DOUBLE_EQ(m.agreement_rate, 75.0);
  EXPECT_DOUBLE_EQ(m.optimality_rate_overall, 25.0);
  EXPECT_DOUBLE_EQ(m.optimality_rate_on_agreed, 100.0 / 3);
  EXPECT_DOUBLE_EQ(m.avg_score_a, (6 + 2 + 0 + 12) / 12.0 / 4);
  EXPECT_DOUBLE_EQ(m.avg_score_b, (6 + 2 + 0 - 4) / 12.0 / 4);
  EXPECT_DOUBLE_EQ(m.avg_reward_a, ((6 + 2 + 12) / 12.0 - 0.5) / 4);
  EXPECT_EQ(MetricsReport::FromJson(m.ToJson()), m);
  EXPECT_EQ(ComputeMetrics({}).games, 0);
}

TEST(MetricsTest, ScoreAveragesMatchTheirDefinition) {
  Rng rng(8);
  RandomAgent a(&rng), b(&rng);
  const auto set = GenerateTestSet(21, 3000);
  const MatchResult r = RunMatch(a, b, set, {}, 5);
  double sa = 0, sb = 0, ra = 0;
  int optimal = 0, agreed = 0;
  for (const Transcript& t : r.transcripts) {
    EXPECT_EQ(CheckTranscript(t, {}), "");
    if (t.agreed()) {
      sa += t.raw_scores[0] / 12.0;
      sb += t.raw_scores[1] / 12.0;
      ++agreed;
    }
    ra += t.normalized_scores[0];
    optimal += t.optimal;
  }
  EXPECT_NEAR(r.report.avg_score_a, sa / 3000, 1e-12);
  EXPECT_NEAR(r.report.avg_score_b, sb / 3000, 1e-12);
  EXPECT_NEAR(r.report.avg_reward_a, ra / 3000, 1e-12);
  EXPECT_NEAR(r.report.optimality_rate_on_agreed, 100.0 * optimal / agreed, 1e-9);
}

TEST(MatchTest, TranscriptsRecomputeToTheLiveReport) {
  Rng rng(10);
  RandomAgent a(&rng), b(&rng);
  const auto set = GenerateTestSet(22, 1000);
  const MatchResult r = RunMatch(a, b, set, {}, 6);
  const auto path = std::filesystem::temp_directory_path() / "clause_arena_eval_test.jsonl";
  WriteTranscripts(path, r.transcripts);
  const std::vector<Transcript> back = ReadTranscripts(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back, r.transcripts);
  EXPECT_EQ(ComputeMetrics(back), r.report);
  EXPECT_EQ(r.transcripts[7].game_id, "g7");
  EXPECT_EQ(r.transcripts[7].seed, MixSeed(6, 7));
}

TEST(MatchTest, SameSeedSameTranscripts) {
  const auto set = GenerateTestSet(23, 200);
  Rng r1(1), r2(1);
  RandomAgent a1(&r1), b1(&r1), a2(&r2), b2(&r2);
  EXPECT_EQ(RunMatch(a1, b1, set, {}, 3).transcripts, RunMatch(a2, b2, set, {}, 3).transcripts);
}

// ----------------------------------------------------------- RANDOM

TEST(RandomAgentTest, FlipCountIsUniform) {
  Rng rng(12);
  RandomAgent agent(&rng);
  const UtilityVector u{9, -5, 2, -1, -6, 1};
  Observation obs;
  obs.utility = &u;
  obs.opponent_offer = Offer{1, 0, 0, 1, 1, 0};
  obs.own_previous_offer = Offer::Zeros(6);
  obs.turn = 5;
  std::array<int, 7> counts{};
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const Offer o = agent.Act(obs);
    const int k = HammingDistance(o, obs.opponent_offer);
    ++counts[k];
    ASSERT_EQ(o, ApplyRule(obs.opponent_offer, u, k));
  }
  const double p = 1.0 / 7, sd = std::sqrt(n * p * (1 - p));
  for (int c : counts) EXPECT_LE(std::abs(c - n * p), 3 * sd);
}

TEST(RandomAgentTest, AcceptsExactlyWhenItDrawsZeroAfterTheOpening) {
  Rng rng(13);
  RandomAgent a(&rng), b(&rng);
  const auto set = GenerateTestSet(24, 2000);
  for (const Transcript& t : RunMatch(a, b, set, {}, 9).transcripts) {
    for (int i = 1; i + 1 < t.length(); ++i) EXPECT_NE(t.moves[i].action, 0);
    if (t.agreed()) {
      EXPECT_EQ(t.moves.back().action, 0);
      EXPECT_GE(t.length(), 2);
    } else {
      EXPECT_EQ(t.length(), 30);
    }
  }
}

// ----------------------------------------------------------- COMMON

TEST(CommonTest, IntersectionExample) {
  const UtilityVector ua{9, -5, 2, -1, -6, 1}, ub{-5, 9, 2, 1, -6, -1};
  const Transcript t = CommonTranscript(ua, ub, Seat::kA, {});
  ASSERT_EQ(t.length(), 4);
  EXPECT_EQ(t.moves[0].offer.ToString(), "101001");
  EXPECT_EQ(t.moves[1].offer.ToString(), "011100");
  EXPECT_EQ(t.moves[2].offer.ToString(), "001000");
  EXPECT_EQ(t.moves[3].offer.ToString(), "001000");
  EXPECT_EQ(t.moves[0].agent, Seat::kA);
  EXPECT_EQ(t.moves[3].agent, Seat::kB);
  ASSERT_TRUE(t.agreed());
  EXPECT_EQ(t.raw_scores, (std::array<int, 2>{2, 2}));
  EXPECT_FALSE(t.optimal);  // 111000 gives (6, 6)
  EXPECT_EQ(CheckTranscript(t, {}), "");
}

TEST(CommonTest, DisjointSupportsDisagreeAfterThreeOffers) {
  const UtilityVector ua{6, 6, -3, -3, -3, -3}, ub{-3, -3, 6, 6, -3, -3};
  const Transcript t = CommonTranscript(ua, ub, Seat::kB, {});
  ASSERT_EQ(t.length(), 3);
  EXPECT_EQ(t.moves[0].agent, Seat::kB);
  EXPECT_EQ(t.moves[2].offer, Offer::Zeros(6));
  EXPECT_FALSE(t.agreed());
  EXPECT_EQ(t.normalized_scores[0], -0.5);
}

TEST(CommonTest, DeterministicAndSymmetric) {
  const auto set = GenerateTestSet(25, 2000);
  const MatchResult r1 = RunCommon(set, {}, 4), r2 = RunCommon(set, {}, 4);
  EXPECT_EQ(r1.transcripts, r2.transcripts);
  for (size_t i = 0; i < set.size(); ++i) {
    const Transcript& t = r1.transcripts[i];
    // The agreed deal is the intersection regardless of who opened.
    const Transcript other = CommonTranscript(set[i].first, set[i].second,
                                              Other(t.first_mover), {});
    EXPECT_EQ(other.deal, t.deal);
    EXPECT_TRUE(t.length() == 3 || t.length() == 4);
    EXPECT_EQ(t.agreed(), t.length() == 4);
    if (t.agreed()) {
      EXPECT_GT(t.raw_scores[0], 0);
      EXPECT_GT(t.raw_scores[1], 0);
    }
  }
}

// ------------------------------------------------------- sequences

TEST(SequenceTest, HistogramKeysAndCounts) {
  Rng rng(14);
  RandomAgent a(&rng), b(&rng);
  const auto set = GenerateTestSet(26, 3000);
  const MatchResult r = RunMatch(a, b, set, {}, 2);
  const auto hist = ActionSequenceHistogram(r.transcripts);
  int64_t total = 0, optimal = 0;
  for (const auto& [key, s] : hist) {
    total += s.count;
    optimal += s.optimal;
    EXPECT_LE(s.optimal, s.count);
    const std::vector<int> ks = ParseActionKey(key);
    EXPECT_FALSE(ks.empty());
  }
  EXPECT_EQ(total, 3000);
  EXPECT_DOUBLE_EQ(100.0 * optimal / 3000, r.report.optimality_rate_overall);

  const auto top = TopSequences(hist, 10);
  ASSERT_EQ(top.size(), 10u);
  for (size_t i = 1; i < top.size(); ++i) {
    EXPECT_TRUE(top[i - 1].second.count > top[i].second.count ||
                (top[i - 1].second.count == top[i].second.count &&
                 top[i - 1].first < top[i].first));
  }
  const std::string csv = HistogramCsv(hist);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + static_cast<long>(hist.size()));
}

TEST(SequenceTest, KeyFormat) {
  Transcript t;
  t.moves = {{Seat::kA, 1, 3, Offer{1, 1, 1, 0, 0, 0}},
             {Seat::kB, 2, 0, Offer{1, 1, 1, 0, 0, 0}}};
  EXPECT_EQ(t.ActionKey(), "3,0");
  const auto hist = ActionSequenceHistogram(std::span<const Transcript>(&t, 1));
  EXPECT_EQ(hist.at("3,0").count, 1);
  EXPECT_EQ(ParseActionKey("3,0"), (std::vector<int>{3, 0}));
  EXPECT_EQ(ParseActionKey("2,2,2,2,2,2,1,0").size(), 8u);
  EXPECT_THROW(ParseActionKey("3,,0"), ContractViolation);
}

PolicyModel RandomModel(uint64_t seed) {
  PolicyModel m;
  Rng rng(seed);
  m.config = PolicyNetConfig{};
  m.checkpoint.layer_specs = m.config.LayerSpecs();
  m.checkpoint.store = InitPolicyParameters(m.config, rng);
  return m;
}

TEST(SequenceTest, ForcedSequenceIsFollowedThenReleased) {
  const PolicyModel m = RandomModel(40);
  const auto set = GenerateTestSet(27, 50);
  const MetricsReport forced = PlayForcedSequence(m, Seat::kA, m, Seat::kB, {3, 0}, set, {}, 1);
  // Move 2 echoes move 1, so every game ends there.
  EXPECT_EQ(forced.agreement_rate, 100.0);
  EXPECT_EQ(forced.dialog_length, 2.0);

  const MetricsReport longer =
      PlayForcedSequence(m, Seat::kA, m, Seat::kB, {2, 2, 2, 1, 0}, set, {}, 1);
  EXPECT_EQ(longer.dialog_length, 5.0);
}

// ------------------------------------------------------- interplay

TEST(InterplayTest, ShapeAndSelfPairSymmetry) {
  const PolicyModel pp = RandomModel(50), ss = RandomModel(51), mixed = RandomModel(52);
  const auto agents = BehaviorAgents(pp, ss, mixed);
  const auto set = GenerateTestSet(28, 40);
  const InterplayResult r = InterplayMatrix(agents, set, {}, 3);
  ASSERT_EQ(r.pairs.size(), 5u);
  ASSERT_EQ(r.reports.size(), 5u);
  EXPECT_EQ(r.order, (std::vector<std::string>{"ss", "sp", "ps", "pp"}));
  ASSERT_EQ(r.diff.size(), 4u);
  for (size_t i = 0; i < 4; ++i) {
    for (size_t j = 0; j < 4; ++j) {
      EXPECT_EQ(std::isnan(r.diff[i][j]), j <= i) << i << "," << j;
    }
  }
  const Json j = r.ToJson();
  EXPECT_TRUE(j.at("difference").at("matrix")[1][0].is_null());
  const std::string diff_csv = r.DifferenceCsv(), pairs_csv = r.PairsCsv();
  EXPECT_EQ(std::count(diff_csv.begin(), diff_csv.end(), '\n'), 5);
  EXPECT_EQ(std::count(pairs_csv.begin(), pairs_csv.end(), '\n'), 6);

  // One checkpoint in both seats with one identity, on a set closed under
  // swapping the sides: every game has a mirror image.
  std::vector<UtilityPair> mirrored;
  for (const auto& [a, b] : GenerateTestSet(29, 300)) {
    mirrored.push_back({a, b});
    mirrored.push_back({b, a});
  }
  const TaggedModel same{"pp", &pp, Seat::kA};
  const MetricsReport self = PlayModels(same, same, mirrored, {}, 4).report;
  EXPECT_NEAR(self.avg_score_a - self.avg_score_b, 0.0, 0.02);
}

}  // namespace
}  // namespace clause_arena
