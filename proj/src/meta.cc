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

#include "clause_arena/meta.h"

#include <algorithm>
#include <sstream>

namespace clause_arena {

BehaviorCheckpoints LoadBehaviorCheckpoints(const std::filesystem::path& dir) {
  auto load = [&](const char* name) {
    const auto path = dir / name;
    if (!std::filesystem::exists(path)) {
      throw std::runtime_error("missing behavior checkpoint " + path.string());
    }
    return LoadPolicyModel(path);
  };
  return {load("pp.json"), load("ss.json"), load("sp-ps.json")};
}

CandidateSource CandidateFor(const BehaviorCheckpoints& base, const std::string& tag) {
  if (tag == "pp") return {&base.pp, std::nullopt};
  if (tag == "ss") return {&base.ss, std::nullopt};
  // The two halves of the asymmetric run differ only in their identity input.
  if (tag == "sp") return {&base.sp_ps, Seat::kA};
  if (tag == "ps") return {&base.sp_ps, Seat::kB};
  throw ContractViolation("unknown agent tag '" + tag + "'");
}

PolicyNetConfig SelectorNetConfig() {
  PolicyNetConfig cfg;
  cfg.candidate_offers = 4;
  cfg.head_outputs = 4;
  return cfg;
}

MetaAgent::MetaAgent(const BehaviorCheckpoints& base, const nn::ParameterStore& selector,
                     PolicyNetConfig cfg, ActionMode mode, Rng* rng)
    : cfg_(cfg), mode_(mode), rng_(rng), tape_(selector) {
  if (cfg_.candidate_offers != 4 || cfg_.head_outputs != 4) {
    throw ContractViolation("selector network must take and choose among 4 candidates");
  }
  for (const char* tag : kCandidateTags) {
    const CandidateSource src = CandidateFor(base, tag);
    candidates_.push_back(std::make_unique<PolicyAgent>(
        src.model->params(), src.model->config, ActionMode::kGreedy, nullptr, src.identity));
  }
}

void MetaAgent::BeginEpisode(const UtilityVector& utility, Seat seat) {
  for (auto& c : candidates_) c->BeginEpisode(utility, seat);
  tape_.Clear();
  steps_.clear();
  observations_.clear();
  utility_ = std::make_unique<UtilityVector>(utility);
  state_ = PolicyState::Initial(tape_, cfg_);
}

Offer MetaAgent::Act(const Observation& obs) {
  if (!utility_) BeginEpisode(*obs.utility, obs.agent_id);
  Observation own = obs;
  own.utility = utility_.get();
  observations_.push_back(own);
  for (size_t j = 0; j < candidates_.size(); ++j) last_candidates_[j] = candidates_[j]->Act(own);
  nn::Var encoded = EncodeState(tape_, cfg_, own, last_candidates_);
  PolicyOutput out = PolicyForward(tape_, cfg_, encoded, state_);
  const int j = SelectAction(out.probs, mode_, rng_);
  state_ = std::move(out.state);
  steps_.push_back(StepRecord{obs.turn, j, out.logits, std::move(out.probs)});
  return last_candidates_[j];
}

std::vector<int> MetaAgent::selections() const {
  std::vector<int> out;
  for (const StepRecord& s : steps_) out.push_back(s.action);
  return out;
}

double MetaShapeReward(const Transcript& t, Seat meta_side, const RewardConfig& cfg) {
  if (!t.agreed()) return 2 * cfg.disagreement_reward;
  return (t.raw_scores[Index(meta_side)] + t.raw_scores[Index(Other(meta_side))]) /
         cfg.normalizer;
}

MetaConfig MetaConfig::Profile(const std::string& name) {
  MetaConfig c;
  c.train = TrainConfig::Profile(name);
  c.train.net = SelectorNetConfig();
  c.train.eval_every = c.train.episodes_per_epoch;
  c.train.eval_games = 500;
  return c;
}

Json MetaConfig::ToJson() const {
  Json j = train.ToJson();
  j["batch_episodes"] = batch_episodes;
  j["candidate_order"] = kCandidateTags;
  return j;
}

std::string MetaCurveCsv(std::span<const MetaCurvePoint> points) {
  std::ostringstream out;
  out.precision(10);
  out << "episode,opponent,joint_score,agreement_rate,optimality_rate\n";
  for (const auto& p : points) {
    out << p.episode << ',' << p.opponent << ',' << p.joint_score << ','
        << p.agreement_rate << ',' << p.optimality_rate << '\n';
  }
  return out.str();
}

std::string JoinInts(const std::vector<int>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

namespace {

MatchResult PlayMetaWith(const BehaviorCheckpoints& base, const nn::ParameterStore& selector,
                         const PolicyNetConfig& net, const std::string& opponent_tag,
                         std::span<const UtilityPair> test_set, const NegotiationConfig& cfg,
                         uint64_t seed, std::vector<std::vector<int>>* selections) {
  MetaAgent meta(base, selector, net, ActionMode::kGreedy, nullptr);
  const CandidateSource src = CandidateFor(base, opponent_tag);
  PolicyAgent opponent(src.model->params(), src.model->config, ActionMode::kGreedy, nullptr,
                       src.identity);
  MatchResult out;
  for (size_t i = 0; i < test_set.size(); ++i) {
    const uint64_t game_seed = MixSeed(seed, i);
    Rng rng(game_seed);
    Transcript t = RunNegotiation(meta, opponent, test_set[i].first, test_set[i].second, cfg, rng);
    t.game_id = "g" + std::to_string(i);
    t.seed = game_seed;
    if (selections) selections->push_back(meta.selections());
    out.transcripts.push_back(std::move(t));
  }
  out.report = ComputeMetrics(out.transcripts, cfg.score_normalizer);
  return out;
}

Json EvalAllOpponents(const BehaviorCheckpoints& base, const nn::ParameterStore& selector,
                      const PolicyNetConfig& net, std::span<const UtilityPair> test_set,
                      const NegotiationConfig& cfg, uint64_t seed) {
  Json j = Json::object();
  for (const char* tag : kCandidateTags) {
    const MetricsReport m =
        PlayMetaWith(base, selector, net, tag, test_set, cfg, seed, nullptr).report;
    j[tag] = {{"metrics", m.ToJson()}, {"joint_score", m.avg_score_a + m.avg_score_b}};
  }
  return j;
}

}  // namespace

MatchResult PlayMeta(const BehaviorCheckpoints& base, const PolicyModel& selector,
                     const std::string& opponent_tag, std::span<const UtilityPair> test_set,
                     const NegotiationConfig& cfg, uint64_t seed,
                     std::vector<std::vector<int>>* selections) {
  return PlayMetaWith(base, selector.params(), selector.config, opponent_tag, test_set, cfg,
                      seed, selections);
}

MetaTrainResult MetaTrain(const BehaviorCheckpoints& base, const MetaConfig& mcfg,
                          const ProgressFn& progress) {
  const TrainConfig& cfg = mcfg.train;
  cfg.Validate();
  if (mcfg.batch_episodes < 1) throw ContractViolation("batch_episodes must be positive");
  MetaTrainResult result;
  nn::Checkpoint& ckpt = result.checkpoint;
  ckpt.behavior_tag = "meta";
  ckpt.hyperparameters = mcfg.ToJson();
  ckpt.layer_specs = cfg.net.LayerSpecs();
  {
    Rng init_rng(MixSeed(cfg.seed, 0x1417));
    ckpt.store = InitPolicyParameters(cfg.net, init_rng);
  }
  const std::vector<UtilityPair> eval_set =
      GenerateTestSet(cfg.eval_seed, cfg.eval_games, cfg.game.n_clauses);

  Rng action_rng(MixSeed(cfg.seed, 0xac7));
  Rng opponent_rng(MixSeed(cfg.seed, 0x0bb));
  MetaAgent meta(base, ckpt.store, cfg.net, ActionMode::kSample, &action_rng);
  std::vector<std::unique_ptr<PolicyAgent>> opponents;
  for (const char* tag : kCandidateTags) {
    const CandidateSource src = CandidateFor(base, tag);
    opponents.push_back(std::make_unique<PolicyAgent>(
        src.model->params(), src.model->config, ActionMode::kGreedy, nullptr, src.identity));
  }
  BaselineTracker baseline;
  size_t opponent = 0;

  const int64_t total = cfg.TotalEpisodes();
  for (int64_t episode = 0; episode < total; ++episode) {
    if (episode % mcfg.batch_episodes == 0) opponent = UniformInt(opponent_rng, opponents.size());
    const int epoch = static_cast<int>(episode / cfg.episodes_per_epoch);
    Rng game_rng(MixSeed(cfg.seed, static_cast<uint64_t>(episode) + 1));
    UtilityVector ua = SampleUtility(game_rng, cfg.game.n_clauses);
    UtilityVector ub = SampleUtility(game_rng, cfg.game.n_clauses);
    Transcript t = RunNegotiation(meta, *opponents[opponent], ua, ub, cfg.game, game_rng);

    const double reward = MetaShapeReward(t, Seat::kA, cfg.reward);
    nn::GradientMap grads;
    AccumulateEpisodeGradient(meta.tape(), meta.steps(), t, Seat::kA, reward, baseline.mean(),
                              cfg.gamma, cfg.entropy_weights[epoch], grads,
                              StepCheck::kTurnsOnly);
    baseline.Add(reward);
    nn::SgdNesterovStep(ckpt.store, grads, cfg.lr, cfg.momentum);

    const int64_t seen = episode + 1;
    if (seen % cfg.eval_every == 0) {
      const Json e = EvalAllOpponents(base, ckpt.store, cfg.net, eval_set, cfg.game, cfg.eval_seed);
      std::ostringstream line;
      line << "meta episode " << seen << "/" << total << ":";
      for (const char* tag : kCandidateTags) {
        const MetricsReport m = MetricsReport::FromJson(e[tag]["metrics"]);
        const double joint = e[tag]["joint_score"].get<double>();
        result.curve.push_back({seen, tag, joint, m.agreement_rate, m.optimality_rate_overall});
        line << " " << tag << " joint " << joint << " agree " << m.agreement_rate << "%";
      }
      if (progress) progress(line.str());
    }
  }

  result.final_eval = EvalAllOpponents(base, ckpt.store, cfg.net, eval_set, cfg.game,
                                       cfg.eval_seed);
  nn::TrainingMeta& meta_info = ckpt.training_meta;
  meta_info.episodes_seen = total;
  meta_info.epoch = cfg.epochs;
  meta_info.rng_algorithm = kRngAlgorithm;
  meta_info.seed = cfg.seed;
  meta_info.extra["final_eval"] = result.final_eval;
  meta_info.extra["baseline"] = baseline.mean();
  meta_info.extra["candidates"] = {{"pp", "pp.json"}, {"ss", "ss.json"},
                                   {"ps", "sp-ps.json#B"}, {"sp", "sp-ps.json#A"}};
  return result;
}

std::string SelectionExport::Csv() const {
  std::ostringstream out;
  out << "opponent_tag,sequence,count\n";
  std::vector<std::pair<std::pair<std::string, std::string>, int64_t>> rows(counts.begin(),
                                                                            counts.end());
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.first.first != b.first.first) return a.first.first < b.first.first;
    return a.second > b.second;
  });
  for (const auto& [key, n] : rows) out << key.first << ",\"" << key.second << "\"," << n << '\n';
  return out.str();
}

Json SelectionExport::AnalysisJson(size_t top) const {
  std::map<std::string, int64_t> overall;
  int64_t games = 0;
  for (const auto& [key, n] : counts) {
    overall[key.second] += n;
    games += n;
  }
  std::vector<std::pair<std::string, int64_t>> ranked(overall.begin(), overall.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > top) ranked.resize(top);
  Json seqs = Json::array();
  for (const auto& [seq, n] : ranked) {
    Json prefix_of = Json::array(), part_of = Json::array();
    for (const auto& [other, m] : ranked) {
      if (other.size() <= seq.size()) continue;
      // Compare whole comma-separated items.
      const std::string padded = "," + other + ",";
      if (other.rfind(seq + ",", 0) == 0) prefix_of.push_back(other);
      else if (padded.find("," + seq + ",") != std::string::npos) part_of.push_back(other);
    }
    seqs.push_back({{"sequence", seq},
                    {"count", n},
                    {"prefix_of", prefix_of},
                    {"contained_in", part_of}});
  }
  return {{"games", games}, {"candidate_order", kCandidateTags}, {"top_sequences", seqs}};
}

SelectionExport ExportSelectionSequences(const BehaviorCheckpoints& base,
                                         const PolicyModel& selector,
                                         std::span<const UtilityPair> test_set,
                                         const NegotiationConfig& cfg, uint64_t seed) {
  SelectionExport ex;
  for (const char* tag : kCandidateTags) {
    std::vector<std::vector<int>> selections;
    PlayMeta(base, selector, tag, test_set, cfg, seed, &selections);
    for (const auto& s : selections) ++ex.counts[{tag, JoinInts(s)}];
  }
  return ex;
}

}  // namespace clause_arena
