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

#include "clause_arena/training.h"

#include <cmath>
#include <sstream>

#include "clause_arena/transcript_io.h"

namespace clause_arena {

char RoleLetter(Role r) { return r == Role::kProsocial ? 'p' : 's'; }

BehaviorSpec BehaviorSpec::Parse(const std::string& name) {
  if (name == "pp") return {Role::kProsocial, Role::kProsocial};
  if (name == "ss") return {Role::kSelfish, Role::kSelfish};
  if (name == "sp-ps") return {Role::kSelfish, Role::kProsocial};
  throw ContractViolation("unknown behavior '" + name + "' (expected pp, ss or sp-ps)");
}

std::string BehaviorSpec::Name() const {
  if (role_a == role_b) return std::string(2, RoleLetter(role_a));
  if (role_a == Role::kSelfish) return "sp-ps";
  throw ContractViolation("behavior ps-sp is spelled sp-ps (seat A selfish)");
}

std::string BehaviorSpec::TagFor(Seat s) const {
  return {RoleLetter(role(s)), RoleLetter(role(Other(s)))};
}

double ShapeReward(Role role, const Transcript& t, Seat seat, const RewardConfig& cfg) {
  if (!t.agreed()) return cfg.disagreement_reward;
  const double own = t.raw_scores[Index(seat)] / cfg.normalizer;
  if (role == Role::kSelfish) return own;
  return t.optimal ? own : cfg.nonoptimal_prosocial_reward;
}

TrainConfig TrainConfig::Profile(const std::string& name) {
  TrainConfig c;
  if (name == "paper") return c;
  if (name == "desk") {
    c.episodes_per_epoch = 20000;
    c.eval_every = 5000;
    return c;
  }
  throw ContractViolation("unknown profile '" + name + "' (expected paper or desk)");
}

void TrainConfig::Validate() const {
  game.Validate();
  if (epochs < 1 || episodes_per_epoch < 1) throw ContractViolation("empty training schedule");
  if (static_cast<int>(entropy_weights.size()) != epochs) {
    throw ContractViolation("need one entropy weight per epoch");
  }
  if (eval_every < 1 || eval_games < 1) throw ContractViolation("bad evaluation schedule");
  if (!(lr > 0) || momentum < 0 || gamma <= 0 || gamma > 1) {
    throw ContractViolation("bad optimizer settings");
  }
  if (net.n_clauses != game.n_clauses || net.max_turns != game.max_offers) {
    throw ContractViolation("network shape does not match the game");
  }
}

Json TrainConfig::ToJson() const {
  return {{"epochs", epochs},
          {"episodes_per_epoch", episodes_per_epoch},
          {"gamma", gamma},
          {"entropy_weights", entropy_weights},
          {"lr", lr},
          {"momentum", momentum},
          {"eval_every", eval_every},
          {"eval_games", eval_games},
          {"eval_seed", eval_seed},
          {"seed", seed},
          {"n_clauses", game.n_clauses},
          {"max_offers", game.max_offers},
          {"disagreement_reward", reward.disagreement_reward},
          {"nonoptimal_prosocial_reward", reward.nonoptimal_prosocial_reward},
          {"score_normalizer", reward.normalizer},
          {"init", "uniform(+-sqrt(1/fan_in)); bias 0; embeddings uniform(+-0.1)"}};
}

void BaselineTracker::Add(double reward) {
  ++count_;
  mean_ += (reward - mean_) / static_cast<double>(count_);
}

nn::Var EpisodeObjective(nn::Tape& tape, std::span<const StepRecord> steps,
                         int final_turn, double advantage, double gamma,
                         double entropy_weight) {
  std::vector<nn::Var> terms;
  std::vector<double> weights;
  for (const StepRecord& s : steps) {
    terms.push_back(nn::LogSoftmaxAt(tape, s.logits, s.action));
    weights.push_back(std::pow(gamma, final_turn - s.turn) * advantage);
    terms.push_back(nn::Entropy(tape, s.logits));
    weights.push_back(entropy_weight);
  }
  return nn::WeightedSum(tape, terms, weights);
}

double AccumulateEpisodeGradient(nn::Tape& tape, std::span<const StepRecord> steps,
                                 const Transcript& t, Seat seat, double reward,
                                 double baseline, double gamma,
                                 double entropy_weight, nn::GradientMap& grads,
                                 StepCheck check) {
  size_t next = 0;
  for (const Move& m : t.moves) {
    if (m.agent != seat) continue;
    if (next >= steps.size() || steps[next].turn != m.turn ||
        (check == StepCheck::kTurnsAndActions && steps[next].action != m.action)) {
      throw ContractViolation("recorded policy steps do not match the transcript");
    }
    ++next;
  }
  if (next != steps.size()) {
    throw ContractViolation("recorded policy steps do not match the transcript");
  }
  if (steps.empty()) return 0.0;
  nn::Var objective = EpisodeObjective(tape, steps, t.length(), reward - baseline,
                                       gamma, entropy_weight);
  tape.Backward(objective, -1.0, grads);
  return tape.Value(objective)[0];
}

std::string LearningCurveCsv(std::span<const LearningCurvePoint> points) {
  std::ostringstream out;
  out.precision(10);
  out << "episode,agent,mean_score,agreement_rate,optimality_rate\n";
  for (const auto& p : points) {
    out << p.episode << ',' << SeatName(p.agent) << ',' << p.mean_score << ','
        << p.agreement_rate << ',' << p.optimality_rate << '\n';
  }
  return out.str();
}

namespace {

MetricsReport GreedyEval(const nn::ParameterStore& store, const PolicyNetConfig& net,
                         std::span<const UtilityPair> test_set, const TrainConfig& cfg) {
  PolicyAgent a(store, net, ActionMode::kGreedy, nullptr, Seat::kA);
  PolicyAgent b(store, net, ActionMode::kGreedy, nullptr, Seat::kB);
  return RunMatch(a, b, test_set, cfg.game, cfg.eval_seed).report;
}

}  // namespace

TrainResult Train(const BehaviorSpec& behavior, const TrainConfig& cfg,
                  const ProgressFn& progress) {
  cfg.Validate();
  TrainResult result;
  nn::Checkpoint& ckpt = result.checkpoint;
  ckpt.behavior_tag = behavior.Name();
  ckpt.hyperparameters = cfg.ToJson();
  ckpt.hyperparameters["behavior"] = behavior.Name();
  ckpt.layer_specs = cfg.net.LayerSpecs();
  {
    Rng init_rng(MixSeed(cfg.seed, 0x1417));
    ckpt.store = InitPolicyParameters(cfg.net, init_rng);
  }
  const std::vector<UtilityPair> eval_set =
      GenerateTestSet(cfg.eval_seed, cfg.eval_games, cfg.game.n_clauses);

  // Both seats act from the one shared store; the identity input tells them
  // apart.
  Rng action_rng(MixSeed(cfg.seed, 0xac7));
  PolicyAgent agent_a(ckpt.store, cfg.net, ActionMode::kSample, &action_rng, Seat::kA);
  PolicyAgent agent_b(ckpt.store, cfg.net, ActionMode::kSample, &action_rng, Seat::kB);
  BaselineTracker baselines[2];
  // Sampled-play statistics since the last evaluation, for progress lines.
  struct Window {
    int64_t episodes = 0, agreed = 0, optimal = 0, offers = 0;
    double reward[2] = {0, 0}, entropy = 0;
    int64_t steps = 0;
  } window;

  const int64_t total = cfg.TotalEpisodes();
  for (int64_t episode = 0; episode < total; ++episode) {
    const int epoch = static_cast<int>(episode / cfg.episodes_per_epoch);
    const double lambda = cfg.entropy_weights[epoch];
    Rng game_rng(MixSeed(cfg.seed, static_cast<uint64_t>(episode) + 1));
    UtilityVector ua = SampleUtility(game_rng, cfg.game.n_clauses);
    UtilityVector ub = SampleUtility(game_rng, cfg.game.n_clauses);
    Transcript t = RunNegotiation(agent_a, agent_b, ua, ub, cfg.game, game_rng);

    nn::GradientMap grads;
    PolicyAgent* agents[2] = {&agent_a, &agent_b};
    double rewards[2];
    for (Seat s : {Seat::kA, Seat::kB}) {
      const int i = Index(s);
      rewards[i] = ShapeReward(behavior.role(s), t, s, cfg.reward);
      AccumulateEpisodeGradient(agents[i]->tape(), agents[i]->steps(), t, s, rewards[i],
                                baselines[i].mean(), cfg.gamma, lambda, grads);
    }
    for (int i = 0; i < 2; ++i) baselines[i].Add(rewards[i]);
    ++window.episodes;
    window.agreed += t.agreed();
    window.optimal += t.optimal;
    window.offers += t.length();
    for (int i = 0; i < 2; ++i) {
      window.reward[i] += rewards[i];
      for (const StepRecord& s : agents[i]->steps()) {
        for (double p : s.probs) window.entropy -= p > 0 ? p * std::log(p) : 0.0;
        ++window.steps;
      }
    }
    nn::SgdNesterovStep(ckpt.store, grads, cfg.lr, cfg.momentum);

    const int64_t seen = episode + 1;
    if (seen % cfg.eval_every == 0) {
      const MetricsReport m = GreedyEval(ckpt.store, cfg.net, eval_set, cfg);
      for (Seat s : {Seat::kA, Seat::kB}) {
        result.curve.push_back({seen, s, m.avg_score(s), m.agreement_rate,
                                m.optimality_rate_overall});
      }
      if (progress) {
        std::ostringstream line;
        line << behavior.Name() << " episode " << seen << "/" << total << " epoch "
             << epoch + 1 << ": agreement " << m.agreement_rate << "% optimal "
             << m.optimality_rate_overall << "% scores " << m.avg_score_a << "/"
             << m.avg_score_b << " length " << m.dialog_length;
        const double n = static_cast<double>(window.episodes);
        line << " | sampled: agreement " << 100.0 * window.agreed / n << "% optimal "
             << 100.0 * window.optimal / n << "% length " << window.offers / n
             << " reward " << window.reward[0] / n << "/" << window.reward[1] / n
             << " entropy " << window.entropy / static_cast<double>(window.steps);
        progress(line.str());
      }
      window = Window{};
    }
  }

  result.final_eval = GreedyEval(ckpt.store, cfg.net, eval_set, cfg);
  nn::TrainingMeta& meta = ckpt.training_meta;
  meta.episodes_seen = total;
  meta.epoch = cfg.epochs;
  meta.rng_algorithm = kRngAlgorithm;
  meta.seed = cfg.seed;
  meta.extra["final_eval"] = result.final_eval.ToJson();
  meta.extra["tags"] = {{"A", behavior.TagFor(Seat::kA)}, {"B", behavior.TagFor(Seat::kB)}};
  meta.extra["baselines"] = {baselines[0].mean(), baselines[1].mean()};
  return result;
}

std::filesystem::path CheckpointPath(const std::filesystem::path& out_dir,
                                     const BehaviorSpec& behavior) {
  return out_dir / (behavior.Name() + ".json");
}

std::filesystem::path LearningCurvePath(const std::filesystem::path& out_dir,
                                        const BehaviorSpec& behavior) {
  return out_dir / (behavior.Name() + "_learning_curve.csv");
}

void WriteTrainArtifacts(const TrainResult& result, const BehaviorSpec& behavior,
                         const std::filesystem::path& out_dir) {
  nn::SaveCheckpoint(result.checkpoint, CheckpointPath(out_dir, behavior));
  WriteFile(LearningCurvePath(out_dir, behavior), LearningCurveCsv(result.curve));
}

Seat StrongerSeat(const nn::Checkpoint& ckpt) {
  const Json& extra = ckpt.training_meta.extra;
  if (!extra.contains("final_eval")) return Seat::kA;
  const MetricsReport m = MetricsReport::FromJson(extra.at("final_eval"));
  return m.avg_score_b > m.avg_score_a ? Seat::kB : Seat::kA;
}

std::map<std::string, TaggedModel> BehaviorAgents(const PolicyModel& pp,
                                                  const PolicyModel& ss,
                                                  const PolicyModel& sp_ps) {
  return {{"pp", {"pp", &pp, StrongerSeat(pp.checkpoint)}},
          {"ss", {"ss", &ss, StrongerSeat(ss.checkpoint)}},
          {"sp", {"sp", &sp_ps, Seat::kA}},
          {"ps", {"ps", &sp_ps, Seat::kB}}};
}

}  // namespace clause_arena
