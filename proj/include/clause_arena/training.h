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

// Self-play policy-gradient training with behavior-shaping rewards.

#ifndef CLAUSE_ARENA_TRAINING_H_
#define CLAUSE_ARENA_TRAINING_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "clause_arena/agent.h"
#include "clause_arena/env.h"
#include "clause_arena/eval.h"
#include "clause_arena/nn/checkpoint.h"

namespace clause_arena {

enum class Role { kProsocial, kSelfish };

char RoleLetter(Role r);

// Reward rule per seat of one training run: pp, ss or sp-ps.
struct BehaviorSpec {
  Role role_a = Role::kProsocial;
  Role role_b = Role::kProsocial;

  static BehaviorSpec Parse(const std::string& name);
  std::string Name() const;
  Role role(Seat s) const { return s == Seat::kA ? role_a : role_b; }
  // Own role then opponent role: "sp" for seat A of an sp-ps run.
  std::string TagFor(Seat s) const;

  friend bool operator==(const BehaviorSpec&, const BehaviorSpec&) = default;
};

struct RewardConfig {
  double disagreement_reward = -0.5;
  double nonoptimal_prosocial_reward = -0.5;
  double normalizer = 12.0;
};

// Selfish: own normalized score. Prosocial: the same, but only for optimal
// deals. Disagreement is penalized for both.
double ShapeReward(Role role, const Transcript& t, Seat seat,
                   const RewardConfig& cfg = {});

struct TrainConfig {
  int epochs = 5;
  int64_t episodes_per_epoch = 100000;
  double gamma = 0.99;
  std::vector<double> entropy_weights{0.1, 0.05, 0.01, 0.005, 0.001};
  double lr = 0.01;
  double momentum = 0.1;
  int64_t eval_every = 25000;
  int eval_games = 2000;
  uint64_t eval_seed = 20260;
  uint64_t seed = 1;
  NegotiationConfig game;
  RewardConfig reward;
  PolicyNetConfig net;

  // "paper": 5 x 100000; "desk": 5 x 20000 with evaluation every 5000.
  static TrainConfig Profile(const std::string& name);
  void Validate() const;
  int64_t TotalEpisodes() const { return epochs * episodes_per_epoch; }
  Json ToJson() const;
};

// Running arithmetic mean.
class BaselineTracker {
 public:
  void Add(double reward);
  double mean() const { return mean_; }
  int64_t count() const { return count_; }

 private:
  double mean_ = 0.0;
  int64_t count_ = 0;
};

// sum_t gamma^(T - t) * advantage * log pi(x_t) + lambda * sum_t H[pi_t] over
// the recorded steps, where T is the episode's final turn. To be maximized.
nn::Var EpisodeObjective(nn::Tape& tape, std::span<const StepRecord> steps,
                         int final_turn, double advantage, double gamma,
                         double entropy_weight);

// What the recorded steps must share with the transcript: the selector's
// actions are candidate indices, not flip counts.
enum class StepCheck { kTurnsAndActions, kTurnsOnly };

// Checks `steps` against the moves of `seat` in `t`, then adds the gradient
// of the negated objective (descent direction) into `grads`. Returns the
// objective value.
double AccumulateEpisodeGradient(nn::Tape& tape, std::span<const StepRecord> steps,
                                 const Transcript& t, Seat seat, double reward,
                                 double baseline, double gamma,
                                 double entropy_weight, nn::GradientMap& grads,
                                 StepCheck check = StepCheck::kTurnsAndActions);

struct LearningCurvePoint {
  int64_t episode = 0;
  Seat agent = Seat::kA;
  double mean_score = 0.0;
  double agreement_rate = 0.0;
  double optimality_rate = 0.0;
};

std::string LearningCurveCsv(std::span<const LearningCurvePoint> points);

struct TrainResult {
  nn::Checkpoint checkpoint;
  std::vector<LearningCurvePoint> curve;
  MetricsReport final_eval;
};

using ProgressFn = std::function<void(const std::string&)>;

TrainResult Train(const BehaviorSpec& behavior, const TrainConfig& cfg,
                  const ProgressFn& progress = {});

// <out_dir>/<behavior>.json and <out_dir>/<behavior>_learning_curve.csv.
std::filesystem::path CheckpointPath(const std::filesystem::path& out_dir,
                                     const BehaviorSpec& behavior);
std::filesystem::path LearningCurvePath(const std::filesystem::path& out_dir,
                                        const BehaviorSpec& behavior);
void WriteTrainArtifacts(const TrainResult& result, const BehaviorSpec& behavior,
                         const std::filesystem::path& out_dir);

// Seat of a trained checkpoint that outscored its partner in the final
// evaluation (A on ties or when no evaluation is stored).
Seat StrongerSeat(const nn::Checkpoint& ckpt);

// The four behavior agents as they appear in the cross-play tables: pp and ss
// use their stronger seat, sp and ps the two seats of the sp-ps run.
std::map<std::string, TaggedModel> BehaviorAgents(const PolicyModel& pp,
                                                  const PolicyModel& ss,
                                                  const PolicyModel& sp_ps);

}  // namespace clause_arena

#endif  // CLAUSE_ARENA_TRAINING_H_
