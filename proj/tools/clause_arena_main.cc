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

// clause-arena: train, evaluate and serve negotiation agents.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "clause_arena/eval.h"
#include "clause_arena/meta.h"
#include "clause_arena/server.h"
#include "clause_arena/training.h"
#include "clause_arena/transcript_io.h"

namespace fs = std::filesystem;
using namespace clause_arena;

namespace {

constexpr const char* kToolVersion = "1.0.0";
constexpr uint64_t kDefaultTestSeed = 1;

std::string UtcNow() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

// Written before any work starts and never modified; the end time goes into a
// separate completion record next to it.
class Manifest {
 public:
  Manifest(std::string command, const CLI::App& sub, const std::vector<std::string>& argv,
           uint64_t seed, fs::path dir)
      : command_(std::move(command)), dir_(std::move(dir)) {
    fs::create_directories(dir_);
    Json config = Json::object();
    for (const CLI::Option* opt : sub.get_options()) {
      if (opt->get_name() == "--help" || opt->get_lnames().empty()) continue;
      const auto& res = opt->results();
      const std::string key = opt->get_lnames().front();
      if (res.empty()) {
        config[key] = opt->get_default_str();
      } else if (res.size() == 1) {
        config[key] = res.front();
      } else {
        config[key] = res;
      }
    }
    doc_ = {{"command", command_},
            {"argv", argv},
            {"config", config},
            {"seed", seed},
            {"tool_version", kToolVersion},
            {"started_at", UtcNow()},
            {"artifacts", Json::array()}};
  }

  void AddArtifact(const fs::path& p) { doc_["artifacts"].push_back(p.string()); }
  void Write() { WriteFile(Path(), doc_.dump(2) + "\n"); }
  void Complete() {
    WriteFile(dir_ / ("manifest_" + command_ + ".done.json"),
              Json{{"command", command_}, {"finished_at", UtcNow()}, {"status", "ok"}}
                      .dump(2) + "\n");
  }
  fs::path Path() const { return dir_ / ("manifest_" + command_ + ".json"); }

 private:
  std::string command_;
  fs::path dir_;
  Json doc_;
};

void Log(const std::string& line) { std::cerr << line << std::endl; }

std::vector<UtilityPair> LoadOrGenerateTestSet(const std::string& path, uint64_t seed,
                                               int games) {
  if (!path.empty()) {
    auto pairs = ReadTestSet(path);
    if (games > 0 && games < static_cast<int>(pairs.size())) pairs.resize(games);
    return pairs;
  }
  return GenerateTestSet(seed, games > 0 ? games : 30000);
}

void WriteReport(const fs::path& out, const MatchResult& m, Manifest& manifest) {
  WriteFile(out / "report.json", m.report.ToJson().dump(2) + "\n");
  WriteTranscripts(out / "transcripts.jsonl", m.transcripts);
  manifest.AddArtifact(out / "report.json");
  manifest.AddArtifact(out / "transcripts.jsonl");
}

struct ModelCache {
  std::map<fs::path, PolicyModel> models;
  const PolicyModel& Get(const fs::path& p) {
    auto it = models.find(p);
    if (it == models.end()) it = models.emplace(p, LoadPolicyModel(p)).first;
    return it->second;
  }
};

// Reads the flat key=value config file named by --config (if any) and turns
// every key not already given on the command line into a --key=value token
// placed right after the subcommand name.
std::vector<std::string> ExpandConfig(std::vector<std::string> args) {
  std::string config_path;
  for (size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
      args.erase(args.begin() + i, args.begin() + i + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      args.erase(args.begin() + i);
      break;
    }
  }
  if (config_path.empty()) return args;
  std::ifstream in(config_path);
  if (!in) throw CLI::FileError::Missing(config_path);
  std::vector<std::string> extra;
  std::string line;
  while (std::getline(in, line)) {
    const auto start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw CLI::ParseError("bad config line: " + line, 2);
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    bool given = false;
    for (const std::string& a : args) {
      if (a == "--" + key || a.rfind("--" + key + "=", 0) == 0) given = true;
    }
    if (!given) extra.push_back("--" + key + "=" + value);
  }
  if (args.size() < 2) return args;
  args.insert(args.begin() + 2, extra.begin(), extra.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Train, evaluate and serve clause negotiation agents", "clause-arena"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);
  app.add_option("--config", "Flat key=value file supplying defaults for the subcommand's flags");

  uint64_t seed = 1;
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Random seed")->envname("CLAUSE_ARENA_SEED")
        ->capture_default_str();
  };

  // train
  std::string behavior, profile = "desk", out_dir;
  int64_t episodes_per_epoch = 0, eval_every = 0;
  int eval_games = 0;
  auto* train = app.add_subcommand("train", "Self-play training of one behavior pair");
  train->add_option("--behavior", behavior, "pp, ss or sp-ps")->required()
      ->check(CLI::IsMember({"pp", "ss", "sp-ps"}));
  train->add_option("--profile", profile, "paper (5x100000) or desk (5x20000)")
      ->check(CLI::IsMember({"paper", "desk"}))->capture_default_str();
  train->add_option("--out", out_dir, "Output directory")->required();
  train->add_option("--episodes-per-epoch", episodes_per_epoch, "Override the profile");
  train->add_option("--eval-every", eval_every, "Override the profile");
  train->add_option("--eval-games", eval_games, "Override the profile");
  add_seed(train);

  // meta-train
  std::string models_dir;
  auto* meta_train = app.add_subcommand("meta-train", "Train the selector over four frozen agents");
  meta_train->add_option("--models-dir", models_dir, "Directory with pp.json, ss.json, sp-ps.json")
      ->required();
  meta_train->add_option("--profile", profile, "paper or desk")
      ->check(CLI::IsMember({"paper", "desk"}))->capture_default_str();
  meta_train->add_option("--out", out_dir, "Output directory")->required();
  meta_train->add_option("--episodes-per-epoch", episodes_per_epoch, "Override the profile");
  meta_train->add_option("--eval-games", eval_games, "Override the profile");
  add_seed(meta_train);

  // eval
  std::string agent_a, agent_b, test_set_path;
  int games = 0;
  uint64_t test_seed = kDefaultTestSeed;
  auto* eval = app.add_subcommand("eval", "Play two agents over a test set");
  eval->add_option("--agent-a", agent_a, "path#role, meta:<path>, random or common")->required();
  eval->add_option("--agent-b", agent_b, "path#role, meta:<path>, random or common")->required();
  eval->add_option("--test-set", test_set_path, "JSONL test set (default: generated)");
  eval->add_option("--test-seed", test_seed, "Seed of the generated test set")
      ->capture_default_str();
  eval->add_option("--games", games, "Number of games (default: whole set / 30000)");
  eval->add_option("--out", out_dir, "Output directory")->required();
  add_seed(eval);

  // interplay
  auto* interplay = app.add_subcommand("interplay", "Cross-play matrix of the four behavior agents");
  interplay->add_option("--models-dir", models_dir, "Directory with pp.json, ss.json, sp-ps.json")
      ->required();
  interplay->add_option("--test-set", test_set_path, "JSONL test set (default: generated)");
  interplay->add_option("--test-seed", test_seed, "Seed of the generated test set")
      ->capture_default_str();
  interplay->add_option("--games", games, "Number of games");
  interplay->add_option("--out", out_dir, "Output directory")->required();
  add_seed(interplay);

  // export-freq
  std::string meta_path;
  int probe_top = 20;
  auto* export_freq = app.add_subcommand(
      "export-freq", "Action-sequence histogram and forced-sequence probe, or selector sequences");
  export_freq->add_option("--agent-a", agent_a, "path#role");
  export_freq->add_option("--agent-b", agent_b, "path#role");
  export_freq->add_option("--meta", meta_path, "Selector checkpoint (exports selection sequences)");
  export_freq->add_option("--models-dir", models_dir, "Behavior checkpoints (with --meta)");
  export_freq->add_option("--test-set", test_set_path, "JSONL test set (default: generated)");
  export_freq->add_option("--test-seed", test_seed, "Seed of the generated test set")
      ->capture_default_str();
  export_freq->add_option("--games", games, "Number of games");
  export_freq->add_option("--probe-top", probe_top, "Sequences to probe (0 disables)")
      ->capture_default_str();
  export_freq->add_option("--out", out_dir, "Output directory")->required();
  add_seed(export_freq);

  // gen-testset
  int count = 30000;
  std::string out_file;
  auto* gen = app.add_subcommand("gen-testset", "Write a seeded test set of utility pairs");
  gen->add_option("--count", count, "Number of pairs")->capture_default_str()
      ->check(CLI::PositiveNumber);
  gen->add_option("--out", out_file, "Output JSONL file")->required();
  add_seed(gen);

  // serve
  std::string host = "127.0.0.1", log_dir;
  int port = 8080;
  bool reveal_tag = false;
  auto* serve = app.add_subcommand("serve", "Human-vs-agent game service");
  serve->add_option("--models-dir", models_dir, "Behavior checkpoints (+ meta.json)")->required();
  serve->add_option("--port", port, "TCP port")->capture_default_str();
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--log-dir", log_dir, "Transcript log directory")->required();
  serve->add_flag("!--blind,--reveal-opponent", reveal_tag,
                  "Show the opponent's behavior tag to players (default: blind)");
  add_seed(serve);

  std::vector<std::string> args(argv, argv + argc);
  try {
    args = ExpandConfig(args);
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::Error& e) {
    app.exit(e);
    return 2;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const std::string command = sub->get_name();

    if (command == "train") {
      TrainConfig cfg = TrainConfig::Profile(profile);
      cfg.seed = seed;
      if (episodes_per_epoch > 0) cfg.episodes_per_epoch = episodes_per_epoch;
      if (eval_every > 0) cfg.eval_every = eval_every;
      if (eval_games > 0) cfg.eval_games = eval_games;
      const BehaviorSpec spec = BehaviorSpec::Parse(behavior);
      Manifest manifest(command, *sub, args, seed, out_dir);
      manifest.AddArtifact(CheckpointPath(out_dir, spec));
      manifest.AddArtifact(LearningCurvePath(out_dir, spec));
      manifest.Write();
      TrainResult r = Train(spec, cfg, Log);
      WriteTrainArtifacts(r, spec, out_dir);
      std::cout << r.final_eval.ToJson().dump(2) << std::endl;
      manifest.Complete();
    } else if (command == "meta-train") {
      MetaConfig cfg = MetaConfig::Profile(profile);
      cfg.train.seed = seed;
      if (episodes_per_epoch > 0) cfg.train.episodes_per_epoch = episodes_per_epoch;
      if (eval_games > 0) cfg.train.eval_games = eval_games;
      Manifest manifest(command, *sub, args, seed, out_dir);
      manifest.AddArtifact(fs::path(out_dir) / "meta.json");
      manifest.AddArtifact(fs::path(out_dir) / "meta_learning_curve.csv");
      manifest.Write();
      const BehaviorCheckpoints base = LoadBehaviorCheckpoints(models_dir);
      MetaTrainResult r = MetaTrain(base, cfg, Log);
      nn::SaveCheckpoint(r.checkpoint, fs::path(out_dir) / "meta.json");
      WriteFile(fs::path(out_dir) / "meta_learning_curve.csv", MetaCurveCsv(r.curve));
      std::cout << r.final_eval.dump(2) << std::endl;
      manifest.Complete();
    } else if (command == "eval") {
      Manifest manifest(command, *sub, args, seed, out_dir);
      manifest.Write();
      const auto pairs = LoadOrGenerateTestSet(test_set_path, test_seed, games);
      NegotiationConfig game;
      MatchResult m;
      if (agent_a == "common" || agent_b == "common") {
        if (agent_a != agent_b) throw ContractViolation("common plays only against itself");
        m = RunCommon(pairs, game, seed);
      } else {
        ModelCache cache;
        std::vector<std::unique_ptr<Negotiator>> owned;
        Rng random_rng(MixSeed(seed, 0x7a));
        std::optional<BehaviorCheckpoints> base;
        auto make = [&](const std::string& spec) -> Negotiator* {
          if (spec == "random") {
            owned.push_back(std::make_unique<RandomAgent>(&random_rng));
          } else if (spec.rfind("meta:", 0) == 0) {
            const fs::path p = spec.substr(5);
            if (!base) base = LoadBehaviorCheckpoints(p.parent_path());
            owned.push_back(std::make_unique<MetaAgent>(
                *base, cache.Get(p), ActionMode::kGreedy, nullptr));
          } else {
            const AgentRef ref = ParseAgentRef(spec);
            const PolicyModel& model = cache.Get(ref.path);
            owned.push_back(std::make_unique<PolicyAgent>(
                model.params(), model.config, ActionMode::kGreedy, nullptr, ref.role));
          }
          return owned.back().get();
        };
        Negotiator* a = make(agent_a);
        Negotiator* b = make(agent_b);
        m = RunMatch(*a, *b, pairs, game, seed);
      }
      WriteReport(out_dir, m, manifest);
      std::cout << m.report.ToJson().dump(2) << std::endl;
      manifest.Complete();
    } else if (command == "interplay") {
      Manifest manifest(command, *sub, args, seed, out_dir);
      for (const char* f : {"interplay.json", "interplay_pairs.csv", "difference_matrix.csv"}) {
        manifest.AddArtifact(fs::path(out_dir) / f);
      }
      manifest.Write();
      const auto pairs = LoadOrGenerateTestSet(test_set_path, test_seed, games);
      const BehaviorCheckpoints base = LoadBehaviorCheckpoints(models_dir);
      const InterplayResult r =
          InterplayMatrix(BehaviorAgents(base.pp, base.ss, base.sp_ps), pairs,
                          NegotiationConfig{}, seed);
      WriteFile(fs::path(out_dir) / "interplay.json", r.ToJson().dump(2) + "\n");
      WriteFile(fs::path(out_dir) / "interplay_pairs.csv", r.PairsCsv());
      WriteFile(fs::path(out_dir) / "difference_matrix.csv", r.DifferenceCsv());
      std::cout << r.ToJson().dump(2) << std::endl;
      manifest.Complete();
    } else if (command == "export-freq") {
      Manifest manifest(command, *sub, args, seed, out_dir);
      manifest.Write();
      const auto pairs = LoadOrGenerateTestSet(test_set_path, test_seed, games);
      NegotiationConfig game;
      if (!meta_path.empty()) {
        if (models_dir.empty()) models_dir = fs::path(meta_path).parent_path().string();
        const BehaviorCheckpoints base = LoadBehaviorCheckpoints(models_dir);
        const PolicyModel selector = LoadPolicyModel(meta_path);
        const SelectionExport ex = ExportSelectionSequences(base, selector, pairs, game, seed);
        WriteFile(fs::path(out_dir) / "selection_sequences.csv", ex.Csv());
        WriteFile(fs::path(out_dir) / "selection_analysis.json", ex.AnalysisJson(20).dump(2) + "\n");
        manifest.AddArtifact(fs::path(out_dir) / "selection_sequences.csv");
        manifest.AddArtifact(fs::path(out_dir) / "selection_analysis.json");
      } else {
        if (agent_a.empty() || agent_b.empty()) {
          throw CLI::ValidationError("export-freq needs --agent-a and --agent-b, or --meta");
        }
        ModelCache cache;
        const AgentRef ra = ParseAgentRef(agent_a), rb = ParseAgentRef(agent_b);
        const PolicyModel& ma = cache.Get(ra.path);
        const PolicyModel& mb = cache.Get(rb.path);
        PolicyAgent a(ma.params(), ma.config, ActionMode::kGreedy, nullptr, ra.role);
        PolicyAgent b(mb.params(), mb.config, ActionMode::kGreedy, nullptr, rb.role);
        const MatchResult free_play = RunMatch(a, b, pairs, game, seed);
        const auto hist = ActionSequenceHistogram(free_play.transcripts);
        WriteFile(fs::path(out_dir) / "action_sequences.csv", HistogramCsv(hist));
        manifest.AddArtifact(fs::path(out_dir) / "action_sequences.csv");
        if (probe_top > 0) {
          Json probe = {{"free_play", free_play.report.ToJson()},
                        {"policy", "forced actions for the sequence's length, then greedy; "
                                   "games may end before the sequence is exhausted"},
                        {"sequences", Json::array()}};
          std::ostringstream csv;
          csv << "sequence,free_count,forced_optimality_rate,free_optimality_rate,exceeds_free\n";
          for (const auto& [key, stats] : TopSequences(hist, probe_top)) {
            const MetricsReport f = PlayForcedSequence(ma, ra.role, mb, rb.role,
                                                       ParseActionKey(key), pairs, game, seed);
            const bool exceeds = f.optimality_rate_overall > free_play.report.optimality_rate_overall;
            probe["sequences"].push_back({{"sequence", key},
                                          {"free_count", stats.count},
                                          {"forced", f.ToJson()},
                                          {"exceeds_free_play", exceeds}});
            csv << '"' << key << "\"," << stats.count << ',' << f.optimality_rate_overall << ','
                << free_play.report.optimality_rate_overall << ',' << (exceeds ? 1 : 0) << '\n';
          }
          WriteFile(fs::path(out_dir) / "forced_probe.json", probe.dump(2) + "\n");
          WriteFile(fs::path(out_dir) / "forced_probe.csv", csv.str());
          manifest.AddArtifact(fs::path(out_dir) / "forced_probe.json");
          manifest.AddArtifact(fs::path(out_dir) / "forced_probe.csv");
        }
      }
      manifest.Complete();
    } else if (command == "gen-testset") {
      const fs::path out = out_file;
      const fs::path dir = out.has_parent_path() ? out.parent_path() : fs::path(".");
      Manifest manifest(command, *sub, args, seed, dir);
      manifest.AddArtifact(out);
      manifest.Write();
      WriteTestSet(out, GenerateTestSet(seed, count));
      manifest.Complete();
    } else if (command == "serve") {
      Manifest manifest(command, *sub, args, seed, log_dir);
      manifest.Write();
      ServerOptions opts;
      opts.blind = !reveal_tag;
      opts.seed = seed;
      opts.log_path = fs::path(log_dir) / "sessions.jsonl";
      SessionManager sessions(LoadOpponents(models_dir), opts);
      Log("serving on http://" + host + ":" + std::to_string(port));
      if (!Serve(sessions, host, port)) throw std::runtime_error("could not bind " + host + ":" + std::to_string(port));
      manifest.Complete();
    }
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
