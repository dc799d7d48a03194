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

// The human-vs-agent game service. SessionManager holds all game logic and
// speaks JSON; the HTTP layer only routes requests to it.

#ifndef CLAUSE_ARENA_SERVER_H_
#define CLAUSE_ARENA_SERVER_H_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "clause_arena/meta.h"
#include "clause_arena/transcript_io.h"

namespace httplib {
class Server;
}

namespace clause_arena {

// Every agent a session can be played against.
struct Opponents {
  BehaviorCheckpoints base;
  std::optional<PolicyModel> meta;

  std::vector<std::string> Tags() const;  // pp, ss, ps, sp [, meta]
};

// Behavior checkpoints from `dir`, plus meta.json when present.
std::shared_ptr<const Opponents> LoadOpponents(const std::filesystem::path& dir);

inline constexpr const char* kSessionTags[] = {"pp", "ss", "ps", "sp", "meta"};

struct ServerOptions {
  bool blind = true;  // hide the opponent's tag until the game ends
  uint64_t seed = 0;  // source of per-session seeds when none is given
  std::filesystem::path log_path;  // JSONL transcript log; empty: no file
  std::chrono::seconds idle_timeout{24 * 3600};
  // Seconds since the epoch; injectable for tests.
  std::function<int64_t()> clock;
  NegotiationConfig game;
};

struct ApiResponse {
  int status = 200;
  Json body;
};

// Machine-readable error codes.
inline constexpr const char* kErrUnknownAgent = "unknown_agent";
inline constexpr const char* kErrUnknownSession = "unknown_session";
inline constexpr const char* kErrSessionTerminal = "session_terminal";
inline constexpr const char* kErrNotYourTurn = "not_your_turn";
inline constexpr const char* kErrMalformedBits = "malformed_bits";
inline constexpr const char* kErrStaleState = "stale_state";
inline constexpr const char* kErrBadRequest = "bad_request";

// One finished game as written to the log.
struct LoggedGame {
  Transcript transcript;
  std::string opponent_tag;
  Seat human_side = Seat::kB;
  std::string session_id;

  Json ToJson() const;
  static LoggedGame FromJson(const Json& j);
};

// Per-opponent aggregates: dialog length, agreement and optimality rates,
// agent and human scores, and win/tie shares (by raw score). Rates are null
// when an opponent has no finished games.
Json ComputeStats(const std::vector<LoggedGame>& games, double normalizer = 12.0);
std::vector<LoggedGame> ReadGameLog(const std::filesystem::path& path);

class SessionManager {
 public:
  SessionManager(std::shared_ptr<const Opponents> opponents, ServerOptions options);
  ~SessionManager();

  // {opponent: tag, seed?: integer}
  ApiResponse CreateSession(const Json& request);
  ApiResponse GetSession(const std::string& id);
  // {bits: [0/1 x n], turn?: integer (the turn this offer is meant to be)}
  ApiResponse SubmitOffer(const std::string& id, const Json& request);
  ApiResponse Stats();

  const std::vector<LoggedGame>& finished_games() const { return finished_; }

 private:
  struct Session;

  std::shared_ptr<Session> Find(const std::string& id);
  int64_t Now() const;
  bool ExpireIfIdle(Session& s);
  void Finish(Session& s);
  Json VisibleState(const Session& s) const;
  Json ResultPayload(const Session& s) const;

  std::shared_ptr<const Opponents> opponents_;
  ServerOptions options_;
  std::mutex mu_;  // guards sessions_, finished_, rng_, next_id_ and the log
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::vector<LoggedGame> finished_;
  Rng rng_;
  uint64_t next_id_ = 1;
};

// Installs the four API routes on `server`.
void RegisterRoutes(httplib::Server& server, SessionManager& sessions);

// Blocks serving until the process is stopped. False if binding failed.
bool Serve(SessionManager& sessions, const std::string& host, int port);

}  // namespace clause_arena

#endif  // CLAUSE_ARENA_SERVER_H_
