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

#include "clause_arena/server.h"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "httplib.h"

namespace clause_arena {

namespace {

const Seat kAgentSeat = Seat::kA;
const Seat kHumanSeat = Seat::kB;

ApiResponse Error(int status, const std::string& code, const std::string& message) {
  return {status, {{"error", code}, {"message", message}}};
}

Json UtilityJson(const UtilityVector& u) { return u.values(); }

const char* StatusName(bool finished, bool agreed, bool abandoned) {
  if (abandoned) return "abandoned";
  if (!finished) return "active";
  return agreed ? "agreed" : "disagreed";
}

}  // namespace

std::vector<std::string> Opponents::Tags() const {
  std::vector<std::string> tags{"pp", "ss", "ps", "sp"};
  if (meta) tags.push_back("meta");
  return tags;
}

std::shared_ptr<const Opponents> LoadOpponents(const std::filesystem::path& dir) {
  auto o = std::make_shared<Opponents>();
  o->base = LoadBehaviorCheckpoints(dir);
  if (std::filesystem::exists(dir / "meta.json")) o->meta = LoadPolicyModel(dir / "meta.json");
  return o;
}

Json LoggedGame::ToJson() const {
  Json j = TranscriptToJson(transcript);
  j["opponent_tag"] = opponent_tag;
  j["human_side"] = std::string(1, SeatName(human_side));
  j["session_id"] = session_id;
  return j;
}

LoggedGame LoggedGame::FromJson(const Json& j) {
  LoggedGame g;
  g.transcript = TranscriptFromJson(j);
  g.opponent_tag = j.at("opponent_tag").get<std::string>();
  g.human_side = ParseSeat(j.at("human_side").get<std::string>());
  g.session_id = j.value("session_id", "");
  return g;
}

std::vector<LoggedGame> ReadGameLog(const std::filesystem::path& path) {
  std::vector<LoggedGame> games;
  std::istringstream in(ReadFile(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) games.push_back(LoggedGame::FromJson(Json::parse(line)));
  }
  return games;
}

Json ComputeStats(const std::vector<LoggedGame>& games, double normalizer) {
  struct Acc {
    int64_t games = 0, agreed = 0, optimal = 0, offers = 0;
    int64_t agent_won = 0, human_won = 0, tied = 0;
    double agent_score = 0, human_score = 0;
  };
  std::map<std::string, Acc> acc;
  for (const char* tag : kSessionTags) acc[tag];
  Acc total;
  for (const LoggedGame& g : games) {
    const Transcript& t = g.transcript;
    const Seat human = g.human_side, agent = Other(g.human_side);
    for (Acc* a : {&acc[g.opponent_tag], &total}) {
      ++a->games;
      a->offers += t.length();
      if (t.agreed()) {
        ++a->agreed;
        if (t.optimal) ++a->optimal;
        a->agent_score += t.raw_scores[Index(agent)] / normalizer;
        a->human_score += t.raw_scores[Index(human)] / normalizer;
      }
      const int as = t.raw_scores[Index(agent)], hs = t.raw_scores[Index(human)];
      if (as > hs) ++a->agent_won;
      else if (hs > as) ++a->human_won;
      else ++a->tied;
    }
  }
  auto row = [](const Acc& a) {
    auto rate = [&](int64_t k) -> Json {
      if (a.games == 0) return nullptr;
      return 100.0 * static_cast<double>(k) / static_cast<double>(a.games);
    };
    auto mean = [&](double v) -> Json {
      if (a.games == 0) return nullptr;
      return v / static_cast<double>(a.games);
    };
    return Json{{"games", a.games},
                {"agreed", a.agreed},
                {"optimal", a.optimal},
                {"agent_won", a.agent_won},
                {"human_won", a.human_won},
                {"tied", a.tied},
                {"dialog_length", mean(static_cast<double>(a.offers))},
                {"agreement_rate", rate(a.agreed)},
                {"optimality_rate", rate(a.optimal)},
                {"agent_score", mean(a.agent_score)},
                {"human_score", mean(a.human_score)},
                {"agent_won_rate", rate(a.agent_won)},
                {"human_won_rate", rate(a.human_won)},
                {"tied_rate", rate(a.tied)}};
  };
  Json per_agent = Json::object();
  for (const auto& [tag, a] : acc) per_agent[tag] = row(a);
  return {{"agents", per_agent}, {"overall", row(total)}};
}

// ------------------------------------------------------------ Sessions

struct SessionManager::Session {
  std::mutex mu;
  std::string id;
  std::string opponent_tag;
  uint64_t seed = 0;
  std::unique_ptr<NegotiationGame> game;
  std::unique_ptr<Negotiator> agent;
  bool abandoned = false;
  int64_t created = 0, updated = 0;

  const UtilityVector& human_utility() const { return game->transcript().utility(kHumanSeat); }
  const UtilityVector& agent_utility() const { return game->transcript().utility(kAgentSeat); }
  bool active() const { return !abandoned && !game->finished(); }
};

SessionManager::SessionManager(std::shared_ptr<const Opponents> opponents,
                               ServerOptions options)
    : opponents_(std::move(opponents)), options_(std::move(options)),
      rng_(MixSeed(options_.seed, 0x5e55)) {
  options_.game.Validate();
}

SessionManager::~SessionManager() = default;

int64_t SessionManager::Now() const {
  if (options_.clock) return options_.clock();
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

bool SessionManager::ExpireIfIdle(Session& s) {
  if (s.active() && Now() - s.updated > options_.idle_timeout.count()) s.abandoned = true;
  return s.abandoned;
}

std::shared_ptr<SessionManager::Session> SessionManager::Find(const std::string& id) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

ApiResponse SessionManager::CreateSession(const Json& request) {
  if (!request.is_object()) return Error(400, kErrBadRequest, "expected a JSON object");
  std::string tag = request.value("opponent", "");
  const auto tags = opponents_->Tags();
  if (std::find(tags.begin(), tags.end(), tag) == tags.end()) {
    return Error(404, kErrUnknownAgent, "no agent named '" + tag + "'");
  }
  uint64_t seed = 0;
  if (request.contains("seed")) {
    if (!request["seed"].is_number_unsigned() && !request["seed"].is_number_integer()) {
      return Error(400, kErrBadRequest, "seed must be an integer");
    }
    seed = request["seed"].get<uint64_t>();
  }

  auto s = std::make_shared<Session>();
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (!request.contains("seed")) seed = rng_();
    std::ostringstream id;
    id << std::hex << std::setw(16) << std::setfill('0') << MixSeed(rng_(), next_id_++);
    s->id = id.str();
  }
  s->opponent_tag = tag;
  s->seed = seed;
  Rng rng(seed);
  const UtilityVector agent_u = SampleUtility(rng, options_.game.n_clauses);
  const UtilityVector human_u = SampleUtility(rng, options_.game.n_clauses);
  const Seat first = CoinFlip(rng) ? Seat::kB : Seat::kA;
  s->game = std::make_unique<NegotiationGame>(agent_u, human_u, first, options_.game);
  if (tag == "meta") {
    s->agent = std::make_unique<MetaAgent>(opponents_->base, *opponents_->meta,
                                           ActionMode::kGreedy, nullptr);
  } else {
    const CandidateSource src = CandidateFor(opponents_->base, tag);
    s->agent = std::make_unique<PolicyAgent>(src.model->params(), src.model->config,
                                             ActionMode::kGreedy, nullptr, src.identity);
  }
  s->agent->BeginEpisode(agent_u, kAgentSeat);
  s->created = s->updated = Now();

  Json body = {{"session_id", s->id},
               {"your_utility", UtilityJson(human_u)},
               {"you_start", first == kHumanSeat}};
  if (first == kAgentSeat) {
    const Offer opening = s->agent->Act(s->game->CurrentObservation());
    s->game->Submit(opening);
    body["agent_offer"] = OfferToJson(opening);
  }
  std::lock_guard<std::mutex> lock(mu_);
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    // Drop long-idle sessions so memory stays bounded. A session busy with a
    // request is not idle; try_lock also keeps the lock order one-way
    // (session before manager, as in Finish).
    std::unique_lock<std::mutex> session_lock(it->second->mu, std::try_to_lock);
    if (session_lock.owns_lock() && ExpireIfIdle(*it->second) &&
        Now() - it->second->updated > 2 * options_.idle_timeout.count()) {
      session_lock.unlock();
      it = sessions_.erase(it);
    } else {
      ++it;
    }
  }
  sessions_[s->id] = s;
  return {201, body};
}

Json SessionManager::ResultPayload(const Session& s) const {
  const Transcript& t = s.game->transcript();
  const int agent_raw = t.raw_scores[Index(kAgentSeat)];
  const int human_raw = t.raw_scores[Index(kHumanSeat)];
  Json best = nullptr;
  if (auto b = BestJointDeal(t.utility_a, t.utility_b, options_.game.score_normalizer)) {
    best = {{"deal", OfferToJson(b->deal)},
            {"joint", b->joint},
            {"your_score", Score(b->deal, s.human_utility())},
            {"agent_score", Score(b->deal, s.agent_utility())}};
  }
  return {{"status", StatusName(true, t.agreed(), false)},
          {"opponent", s.opponent_tag},
          {"deal", t.deal ? OfferToJson(*t.deal) : Json(nullptr)},
          {"your_utility", UtilityJson(s.human_utility())},
          {"agent_utility", UtilityJson(s.agent_utility())},
          {"raw_scores", {{"you", human_raw}, {"agent", agent_raw}}},
          {"normalized_scores",
           {{"you", t.normalized_scores[Index(kHumanSeat)]},
            {"agent", t.normalized_scores[Index(kAgentSeat)]}}},
          {"optimal", t.optimal},
          {"winner", agent_raw > human_raw   ? "agent"
                     : human_raw > agent_raw ? "you"
                                             : "tie"},
          {"dialog_length", t.length()},
          {"best_joint_deal", best}};
}

Json SessionManager::VisibleState(const Session& s) const {
  const Transcript& t = s.game->transcript();
  Json moves = Json::array();
  for (const Move& m : t.moves) {
    moves.push_back({{"by", m.agent == kHumanSeat ? "you" : "agent"},
                     {"turn", m.turn},
                     {"offer", OfferToJson(m.offer)}});
  }
  const bool finished = s.game->finished();
  Json j = {{"session_id", s.id},
            {"status", StatusName(finished, t.agreed(), s.abandoned)},
            {"your_utility", UtilityJson(s.human_utility())},
            {"you_start", t.first_mover == kHumanSeat},
            {"moves", moves},
            {"next_turn", s.active() ? Json(s.game->next_turn()) : Json(nullptr)},
            {"your_turn", s.active() && s.game->to_move() == kHumanSeat},
            {"offers_remaining", options_.game.max_offers - t.length()}};
  if (!options_.blind) j["opponent"] = s.opponent_tag;
  if (finished) j["result"] = ResultPayload(s);
  return j;
}

ApiResponse SessionManager::GetSession(const std::string& id) {
  auto s = Find(id);
  if (!s) return Error(404, kErrUnknownSession, "no session '" + id + "'");
  std::lock_guard<std::mutex> lock(s->mu);
  ExpireIfIdle(*s);
  return {200, VisibleState(*s)};
}

void SessionManager::Finish(Session& s) {
  LoggedGame g{s.game->transcript(), s.opponent_tag, kHumanSeat, s.id};
  g.transcript.game_id = s.id;
  g.transcript.seed = s.seed;
  std::lock_guard<std::mutex> lock(mu_);
  if (!options_.log_path.empty()) {
    std::ofstream out(options_.log_path, std::ios::app);
    if (!out) throw std::runtime_error("cannot append to " + options_.log_path.string());
    out << g.ToJson().dump() << '\n';
    out.flush();
  }
  finished_.push_back(std::move(g));
}

ApiResponse SessionManager::SubmitOffer(const std::string& id, const Json& request) {
  auto s = Find(id);
  if (!s) return Error(404, kErrUnknownSession, "no session '" + id + "'");
  std::lock_guard<std::mutex> lock(s->mu);
  if (ExpireIfIdle(*s) || s->game->finished()) {
    return Error(409, kErrSessionTerminal, "session is no longer active");
  }
  if (s->game->to_move() != kHumanSeat) {
    return Error(409, kErrNotYourTurn, "waiting for the agent");
  }
  if (!request.is_object() || !request.contains("bits")) {
    return Error(400, kErrMalformedBits, "expected {\"bits\": [0/1, ...]}");
  }
  if (request.contains("turn")) {
    const Json& turn = request["turn"];
    if (!turn.is_number_integer() || turn.get<int>() != s->game->next_turn()) {
      return Error(409, kErrStaleState,
                   "offer is for turn " + turn.dump() + " but the game is at turn " +
                       std::to_string(s->game->next_turn()));
    }
  }
  Offer offer;
  try {
    offer = OfferFromJson(request["bits"]);
  } catch (const std::exception& e) {
    return Error(400, kErrMalformedBits, e.what());
  }
  if (offer.size() != options_.game.n_clauses) {
    return Error(400, kErrMalformedBits,
                 "expected " + std::to_string(options_.game.n_clauses) + " bits");
  }

  s->game->Submit(offer);
  Json body = Json::object();
  if (!s->game->finished()) {
    const Offer reply = s->agent->Act(s->game->CurrentObservation());
    s->game->Submit(reply);
    body["agent_offer"] = OfferToJson(reply);
  }
  s->updated = Now();
  if (s->game->finished()) Finish(*s);
  Json state = VisibleState(*s);
  for (auto& [k, v] : state.items()) body[k] = v;
  return {200, body};
}

ApiResponse SessionManager::Stats() {
  std::lock_guard<std::mutex> lock(mu_);
  return {200, ComputeStats(finished_, options_.game.score_normalizer)};
}

// ------------------------------------------------------------------ HTTP

namespace {

void Reply(httplib::Response& res, const ApiResponse& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

std::optional<Json> ParseBody(const httplib::Request& req, httplib::Response& res) {
  if (req.body.empty()) return Json::object();
  try {
    return Json::parse(req.body);
  } catch (const Json::parse_error& e) {
    Reply(res, Error(400, kErrBadRequest, std::string("malformed JSON: ") + e.what()));
    return std::nullopt;
  }
}

}  // namespace

void RegisterRoutes(httplib::Server& server, SessionManager& sessions) {
  server.Post("/api/sessions", [&](const httplib::Request& req, httplib::Response& res) {
    if (auto body = ParseBody(req, res)) Reply(res, sessions.CreateSession(*body));
  });
  server.Get(R"(/api/sessions/([^/]+))",
             [&](const httplib::Request& req, httplib::Response& res) {
               Reply(res, sessions.GetSession(req.matches[1]));
             });
  server.Post(R"(/api/sessions/([^/]+)/offers)",
              [&](const httplib::Request& req, httplib::Response& res) {
                if (auto body = ParseBody(req, res)) {
                  Reply(res, sessions.SubmitOffer(req.matches[1], *body));
                }
              });
  server.Get("/api/stats", [&](const httplib::Request&, httplib::Response& res) {
    Reply(res, sessions.Stats());
  });
  server.set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
          std::rethrow_exception(ep);
        } catch (const std::exception& e) {
          what = e.what();
        } catch (...) {
        }
        Reply(res, Error(500, "internal", what));
      });
}

bool Serve(SessionManager& sessions, const std::string& host, int port) {
  httplib::Server server;
  RegisterRoutes(server, sessions);
  return server.listen(host, port);
}

}  // namespace clause_arena
