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

#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <set>
#include <thread>

#include "httplib.h"

namespace clause_arena {
namespace {

PolicyNetConfig Small(PolicyNetConfig c = {}) {
  c.mlp_hidden = 8;
  c.mlp_out = 8;
  c.embed_dim = 4;
  c.gru_hidden = 12;
  return c;
}

PolicyModel RandomModel(const PolicyNetConfig& cfg, uint64_t seed) {
  PolicyModel m;
  Rng rng(seed);
  m.config = cfg;
  m.checkpoint.layer_specs = cfg.LayerSpecs();
  m.checkpoint.store = InitPolicyParameters(cfg, rng);
  return m;
}

std::shared_ptr<const Opponents> TestOpponents(bool with_meta = true) {
  auto o = std::make_shared<Opponents>();
  o->base = {RandomModel(Small(), 1), RandomModel(Small(), 2), RandomModel(Small(), 3)};
  if (with_meta) {
    PolicyNetConfig sel = Small(SelectorNetConfig());
    o->meta = RandomModel(sel, 4);
  }
  return o;
}

std::set<std::string> Keys(const Json& j) {
  std::set<std::string> k;
  for (const auto& [key, v] : j.items()) k.insert(key);
  return k;
}

std::vector<int> Bits(const Offer& o) { return {o.bits().begin(), o.bits().end()}; }

// The agent's most recent offer in a state payload.
Offer LastAgentOffer(const Json& state) {
  for (auto it = state["moves"].rbegin(); it != state["moves"].rend(); ++it) {
    if ((*it)["by"] == "agent") return OfferFromJson((*it)["offer"]);
  }
  throw std::runtime_error("agent has not moved");
}

class SessionTest : public ::testing::Test {
 protected:
  ServerOptions Options() {
    ServerOptions o;
    o.seed = 99;
    o.clock = [this] { return now_.load(); };
    o.idle_timeout = std::chrono::seconds(600);
    return o;
  }

  // Plays until the game ends, always proposing `offer` unless asked to echo.
  Json PlayOut(SessionManager& m, const std::string& id, const Offer& offer, bool echo) {
    Json state = m.GetSession(id).body;
    while (state["status"] == "active") {
      EXPECT_TRUE(state["your_turn"].get<bool>());
      const bool can_echo = echo && !state["moves"].empty();
      const Offer bits = can_echo ? LastAgentOffer(state) : offer;
      ApiResponse r = m.SubmitOffer(id, {{"bits", Bits(bits)}});
      EXPECT_EQ(r.status, 200) << r.body.dump();
      state = r.body;
    }
    return state;
  }

  std::atomic<int64_t> now_{1000};
};

TEST_F(SessionTest, CreateResponseSchema) {
  SessionManager m(TestOpponents(), Options());
  for (int i = 0; i < 20; ++i) {
    const ApiResponse r = m.CreateSession({{"opponent", "pp"}, {"seed", i}});
    ASSERT_EQ(r.status, 201);
    std::set<std::string> expected{"session_id", "your_utility", "you_start"};
    if (!r.body["you_start"].get<bool>()) expected.insert("agent_offer");
    EXPECT_EQ(Keys(r.body), expected);
    EXPECT_TRUE(UtilityVector::IsValid(r.body["your_utility"].get<std::vector<int>>()));
  }
}

TEST_F(SessionTest, SameSeedSameGame) {
  SessionManager m(TestOpponents(), Options());
  for (const char* tag : {"pp", "ss", "ps", "sp", "meta"}) {
    const Json a = m.CreateSession({{"opponent", tag}, {"seed", 1234}}).body;
    const Json b = m.CreateSession({{"opponent", tag}, {"seed", 1234}}).body;
    EXPECT_NE(a["session_id"], b["session_id"]);
    EXPECT_EQ(a["your_utility"], b["your_utility"]);
    EXPECT_EQ(a["you_start"], b["you_start"]);
    EXPECT_EQ(a.value("agent_offer", Json()), b.value("agent_offer", Json()));
  }
}

TEST_F(SessionTest, UnknownAgentAndSession) {
  SessionManager m(TestOpponents(false), Options());
  ApiResponse r = m.CreateSession({{"opponent", "meta"}});  // not loaded
  EXPECT_EQ(r.status, 404);
  EXPECT_EQ(r.body["error"], kErrUnknownAgent);
  r = m.CreateSession({{"opponent", "nobody"}});
  EXPECT_EQ(r.body["error"], kErrUnknownAgent);
  r = m.CreateSession(Json::array());
  EXPECT_EQ(r.status, 400);
  r = m.CreateSession({{"opponent", "pp"}, {"seed", "x"}});
  EXPECT_EQ(r.body["error"], kErrBadRequest);
  r = m.GetSession("missing");
  EXPECT_EQ(r.status, 404);
  EXPECT_EQ(r.body["error"], kErrUnknownSession);
  r = m.SubmitOffer("missing", {{"bits", {0, 0, 0, 0, 0, 0}}});
  EXPECT_EQ(r.body["error"], kErrUnknownSession);
}

TEST_F(SessionTest, EchoingTheAgentEndsInAgreement) {
  SessionManager m(TestOpponents(), Options());
  // Find a session where the agent opens, so there is something to echo.
  for (uint64_t seed = 0;; ++seed) {
    const Json c = m.CreateSession({{"opponent", "ss"}, {"seed", seed}}).body;
    if (c["you_start"].get<bool>()) continue;
    const std::string id = c["session_id"];
    const ApiResponse r = m.SubmitOffer(id, {{"bits", c["agent_offer"]}, {"turn", 2}});
    ASSERT_EQ(r.status, 200);
    EXPECT_EQ(r.body["status"], "agreed");
    EXPECT_FALSE(r.body.contains("agent_offer"));
    EXPECT_EQ(r.body["result"]["deal"], c["agent_offer"]);
    EXPECT_EQ(r.body["result"]["dialog_length"], 2);
    EXPECT_EQ(m.SubmitOffer(id, {{"bits", c["agent_offer"]}}).body["error"],
              kErrSessionTerminal);
    break;
  }
  ASSERT_EQ(m.finished_games().size(), 1u);
}

TEST_F(SessionTest, NeverAgreeingTimesOut) {
  SessionManager m(TestOpponents(), Options());
  int done = 0;
  for (uint64_t seed = 0; seed < 8; ++seed) {
    const Json c = m.CreateSession({{"opponent", "pp"}, {"seed", seed}}).body;
    const std::string id = c["session_id"];
    // Alternate between two offers so the human never echoes; the agent may
    // still accept, which ends the game early.
    Json state = m.GetSession(id).body;
    int turn = 0;
    while (state["status"] == "active") {
      const Offer o = (turn++ % 2) ? Offer::Ones(6) : Offer::Zeros(6);
      state = m.SubmitOffer(id, {{"bits", Bits(o)}}).body;
    }
    if (state["status"] == "disagreed") {
      EXPECT_EQ(state["result"]["dialog_length"], 30);
      EXPECT_EQ(state["result"]["normalized_scores"]["you"], -0.5);
      EXPECT_EQ(state["result"]["normalized_scores"]["agent"], -0.5);
      EXPECT_EQ(state["result"]["winner"], "tie");
      EXPECT_EQ(state["offers_remaining"], 0);
      ++done;
    }
  }
  EXPECT_GT(done, 0);
}

// Plays the same offers the human sent.
class ScriptedHuman : public Negotiator {
 public:
  explicit ScriptedHuman(std::vector<Offer> offers) : offers_(std::move(offers)) {}
  Offer Act(const Observation&) override { return offers_.at(next_++); }

 private:
  std::vector<Offer> offers_;
  size_t next_ = 0;
};

TEST_F(SessionTest, SessionsReplayThroughTheEnvironment) {
  const auto opponents = TestOpponents();
  SessionManager m(opponents, Options());
  Rng rng(5);
  for (int g = 0; g < 40; ++g) {
    const std::string tag = kSessionTags[g % 5];
    const uint64_t seed = 700 + g;
    const Json c = m.CreateSession({{"opponent", tag}, {"seed", seed}}).body;
    const std::string id = c["session_id"];
    Json state = m.GetSession(id).body;
    while (state["status"] == "active") {
      Offer o = Offer::FromIndex(UniformInt(rng, 64), 6);
      if (!state["moves"].empty() && UniformInt(rng, 8) == 0) o = LastAgentOffer(state);
      state = m.SubmitOffer(id, {{"bits", Bits(o)}, {"turn", state["next_turn"]}}).body;
    }
    const LoggedGame& logged = m.finished_games().back();
    ASSERT_EQ(logged.session_id, id);
    ASSERT_EQ(logged.opponent_tag, tag);

    // Independent replay: same draws, same agent, the human's offers scripted.
    Rng draw(seed);
    const UtilityVector agent_u = SampleUtility(draw), human_u = SampleUtility(draw);
    const Seat first = CoinFlip(draw) ? Seat::kB : Seat::kA;
    std::vector<Offer> human_offers;
    for (const Move& mv : logged.transcript.moves) {
      if (mv.agent == Seat::kB) human_offers.push_back(mv.offer);
    }
    ScriptedHuman human(human_offers);
    std::unique_ptr<Negotiator> agent;
    if (tag == "meta") {
      agent = std::make_unique<MetaAgent>(opponents->base, *opponents->meta,
                                          ActionMode::kGreedy, nullptr);
    } else {
      const CandidateSource src = CandidateFor(opponents->base, tag);
      agent = std::make_unique<PolicyAgent>(src.model->params(), src.model->config,
                                            ActionMode::kGreedy, nullptr, src.identity);
    }
    const Transcript replay = PlayNegotiation(*agent, human, agent_u, human_u, first, {});
    EXPECT_EQ(replay.moves, logged.transcript.moves) << tag;
    EXPECT_EQ(replay.deal, logged.transcript.deal);
    EXPECT_EQ(replay.raw_scores, logged.transcript.raw_scores);
    EXPECT_EQ(replay.optimal, logged.transcript.optimal);
    EXPECT_EQ(state["result"]["optimal"], replay.optimal);
    EXPECT_EQ(state["result"]["raw_scores"]["you"], replay.raw_scores[1]);
  }
}

TEST_F(SessionTest, HidesAgentInformationUntilTheEnd) {
  SessionManager m(TestOpponents(), Options());
  const Json c = m.CreateSession({{"opponent", "sp"}, {"seed", 3}}).body;
  const std::string id = c["session_id"];
  Json state = m.GetSession(id).body;
  EXPECT_FALSE(state.contains("opponent"));
  EXPECT_FALSE(state.contains("result"));
  EXPECT_FALSE(state.contains("agent_utility"));
  EXPECT_EQ(Keys(state),
            (std::set<std::string>{"session_id", "status", "your_utility", "you_start", "moves",
                                   "next_turn", "your_turn", "offers_remaining"}));
  state = PlayOut(m, id, Offer::Ones(6), true);
  EXPECT_EQ(state["result"]["opponent"], "sp");
  EXPECT_TRUE(state["result"].contains("agent_utility"));
  EXPECT_TRUE(state["result"].contains("best_joint_deal"));

  ServerOptions open = Options();
  open.blind = false;
  SessionManager revealed(TestOpponents(), open);
  const Json c2 = revealed.CreateSession({{"opponent", "sp"}, {"seed", 3}}).body;
  EXPECT_EQ(revealed.GetSession(c2["session_id"]).body["opponent"], "sp");
}

TEST_F(SessionTest, RejectsBadOffers) {
  SessionManager m(TestOpponents(), Options());
  const Json c = m.CreateSession({{"opponent", "pp"}, {"seed", 11}}).body;
  const std::string id = c["session_id"];
  const int turn = m.GetSession(id).body["next_turn"];
  auto submit = [&](const Json& req) { return m.SubmitOffer(id, req); };
  EXPECT_EQ(submit({{"bits", {1, 0, 1}}}).body["error"], kErrMalformedBits);
  EXPECT_EQ(submit({{"bits", {1, 0, 1, 0, 2, 0}}}).body["error"], kErrMalformedBits);
  EXPECT_EQ(submit({{"bits", "101010"}}).body["error"], kErrMalformedBits);
  EXPECT_EQ(submit(Json::object()).body["error"], kErrMalformedBits);
  ApiResponse stale = submit({{"bits", {1, 0, 1, 0, 1, 0}}, {"turn", turn + 2}});
  EXPECT_EQ(stale.status, 409);
  EXPECT_EQ(stale.body["error"], kErrStaleState);
  // Nothing above changed the game.
  EXPECT_EQ(m.GetSession(id).body["next_turn"], turn);
  EXPECT_EQ(submit({{"bits", {1, 0, 1, 0, 1, 0}}, {"turn", turn}}).status, 200);
}

TEST_F(SessionTest, ConcurrentSubmissionsApplyOnce) {
  SessionManager m(TestOpponents(), Options());
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const std::string id = m.CreateSession({{"opponent", "ps"}, {"seed", seed}}).body["session_id"];
    const int turn = m.GetSession(id).body["next_turn"];
    std::atomic<int> ok{0}, conflicts{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
      threads.emplace_back([&, t] {
        const Offer o = Offer::FromIndex(t * 7 % 64, 6);
        const ApiResponse r = m.SubmitOffer(id, {{"bits", Bits(o)}, {"turn", turn}});
        if (r.status == 200) ++ok;
        else if (r.status == 409) ++conflicts;
      });
    }
    for (auto& th : threads) th.join();
    EXPECT_EQ(ok, 1);
    EXPECT_EQ(conflicts, 7);
    const Json state = m.GetSession(id).body;
    int human_moves = 0;
    for (const Json& mv : state["moves"]) human_moves += mv["by"] == "you";
    EXPECT_EQ(human_moves, 1);
  }
}

TEST_F(SessionTest, IdleSessionsAreAbandonedAndNotLogged) {
  SessionManager m(TestOpponents(), Options());
  const std::string id = m.CreateSession({{"opponent", "pp"}, {"seed", 8}}).body["session_id"];
  now_ += 599;
  EXPECT_EQ(m.GetSession(id).body["status"], "active");
  now_ += 2;
  const Json state = m.GetSession(id).body;
  EXPECT_EQ(state["status"], "abandoned");
  EXPECT_FALSE(state["your_turn"].get<bool>());
  EXPECT_EQ(m.SubmitOffer(id, {{"bits", {1, 1, 1, 1, 1, 1}}}).body["error"], kErrSessionTerminal);
  EXPECT_TRUE(m.finished_games().empty());
  EXPECT_EQ(m.Stats().body["overall"]["games"], 0);
}

TEST_F(SessionTest, StatsFromTheLogMatchLiveStats) {
  const auto log = std::filesystem::temp_directory_path() / "clause_arena_server_test.jsonl";
  std::filesystem::remove(log);
  ServerOptions o = Options();
  o.log_path = log;
  SessionManager m(TestOpponents(), o);
  Rng rng(6);
  for (int g = 0; g < 50; ++g) {
    const std::string id =
        m.CreateSession({{"opponent", kSessionTags[g % 5]}, {"seed", g}}).body["session_id"];
    PlayOut(m, id, Offer::FromIndex(UniformInt(rng, 64), 6), UniformInt(rng, 2) == 0);
  }
  const Json live = m.Stats().body;
  const std::vector<LoggedGame> games = ReadGameLog(log);
  ASSERT_EQ(games.size(), 50u);
  EXPECT_EQ(ComputeStats(games), live);
  EXPECT_EQ(live["overall"]["games"], 50);
  for (const char* tag : kSessionTags) EXPECT_EQ(live["agents"][tag]["games"], 10);
  for (const LoggedGame& g : games) {
    EXPECT_EQ(g.human_side, Seat::kB);
    EXPECT_EQ(CheckTranscript(g.transcript, {}), "");
  }
  std::filesystem::remove(log);
}

TEST(StatsTest, EmptyAgentsReportNulls) {
  const Json s = ComputeStats({});
  for (const char* tag : kSessionTags) {
    EXPECT_EQ(s["agents"][tag]["games"], 0);
    EXPECT_TRUE(s["agents"][tag]["agreement_rate"].is_null());
    EXPECT_TRUE(s["agents"][tag]["agent_score"].is_null());
  }
  EXPECT_TRUE(s["overall"]["dialog_length"].is_null());
}

TEST(StatsTest, HandComputedSession) {
  LoggedGame g;
  g.opponent_tag = "ss";
  g.human_side = Seat::kB;
  Transcript& t = g.transcript;
  t.utility_a = {3, 3, 3, 3, -6, -6};
  t.utility_b = {-3, -3, 3, 3, -6, 6};
  t.moves.resize(4);
  t.deal = Offer{1, 1, 1, 1, 0, 0};  // agent 12, human 0
  FinalizeTranscript(t, {});
  const Json s = ComputeStats({g});
  const Json& row = s["agents"]["ss"];
  EXPECT_EQ(row["games"], 1);
  EXPECT_EQ(row["agent_won_rate"], 100.0);
  EXPECT_EQ(row["human_won_rate"], 0.0);
  EXPECT_EQ(row["agent_score"], 1.0);
  EXPECT_EQ(row["human_score"], 0.0);
  EXPECT_EQ(row["dialog_length"], 4.0);
  EXPECT_EQ(row["agreement_rate"], 100.0);
  EXPECT_EQ(LoggedGame::FromJson(g.ToJson()).ToJson(), g.ToJson());
}

TEST(HttpTest, RoutesServeTheSessionApi) {
  SessionManager m(TestOpponents(), ServerOptions{});
  httplib::Server server;
  RegisterRoutes(server, m);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread serving([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto created = client.Post("/api/sessions", R"({"opponent": "pp", "seed": 5})",
                             "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 201);
  const Json c = Json::parse(created->body);
  const std::string id = c["session_id"];

  auto state = client.Get("/api/sessions/" + id);
  ASSERT_TRUE(state);
  EXPECT_EQ(state->status, 200);
  EXPECT_EQ(Json::parse(state->body)["session_id"], id);

  auto offer = client.Post("/api/sessions/" + id + "/offers", R"({"bits": [1,0,1,0,1,0]})",
                           "application/json");
  ASSERT_TRUE(offer);
  EXPECT_EQ(offer->status, 200);

  auto bad = client.Post("/api/sessions/" + id + "/offers", "{not json", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  EXPECT_EQ(Json::parse(bad->body)["error"], kErrBadRequest);

  auto missing = client.Get("/api/sessions/nope");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);

  auto unknown = client.Post("/api/sessions", R"({"opponent": "zz"})", "application/json");
  ASSERT_TRUE(unknown);
  EXPECT_EQ(unknown->status, 404);
  EXPECT_EQ(Json::parse(unknown->body)["error"], kErrUnknownAgent);

  auto stats = client.Get("/api/stats");
  ASSERT_TRUE(stats);
  EXPECT_EQ(stats->status, 200);
  EXPECT_TRUE(Json::parse(stats->body).contains("agents"));

  server.stop();
  serving.join();
}

}  // namespace
}  // namespace clause_arena
