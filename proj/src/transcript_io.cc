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

#include "clause_arena/transcript_io.h"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace clause_arena {

Json OfferToJson(const Offer& offer) {
  Json j = Json::array();
  for (uint8_t b : offer.bits()) j.push_back(static_cast<int>(b));
  return j;
}

Offer OfferFromJson(const Json& j) {
  if (!j.is_array()) throw ContractViolation("offer must be an array of 0/1");
  std::vector<uint8_t> bits;
  for (const Json& b : j) {
    if (!b.is_number_integer()) throw ContractViolation("offer bits must be integers");
    const int v = b.get<int>();
    if (v != 0 && v != 1) throw ContractViolation("offer bits must be 0 or 1");
    bits.push_back(static_cast<uint8_t>(v));
  }
  return Offer(std::move(bits));
}

namespace {

Json UtilityToJson(const UtilityVector& u) {
  return Json(std::vector<int>(u.values().begin(), u.values().end()));
}

UtilityVector UtilityFromJson(const Json& j) {
  return UtilityVector(j.get<std::vector<int>>());
}

}  // namespace

Json TranscriptToJson(const Transcript& t) {
  Json moves = Json::array();
  for (const Move& m : t.moves) {
    moves.push_back({{"agent", std::string(1, SeatName(m.agent))},
                     {"turn", m.turn},
                     {"action", m.action},
                     {"offer", OfferToJson(m.offer)}});
  }
  Json outcome = t.deal ? Json{{"type", "agreement"}, {"deal", OfferToJson(*t.deal)}}
                        : Json{{"type", "disagreement"}};
  return Json{{"game_id", t.game_id},
              {"seed", t.seed},
              {"utility_a", UtilityToJson(t.utility_a)},
              {"utility_b", UtilityToJson(t.utility_b)},
              {"first_mover", std::string(1, SeatName(t.first_mover))},
              {"moves", std::move(moves)},
              {"outcome", std::move(outcome)},
              {"raw_scores", {t.raw_scores[0], t.raw_scores[1]}},
              {"normalized_scores", {t.normalized_scores[0], t.normalized_scores[1]}},
              {"optimal", t.optimal}};
}

Transcript TranscriptFromJson(const Json& j) {
  Transcript t;
  t.game_id = j.at("game_id").get<std::string>();
  t.seed = j.at("seed").get<uint64_t>();
  t.utility_a = UtilityFromJson(j.at("utility_a"));
  t.utility_b = UtilityFromJson(j.at("utility_b"));
  t.first_mover = ParseSeat(j.at("first_mover").get<std::string>());
  for (const Json& m : j.at("moves")) {
    t.moves.push_back(Move{ParseSeat(m.at("agent").get<std::string>()),
                           m.at("turn").get<int>(), m.at("action").get<int>(),
                           OfferFromJson(m.at("offer"))});
  }
  const Json& outcome = j.at("outcome");
  if (outcome.at("type") == "agreement") t.deal = OfferFromJson(outcome.at("deal"));
  t.raw_scores = j.at("raw_scores").get<std::array<int, 2>>();
  t.normalized_scores = j.at("normalized_scores").get<std::array<double, 2>>();
  t.optimal = j.at("optimal").get<bool>();
  return t;
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << contents;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

namespace {

template <typename F>
void ForEachJsonLine(const std::filesystem::path& path, F&& f) {
  std::istringstream in(ReadFile(path));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      f(Json::parse(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": " + e.what());
    }
  }
}

}  // namespace

void WriteTranscripts(const std::filesystem::path& path,
                      std::span<const Transcript> transcripts) {
  std::string out;
  for (const Transcript& t : transcripts) {
    out += TranscriptToJson(t).dump();
    out.push_back('\n');
  }
  WriteFile(path, out);
}

std::vector<Transcript> ReadTranscripts(const std::filesystem::path& path) {
  std::vector<Transcript> out;
  ForEachJsonLine(path, [&](const Json& j) { out.push_back(TranscriptFromJson(j)); });
  return out;
}

void WriteTestSet(const std::filesystem::path& path,
                  std::span<const UtilityPair> pairs) {
  std::string out;
  for (const auto& [a, b] : pairs) {
    out += Json{{"utility_a", UtilityToJson(a)}, {"utility_b", UtilityToJson(b)}}.dump();
    out.push_back('\n');
  }
  WriteFile(path, out);
}

std::vector<UtilityPair> ReadTestSet(const std::filesystem::path& path) {
  std::vector<UtilityPair> out;
  ForEachJsonLine(path, [&](const Json& j) {
    out.emplace_back(UtilityFromJson(j.at("utility_a")),
                     UtilityFromJson(j.at("utility_b")));
  });
  return out;
}

}  // namespace clause_arena
