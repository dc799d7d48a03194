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

// JSON / JSONL encoding of transcripts and utility test sets.

#ifndef CLAUSE_ARENA_TRANSCRIPT_IO_H_
#define CLAUSE_ARENA_TRANSCRIPT_IO_H_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "clause_arena/env.h"
#include "json.hpp"

namespace clause_arena {

using Json = nlohmann::json;

Json OfferToJson(const Offer& offer);
Offer OfferFromJson(const Json& j);

Json TranscriptToJson(const Transcript& t);
Transcript TranscriptFromJson(const Json& j);

// One compact JSON object per line.
void WriteTranscripts(const std::filesystem::path& path,
                      std::span<const Transcript> transcripts);
std::vector<Transcript> ReadTranscripts(const std::filesystem::path& path);

// Test sets: one {"utility_a": [...], "utility_b": [...]} object per line.
void WriteTestSet(const std::filesystem::path& path,
                  std::span<const UtilityPair> pairs);
std::vector<UtilityPair> ReadTestSet(const std::filesystem::path& path);

// Throws std::runtime_error naming the path on failure.
std::string ReadFile(const std::filesystem::path& path);
void WriteFile(const std::filesystem::path& path, const std::string& contents);

}  // namespace clause_arena

#endif  // CLAUSE_ARENA_TRANSCRIPT_IO_H_
