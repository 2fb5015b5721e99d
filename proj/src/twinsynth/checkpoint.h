// Copyright 2026 The TwinSynth Authors
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

#ifndef TWINSYNTH_CHECKPOINT_H_
#define TWINSYNTH_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"
#include "twinsynth/model.h"
#include "twinsynth/synthesis.h"

namespace twinsynth {

// Ledger snapshot: spent (epsilon, delta), sigma, q, steps, conversion and
// the executed ledger entries.
nlohmann::json PrivacyReportToJson(const PrivacyReport& report);
PrivacyReport PrivacyReportFromJson(const nlohmann::json& j);

struct Checkpoint {
  LanguageModel model;  // Carries its vocabulary.
  PrivacyReport privacy;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  std::string config_hash;
};

// Layout: 8-byte magic "TWSCKPT1", uint64 header length, JSON header
// (config, vocabulary, ledger snapshot, run metadata), uint64 parameter
// count, then the parameters as little-endian IEEE-754 doubles. All integers
// are little-endian.
inline constexpr char kCheckpointMagic[] = "TWSCKPT1";

std::string EncodeCheckpoint(const Checkpoint& checkpoint);
// `name` labels error messages.
Checkpoint DecodeCheckpoint(std::string_view bytes, const std::string& name);

void SaveCheckpoint(const Checkpoint& checkpoint,
                    const std::filesystem::path& path);
// Throws kIo naming `path` on any malformed content.
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace twinsynth

#endif  // TWINSYNTH_CHECKPOINT_H_
