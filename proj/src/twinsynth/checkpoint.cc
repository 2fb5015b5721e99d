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

#include "twinsynth/checkpoint.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include "twinsynth/common.h"
#include "twinsynth/io_util.h"

namespace twinsynth {
namespace {

constexpr std::size_t kMagicSize = 8;
constexpr int kFormatVersion = 1;

void PutU64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

std::uint64_t GetU64(std::string_view bytes, std::size_t offset) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(
             static_cast<unsigned char>(bytes[offset + i]))
         << (8 * i);
  }
  return v;
}

nlohmann::json ModelConfigToJson(const ModelConfig& c) {
  return {{"architecture", c.architecture},     {"vocab_size", c.vocab_size},
          {"embed_dim", c.embed_dim},           {"hidden_dim", c.hidden_dim},
          {"context_length", c.context_length}, {"init_seed", c.init_seed}};
}

ModelConfig ModelConfigFromJson(const nlohmann::json& j) {
  ModelConfig c;
  c.architecture = j.at("architecture").get<std::string>();
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.context_length = j.at("context_length").get<std::size_t>();
  c.init_seed = j.at("init_seed").get<std::uint64_t>();
  return c;
}

}  // namespace

nlohmann::json PrivacyReportToJson(const PrivacyReport& r) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : r.ledger.entries()) {
    entries.push_back({{"sigma", e.sigma},
                       {"sampling_rate", e.sampling_rate},
                       {"steps", e.steps}});
  }
  return {{"private", r.is_private},
          {"epsilon", NumberToJson(r.epsilon)},
          {"delta", r.delta},
          {"sigma", r.sigma},
          {"q", r.sampling_rate},
          {"steps", r.steps},
          {"best_alpha", r.best_alpha},
          {"conversion", ConversionName(r.conversion)},
          {"alphas", r.ledger.alphas()},
          {"entries", std::move(entries)}};
}

PrivacyReport PrivacyReportFromJson(const nlohmann::json& j) {
  PrivacyReport r;
  r.is_private = j.at("private").get<bool>();
  r.epsilon = NumberFromJson(j.at("epsilon"), "epsilon");
  r.delta = j.at("delta").get<double>();
  r.sigma = j.at("sigma").get<double>();
  r.sampling_rate = j.at("q").get<double>();
  r.steps = j.at("steps").get<std::uint64_t>();
  r.best_alpha = j.at("best_alpha").get<double>();
  r.conversion = ParseConversion(j.at("conversion").get<std::string>());
  PrivacyLedger ledger(j.at("alphas").get<std::vector<double>>());
  for (const auto& e : j.at("entries")) {
    ledger.Append(e.at("sigma").get<double>(),
                  e.at("sampling_rate").get<double>(),
                  e.at("steps").get<std::uint64_t>());
  }
  r.ledger = std::move(ledger);
  return r;
}

std::string EncodeCheckpoint(const Checkpoint& ck) {
  const LanguageModel& m = ck.model;
  if (!m.vocab()) throw InvalidArgument("checkpoint model has no vocabulary");
  const nlohmann::json header = {{"format_version", kFormatVersion},
                                 {"config", ModelConfigToJson(m.config())},
                                 {"vocabulary", m.vocab()->tokens()},
                                 {"privacy", PrivacyReportToJson(ck.privacy)},
                                 {"lambda", ck.lambda},
                                 {"seed", ck.seed},
                                 {"config_hash", ck.config_hash}};
  const std::string text = header.dump();
  std::string out(kCheckpointMagic, kMagicSize);
  PutU64(out, text.size());
  out += text;
  const auto params = m.params();
  PutU64(out, params.size());
  out.reserve(out.size() + 8 * params.size());
  for (double p : params) PutU64(out, std::bit_cast<std::uint64_t>(p));
  return out;
}

Checkpoint DecodeCheckpoint(std::string_view bytes, const std::string& name) {
  auto fail = [&](const std::string& what) {
    return IoError("corrupt checkpoint " + name + ": " + what);
  };
  if (bytes.size() < kMagicSize + 8 ||
      bytes.substr(0, kMagicSize) != std::string_view(kCheckpointMagic)) {
    throw fail("bad magic");
  }
  const std::uint64_t header_size = GetU64(bytes, kMagicSize);
  std::size_t pos = kMagicSize + 8;
  if (header_size > bytes.size() - pos) throw fail("truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(pos, header_size));
  } catch (const nlohmann::json::exception& e) {
    throw fail(std::string("header is not JSON: ") + e.what());
  }
  pos += header_size;
  if (bytes.size() - pos < 8) throw fail("missing parameter count");
  const std::uint64_t count = GetU64(bytes, pos);
  pos += 8;
  if (count > (bytes.size() - pos) / 8 || bytes.size() - pos != 8 * count) {
    throw fail("parameter block size mismatch");
  }
  try {
    if (header.at("format_version").get<int>() != kFormatVersion) {
      throw fail("unsupported format version");
    }
    ModelConfig config = ModelConfigFromJson(header.at("config"));
    auto vocab = std::make_shared<const Vocabulary>(Vocabulary::FromTokens(
        header.at("vocabulary").get<std::vector<std::string>>()));
    if (vocab->size() != config.vocab_size) {
      throw fail("vocabulary size does not match the model config");
    }
    config.Validate();
    if (ParameterLayout::For(config).total != count) {
      throw fail("parameter count does not match the model config");
    }
    std::vector<double> params(count);
    for (std::size_t i = 0; i < count; ++i) {
      params[i] = std::bit_cast<double>(GetU64(bytes, pos + 8 * i));
      if (!std::isfinite(params[i])) throw fail("non-finite parameter");
    }
    Checkpoint ck{LanguageModel(std::move(config), std::move(params), vocab),
                  PrivacyReportFromJson(header.at("privacy")),
                  header.at("lambda").get<double>(),
                  header.at("seed").get<std::uint64_t>(),
                  header.at("config_hash").get<std::string>()};
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw fail(std::string("bad header: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIo) throw;
    throw fail(e.what());
  }
}

void SaveCheckpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  WriteFileAtomic(path, EncodeCheckpoint(ck));
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  return DecodeCheckpoint(ReadFile(path), path.string());
}

}  // namespace twinsynth
