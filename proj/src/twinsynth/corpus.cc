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

#include "twinsynth/corpus.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "twinsynth/common.h"
#include "twinsynth/rng.h"

namespace twinsynth {
namespace {

using nlohmann::json;

bool IsBlank(const std::string& s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

std::vector<std::string> SplitWords(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> words;
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

std::string JoinWords(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out += ' ';
    out += words[i];
  }
  return out;
}

// Sampler over a word list with optional Zipf weighting.
class LexiconSampler {
 public:
  LexiconSampler(const std::vector<std::string>* words, double zipf)
      : words_(words) {
    cumulative_.reserve(words->size());
    double total = 0.0;
    for (std::size_t r = 0; r < words->size(); ++r) {
      total += zipf == 0.0 ? 1.0 : std::pow(static_cast<double>(r + 1), -zipf);
      cumulative_.push_back(total);
    }
  }

  const std::string& Draw(Rng& rng) const {
    if (cumulative_.size() == 1) return (*words_)[0];
    const double u = rng.Uniform() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    std::size_t idx = static_cast<std::size_t>(it - cumulative_.begin());
    if (idx >= words_->size()) idx = words_->size() - 1;
    return (*words_)[idx];
  }

 private:
  const std::vector<std::string>* words_;
  std::vector<double> cumulative_;
};

void ValidateToySpec(const ToyCorpusSpec& spec, const AttributeSchema& schema) {
  if (spec.min_length == 0 || spec.min_length > spec.max_length) {
    throw InvalidArgument(
        "toy sentence length range must satisfy 1 <= min <= max");
  }
  if (!(spec.signature_fraction >= 0.6 && spec.signature_fraction <= 1.0)) {
    throw InvalidArgument("toy signature_fraction must lie in [0.6, 1]");
  }
  if (spec.neutral_lexicon.empty() && spec.signature_fraction < 1.0) {
    throw InvalidArgument("toy neutral lexicon is empty");
  }
  if (spec.neutral_lexicon.empty() && spec.public_records > 0) {
    throw InvalidArgument("public corpus needs a non-empty neutral lexicon");
  }
  std::set<std::string> seen(spec.neutral_lexicon.begin(),
                             spec.neutral_lexicon.end());
  if (seen.size() != spec.neutral_lexicon.size()) {
    throw InvalidArgument("toy neutral lexicon has duplicate words");
  }
  for (const Attribute& attr : schema.attributes()) {
    auto it = spec.lexicons.find(attr.name);
    if (it == spec.lexicons.end()) {
      throw InvalidArgument("toy spec has no lexicons for attribute '" +
                            attr.name + "'");
    }
    for (const std::string& value : attr.values) {
      auto lex = it->second.find(value);
      if (lex == it->second.end() || lex->second.empty()) {
        throw InvalidArgument("toy spec has no lexicon for " + attr.name + "=" +
                              value);
      }
      for (const std::string& word : lex->second) {
        if (!seen.insert(word).second) {
          throw InvalidArgument("toy lexicons are not disjoint: '" + word +
                                "' appears twice");
        }
      }
    }
    if (it->second.size() != attr.values.size()) {
      throw InvalidArgument("toy spec lexicons for '" + attr.name +
                            "' name values outside the schema");
    }
  }
  if (spec.lexicons.size() != schema.size()) {
    throw InvalidArgument(
        "toy spec lexicons name attributes outside the schema");
  }
  for (const Canary& canary : spec.canaries) {
    const auto tokens = SplitWords(canary.text);
    if (tokens.empty()) throw InvalidArgument("canary text is empty");
    for (const std::string& t : tokens) {
      if (seen.contains(t)) {
        throw InvalidArgument("canary '" + canary.text +
                              "' shares the token '" + t + "' with a lexicon");
      }
    }
  }
}

}  // namespace

const char* CorpusRoleName(CorpusRole role) {
  switch (role) {
    case CorpusRole::kTrain:
      return "train";
    case CorpusRole::kTest:
      return "test";
    case CorpusRole::kSynthetic:
      return "synthetic";
  }
  return "unknown";
}

void ValidateRecord(const LabeledRecord& record,
                    const AttributeSchema& schema) {
  if (IsBlank(record.text)) throw InvalidArgument("record text is empty");
  schema.ValidatePartial(record.attrs);
}

Corpus::Corpus(std::vector<LabeledRecord> records,
               std::shared_ptr<const AttributeSchema> schema, CorpusRole role)
    : records_(std::move(records)), schema_(std::move(schema)), role_(role) {
  if (!schema_) throw InvalidArgument("corpus requires a schema");
  for (std::size_t i = 0; i < records_.size(); ++i) {
    try {
      ValidateRecord(records_[i], *schema_);
    } catch (const Error& e) {
      throw InvalidArgument("record " + std::to_string(i) + ": " + e.what());
    }
  }
}

std::string RecordToJsonLine(const LabeledRecord& record) {
  json obj;
  obj["text"] = record.text;
  obj["attrs"] = json::object();
  for (const auto& [k, v] : record.attrs) obj["attrs"][k] = v;
  return obj.dump(-1, ' ', false, json::error_handler_t::strict);
}

Corpus LoadJsonl(const std::filesystem::path& path,
                 std::shared_ptr<const AttributeSchema> schema,
                 CorpusRole role) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file " + path.string());
  std::vector<LabeledRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (IsBlank(line)) continue;
    LabeledRecord record;
    try {
      json obj = json::parse(line);
      if (!obj.is_object() || !obj.contains("text") ||
          !obj["text"].is_string()) {
        throw InvalidArgument("missing string field \"text\"");
      }
      record.text = obj["text"].get<std::string>();
      if (obj.contains("attrs")) {
        const json& attrs = obj["attrs"];
        if (!attrs.is_object()) {
          throw InvalidArgument("field \"attrs\" must be an object");
        }
        for (auto it = attrs.begin(); it != attrs.end(); ++it) {
          if (!it.value().is_string()) {
            throw InvalidArgument("attribute '" + it.key() +
                                  "' must have a string value");
          }
          record.attrs[it.key()] = it.value().get<std::string>();
        }
      }
    } catch (const json::exception& e) {
      throw InvalidArgument(path.string() + ":" + std::to_string(line_no) +
                            ": malformed record: " + e.what());
    } catch (const Error& e) {
      throw InvalidArgument(path.string() + ":" + std::to_string(line_no) +
                            ": malformed record: " + e.what());
    }
    try {
      ValidateRecord(record, *schema);
    } catch (const Error& e) {
      throw InvalidArgument(path.string() + ":" + std::to_string(line_no) +
                            ": record " + std::to_string(records.size()) +
                            ": " + e.what());
    }
    records.push_back(std::move(record));
  }
  if (in.bad()) throw IoError("error reading " + path.string());
  return Corpus(std::move(records), std::move(schema), role);
}

void WriteJsonl(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const LabeledRecord& record : corpus.records()) {
    std::string line;
    try {
      line = RecordToJsonLine(record);
    } catch (const json::exception& e) {
      throw InvalidArgument("cannot serialize record for " + path.string() +
                            ": " + e.what());
    }
    out << line << '\n';
  }
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::string AssignmentKey(const AttributeAssignment& a) {
  std::string key;
  for (const auto& [k, v] : a) {
    key += k;
    key += '=';
    key += v;
    key += ';';
  }
  return key;
}

std::vector<std::string> PseudoWords(std::size_t count, std::uint64_t seed,
                                     const std::vector<std::string>& exclude) {
  static constexpr const char* kOnsets[] = {
      "b", "d", "f",  "g",  "k",  "l",  "m",  "n",  "p",  "r",  "s",  "t",
      "v", "z", "br", "dr", "gl", "kr", "pl", "st", "tr", "sh", "ch", "th"};
  static constexpr const char* kNuclei[] = {"a",  "e",  "i",  "o", "u",
                                            "ai", "ou", "ee", "oa"};
  static constexpr const char* kCodas[] = {"",  "n", "r", "l",
                                           "m", "s", "k", "x"};
  std::set<std::string> used(exclude.begin(), exclude.end());
  std::vector<std::string> out;
  Rng rng(seed);
  while (out.size() < count) {
    const std::size_t syllables = 2 + rng.UniformInt(2);
    std::string word;
    for (std::size_t s = 0; s < syllables; ++s) {
      word += kOnsets[rng.UniformInt(std::size(kOnsets))];
      word += kNuclei[rng.UniformInt(std::size(kNuclei))];
    }
    word += kCodas[rng.UniformInt(std::size(kCodas))];
    if (used.insert(word).second) out.push_back(std::move(word));
  }
  return out;
}

ToyCorpora GenerateToyCorpus(const ToyCorpusSpec& spec,
                             std::shared_ptr<const AttributeSchema> schema) {
  if (!schema) throw InvalidArgument("toy corpus requires a schema");
  ValidateToySpec(spec, *schema);

  const std::vector<AttributeAssignment> classes = schema->AllAssignments();
  const std::size_t total = classes.size() * spec.records_per_class;
  for (const Canary& canary : spec.canaries) {
    if (canary.insertions > total) {
      throw InvalidArgument("canary '" + canary.text + "' requests " +
                            std::to_string(canary.insertions) +
                            " insertions but the private corpus has " +
                            std::to_string(total) + " records");
    }
  }

  Rng rng(DeriveSeed(spec.seed, Stream::kToyCorpus));
  const LexiconSampler neutral(&spec.neutral_lexicon, spec.zipf_exponent);
  std::map<std::string, std::map<std::string, LexiconSampler>> samplers;
  for (const auto& [attr, values] : spec.lexicons) {
    for (const auto& [value, words] : values) {
      samplers[attr].emplace(value, LexiconSampler(&words, spec.zipf_exponent));
    }
  }

  auto draw_length = [&] {
    return spec.min_length + static_cast<std::size_t>(rng.UniformInt(
                                 spec.max_length - spec.min_length + 1));
  };

  std::vector<std::vector<std::string>> private_words;
  std::vector<AttributeAssignment> private_attrs;
  private_words.reserve(total);
  private_attrs.reserve(total);
  for (const AttributeAssignment& cls : classes) {
    std::vector<const LexiconSampler*> class_samplers;
    for (const auto& [attr, value] : cls) {
      class_samplers.push_back(&samplers.at(attr).at(value));
    }
    for (std::size_t r = 0; r < spec.records_per_class; ++r) {
      const std::size_t len = draw_length();
      const auto n_signature = static_cast<std::size_t>(
          std::ceil(spec.signature_fraction * static_cast<double>(len) - 1e-9));
      std::vector<bool> is_signature(len, false);
      std::fill(is_signature.begin(), is_signature.begin() + n_signature, true);
      rng.Shuffle(is_signature);
      std::vector<std::string> words;
      words.reserve(len);
      for (std::size_t i = 0; i < len; ++i) {
        if (is_signature[i]) {
          const auto* s = class_samplers[rng.UniformInt(class_samplers.size())];
          words.push_back(s->Draw(rng));
        } else {
          words.push_back(neutral.Draw(rng));
        }
      }
      private_words.push_back(std::move(words));
      private_attrs.push_back(cls);
    }
  }

  Rng canary_rng(DeriveSeed(spec.seed, Stream::kCanary));
  for (const Canary& canary : spec.canaries) {
    const auto tokens = SplitWords(canary.text);
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), 0);
    canary_rng.Shuffle(order);
    for (std::size_t i = 0; i < canary.insertions; ++i) {
      auto& words = private_words[order[i]];
      const std::size_t at = canary_rng.UniformInt(words.size() + 1);
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(at),
                   tokens.begin(), tokens.end());
    }
  }

  std::vector<LabeledRecord> private_records;
  private_records.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    private_records.push_back(
        {JoinWords(private_words[i]), std::move(private_attrs[i])});
  }

  std::vector<LabeledRecord> public_records;
  public_records.reserve(spec.public_records);
  for (std::size_t r = 0; r < spec.public_records; ++r) {
    const std::size_t len = draw_length();
    std::vector<std::string> words;
    for (std::size_t i = 0; i < len; ++i) words.push_back(neutral.Draw(rng));
    public_records.push_back({JoinWords(words), {}});
  }

  return ToyCorpora{
      Corpus(std::move(private_records), schema, CorpusRole::kTrain),
      Corpus(std::move(public_records), schema, CorpusRole::kTrain)};
}

std::pair<Corpus, Corpus> Split(const Corpus& corpus, double train_fraction,
                                std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidArgument("train_fraction must lie strictly between 0 and 1");
  }
  if (corpus.empty()) throw InvalidArgument("cannot split an empty corpus");

  const std::size_t n = corpus.size();
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < n; ++i) {
    by_class[AssignmentKey(corpus.records()[i].attrs)].push_back(i);
  }
  const auto target = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * train_fraction));

  struct Share {
    std::vector<std::size_t>* members;
    std::size_t take;
    double remainder;
    std::size_t order;
  };
  std::vector<Share> shares;
  std::size_t assigned = 0;
  std::size_t order = 0;
  for (auto& [key, members] : by_class) {
    const double exact = static_cast<double>(members.size()) * train_fraction;
    const auto base = static_cast<std::size_t>(std::floor(exact));
    shares.push_back(
        {&members, base, exact - static_cast<double>(base), order++});
    assigned += base;
  }
  std::vector<Share*> by_remainder;
  for (Share& s : shares) by_remainder.push_back(&s);
  std::stable_sort(by_remainder.begin(), by_remainder.end(),
                   [](const Share* a, const Share* b) {
                     return a->remainder > b->remainder;
                   });
  for (std::size_t i = 0; assigned < target && i < by_remainder.size(); ++i) {
    if (by_remainder[i]->take < by_remainder[i]->members->size()) {
      ++by_remainder[i]->take;
      ++assigned;
    }
  }

  Rng rng(DeriveSeed(seed, Stream::kSplit));
  std::vector<bool> in_train(n, false);
  for (Share& s : shares) {
    std::vector<std::size_t> members = *s.members;
    rng.Shuffle(members);
    for (std::size_t i = 0; i < s.take; ++i) in_train[members[i]] = true;
  }
  std::vector<LabeledRecord> train, test;
  for (std::size_t i = 0; i < n; ++i) {
    (in_train[i] ? train : test).push_back(corpus.records()[i]);
  }
  return {Corpus(std::move(train), corpus.schema_ptr(), CorpusRole::kTrain),
          Corpus(std::move(test), corpus.schema_ptr(), CorpusRole::kTest)};
}

}  // namespace twinsynth
