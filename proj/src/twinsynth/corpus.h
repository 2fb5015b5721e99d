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

#ifndef TWINSYNTH_CORPUS_H_
#define TWINSYNTH_CORPUS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "twinsynth/prompt.h"

namespace twinsynth {

struct LabeledRecord {
  std::string text;
  AttributeAssignment attrs;

  bool operator==(const LabeledRecord&) const = default;
};

enum class CorpusRole { kTrain, kTest, kSynthetic };

const char* CorpusRoleName(CorpusRole role);

// An ordered, schema-validated collection of records. Immutable once built.
class Corpus {
 public:
  Corpus(std::vector<LabeledRecord> records,
         std::shared_ptr<const AttributeSchema> schema, CorpusRole role);

  const std::vector<LabeledRecord>& records() const { return records_; }
  const AttributeSchema& schema() const { return *schema_; }
  const std::shared_ptr<const AttributeSchema>& schema_ptr() const {
    return schema_;
  }
  CorpusRole role() const { return role_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  // Record-for-record equality; schema and role are not compared.
  bool SameRecords(const Corpus& other) const {
    return records_ == other.records_;
  }

 private:
  std::vector<LabeledRecord> records_;
  std::shared_ptr<const AttributeSchema> schema_;
  CorpusRole role_;
};

// Throws unless the text is non-empty after trimming and the attributes
// validate against `schema`.
void ValidateRecord(const LabeledRecord& record, const AttributeSchema& schema);

// One JSON object per line: {"text": "...", "attrs": {"name": "value"}}.
// Blank lines are skipped.
Corpus LoadJsonl(const std::filesystem::path& path,
                 std::shared_ptr<const AttributeSchema> schema,
                 CorpusRole role = CorpusRole::kTrain);
void WriteJsonl(const Corpus& corpus, const std::filesystem::path& path);

std::string RecordToJsonLine(const LabeledRecord& record);

struct Canary {
  std::string text;
  std::size_t insertions = 0;
};

struct ToyCorpusSpec {
  // attribute name -> value -> signature lexicon. Lexicons of distinct
  // values must be pairwise disjoint and disjoint from the neutral lexicon.
  std::map<std::string, std::map<std::string, std::vector<std::string>>>
      lexicons;
  std::vector<std::string> neutral_lexicon;
  // Records per complete attribute assignment.
  std::size_t records_per_class = 0;
  // Size of the unlabeled public corpus.
  std::size_t public_records = 0;
  std::size_t min_length = 8;
  std::size_t max_length = 14;
  // Lower bound on the share of signature tokens in each private text.
  double signature_fraction = 0.6;
  // Zipf exponent for word choice inside each lexicon; 0 is uniform.
  double zipf_exponent = 0.0;
  std::vector<Canary> canaries;
  std::uint64_t seed = 0;
};

struct ToyCorpora {
  Corpus private_corpus;
  Corpus public_corpus;
};

ToyCorpora GenerateToyCorpus(const ToyCorpusSpec& spec,
                             std::shared_ptr<const AttributeSchema> schema);

// Deterministic pronounceable pseudo-words, none of which is in `exclude`.
std::vector<std::string> PseudoWords(std::size_t count, std::uint64_t seed,
                                     const std::vector<std::string>& exclude);

// Stratified by complete attribute assignment. Train size is
// floor(n * train_fraction); each class lands within one record of its
// proportional share. Records keep their original relative order.
std::pair<Corpus, Corpus> Split(const Corpus& corpus, double train_fraction,
                                std::uint64_t seed);

// Canonical string for an assignment, used as a class key.
std::string AssignmentKey(const AttributeAssignment& a);

}  // namespace twinsynth

#endif  // TWINSYNTH_CORPUS_H_
