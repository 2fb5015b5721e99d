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
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <string>

#include "gtest/gtest.h"
#include "twinsynth/common.h"
#include "twinsynth/tokenizer.h"

namespace twinsynth {
namespace {

namespace fs = std::filesystem;

std::shared_ptr<const AttributeSchema> Sentiment() {
  return std::make_shared<const AttributeSchema>(std::vector<Attribute>{
      {"sentiment", {"positive", "negative"}, {"positive", "negative"}}});
}

class TempDir {
 public:
  TempDir() {
    path_ =
        fs::temp_directory_path() /
        ("twinsynth_corpus_" +
         std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
         "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

void WriteText(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::string ReadText(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ToyCorpusSpec SmallToySpec(std::size_t per_class, std::uint64_t seed) {
  const auto words = PseudoWords(80, 5, {});
  ToyCorpusSpec spec;
  spec.lexicons["sentiment"]["positive"] = {words.begin(), words.begin() + 20};
  spec.lexicons["sentiment"]["negative"] = {words.begin() + 20,
                                            words.begin() + 40};
  spec.neutral_lexicon = {words.begin() + 40, words.end()};
  spec.records_per_class = per_class;
  spec.public_records = 50;
  spec.seed = seed;
  return spec;
}

Corpus Labeled(const std::vector<std::string>& labels) {
  std::vector<LabeledRecord> records;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    records.push_back(
        {"text " + std::to_string(i), {{"sentiment", labels[i]}}});
  }
  return Corpus(std::move(records), Sentiment(), CorpusRole::kTrain);
}

TEST(LoadJsonlTest, ReadsRecordsInOrder) {
  TempDir dir;
  WriteText(
      dir / "c.jsonl",
      "{\"text\": \"great\", \"attrs\": {\"sentiment\": \"positive\"}}\n"
      "\n"
      "{\"text\": \"awful\", \"attrs\": {\"sentiment\": \"negative\"}}\n");
  const Corpus c = LoadJsonl(dir / "c.jsonl", Sentiment());
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.records()[0].text, "great");
  EXPECT_EQ(c.records()[1].attrs.at("sentiment"), "negative");
}

TEST(LoadJsonlTest, EmptyFileGivesEmptyCorpus) {
  TempDir dir;
  WriteText(dir / "e.jsonl", "");
  EXPECT_TRUE(LoadJsonl(dir / "e.jsonl", Sentiment()).empty());
}

TEST(LoadJsonlTest, UnknownValueNamesTheLine) {
  TempDir dir;
  WriteText(dir / "bad.jsonl",
            "{\"text\": \"ok\", \"attrs\": {\"sentiment\": \"positive\"}}\n"
            "{\"text\": \"hm\", \"attrs\": {\"sentiment\": \"happy\"}}\n");
  try {
    LoadJsonl(dir / "bad.jsonl", Sentiment());
    FAIL() << "expected a validation error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("happy"), std::string::npos);
  }
}

TEST(LoadJsonlTest, MalformedLineNamesTheLine) {
  TempDir dir;
  WriteText(dir / "bad.jsonl", "{\"text\": \"ok\"}\n{not json\n");
  try {
    LoadJsonl(dir / "bad.jsonl", Sentiment());
    FAIL() << "expected a parse error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
}

TEST(LoadJsonlTest, MissingFileIsIoError) {
  try {
    LoadJsonl("/nonexistent/x.jsonl", Sentiment());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(WriteJsonlTest, RoundTripsRecordsExactly) {
  TempDir dir;
  const Corpus c({{"first \"quoted\"", {{"sentiment", "positive"}}},
                  {"line one\nline two", {{"sentiment", "negative"}}},
                  {"unicode caf\xc3\xa9", {{"sentiment", "positive"}}}},
                 Sentiment(), CorpusRole::kTrain);
  WriteJsonl(c, dir / "r.jsonl");
  const std::string bytes = ReadText(dir / "r.jsonl");
  EXPECT_EQ(std::count(bytes.begin(), bytes.end(), '\n'), 3);
  EXPECT_TRUE(LoadJsonl(dir / "r.jsonl", Sentiment()).SameRecords(c));
}

TEST(WriteJsonlTest, EmptyCorpusWritesEmptyFile) {
  TempDir dir;
  WriteJsonl(Corpus({}, Sentiment(), CorpusRole::kTrain), dir / "e.jsonl");
  EXPECT_EQ(ReadText(dir / "e.jsonl"), "");
}

TEST(WriteJsonlTest, UnwritablePathNamesThePath) {
  // A regular file as the parent directory is unwritable even for root.
  const auto blocker =
      std::filesystem::path(::testing::TempDir()) / "jsonl_blocker";
  std::ofstream(blocker) << "x";
  const auto target = blocker / "out.jsonl";
  try {
    WriteJsonl(Labeled({"positive"}), target);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
    EXPECT_NE(std::string(e.what()).find(target.string()), std::string::npos);
  }
}

TEST(CorpusTest, RejectsBlankText) {
  EXPECT_THROW(Corpus({{"   ", {{"sentiment", "positive"}}}}, Sentiment(),
                      CorpusRole::kTrain),
               Error);
}

TEST(ToyCorpusTest, SizesFollowTheSpec) {
  const auto toy = GenerateToyCorpus(SmallToySpec(2500, 1), Sentiment());
  EXPECT_EQ(toy.private_corpus.size(), 5000u);
  EXPECT_EQ(toy.public_corpus.size(), 50u);
}

TEST(ToyCorpusTest, CanaryLandsInExactlyTheRequestedRecords) {
  ToyCorpusSpec spec = SmallToySpec(100, 3);
  spec.canaries = {{"zq7 vexil brant", 10}};
  const auto toy = GenerateToyCorpus(spec, Sentiment());
  int with = 0;
  for (const auto& r : toy.private_corpus.records()) {
    if (r.text.find("zq7 vexil brant") != std::string::npos) ++with;
  }
  EXPECT_EQ(with, 10);
  for (const auto& r : toy.public_corpus.records()) {
    EXPECT_EQ(r.text.find("zq7"), std::string::npos);
  }
}

TEST(ToyCorpusTest, TooManyInsertionsIsAnError) {
  ToyCorpusSpec spec = SmallToySpec(3, 3);
  spec.canaries = {{"zq7 vexil brant", 7}};
  EXPECT_THROW(GenerateToyCorpus(spec, Sentiment()), Error);
}

TEST(ToyCorpusTest, OverlappingLexiconsAreRejected) {
  ToyCorpusSpec spec = SmallToySpec(3, 3);
  spec.lexicons["sentiment"]["negative"].push_back(
      spec.lexicons["sentiment"]["positive"][0]);
  EXPECT_THROW(GenerateToyCorpus(spec, Sentiment()), Error);
}

TEST(ToyCorpusTest, SignatureShareAndPublicNeutrality) {
  const ToyCorpusSpec spec = SmallToySpec(200, 4);
  const auto toy = GenerateToyCorpus(spec, Sentiment());
  const auto& lex = spec.lexicons.at("sentiment");
  std::set<std::string> all_signature;
  for (const auto& [value, words] : lex) {
    all_signature.insert(words.begin(), words.end());
  }
  for (const auto& r : toy.private_corpus.records()) {
    const auto& own = lex.at(r.attrs.at("sentiment"));
    const std::set<std::string> own_set(own.begin(), own.end());
    const auto words = NormalizeWords(r.text);
    ASSERT_GE(words.size(), spec.min_length);
    ASSERT_LE(words.size(), spec.max_length);
    std::size_t hits = 0;
    for (const auto& w : words) hits += own_set.contains(w);
    EXPECT_GE(static_cast<double>(hits), 0.6 * words.size() - 1e-9);
  }
  for (const auto& r : toy.public_corpus.records()) {
    EXPECT_TRUE(r.attrs.empty());
    for (const auto& w : NormalizeWords(r.text)) {
      EXPECT_FALSE(all_signature.contains(w)) << w;
    }
  }
}

TEST(ToyCorpusTest, DeterministicUnderSeed) {
  ToyCorpusSpec spec = SmallToySpec(50, 9);
  spec.canaries = {{"zq7 vexil brant", 3}};
  const auto a = GenerateToyCorpus(spec, Sentiment());
  const auto b = GenerateToyCorpus(spec, Sentiment());
  EXPECT_TRUE(a.private_corpus.SameRecords(b.private_corpus));
  EXPECT_TRUE(a.public_corpus.SameRecords(b.public_corpus));
  spec.seed = 10;
  EXPECT_FALSE(GenerateToyCorpus(spec, Sentiment())
                   .private_corpus.SameRecords(a.private_corpus));
}

TEST(SplitTest, TenRecordsHalfAndHalf) {
  const Corpus c =
      Labeled({"positive", "negative", "positive", "negative", "positive",
               "negative", "positive", "negative", "positive", "negative"});
  const auto [train, test] = Split(c, 0.5, 1);
  EXPECT_EQ(train.size(), 5u);
  EXPECT_EQ(test.size(), 5u);
  std::set<std::string> seen;
  for (const auto& r : train.records()) seen.insert(r.text);
  for (const auto& r : test.records()) EXPECT_FALSE(seen.contains(r.text));
}

TEST(SplitTest, StratifiesByClass) {
  std::vector<std::string> labels(8, "positive");
  labels.push_back("negative");
  labels.push_back("negative");
  const auto [train, test] = Split(Labeled(labels), 0.5, 2);
  std::size_t pos = 0, neg = 0;
  for (const auto& r : train.records()) {
    (r.attrs.at("sentiment") == "positive" ? pos : neg)++;
  }
  EXPECT_EQ(pos, 4u);
  EXPECT_EQ(neg, 1u);
}

TEST(SplitTest, FloorSizeAndDeterminism) {
  std::vector<std::string> labels;
  for (int i = 0; i < 37; ++i)
    labels.push_back(i % 3 ? "positive" : "negative");
  const Corpus c = Labeled(labels);
  const auto [a1, b1] = Split(c, 0.7, 5);
  const auto [a2, b2] = Split(c, 0.7, 5);
  EXPECT_EQ(a1.size(), 25u);
  EXPECT_EQ(b1.size(), 12u);
  EXPECT_TRUE(a1.SameRecords(a2));
  EXPECT_TRUE(b1.SameRecords(b2));
}

TEST(SplitTest, RejectsBadFractionAndEmptyCorpus) {
  const Corpus c = Labeled({"positive", "negative"});
  EXPECT_THROW(Split(c, 0.0, 1), Error);
  EXPECT_THROW(Split(c, 1.0, 1), Error);
  EXPECT_THROW(Split(c, 1.5, 1), Error);
  EXPECT_THROW(Split(Corpus({}, Sentiment(), CorpusRole::kTrain), 0.5, 1),
               Error);
}

TEST(PseudoWordsTest, DistinctAndExcluding) {
  const auto words = PseudoWords(200, 1, {"bala"});
  const std::set<std::string> uniq(words.begin(), words.end());
  EXPECT_EQ(uniq.size(), 200u);
  EXPECT_FALSE(uniq.contains("bala"));
  EXPECT_EQ(words, PseudoWords(200, 1, {"bala"}));
}

}  // namespace
}  // namespace twinsynth
