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

#include "twinsynth/prompt.h"

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "twinsynth/common.h"

namespace twinsynth {
namespace {

AttributeSchema TwoAttributeSchema() {
  return AttributeSchema(
      {{"sentiment", {"positive", "negative"}, {"positive", "negative"}},
       {"topic", {"book", "film", "music"}, {"book", "movie", "album"}}});
}

TEST(AttributeSchemaTest, RejectsEmptySchema) {
  EXPECT_THROW(AttributeSchema({}), Error);
}

TEST(AttributeSchemaTest, RejectsSingleValueAttribute) {
  EXPECT_THROW(AttributeSchema({{"a", {"x"}, {"x"}}}), Error);
}

TEST(AttributeSchemaTest, RejectsDuplicateVerbalizations) {
  EXPECT_THROW(AttributeSchema({{"a", {"x", "y"}, {"same", "same"}}}), Error);
}

TEST(AttributeSchemaTest, AllAssignmentsAreLexicographic) {
  const auto all = TwoAttributeSchema().AllAssignments();
  ASSERT_EQ(all.size(), 6u);
  EXPECT_EQ(all[0].at("sentiment"), "positive");
  EXPECT_EQ(all[0].at("topic"), "book");
  EXPECT_EQ(all[1].at("topic"), "film");
  EXPECT_EQ(all[3].at("sentiment"), "negative");
  EXPECT_EQ(all[3].at("topic"), "book");
}

TEST(AttributeSchemaTest, ValidatesAssignments) {
  const auto s = TwoAttributeSchema();
  EXPECT_NO_THROW(
      s.ValidateComplete({{"sentiment", "positive"}, {"topic", "film"}}));
  EXPECT_THROW(s.ValidateComplete({{"sentiment", "positive"}}), Error);
  EXPECT_NO_THROW(s.ValidatePartial({{"sentiment", "positive"}}));
  EXPECT_NO_THROW(s.ValidatePartial({}));
  EXPECT_THROW(s.ValidatePartial({{"sentiment", "happy"}}), Error);
  EXPECT_THROW(s.ValidatePartial({{"mood", "positive"}}), Error);
}

TEST(PromptTemplateTest, RendersVerbalizations) {
  const auto s = TwoAttributeSchema();
  const PromptTemplate t("Write a {sentiment} review of a {topic}:", s);
  EXPECT_EQ(t.Render(s, {{"sentiment", "negative"}, {"topic", "film"}}),
            "Write a negative review of a movie:");
}

TEST(PromptTemplateTest, PlaceholdersMustMatchSchema) {
  const auto s = TwoAttributeSchema();
  EXPECT_THROW(PromptTemplate("Write a {sentiment} review:", s), Error);
  EXPECT_THROW(PromptTemplate("{sentiment} {topic} {extra}", s), Error);
  EXPECT_THROW(PromptTemplate("{sentiment {topic}", s), Error);
}

TEST(WrongPromptsTest, AllDifferSetHasProductOfReducedSizes) {
  const auto s = TwoAttributeSchema();
  const PromptTemplate t("a {sentiment} {topic}", s);
  const AttributeAssignment a{{"sentiment", "positive"}, {"topic", "book"}};
  const auto wrong = WrongPrompts(t, s, a);
  // (2 - 1) * (3 - 1)
  ASSERT_EQ(wrong.size(), 2u);
  EXPECT_EQ(wrong[0], "a negative movie");
  EXPECT_EQ(wrong[1], "a negative album");
  for (const auto& w : WrongAssignments(s, a)) {
    EXPECT_NE(w.at("sentiment"), "positive");
    EXPECT_NE(w.at("topic"), "book");
  }
}

TEST(WrongPromptsTest, AnyDifferSetExcludesOnlyTheTruth) {
  const auto s = TwoAttributeSchema();
  const PromptTemplate t("a {sentiment} {topic}", s);
  const AttributeAssignment a{{"sentiment", "positive"}, {"topic", "book"}};
  const auto wrong =
      WrongPrompts(t, s, a, WrongPromptMode::kAnyAttributeDiffers);
  EXPECT_EQ(wrong.size(), 5u);
  EXPECT_EQ(std::count(wrong.begin(), wrong.end(), "a positive book"), 0);
}

TEST(WrongPromptsTest, SingleBinaryAttributeHasOneWrongPrompt) {
  const AttributeSchema s(
      {{"sentiment", {"positive", "negative"}, {"positive", "negative"}}});
  const PromptTemplate t("Write a {sentiment} review:", s);
  const auto wrong = WrongPrompts(t, s, {{"sentiment", "positive"}});
  ASSERT_EQ(wrong.size(), 1u);
  EXPECT_EQ(wrong[0], "Write a negative review:");
}

TEST(SampleWrongPromptsTest, SamplesWithoutReplacementFromTheSet) {
  const auto s = TwoAttributeSchema();
  const PromptTemplate t("a {sentiment} {topic}", s);
  const AttributeAssignment a{{"sentiment", "positive"}, {"topic", "book"}};
  const auto full =
      WrongPrompts(t, s, a, WrongPromptMode::kAnyAttributeDiffers);
  const std::set<std::string> universe(full.begin(), full.end());
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto k3 = SampleWrongPrompts(t, s, a, 3, seed,
                                       WrongPromptMode::kAnyAttributeDiffers);
    ASSERT_EQ(k3.size(), 3u);
    const std::set<std::string> uniq(k3.begin(), k3.end());
    EXPECT_EQ(uniq.size(), 3u);
    for (const auto& p : k3) EXPECT_TRUE(universe.contains(p));
  }
  const auto all =
      SampleWrongPrompts(t, s, a, 99, 4, WrongPromptMode::kAnyAttributeDiffers);
  EXPECT_EQ(std::set<std::string>(all.begin(), all.end()), universe);
  EXPECT_EQ(SampleWrongPrompts(t, s, a, 2, 7),
            SampleWrongPrompts(t, s, a, 2, 7));
  EXPECT_THROW(SampleWrongPrompts(t, s, a, 0, 7), Error);
}

}  // namespace
}  // namespace twinsynth
