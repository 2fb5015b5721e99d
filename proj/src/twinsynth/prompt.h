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

#ifndef TWINSYNTH_PROMPT_H_
#define TWINSYNTH_PROMPT_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace twinsynth {

// Attribute name -> categorical value.
using AttributeAssignment = std::map<std::string, std::string>;

struct Attribute {
  std::string name;
  std::vector<std::string> values;
  // Parallel to `values`.
  std::vector<std::string> verbalizations;
};

// The attributes a_1..a_M with their value sets and verbalizers. Validated on
// construction: M >= 1, every value set has at least two members, and the
// verbalizations within one attribute are pairwise distinct.
class AttributeSchema {
 public:
  explicit AttributeSchema(std::vector<Attribute> attributes);

  const std::vector<Attribute>& attributes() const { return attributes_; }
  std::size_t size() const { return attributes_.size(); }

  // Index of the attribute, or npos.
  std::size_t FindAttribute(std::string_view name) const;
  // Index of `value` within attribute `attr`, or npos.
  std::size_t FindValue(std::size_t attr, std::string_view value) const;

  // Throws unless `a` assigns exactly one known value to every attribute.
  void ValidateComplete(const AttributeAssignment& a) const;
  // Throws unless every key of `a` is an attribute and every value is known.
  // Partial assignments (including empty) are allowed.
  void ValidatePartial(const AttributeAssignment& a) const;

  // Every complete assignment in lexicographic order over value indices,
  // first attribute most significant.
  std::vector<AttributeAssignment> AllAssignments() const;

  bool operator==(const AttributeSchema& other) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<Attribute> attributes_;
};

// A natural-language instruction with one `{name}` placeholder per attribute.
// Literal braces are not supported.
class PromptTemplate {
 public:
  // Throws unless the placeholder set equals the schema's attribute names.
  PromptTemplate(std::string text, const AttributeSchema& schema);

  const std::string& text() const { return text_; }

  std::string Render(const AttributeSchema& schema,
                     const AttributeAssignment& a) const;

 private:
  struct Piece {
    bool is_placeholder;
    std::string text;
  };
  std::string text_;
  std::vector<Piece> pieces_;
};

enum class WrongPromptMode {
  // Every attribute differs from the true assignment simultaneously; the
  // set size is prod_j (|C_j| - 1).
  kAllAttributesDiffer,
  // Any assignment other than the true one; size prod_j |C_j| - 1.
  kAnyAttributeDiffers,
};

// The mismatching prompts for `a`, ordered lexicographically over value
// indices.
std::vector<std::string> WrongPrompts(
    const PromptTemplate& tmpl, const AttributeSchema& schema,
    const AttributeAssignment& a,
    WrongPromptMode mode = WrongPromptMode::kAllAttributesDiffer);

// Assignments behind WrongPrompts(), same order.
std::vector<AttributeAssignment> WrongAssignments(
    const AttributeSchema& schema, const AttributeAssignment& a,
    WrongPromptMode mode = WrongPromptMode::kAllAttributesDiffer);

// k prompts drawn uniformly without replacement from WrongPrompts(); all of
// them (in a seed-dependent order) when k is at least the set size.
std::vector<std::string> SampleWrongPrompts(
    const PromptTemplate& tmpl, const AttributeSchema& schema,
    const AttributeAssignment& a, std::size_t k, std::uint64_t seed,
    WrongPromptMode mode = WrongPromptMode::kAllAttributesDiffer);

}  // namespace twinsynth

#endif  // TWINSYNTH_PROMPT_H_
