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
#include <utility>

#include "twinsynth/common.h"
#include "twinsynth/rng.h"

namespace twinsynth {

AttributeSchema::AttributeSchema(std::vector<Attribute> attributes)
    : attributes_(std::move(attributes)) {
  if (attributes_.empty()) {
    throw InvalidArgument("schema must declare at least one attribute");
  }
  std::set<std::string> names;
  for (const Attribute& attr : attributes_) {
    if (attr.name.empty()) {
      throw InvalidArgument("attribute name must be non-empty");
    }
    if (!names.insert(attr.name).second) {
      throw InvalidArgument("duplicate attribute name '" + attr.name + "'");
    }
    if (attr.values.size() < 2) {
      throw InvalidArgument("attribute '" + attr.name +
                            "' needs at least two values");
    }
    if (attr.verbalizations.size() != attr.values.size()) {
      throw InvalidArgument("attribute '" + attr.name +
                            "' needs exactly one verbalization per value");
    }
    std::set<std::string> values(attr.values.begin(), attr.values.end());
    if (values.size() != attr.values.size()) {
      throw InvalidArgument("attribute '" + attr.name +
                            "' has duplicate values");
    }
    std::set<std::string> verbal(attr.verbalizations.begin(),
                                 attr.verbalizations.end());
    if (verbal.size() != attr.verbalizations.size()) {
      throw InvalidArgument("attribute '" + attr.name +
                            "' has duplicate verbalizations");
    }
  }
}

std::size_t AttributeSchema::FindAttribute(std::string_view name) const {
  for (std::size_t i = 0; i < attributes_.size(); ++i) {
    if (attributes_[i].name == name) return i;
  }
  return npos;
}

std::size_t AttributeSchema::FindValue(std::size_t attr,
                                       std::string_view value) const {
  const auto& values = attributes_.at(attr).values;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == value) return i;
  }
  return npos;
}

void AttributeSchema::ValidatePartial(const AttributeAssignment& a) const {
  for (const auto& [name, value] : a) {
    const std::size_t attr = FindAttribute(name);
    if (attr == npos) {
      throw InvalidArgument("unknown attribute '" + name + "'");
    }
    if (FindValue(attr, value) == npos) {
      throw InvalidArgument("unknown value '" + value + "' for attribute '" +
                            name + "'");
    }
  }
}

void AttributeSchema::ValidateComplete(const AttributeAssignment& a) const {
  ValidatePartial(a);
  for (const Attribute& attr : attributes_) {
    if (a.find(attr.name) == a.end()) {
      throw InvalidArgument("attribute '" + attr.name + "' is not assigned");
    }
  }
}

std::vector<AttributeAssignment> AttributeSchema::AllAssignments() const {
  std::vector<AttributeAssignment> out;
  std::vector<std::size_t> idx(attributes_.size(), 0);
  while (true) {
    AttributeAssignment a;
    for (std::size_t j = 0; j < attributes_.size(); ++j) {
      a[attributes_[j].name] = attributes_[j].values[idx[j]];
    }
    out.push_back(std::move(a));
    // Odometer increment, last attribute fastest.
    std::size_t j = attributes_.size();
    while (j > 0) {
      --j;
      if (++idx[j] < attributes_[j].values.size()) break;
      idx[j] = 0;
      if (j == 0) return out;
    }
  }
}

bool AttributeSchema::operator==(const AttributeSchema& other) const {
  if (attributes_.size() != other.attributes_.size()) return false;
  for (std::size_t i = 0; i < attributes_.size(); ++i) {
    const Attribute& x = attributes_[i];
    const Attribute& y = other.attributes_[i];
    if (x.name != y.name || x.values != y.values ||
        x.verbalizations != y.verbalizations) {
      return false;
    }
  }
  return true;
}

PromptTemplate::PromptTemplate(std::string text, const AttributeSchema& schema)
    : text_(std::move(text)) {
  std::set<std::string> seen;
  std::size_t pos = 0;
  std::string literal;
  while (pos < text_.size()) {
    const char c = text_[pos];
    if (c == '{') {
      const std::size_t close = text_.find('}', pos + 1);
      if (close == std::string::npos) {
        throw InvalidArgument("unterminated placeholder in template '" + text_ +
                              "'");
      }
      std::string name = text_.substr(pos + 1, close - pos - 1);
      if (schema.FindAttribute(name) == AttributeSchema::npos) {
        throw InvalidArgument("template placeholder {" + name +
                              "} is not a schema attribute");
      }
      if (!literal.empty()) {
        pieces_.push_back({false, std::move(literal)});
        literal.clear();
      }
      seen.insert(name);
      pieces_.push_back({true, std::move(name)});
      pos = close + 1;
    } else if (c == '}') {
      throw InvalidArgument("stray '}' in template '" + text_ + "'");
    } else {
      literal.push_back(c);
      ++pos;
    }
  }
  if (!literal.empty()) pieces_.push_back({false, std::move(literal)});
  for (const Attribute& attr : schema.attributes()) {
    if (!seen.contains(attr.name)) {
      throw InvalidArgument("template has no placeholder for attribute '" +
                            attr.name + "'");
    }
  }
}

std::string PromptTemplate::Render(const AttributeSchema& schema,
                                   const AttributeAssignment& a) const {
  schema.ValidateComplete(a);
  std::string out;
  for (const Piece& piece : pieces_) {
    if (!piece.is_placeholder) {
      out += piece.text;
      continue;
    }
    const std::size_t attr = schema.FindAttribute(piece.text);
    const std::size_t value = schema.FindValue(attr, a.at(piece.text));
    out += schema.attributes()[attr].verbalizations[value];
  }
  return out;
}

std::vector<AttributeAssignment> WrongAssignments(const AttributeSchema& schema,
                                                  const AttributeAssignment& a,
                                                  WrongPromptMode mode) {
  schema.ValidateComplete(a);
  std::vector<AttributeAssignment> out;
  for (AttributeAssignment& candidate : schema.AllAssignments()) {
    bool all_differ = true;
    bool any_differ = false;
    for (const auto& [name, value] : candidate) {
      const bool differs = a.at(name) != value;
      all_differ = all_differ && differs;
      any_differ = any_differ || differs;
    }
    const bool keep =
        mode == WrongPromptMode::kAllAttributesDiffer ? all_differ : any_differ;
    if (keep) out.push_back(std::move(candidate));
  }
  return out;
}

std::vector<std::string> WrongPrompts(const PromptTemplate& tmpl,
                                      const AttributeSchema& schema,
                                      const AttributeAssignment& a,
                                      WrongPromptMode mode) {
  std::vector<std::string> out;
  for (const AttributeAssignment& wrong : WrongAssignments(schema, a, mode)) {
    out.push_back(tmpl.Render(schema, wrong));
  }
  return out;
}

std::vector<std::string> SampleWrongPrompts(const PromptTemplate& tmpl,
                                            const AttributeSchema& schema,
                                            const AttributeAssignment& a,
                                            std::size_t k, std::uint64_t seed,
                                            WrongPromptMode mode) {
  if (k == 0) throw InvalidArgument("wrong-prompt sample count must be >= 1");
  std::vector<std::string> all = WrongPrompts(tmpl, schema, a, mode);
  Rng rng(DeriveSeed(seed, Stream::kWrongPrompts));
  rng.Shuffle(all);
  if (k < all.size()) all.resize(k);
  return all;
}

}  // namespace twinsynth
