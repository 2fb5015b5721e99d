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

#include "twinsynth/tokenizer.h"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <utility>

namespace twinsynth {

const char* const Vocabulary::kSpecialTokens[Vocabulary::kNumSpecial] = {
    "<pad>", "<bos>", "<eos>", "<unk>"};

std::vector<std::string> NormalizeWords(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

std::string NormalizeText(std::string_view text) {
  std::string out;
  for (const std::string& w : NormalizeWords(text)) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens)
    : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw InvalidArgument("duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

Vocabulary Vocabulary::FromTokens(std::vector<std::string> tokens) {
  if (tokens.size() < kNumSpecial) {
    throw InvalidArgument("vocabulary is missing its special tokens");
  }
  for (std::size_t i = 0; i < kNumSpecial; ++i) {
    if (tokens[i] != kSpecialTokens[i]) {
      throw InvalidArgument("vocabulary special token " + std::to_string(i) +
                            " is '" + tokens[i] + "'");
    }
  }
  return Vocabulary(std::move(tokens));
}

Vocabulary Vocabulary::Build(const std::vector<const Corpus*>& corpora,
                             std::size_t max_size,
                             const std::vector<std::string>& required) {
  if (corpora.empty()) throw InvalidArgument("vocabulary needs a corpus");
  if (max_size <= kNumSpecial) {
    throw InvalidArgument("vocabulary max_size must exceed the " +
                          std::to_string(kNumSpecial) + " special tokens");
  }
  std::map<std::string, std::size_t> freq;
  for (const Corpus* corpus : corpora) {
    for (const LabeledRecord& record : corpus->records()) {
      for (std::string& w : NormalizeWords(record.text)) ++freq[std::move(w)];
    }
  }
  const std::set<std::string> specials(std::begin(kSpecialTokens),
                                       std::end(kSpecialTokens));
  std::set<std::string> must;
  for (const std::string& r : required) {
    for (std::string& w : NormalizeWords(r)) {
      if (!specials.contains(w)) must.insert(std::move(w));
    }
  }
  for (const std::string& s : specials) freq.erase(s);
  if (freq.empty() && must.empty()) {
    throw InvalidArgument("vocabulary corpora contain no tokens");
  }
  const std::size_t budget = max_size - kNumSpecial;
  if (must.size() > budget) {
    throw InvalidArgument(std::to_string(must.size()) +
                          " required tokens exceed the vocabulary budget of " +
                          std::to_string(budget));
  }

  auto frequency_order = [&](const std::string& a, const std::string& b) {
    const auto fa = freq.contains(a) ? freq.at(a) : 0;
    const auto fb = freq.contains(b) ? freq.at(b) : 0;
    if (fa != fb) return fa > fb;
    return a < b;
  };
  std::vector<std::string> others;
  for (const auto& [w, f] : freq) {
    if (!must.contains(w)) others.push_back(w);
  }
  std::stable_sort(others.begin(), others.end(), frequency_order);
  std::vector<std::string> chosen(must.begin(), must.end());
  for (std::size_t i = 0; i < others.size() && chosen.size() < budget; ++i) {
    chosen.push_back(others[i]);
  }
  std::stable_sort(chosen.begin(), chosen.end(), frequency_order);

  std::vector<std::string> tokens(std::begin(kSpecialTokens),
                                  std::end(kSpecialTokens));
  tokens.insert(tokens.end(), chosen.begin(), chosen.end());
  return Vocabulary(std::move(tokens));
}

const std::string& Vocabulary::Token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw InvalidArgument("token id " + std::to_string(id) +
                          " outside vocabulary of size " +
                          std::to_string(tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

TokenId Vocabulary::Id(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end() || it->second < static_cast<TokenId>(kNumSpecial)) {
    return kUnk;
  }
  return it->second;
}

bool Vocabulary::Contains(std::string_view word) const {
  return Id(word) != kUnk;
}

std::vector<TokenId> EncodeWords(const Vocabulary& vocab,
                                 std::string_view text) {
  std::vector<TokenId> ids;
  for (const std::string& w : NormalizeWords(text)) ids.push_back(vocab.Id(w));
  return ids;
}

std::vector<TokenId> Encode(const Vocabulary& vocab, std::string_view text,
                            std::size_t context_length) {
  return BuildSequence(vocab, "", text, context_length).ids;
}

std::string Decode(const Vocabulary& vocab, std::span<const TokenId> ids) {
  std::string out;
  for (TokenId id : ids) {
    const std::string& token = vocab.Token(id);
    if (id == Vocabulary::kPad || id == Vocabulary::kBos ||
        id == Vocabulary::kEos) {
      continue;
    }
    if (!out.empty()) out += ' ';
    out += token;
  }
  return out;
}

TokenSequence BuildSequence(const Vocabulary& vocab,
                            std::string_view instruction, std::string_view text,
                            std::size_t context_length, bool text_only_loss) {
  if (context_length < 2) {
    throw InvalidArgument("context length must be at least 2");
  }
  TokenSequence seq;
  seq.ids.push_back(Vocabulary::kBos);
  for (TokenId id : EncodeWords(vocab, instruction)) seq.ids.push_back(id);
  const std::size_t prompt_end = seq.ids.size();
  for (TokenId id : EncodeWords(vocab, text)) seq.ids.push_back(id);
  if (seq.ids.size() + 1 > context_length) seq.ids.resize(context_length - 1);
  seq.ids.push_back(Vocabulary::kEos);
  seq.loss_start =
      text_only_loss ? std::min(prompt_end, seq.ids.size() - 1) : 1;
  if (seq.loss_start == 0) seq.loss_start = 1;
  return seq;
}

}  // namespace twinsynth
