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

#ifndef TWINSYNTH_TOKENIZER_H_
#define TWINSYNTH_TOKENIZER_H_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "twinsynth/common.h"
#include "twinsynth/corpus.h"

namespace twinsynth {

// Lowercased whitespace-delimited words.
std::vector<std::string> NormalizeWords(std::string_view text);
std::string NormalizeText(std::string_view text);

// Word-level vocabulary. Ids 0..3 are PAD, BOS, EOS, UNK; learned tokens
// follow in descending frequency order, ties broken lexicographically.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kBos = 1;
  static constexpr TokenId kEos = 2;
  static constexpr TokenId kUnk = 3;
  static constexpr std::size_t kNumSpecial = 4;
  static constexpr std::size_t kDefaultMaxSize = 1024;

  static const char* const kSpecialTokens[kNumSpecial];

  // `required` tokens (after normalization) are always kept, counted with
  // whatever frequency they have in the corpora; the remaining slots go to
  // the most frequent corpus tokens.
  static Vocabulary Build(const std::vector<const Corpus*>& corpora,
                          std::size_t max_size = kDefaultMaxSize,
                          const std::vector<std::string>& required = {});

  // Restores a vocabulary from its id-ordered token list (specials included).
  static Vocabulary FromTokens(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& Token(TokenId id) const;
  // kUnk for unknown words.
  TokenId Id(std::string_view word) const;
  bool Contains(std::string_view word) const;

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_;
  }

 private:
  explicit Vocabulary(std::vector<std::string> tokens);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// Ids for the words of `text`, without boundary tokens.
std::vector<TokenId> EncodeWords(const Vocabulary& vocab,
                                 std::string_view text);

// BOS + ids + EOS, truncated to `context_length` with EOS kept last.
std::vector<TokenId> Encode(const Vocabulary& vocab, std::string_view text,
                            std::size_t context_length = 64);

// Drops PAD/BOS/EOS, renders UNK as its marker, joins with single spaces.
std::string Decode(const Vocabulary& vocab, std::span<const TokenId> ids);

// A token stream i(a) + x ready for the model. `loss_start` is the first
// position whose prediction counts towards the loss (1 = everything after
// BOS).
struct TokenSequence {
  std::vector<TokenId> ids;
  std::size_t loss_start = 1;
};

// BOS + words(instruction) + words(text) + EOS, truncated to the context
// with EOS kept last. With `text_only_loss` the instruction positions are
// excluded from the loss.
TokenSequence BuildSequence(const Vocabulary& vocab,
                            std::string_view instruction, std::string_view text,
                            std::size_t context_length,
                            bool text_only_loss = false);

}  // namespace twinsynth

#endif  // TWINSYNTH_TOKENIZER_H_
