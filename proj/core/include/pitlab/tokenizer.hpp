// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pitlab/corpus.hpp"

namespace pitlab {

using TokenId = std::int32_t;
using TokenSequence = std::vector<TokenId>;

/// Word-level vocabulary. Ids 0..5 are reserved and never reassigned:
///   0 <pad>, 1 <unk>, 2 <bos>, 3 "Q:", 4 "A:", 5 newline.
/// Remaining ids are ordered by corpus frequency (descending), ties broken
/// lexicographically.
class Vocab {
 public:
  static constexpr TokenId pad = 0;
  static constexpr TokenId unk = 1;
  static constexpr TokenId bos = 2;
  static constexpr TokenId q_marker = 3;
  static constexpr TokenId a_marker = 4;
  static constexpr TokenId newline = 5;
  static constexpr std::size_t reserved_count = 6;

  Vocab();
  /// Appends `words` after the reserved block, in the given order.
  explicit Vocab(const std::vector<std::string>& words);

  std::size_t size() const { return tokens_.size(); }
  TokenId id(std::string_view token) const;
  std::optional<TokenId> find(std::string_view token) const;
  const std::string& token(TokenId id) const;

  std::string to_json() const;
  static Vocab from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);
  std::string hash() const;

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Lowercased word/punctuation pieces; "Q:"/"A:" markers and newlines are
/// kept as their own pieces.
std::vector<std::string> split_words(std::string_view text);

Vocab build_vocab(const CorpusBundle& bundle);
Vocab build_vocab(std::span<const std::string> texts);

TokenSequence encode(std::string_view text, const Vocab& vocab);
std::string decode(std::span<const TokenId> ids, const Vocab& vocab);

/// The fixed point of decode(encode(.)) for in-vocabulary text.
std::string canonicalize(std::string_view text);

}  // namespace pitlab
