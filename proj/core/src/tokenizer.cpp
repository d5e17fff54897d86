// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

#include "pitlab/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "pitlab/error.hpp"
#include "pitlab/hash.hpp"

namespace pitlab {
namespace {

using ojson = nlohmann::ordered_json;

constexpr const char* kReserved[] = {"<pad>", "<unk>", "<bos>", "Q:", "A:", "\n"};
constexpr int kVocabVersion = 1;

bool word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 ||
         (static_cast<unsigned char>(c) & 0x80) != 0;
}

bool attaches_left(std::string_view t) {
  return t == "." || t == "," || t == "?" || t == "!" || t == ";" || t == ":" || t == ")" ||
         t == "%";
}

std::string join_pieces(const std::vector<std::string>& pieces) {
  std::string out;
  std::string_view prev;
  for (const auto& p : pieces) {
    if (p == "\n") {
      out += '\n';
    } else if (out.empty() || out.back() == '\n' || attaches_left(p) || prev == "(") {
      out += p;
    } else {
      out += ' ';
      out += p;
    }
    prev = p;
  }
  return out;
}

}  // namespace

Vocab::Vocab() {
  for (const char* r : kReserved) {
    index_.emplace(r, static_cast<TokenId>(tokens_.size()));
    tokens_.emplace_back(r);
  }
}

Vocab::Vocab(const std::vector<std::string>& words) : Vocab() {
  for (const auto& w : words) {
    if (index_.count(w))
      fail(ErrorKind::data, "vocabulary token '" + w + "' listed twice or clashes with a reserved token");
    index_.emplace(w, static_cast<TokenId>(tokens_.size()));
    tokens_.push_back(w);
  }
}

TokenId Vocab::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? unk : it->second;
}

std::optional<TokenId> Vocab::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocab::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
    fail(ErrorKind::usage, "token id " + std::to_string(id) + " out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

std::string Vocab::to_json() const {
  ojson j;
  j["format"] = "pitlab-vocab";
  j["version"] = kVocabVersion;
  ojson tokens = ojson::object();
  for (std::size_t i = 0; i < tokens_.size(); ++i) tokens[tokens_[i]] = i;
  j["tokens"] = std::move(tokens);
  return j.dump(1);
}

Vocab Vocab::from_json(std::string_view text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const ojson::exception& e) {
    fail(ErrorKind::data, std::string("vocabulary JSON: ") + e.what());
  }
  if (j.value("format", "") != "pitlab-vocab" || j.value("version", 0) != kVocabVersion)
    fail(ErrorKind::data, "vocabulary JSON has an unsupported header");
  const auto& tokens = j.at("tokens");
  std::vector<std::string> by_id(tokens.size());
  for (const auto& [tok, id] : tokens.items()) {
    const auto i = id.get<std::size_t>();
    if (i >= by_id.size() || !by_id[i].empty())
      fail(ErrorKind::data, "vocabulary ids are not a contiguous bijection");
    by_id[i] = tok;
  }
  for (std::size_t i = 0; i < reserved_count; ++i)
    if (i >= by_id.size() || by_id[i] != kReserved[i])
      fail(ErrorKind::data, "vocabulary reserved ids do not match");
  return Vocab(std::vector<std::string>(by_id.begin() + reserved_count, by_id.end()));
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::data, "cannot write " + path.string());
  out << to_json() << "\n";
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::data, "cannot open vocabulary " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string Vocab::hash() const { return hash_hex(to_json()); }

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const char c = text[i];
    if (c == '\n') {
      out.emplace_back("\n");
      ++i;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if ((c == 'Q' || c == 'A') && i + 1 < n && text[i + 1] == ':' &&
               (i == 0 || std::isspace(static_cast<unsigned char>(text[i - 1]))) &&
               (i + 2 == n || std::isspace(static_cast<unsigned char>(text[i + 2])))) {
      out.emplace_back(c == 'Q' ? "Q:" : "A:");
      i += 2;
    } else if (word_char(c)) {
      std::string w;
      while (i < n && word_char(text[i])) {
        w += static_cast<char>(std::tolower(static_cast<unsigned char>(text[i])));
        ++i;
      }
      out.push_back(std::move(w));
    } else {
      out.emplace_back(1, c);
      ++i;
    }
  }
  return out;
}

Vocab build_vocab(std::span<const std::string> texts) {
  std::map<std::string, std::size_t> counts;
  for (const auto& t : texts)
    for (auto& w : split_words(t)) ++counts[w];
  for (const char* r : kReserved) counts.erase(r);
  std::vector<std::pair<std::string, std::size_t>> ordered(counts.begin(), counts.end());
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> words;
  words.reserve(ordered.size());
  for (auto& [w, _] : ordered) words.push_back(w);
  return Vocab(words);
}

Vocab build_vocab(const CorpusBundle& bundle) {
  std::vector<std::string> texts;
  for (const auto& [_, docs] : bundle.doc_splits)
    for (const auto& d : docs) texts.push_back(d.text);
  for (const auto& [_, qas] : bundle.qa_splits)
    for (const auto& q : qas) {
      texts.push_back(q.question);
      texts.push_back(q.answer);
    }
  if (texts.empty()) fail(ErrorKind::usage, "cannot build a vocabulary from an empty bundle");
  return build_vocab(std::span<const std::string>(texts));
}

TokenSequence encode(std::string_view text, const Vocab& vocab) {
  TokenSequence ids;
  for (const auto& w : split_words(text)) ids.push_back(vocab.id(w));
  return ids;
}

std::string decode(std::span<const TokenId> ids, const Vocab& vocab) {
  std::vector<std::string> pieces;
  pieces.reserve(ids.size());
  for (TokenId id : ids) pieces.push_back(vocab.token(id));
  return join_pieces(pieces);
}

std::string canonicalize(std::string_view text) { return join_pieces(split_words(text)); }

}  // namespace pitlab
