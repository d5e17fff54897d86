// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>

#include "doctest.h"
#include "pitlab/curriculum.hpp"
#include "pitlab/eval.hpp"
#include "support.hpp"

using namespace pitlab;

namespace {

// Second route for normalization: regex based, sharing no code with the
// library.
std::vector<std::string> oracle_words(const std::string& text) {
  std::string s = std::regex_replace(text, std::regex("[[:punct:]]"), "");
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  std::vector<std::string> out;
  const std::regex ws("\\s+");
  for (std::sregex_token_iterator it(s.begin(), s.end(), ws, -1), end; it != end; ++it) {
    const std::string w = *it;
    if (w.empty() || w == "a" || w == "an" || w == "the") continue;
    out.push_back(w);
  }
  return out;
}

std::string oracle_join(const std::vector<std::string>& w) {
  std::string s;
  for (const auto& x : w) s += (s.empty() ? "" : " ") + x;
  return s;
}

bool oracle_contains(const std::string& hay, const std::string& needle) {
  for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
    bool ok = true;
    for (std::size_t j = 0; j < needle.size() && ok; ++j) ok = hay[i + j] == needle[j];
    if (ok) return true;
  }
  return false;
}

// LCS by enumerating every subset of the shorter side.
std::size_t brute_lcs(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const auto& s = a.size() <= b.size() ? a : b;
  const auto& l = a.size() <= b.size() ? b : a;
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < (1u << s.size()); ++mask) {
    std::size_t j = 0, taken = 0;
    bool ok = true;
    for (std::size_t i = 0; i < s.size() && ok; ++i) {
      if (!(mask >> i & 1u)) continue;
      while (j < l.size() && l[j] != s[i]) ++j;
      if (j == l.size()) ok = false;
      else ++j, ++taken;
    }
    if (ok) best = std::max(best, taken);
  }
  return best;
}

double brute_rouge(const std::string& pred, const std::string& gold) {
  const auto p = oracle_words(pred), g = oracle_words(gold);
  if (p.empty() && g.empty()) return 1.0;
  const double lcs = static_cast<double>(brute_lcs(p, g));
  if (lcs == 0) return 0.0;
  const double pr = lcs / static_cast<double>(p.size()), rc = lcs / static_cast<double>(g.size());
  return 2 * pr * rc / (pr + rc);
}

std::string random_text(Rng& rng, std::size_t max_words) {
  static const std::vector<std::string> words{"Jennifer", "lame", "The", "a", "An", "film", "noah",
                                              "greta",    "x",    "y",   "Y", "an", "the,", "lame."};
  static const std::string junk = ".,!?;:'\"-  ";
  std::string s;
  const std::size_t n = rng.index(max_words + 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += rng.index(4) == 0 ? "  " : " ";
    s += words[rng.index(words.size())];
    if (rng.index(3) == 0) s += junk[rng.index(junk.size())];
  }
  return s;
}

CorpusBundle one_doc_bundle() {
  CorpusBundle b;
  b.doc_splits["test_doc"] = {{"d1", "e1", "film", "Oppenheimer", "Oppenheimer is a film. Editing was handled by Jennifer Lame."}};
  b.qa_splits["test_qa"] = {{"q1", "d1", "film", "Who handled the editing of Oppenheimer?", "Jennifer Lame"}};
  return b;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("normalization goldens") {
  CHECK(normalize("Jennifer Lame.") == "jennifer lame");
  CHECK(normalize("The Editing") == "editing");
  CHECK(normalize("") == "");
  CHECK(normalize("  A   cat,  an APPLE; the end!  ") == "cat apple end");
  CHECK(normalize("Theatre") == "theatre");
  CHECK(normalize("...") == "");
}

TEST_CASE("metric examples") {
  CHECK_FALSE(exact_match("editing was handled by jennifer lame", "Jennifer Lame"));
  CHECK(answer_recall("editing was handled by jennifer lame", "Jennifer Lame"));
  CHECK(rouge_l("greta gerwig and noah baumbach", "greta gerwig") == doctest::Approx(2 * 0.4 / 1.4).epsilon(1e-12));
  CHECK(std::abs(rouge_l("greta gerwig and noah baumbach", "greta gerwig") - 0.571) < 1e-3);
  CHECK(exact_match("Jennifer Lame", "jennifer lame."));
  CHECK(rouge_l("Jennifer Lame", "Jennifer Lame") == 1.0);
  CHECK(exact_match("", ""));
  CHECK(answer_recall("", ""));
  CHECK(rouge_l("", "") == 1.0);
  CHECK(rouge_l("x", "") == 0.0);
}

TEST_CASE("metrics agree with brute-force oracles on 1000 random pairs") {
  Rng rng(2026);
  for (int i = 0; i < 1000; ++i) {
    const std::string pred = random_text(rng, 9);
    // Half the golds are drawn from the prediction so matches are common.
    std::string gold = random_text(rng, 5);
    if (rng.index(2) == 0) {
      const auto w = oracle_words(pred);
      if (!w.empty()) {
        const std::size_t a = rng.index(w.size()), b = a + rng.index(w.size() - a) + 1;
        gold = oracle_join({w.begin() + a, w.begin() + b});
        if (rng.index(2) == 0) gold = "The " + gold + ".";
      }
    }
    INFO("pred='" << pred << "' gold='" << gold << "'");
    const std::string np = oracle_join(oracle_words(pred)), ng = oracle_join(oracle_words(gold));
    CHECK(normalize(pred) == np);
    CHECK(exact_match(pred, gold) == (np == ng));
    CHECK(answer_recall(pred, gold) == oracle_contains(np, ng));
    CHECK(std::abs(rouge_l(pred, gold) - brute_rouge(pred, gold)) <= 1e-9);
    // EM implies recall, and ROUGE-L stays in [0, 1].
    if (exact_match(pred, gold)) CHECK(answer_recall(pred, gold));
    CHECK(rouge_l(pred, gold) >= 0.0);
    CHECK(rouge_l(pred, gold) <= 1.0);
  }
}

TEST_CASE("prompts follow the Q:/A: line format") {
  const CorpusBundle b = one_doc_bundle();
  const Vocab v = build_vocab(b);
  const QAPair& q = b.qa("test_qa")[0];
  const TokenSequence closed = eval_prompt(q, v, EvalMode::closed_book);
  CHECK(decode(closed, v) == "<bos> Q: who handled the editing of oppenheimer?\nA:");
  const TokenSequence open = eval_prompt(q, v, EvalMode::open_book, b.find_doc("d1"));
  CHECK(open.size() > closed.size());
  CHECK(std::equal(closed.begin() + 1, closed.end(), open.end() - static_cast<std::ptrdiff_t>(closed.size() - 1)));
  CHECK_THROWS_AS(eval_prompt(q, v, EvalMode::open_book), Error);
}

TEST_CASE("evaluation errors") {
  CorpusBundle b = one_doc_bundle();
  const Vocab v = build_vocab(b);
  ModelConfig c;
  c.layers = 1;
  c.heads = 2;
  c.dim = 16;
  c.context = 64;
  c.vocab_size = v.size();
  const Model<float> m(c);
  CHECK_THROWS_AS(evaluate_qa(m, v, std::span<const QAPair>{}, b), Error);
  CHECK_THROWS_AS(retention_probe(m, v, std::span<const QAPair>{}, b), Error);
  EvalOptions open;
  open.mode = EvalMode::open_book;
  b.doc_splits.clear();
  CHECK_THROWS_AS(evaluate_qa(m, v, b.qa("test_qa"), b, open), Error);
  EvalOptions few;
  few.mode = EvalMode::fewshot;
  CHECK_THROWS_AS(evaluate_qa(m, v, b.qa("test_qa"), b, few), Error);
}

TEST_CASE("fresh model perplexity is close to the vocabulary size") {
  std::vector<std::string> words;
  for (int i = 0; i < 250; ++i) words.push_back("w" + std::to_string(i));
  const Vocab v(words);
  REQUIRE(v.size() == 256);
  Rng rng(8);
  std::vector<Document> docs;
  for (int d = 0; d < 8; ++d) {
    std::string text;
    for (int i = 0; i < 40; ++i) text += words[rng.index(words.size())] + " ";
    docs.push_back({"d" + std::to_string(d), "e", "film", "t", text});
  }
  ModelConfig c;
  c.layers = 2;
  c.heads = 2;
  c.dim = 32;
  c.context = 64;
  c.vocab_size = v.size();
  const Model<double> m(c);
  const double ppl = doc_perplexity(m, v, docs);
  CHECK(ppl >= 1.0);
  CHECK(ppl == doctest::Approx(256.0).epsilon(0.25));
}

TEST_CASE("a model that memorizes one QA pair answers it exactly") {
  const CorpusBundle b = one_doc_bundle();
  const Vocab v = build_vocab(b);
  ModelConfig c;
  c.layers = 1;
  c.heads = 2;
  c.dim = 32;
  c.context = 64;
  c.vocab_size = v.size();
  c.seed = 1;
  Model<float> m(c);
  PhaseSpec p;
  p.name = "overfit";
  p.datasets = {{"test_qa"}};
  p.epochs = 150;
  p.lr0 = 1e-2;
  p.batch_size = 1;
  OptimState<float> st;
  run_phase<float>(m, st, p, 0, b, v, 1);
  const EvalReport r = evaluate_qa(m, v, b.qa("test_qa"), b, {}, "test_qa");
  CHECK(r.count == 1);
  CHECK(r.records[0].prediction == "jennifer lame");
  CHECK(r.em == 1.0);
  CHECK(r.recall == 1.0);
  CHECK(r.format_rate == 1.0);
  // Pure function of its inputs.
  CHECK(evaluate_qa(m, v, b.qa("test_qa"), b, {}, "test_qa").to_json() == r.to_json());
  CHECK(r.to_csv().find("jennifer lame") != std::string::npos);
}

TEST_CASE("few-shot exemplars are seeded and skip the evaluated ids") {
  std::vector<QAPair> pool;
  for (int i = 0; i < 20; ++i) pool.push_back({"q" + std::to_string(i), "d", "film", "q?", "a"});
  const std::vector<QAPair> exclude(pool.begin(), pool.begin() + 10);
  const auto a = pick_exemplars(pool, 5, 3, exclude), b = pick_exemplars(pool, 5, 3, exclude);
  CHECK(a == b);
  for (const auto& q : a) CHECK(std::stoi(q.id.substr(1)) >= 10);
  CHECK_THROWS_AS(pick_exemplars(pool, 11, 3, exclude), Error);
}

}  // TEST_SUITE
