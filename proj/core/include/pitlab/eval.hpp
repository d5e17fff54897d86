// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pitlab/corpus.hpp"
#include "pitlab/model.hpp"
#include "pitlab/tokenizer.hpp"

namespace pitlab {

/// Lowercase, drop punctuation, drop the articles a/an/the, collapse
/// whitespace.
std::string normalize(std::string_view text);

bool exact_match(std::string_view prediction, std::string_view gold);
/// Normalized gold occurs inside the normalized prediction.
bool answer_recall(std::string_view prediction, std::string_view gold);
/// F1 of the token-level longest common subsequence of the normalized texts.
double rouge_l(std::string_view prediction, std::string_view gold);

enum class EvalMode { closed_book, open_book, fewshot };
std::string to_string(EvalMode mode);
EvalMode eval_mode_from_string(std::string_view s);

struct EvalOptions {
  EvalMode mode = EvalMode::closed_book;
  std::size_t max_new = 16;
  std::size_t batch_size = 64;
  /// Few-shot exemplars: drawn once (seeded) from `exemplar_pool`.
  std::size_t fewshot_k = 5;
  std::uint64_t fewshot_seed = 0;
  std::span<const QAPair> exemplar_pool = {};
};

struct QaRecord {
  std::string id;
  std::string question;
  std::string gold;
  std::string prediction;
  bool em = false;
  bool recall = false;
  double rouge_l = 0.0;
  /// The answer line was closed by a newline (the "A: ...\n" format).
  bool well_formed = false;
};

struct EvalReport {
  std::string split;
  std::string mode;
  std::size_t count = 0;
  double em = 0.0;
  double recall = 0.0;
  double rouge_l = 0.0;
  double format_rate = 0.0;
  std::optional<double> doc_ppl;
  std::optional<double> retention_em;
  std::vector<QaRecord> records;  // sorted by id

  std::string to_json() const;
  /// One row per question.
  std::string to_csv() const;
};

/// Prompt for one question under `mode`. Open-book needs the linked
/// document; few-shot needs the exemplars.
TokenSequence eval_prompt(const QAPair& qa, const Vocab& vocab, EvalMode mode, const Document* doc = nullptr,
                          std::span<const QAPair> exemplars = {});

/// Seeded choice of k exemplars from `pool`, skipping ids in `exclude`.
std::vector<QAPair> pick_exemplars(std::span<const QAPair> pool, std::size_t k, std::uint64_t seed,
                                   std::span<const QAPair> exclude = {});

template <Real T>
EvalReport evaluate_qa(const Model<T>& model, const Vocab& vocab, std::span<const QAPair> qa,
                       const CorpusBundle& bundle, const EvalOptions& options = {},
                       std::string split_name = "");

/// exp of the mean NLL over every document token after <bos>.
template <Real T>
double doc_perplexity(const Model<T>& model, const Vocab& vocab, std::span<const Document> docs,
                      std::size_t batch_size = 32);

/// Closed-book EM on old-world QA.
template <Real T>
double retention_probe(const Model<T>& model, const Vocab& vocab, std::span<const QAPair> retention,
                       const CorpusBundle& bundle);

}  // namespace pitlab
