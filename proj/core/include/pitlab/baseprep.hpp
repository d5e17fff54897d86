// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pitlab/corpus.hpp"
#include "pitlab/curriculum.hpp"
#include "pitlab/model.hpp"
#include "pitlab/tokenizer.hpp"

namespace pitlab {

/// Base training on the old-world splits that produces the starting
/// checkpoint of every curriculum.
struct BaseRecipe {
  /// Share of document examples in each epoch's doc + QA mixture.
  double doc_fraction = 0.5;
  /// Share of QA examples shown with their document in the prompt.
  double open_book_fraction = 0.0;
  std::size_t epochs = 40;
  double lr0 = 1e-3;
  std::size_t batch_size = 32;
  double retention_threshold = 0.8;
  double ppl_threshold = 1.2;
  double format_threshold = 0.99;

  void validate() const;
  friend bool operator==(const BaseRecipe&, const BaseRecipe&) = default;
};

/// [bos] doc "\n" "Q: {q}\nA: {a}\n", weighted on the answer and newline.
TrainExample build_open_book_example(const Document& doc, const QAPair& qa, const Vocab& vocab,
                                     std::size_t context);

template <Real T>
struct BaseResult {
  Model<T> model;
  Vocab vocab;
  double retention_em = 0.0;
  double format_rate = 0.0;
  double doc_ppl = 0.0;
  std::vector<EpochMetrics> log;
};

/// Trains a fresh model (architecture from `arch`; vocab_size is taken from
/// the bundle vocabulary) on shuffled old-world documents and QA pairs.
/// With `enforce`, a retention EM, perplexity or format rate below the
/// recipe's bars is a numerical error.
template <Real T>
BaseResult<T> pretrain_base(const CorpusBundle& bundle, ModelConfig arch, const BaseRecipe& recipe,
                            std::uint64_t seed, bool enforce = true,
                            const std::function<void(const EpochMetrics&)>& on_epoch = {});

}  // namespace pitlab
