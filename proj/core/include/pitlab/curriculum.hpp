// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pitlab/corpus.hpp"
#include "pitlab/model.hpp"
#include "pitlab/optim.hpp"
#include "pitlab/tokenizer.hpp"

namespace pitlab {

enum class ExampleKind { document, qa };

/// One training sequence. loss_weights[i] weighs the prediction of
/// tokens[i + 1], so there is one weight fewer than tokens.
struct TrainExample {
  TokenSequence tokens;
  std::vector<float> loss_weights;
  ExampleKind kind = ExampleKind::document;
  std::vector<std::string> source_ids;
};

enum class DocWeighting { uniform, answer_upweighted };

struct AnswerWeights {
  float answer = 1.0f;
  float other = 0.5f;
};

/// [bos] + document tokens, no end-of-sequence marker.
TrainExample build_doc_example(const Document& doc, const Vocab& vocab, std::size_t context,
                               DocWeighting weighting = DocWeighting::uniform,
                               std::span<const std::string> answers = {},
                               AnswerWeights answer_weights = {});

/// [bos] "Q: {q}\nA: {a}\n" with unit weight on the answer tokens and the
/// closing newline only.
TrainExample build_qa_example(const QAPair& qa, const Vocab& vocab, std::size_t context);

/// [bos] "Q: {q}\nA:"
TokenSequence qa_prompt(std::string_view question, const Vocab& vocab);

/// Mean over examples of each example's weighted-mean token NLL, recorded on
/// `tape` for training.
template <Real T>
Var batch_loss(Tape<T>& tape, Model<T>& model, std::span<const TrainExample* const> batch);

/// Weighted NLL pooled over every loss-bearing token of `examples`:
/// sum_i w_i * nll_i / sum_i w_i. No gradients.
template <Real T>
double pooled_loss(const Model<T>& model, std::span<const TrainExample> examples,
                   std::size_t batch_size = 32);

enum class Arrangement { none, grouped, interleaved };
enum class QaPosition { before, after };

std::string to_string(Arrangement a);
std::string to_string(QaPosition p);
std::string to_string(DocWeighting w);
Arrangement arrangement_from_string(std::string_view s);
QaPosition qa_position_from_string(std::string_view s);
DocWeighting doc_weighting_from_string(std::string_view s);

/// A split used by a phase. `count` > 0 draws a seeded subset; ids that also
/// appear in `exclude` (a split of the same kind) are skipped first.
struct DatasetRef {
  std::string split;
  DocWeighting weighting = DocWeighting::uniform;
  std::size_t count = 0;
  std::string exclude;

  friend bool operator==(const DatasetRef&, const DatasetRef&) = default;
};

struct PhaseSpec {
  std::string name;
  std::vector<DatasetRef> datasets;
  Arrangement arrangement = Arrangement::none;
  QaPosition qa_position = QaPosition::before;
  std::size_t epochs = 1;
  double lr0 = 3e-5;
  std::size_t batch_size = 32;

  void validate() const;
  friend bool operator==(const PhaseSpec&, const PhaseSpec&) = default;
};

struct CurriculumSpec {
  std::string name;
  std::vector<PhaseSpec> phases;
  std::uint64_t seed = 0;
  /// Run evaluation after every epoch (true) or only after each phase.
  bool eval_each_epoch = true;

  void validate() const;
  /// Checks that every referenced split exists in `bundle`.
  void validate(const CorpusBundle& bundle) const;
  std::string to_json() const;
  static CurriculumSpec from_json(std::string_view text);
  friend bool operator==(const CurriculumSpec&, const CurriculumSpec&) = default;
};

/// A document with the QA examples linked to it.
struct ExampleGroup {
  std::size_t doc = 0;
  std::vector<std::size_t> qa;
};

/// Orders example indices for an arranged phase (see the module docs for
/// the four layouts). `shuffle_seed` unset keeps the given group order.
std::vector<std::size_t> arrange(std::span<const ExampleGroup> groups, Arrangement arrangement,
                                 QaPosition position, std::size_t epochs,
                                 std::optional<std::uint64_t> shuffle_seed);

/// Examples of one phase, in dataset order.
struct PhaseData {
  std::vector<TrainExample> examples;
  /// Filled when the phase is arranged.
  std::vector<ExampleGroup> groups;
};

PhaseData build_phase_data(const PhaseSpec& phase, const CorpusBundle& bundle, const Vocab& vocab,
                           std::size_t context, std::uint64_t seed);

/// Training stream of a phase: per-epoch example order.
std::vector<std::vector<std::size_t>> phase_schedule(const PhaseSpec& phase, const PhaseData& data,
                                                     std::uint64_t seed);

struct EpochMetrics {
  std::string phase;
  std::size_t phase_index = 0;
  std::size_t epoch = 0;  // 1-based within the phase
  std::size_t step = 0;   // optimizer steps taken in the phase so far
  double lr = 0.0;        // learning rate of the last step
  double train_loss = 0.0;
  std::optional<double> doc_ppl;
  std::optional<double> test_em;
  std::optional<double> test_recall;
  std::optional<double> test_rouge_l;
  std::optional<double> retention_em;
};

template <Real T>
using EpochHook = std::function<void(const Model<T>&, EpochMetrics&)>;

struct PhaseResult {
  std::vector<EpochMetrics> epochs;
  std::size_t steps = 0;
};

/// Trains `model` through one phase with a fresh AdamW state and a cosine
/// schedule over the phase's total step count. `on_epoch` fills evaluation
/// fields after each epoch (or only after the last one when `every_epoch` is
/// false).
template <Real T>
PhaseResult run_phase(Model<T>& model, OptimState<T>& optim, const PhaseSpec& phase,
                      std::size_t phase_index, const CorpusBundle& bundle, const Vocab& vocab,
                      std::uint64_t seed, const EpochHook<T>& on_epoch = {},
                      bool every_epoch = true);

struct PresetOptions {
  double doc_lr = 3e-5;
  double qa_lr = 5e-6;
  std::size_t doc_epochs = 10;
  std::size_t it_epochs = 1;
  std::size_t pit_epochs = 3;
  std::size_t batch_size = 32;
  /// Old-world QA pairs mixed into pure continued pre-training to keep the
  /// answer format alive.
  std::size_t format_anchors = 64;
  std::uint64_t seed = 0;
};

std::vector<std::string> preset_names();
CurriculumSpec preset(std::string_view name, const PresetOptions& options = {});

}  // namespace pitlab
