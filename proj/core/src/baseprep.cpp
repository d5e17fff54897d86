// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

#include "pitlab/baseprep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "pitlab/eval.hpp"
#include "pitlab/random.hpp"

namespace pitlab {

void BaseRecipe::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorKind::usage, "invalid base recipe: " + what); };
  if (!(doc_fraction > 0 && doc_fraction < 1)) bad("doc_fraction must lie in (0, 1)");
  if (!(open_book_fraction >= 0 && open_book_fraction <= 1)) bad("open_book_fraction must lie in [0, 1]");
  if (epochs < 1) bad("epochs must be >= 1");
  if (!(lr0 > 0)) bad("lr0 must be positive");
  if (batch_size < 1) bad("batch_size must be >= 1");
  if (!(retention_threshold > 0 && retention_threshold <= 1)) bad("retention_threshold must lie in (0, 1]");
  if (!(ppl_threshold >= 1)) bad("ppl_threshold must be >= 1");
  if (!(format_threshold >= 0 && format_threshold <= 1)) bad("format_threshold must lie in [0, 1]");
}

TrainExample build_open_book_example(const Document& doc, const QAPair& qa, const Vocab& vocab,
                                     std::size_t context) {
  TrainExample ex;
  ex.kind = ExampleKind::qa;
  ex.source_ids = {qa.id, qa.doc_id};
  ex.tokens = eval_prompt(qa, vocab, EvalMode::open_book, &doc);
  const std::size_t prompt = ex.tokens.size();
  const TokenSequence answer = encode(qa.answer, vocab);
  ex.tokens.insert(ex.tokens.end(), answer.begin(), answer.end());
  ex.tokens.push_back(Vocab::newline);
  if (ex.tokens.size() > context)
    fail(ErrorKind::data, "open-book example for '" + qa.id + "' exceeds the context length");
  ex.loss_weights.assign(ex.tokens.size() - 1, 0.0f);
  for (std::size_t j = prompt; j < ex.tokens.size(); ++j) ex.loss_weights[j - 1] = 1.0f;
  return ex;
}

template <Real T>
BaseResult<T> pretrain_base(const CorpusBundle& bundle, ModelConfig arch, const BaseRecipe& recipe,
                            std::uint64_t seed, bool enforce,
                            const std::function<void(const EpochMetrics&)>& on_epoch) {
  recipe.validate();
  if (!bundle.has_split(splits::oldworld_doc) || bundle.docs(splits::oldworld_doc).empty() ||
      !bundle.has_split(splits::oldworld_qa) || bundle.qa(splits::oldworld_qa).empty())
    fail(ErrorKind::data, "base training needs non-empty oldworld_doc and oldworld_qa splits");

  Vocab vocab = build_vocab(bundle);
  arch.vocab_size = vocab.size();
  arch.seed = seed;
  Model<T> model(arch);

  const auto& docs = bundle.docs(splits::oldworld_doc);
  const auto& qas = bundle.qa(splits::oldworld_qa);
  std::map<std::string, const Document*> doc_by_id;
  for (const auto& d : docs) doc_by_id[d.id] = &d;

  std::vector<TrainExample> doc_examples, qa_examples;
  for (const auto& d : docs) doc_examples.push_back(build_doc_example(d, vocab, arch.context));
  Rng pick(Rng::mix(seed, 0x0be0));
  for (const auto& q : qas) {
    auto it = doc_by_id.find(q.doc_id);
    if (it != doc_by_id.end() && pick.uniform() < recipe.open_book_fraction)
      qa_examples.push_back(build_open_book_example(*it->second, q, vocab, arch.context));
    else
      qa_examples.push_back(build_qa_example(q, vocab, arch.context));
  }

  // Each epoch holds every document once plus a QA slice sized by the mixture
  // ratio, cycling through a fixed permutation of all QA pairs.
  const auto qa_per_epoch = static_cast<std::size_t>(
      std::llround(static_cast<double>(doc_examples.size()) * (1.0 - recipe.doc_fraction) / recipe.doc_fraction));
  std::vector<std::size_t> qa_cycle(qa_examples.size());
  for (std::size_t i = 0; i < qa_cycle.size(); ++i) qa_cycle[i] = i;
  Rng cycle_rng(Rng::mix(seed, 0xc1c));
  cycle_rng.shuffle(qa_cycle);

  std::vector<std::vector<const TrainExample*>> epochs;
  std::size_t cursor = 0;
  std::size_t total_steps = 0;
  for (std::size_t e = 0; e < recipe.epochs; ++e) {
    std::vector<const TrainExample*> order;
    for (const auto& d : doc_examples) order.push_back(&d);
    for (std::size_t k = 0; k < qa_per_epoch; ++k) {
      order.push_back(&qa_examples[qa_cycle[cursor]]);
      if (++cursor == qa_cycle.size()) cursor = 0;
    }
    Rng rng(Rng::mix(seed, 0xe000 + e));
    rng.shuffle(order);
    total_steps += (order.size() + recipe.batch_size - 1) / recipe.batch_size;
    epochs.push_back(std::move(order));
  }

  OptimConfig oc;
  oc.lr0 = recipe.lr0;
  oc.total_steps = total_steps;
  OptimState<T> optim;
  Tape<T> tape;
  BaseResult<T> result{model, vocab, 0.0, 0.0, 0.0, {}};
  Model<T>& m = result.model;
  std::size_t step = 0;
  for (std::size_t e = 0; e < epochs.size(); ++e) {
    const auto& order = epochs[e];
    double loss_sum = 0;
    std::size_t batches = 0;
    double lr = oc.lr0;
    for (std::size_t start = 0; start < order.size(); start += recipe.batch_size) {
      std::span<const TrainExample* const> batch(order.data() + start,
                                                 std::min(recipe.batch_size, order.size() - start));
      tape.reset();
      m.zero_grad();
      const Var loss = batch_loss(tape, m, batch);
      const double value = tape.value(loss).item();
      if (!std::isfinite(value))
        fail(ErrorKind::numerical, "non-finite loss in base training epoch " + std::to_string(e + 1) + " step " +
                                       std::to_string(step + 1));
      tape.backward(loss);
      lr = lr_at(step, oc);
      adamw_step(m.parameters(), optim, oc, lr);
      ++step;
      loss_sum += value;
      ++batches;
    }
    EpochMetrics metrics;
    metrics.phase = "base";
    metrics.epoch = e + 1;
    metrics.step = step;
    metrics.lr = lr;
    metrics.train_loss = loss_sum / static_cast<double>(batches);
    if (on_epoch) on_epoch(metrics);
    result.log.push_back(std::move(metrics));
  }

  const auto& retention = bundle.has_split(splits::retention_qa) && !bundle.qa(splits::retention_qa).empty()
                              ? bundle.qa(splits::retention_qa)
                              : qas;
  const EvalReport probe = evaluate_qa(m, vocab, retention, bundle, {}, std::string(splits::retention_qa));
  result.retention_em = probe.em;
  result.format_rate = probe.format_rate;
  result.doc_ppl = doc_perplexity(m, vocab, docs);
  if (!result.log.empty()) {
    result.log.back().retention_em = result.retention_em;
    result.log.back().doc_ppl = result.doc_ppl;
  }

  if (enforce) {
    char buf[256];
    if (result.retention_em < recipe.retention_threshold || result.doc_ppl > recipe.ppl_threshold ||
        result.format_rate < recipe.format_threshold) {
      std::snprintf(buf, sizeof buf,
                    "base model below the bar: retention EM %.3f (need %.3f), old-world PPL %.4f (need <= %.3f), "
                    "format rate %.3f (need %.3f); try a larger model or more epochs",
                    result.retention_em, recipe.retention_threshold, result.doc_ppl, recipe.ppl_threshold,
                    result.format_rate, recipe.format_threshold);
      fail(ErrorKind::numerical, buf);
    }
  }
  return result;
}

template BaseResult<float> pretrain_base<float>(const CorpusBundle&, ModelConfig, const BaseRecipe&, std::uint64_t,
                                                bool, const std::function<void(const EpochMetrics&)>&);
template BaseResult<double> pretrain_base<double>(const CorpusBundle&, ModelConfig, const BaseRecipe&,
                                                  std::uint64_t, bool,
                                                  const std::function<void(const EpochMetrics&)>&);

}  // namespace pitlab
