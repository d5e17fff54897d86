// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

#include "pitlab/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "json_io.hpp"
#include "pitlab/hash.hpp"
#include "pitlab/random.hpp"

namespace pitlab {

using detail::ojson;

namespace {

void append(TokenSequence& out, const TokenSequence& more) { out.insert(out.end(), more.begin(), more.end()); }

std::uint64_t key_hash(std::string_view s) {
  Fnv1a h;
  h.update(s);
  return h.value();
}

}  // namespace

TrainExample build_doc_example(const Document& doc, const Vocab& vocab, std::size_t context,
                               DocWeighting weighting, std::span<const std::string> answers,
                               AnswerWeights answer_weights) {
  TrainExample ex;
  ex.kind = ExampleKind::document;
  ex.source_ids = {doc.id};
  ex.tokens = {Vocab::bos};
  append(ex.tokens, encode(doc.text, vocab));
  if (ex.tokens.size() < 2) fail(ErrorKind::data, "document '" + doc.id + "' is empty");
  if (ex.tokens.size() > context)
    fail(ErrorKind::data, "document '" + doc.id + "' has " + std::to_string(ex.tokens.size()) +
                              " tokens, more than the context length " + std::to_string(context));
  const std::size_t n = ex.tokens.size();
  if (weighting == DocWeighting::uniform) {
    ex.loss_weights.assign(n - 1, 1.0f);
    return ex;
  }
  if (answers.empty())
    fail(ErrorKind::usage, "answer-upweighted document '" + doc.id + "' needs its answer list");
  ex.loss_weights.assign(n - 1, answer_weights.other);
  for (const auto& answer : answers) {
    const TokenSequence a = encode(answer, vocab);
    if (a.empty() || a.size() > n - 1) continue;
    for (std::size_t start = 1; start + a.size() <= n; ++start) {
      if (!std::equal(a.begin(), a.end(), ex.tokens.begin() + static_cast<std::ptrdiff_t>(start))) continue;
      for (std::size_t j = start; j < start + a.size(); ++j) ex.loss_weights[j - 1] = answer_weights.answer;
    }
  }
  return ex;
}

TokenSequence qa_prompt(std::string_view question, const Vocab& vocab) {
  TokenSequence t = {Vocab::bos, Vocab::q_marker};
  append(t, encode(question, vocab));
  t.push_back(Vocab::newline);
  t.push_back(Vocab::a_marker);
  return t;
}

TrainExample build_qa_example(const QAPair& qa, const Vocab& vocab, std::size_t context) {
  TrainExample ex;
  ex.kind = ExampleKind::qa;
  ex.source_ids = {qa.id, qa.doc_id};
  ex.tokens = qa_prompt(qa.question, vocab);
  const std::size_t prompt = ex.tokens.size();
  TokenSequence answer = encode(qa.answer, vocab);
  if (answer.empty()) fail(ErrorKind::data, "QA '" + qa.id + "' has an empty answer");
  append(ex.tokens, answer);
  ex.tokens.push_back(Vocab::newline);
  if (ex.tokens.size() > context)
    fail(ErrorKind::data, "QA '" + qa.id + "' has " + std::to_string(ex.tokens.size()) +
                              " tokens, more than the context length " + std::to_string(context));
  ex.loss_weights.assign(ex.tokens.size() - 1, 0.0f);
  for (std::size_t j = prompt; j < ex.tokens.size(); ++j) ex.loss_weights[j - 1] = 1.0f;
  return ex;
}

namespace {

struct Flattened {
  PackedBatch batch;
  std::vector<std::size_t> rows;
  std::vector<TokenId> targets;
  std::vector<double> weights;  // raw weights of the selected rows
  std::vector<std::size_t> example_of_row;
};

Flattened flatten(std::span<const TrainExample* const> examples) {
  Flattened f;
  std::vector<TokenSequence> inputs;
  inputs.reserve(examples.size());
  for (const TrainExample* ex : examples) {
    if (ex->tokens.size() < 2 || ex->loss_weights.size() + 1 != ex->tokens.size())
      fail(ErrorKind::numerical, "malformed training example (weights must be one shorter than tokens)");
    inputs.emplace_back(ex->tokens.begin(), ex->tokens.end() - 1);
  }
  f.batch = PackedBatch::pack(inputs);
  for (std::size_t e = 0; e < examples.size(); ++e) {
    const auto& seg = f.batch.segments[e];
    for (std::size_t i = 0; i < seg.length; ++i) {
      const float w = examples[e]->loss_weights[i];
      if (w == 0.0f) continue;
      f.rows.push_back(seg.offset + i);
      f.targets.push_back(examples[e]->tokens[i + 1]);
      f.weights.push_back(w);
      f.example_of_row.push_back(e);
    }
  }
  return f;
}

}  // namespace

template <Real T>
Var batch_loss(Tape<T>& tape, Model<T>& model, std::span<const TrainExample* const> batch) {
  if (batch.empty()) fail(ErrorKind::usage, "batch_loss on an empty batch");
  Flattened f = flatten(batch);
  std::vector<double> per_example(batch.size(), 0.0);
  for (std::size_t r = 0; r < f.rows.size(); ++r) per_example[f.example_of_row[r]] += f.weights[r];
  for (std::size_t e = 0; e < batch.size(); ++e)
    if (per_example[e] <= 0)
      fail(ErrorKind::numerical, "no loss-bearing tokens in example '" +
                                     (batch[e]->source_ids.empty() ? std::string("?") : batch[e]->source_ids[0]) + "'");
  // w / (W_example * B) sums to one, so the weighted mean below is the mean
  // of per-example weighted means.
  std::vector<T> w(f.rows.size());
  const double b = static_cast<double>(batch.size());
  for (std::size_t r = 0; r < f.rows.size(); ++r)
    w[r] = static_cast<T>(f.weights[r] / (per_example[f.example_of_row[r]] * b));
  const Var logits = model.forward(tape, f.batch, f.rows);
  return ops::cross_entropy_from_logits<T>(tape, logits, f.targets, w);
}

template <Real T>
double pooled_loss(const Model<T>& model, std::span<const TrainExample> examples, std::size_t batch_size) {
  if (examples.empty()) fail(ErrorKind::usage, "pooled_loss over no examples");
  batch_size = std::max<std::size_t>(batch_size, 1);
  double weighted = 0, total = 0;
  Tape<T> tape;
  for (std::size_t start = 0; start < examples.size(); start += batch_size) {
    std::vector<const TrainExample*> chunk;
    for (std::size_t i = start; i < std::min(examples.size(), start + batch_size); ++i) chunk.push_back(&examples[i]);
    Flattened f = flatten(chunk);
    if (f.rows.empty()) continue;
    double w_sum = 0;
    std::vector<T> w(f.weights.size());
    for (std::size_t r = 0; r < w.size(); ++r) {
      w[r] = static_cast<T>(f.weights[r]);
      w_sum += f.weights[r];
    }
    tape.reset();
    const Var logits = model.forward_inference(tape, f.batch, f.rows);
    const double mean = tape.value(ops::cross_entropy_from_logits<T>(tape, logits, f.targets, w)).item();
    weighted += mean * w_sum;
    total += w_sum;
  }
  if (total <= 0) fail(ErrorKind::numerical, "pooled_loss: no loss-bearing tokens");
  return weighted / total;
}

std::string to_string(Arrangement a) {
  switch (a) {
    case Arrangement::none: return "none";
    case Arrangement::grouped: return "grouped";
    case Arrangement::interleaved: return "interleaved";
  }
  return "none";
}

std::string to_string(QaPosition p) { return p == QaPosition::before ? "before" : "after"; }

std::string to_string(DocWeighting w) {
  return w == DocWeighting::uniform ? "uniform" : "answer_upweighted";
}

Arrangement arrangement_from_string(std::string_view s) {
  if (s == "none") return Arrangement::none;
  if (s == "grouped") return Arrangement::grouped;
  if (s == "interleaved") return Arrangement::interleaved;
  fail(ErrorKind::usage, "unknown arrangement '" + std::string(s) + "' (none, grouped, interleaved)");
}

QaPosition qa_position_from_string(std::string_view s) {
  if (s == "before") return QaPosition::before;
  if (s == "after") return QaPosition::after;
  fail(ErrorKind::usage, "unknown qa_position '" + std::string(s) + "' (before, after)");
}

DocWeighting doc_weighting_from_string(std::string_view s) {
  if (s == "uniform") return DocWeighting::uniform;
  if (s == "answer_upweighted") return DocWeighting::answer_upweighted;
  fail(ErrorKind::usage, "unknown weighting '" + std::string(s) + "' (uniform, answer_upweighted)");
}

void PhaseSpec::validate() const {
  const std::string where = "phase '" + name + "': ";
  if (datasets.empty()) fail(ErrorKind::usage, where + "no datasets");
  if (epochs < 1) fail(ErrorKind::usage, where + "epochs must be >= 1");
  if (!(lr0 > 0)) fail(ErrorKind::usage, where + "learning rate must be positive");
  if (batch_size < 1) fail(ErrorKind::usage, where + "batch_size must be >= 1");
  for (const auto& d : datasets) {
    if (!is_doc_split(d.split) && !is_qa_split(d.split))
      fail(ErrorKind::usage, where + "split '" + d.split + "' is neither a document nor a QA split");
    if (d.weighting != DocWeighting::uniform && !is_doc_split(d.split))
      fail(ErrorKind::usage, where + "weighting applies to document splits only");
  }
  if (arrangement != Arrangement::none) {
    bool docs = false, qa = false;
    for (const auto& d : datasets) (is_doc_split(d.split) ? docs : qa) = true;
    if (!docs || !qa) fail(ErrorKind::usage, where + "an arrangement needs both documents and QA pairs");
  }
}

void CurriculumSpec::validate() const {
  if (phases.empty()) fail(ErrorKind::usage, "curriculum '" + name + "' has no phases");
  for (const auto& p : phases) p.validate();
}

void CurriculumSpec::validate(const CorpusBundle& bundle) const {
  validate();
  for (const auto& p : phases)
    for (const auto& d : p.datasets) {
      if (!bundle.has_split(d.split))
        fail(ErrorKind::data, "phase '" + p.name + "' references split '" + d.split + "' missing from the bundle");
      if (!d.exclude.empty() && !bundle.has_split(d.exclude))
        fail(ErrorKind::data, "phase '" + p.name + "' excludes split '" + d.exclude + "' missing from the bundle");
    }
}

std::string CurriculumSpec::to_json() const {
  ojson j;
  j["format"] = "pitlab-curriculum";
  j["version"] = 1;
  j["name"] = name;
  j["seed"] = seed;
  j["eval_each_epoch"] = eval_each_epoch;
  j["phases"] = ojson::array();
  for (const auto& p : phases) {
    ojson jp;
    jp["name"] = p.name;
    jp["datasets"] = ojson::array();
    for (const auto& d : p.datasets) {
      ojson jd;
      jd["split"] = d.split;
      if (d.weighting != DocWeighting::uniform) jd["weighting"] = to_string(d.weighting);
      if (d.count) jd["count"] = d.count;
      if (!d.exclude.empty()) jd["exclude"] = d.exclude;
      jp["datasets"].push_back(jd);
    }
    jp["arrangement"] = to_string(p.arrangement);
    if (p.arrangement != Arrangement::none) jp["qa_position"] = to_string(p.qa_position);
    jp["epochs"] = p.epochs;
    jp["lr"] = p.lr0;
    jp["batch_size"] = p.batch_size;
    j["phases"].push_back(jp);
  }
  return j.dump(2) + "\n";
}

CurriculumSpec CurriculumSpec::from_json(std::string_view text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const ojson::exception& e) {
    fail(ErrorKind::data, std::string("curriculum config: ") + e.what());
  }
  if (!j.is_object() || !j.contains("phases") || !j["phases"].is_array())
    fail(ErrorKind::data, "curriculum config needs a 'phases' array");
  CurriculumSpec c;
  c.name = detail::get_or<std::string>(j, "name", "custom");
  c.seed = detail::get_or<std::uint64_t>(j, "seed", 0);
  c.eval_each_epoch = detail::get_or<bool>(j, "eval_each_epoch", true);
  for (const auto& jp : j["phases"]) {
    if (!jp.is_object()) fail(ErrorKind::data, "curriculum phase must be an object");
    PhaseSpec p;
    p.name = detail::get_or<std::string>(jp, "name", "phase" + std::to_string(c.phases.size() + 1));
    if (!jp.contains("datasets") || !jp["datasets"].is_array())
      fail(ErrorKind::data, "phase '" + p.name + "' needs a 'datasets' array");
    for (const auto& jd : jp["datasets"]) {
      DatasetRef d;
      if (jd.is_string()) {
        d.split = jd.get<std::string>();
      } else if (jd.is_object()) {
        d.split = detail::get_or<std::string>(jd, "split", "");
        d.weighting = doc_weighting_from_string(detail::get_or<std::string>(jd, "weighting", "uniform"));
        d.count = detail::get_or<std::size_t>(jd, "count", 0);
        d.exclude = detail::get_or<std::string>(jd, "exclude", "");
      } else {
        fail(ErrorKind::data, "phase '" + p.name + "': dataset entries are split names or objects");
      }
      p.datasets.push_back(std::move(d));
    }
    p.arrangement = arrangement_from_string(detail::get_or<std::string>(jp, "arrangement", "none"));
    p.qa_position = qa_position_from_string(detail::get_or<std::string>(jp, "qa_position", "before"));
    p.epochs = detail::get_or<std::size_t>(jp, "epochs", 1);
    p.lr0 = detail::get_or<double>(jp, "lr", p.lr0);
    p.batch_size = detail::get_or<std::size_t>(jp, "batch_size", p.batch_size);
    c.phases.push_back(std::move(p));
  }
  c.validate();
  return c;
}

std::vector<std::size_t> arrange(std::span<const ExampleGroup> groups, Arrangement arrangement,
                                 QaPosition position, std::size_t epochs,
                                 std::optional<std::uint64_t> shuffle_seed) {
  if (epochs < 1) fail(ErrorKind::usage, "arrange: epochs must be >= 1");
  if (arrangement == Arrangement::none) fail(ErrorKind::usage, "arrange: no arrangement requested");
  for (const auto& g : groups)
    if (g.qa.empty())
      fail(ErrorKind::usage, "arrange: document example " + std::to_string(g.doc) + " has no linked QA pair");

  std::vector<std::size_t> order(groups.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::optional<Rng> rng;
  if (shuffle_seed) rng.emplace(*shuffle_seed);

  std::vector<std::size_t> out;
  const bool before = position == QaPosition::before;
  if (arrangement == Arrangement::interleaved) {
    for (std::size_t e = 0; e < epochs; ++e) {
      if (rng) rng->shuffle(order);
      for (std::size_t gi : order) {
        const auto& g = groups[gi];
        if (!before) out.push_back(g.doc);
        out.insert(out.end(), g.qa.begin(), g.qa.end());
        if (before) out.push_back(g.doc);
      }
    }
    return out;
  }
  if (rng) rng->shuffle(order);
  for (std::size_t gi : order) {
    const auto& g = groups[gi];
    auto emit_doc = [&] { out.insert(out.end(), epochs, g.doc); };
    if (!before) emit_doc();
    for (std::size_t q : g.qa) out.insert(out.end(), epochs, q);
    if (before) emit_doc();
  }
  return out;
}

PhaseData build_phase_data(const PhaseSpec& phase, const CorpusBundle& bundle, const Vocab& vocab,
                           std::size_t context, std::uint64_t seed) {
  phase.validate();
  PhaseData data;
  std::map<std::string, std::vector<std::string>> answers;
  for (const auto& d : phase.datasets) {
    if (!bundle.has_split(d.split))
      fail(ErrorKind::data, "phase '" + phase.name + "' references missing split '" + d.split + "'");
    std::set<std::string> excluded;
    if (!d.exclude.empty()) {
      if (!bundle.has_split(d.exclude))
        fail(ErrorKind::data, "phase '" + phase.name + "' excludes missing split '" + d.exclude + "'");
      if (is_doc_split(d.exclude)) {
        for (const auto& x : bundle.docs(d.exclude)) excluded.insert(x.id);
      } else {
        for (const auto& x : bundle.qa(d.exclude)) excluded.insert(x.id);
      }
    }
    const std::size_t available = is_doc_split(d.split) ? bundle.docs(d.split).size() : bundle.qa(d.split).size();
    std::vector<std::size_t> pick;
    for (std::size_t i = 0; i < available; ++i) {
      const std::string& id = is_doc_split(d.split) ? bundle.docs(d.split)[i].id : bundle.qa(d.split)[i].id;
      if (!excluded.count(id)) pick.push_back(i);
    }
    if (d.count > 0) {
      if (d.count > pick.size())
        fail(ErrorKind::data, "phase '" + phase.name + "' asks for " + std::to_string(d.count) + " examples of '" +
                                  d.split + "' but only " + std::to_string(pick.size()) + " are eligible");
      Rng rng(Rng::mix(seed, key_hash(d.split + "/" + d.exclude)));
      rng.shuffle(pick);
      pick.resize(d.count);
      std::sort(pick.begin(), pick.end());
    }
    if (is_doc_split(d.split)) {
      if (d.weighting == DocWeighting::answer_upweighted && answers.empty()) answers = answers_by_doc(bundle);
      for (std::size_t i : pick) {
        const Document& doc = bundle.docs(d.split)[i];
        std::span<const std::string> ans;
        if (d.weighting == DocWeighting::answer_upweighted) {
          auto it = answers.find(doc.id);
          if (it == answers.end())
            fail(ErrorKind::data, "document '" + doc.id + "' has no QA pairs to upweight answers from");
          ans = it->second;
        }
        data.examples.push_back(build_doc_example(doc, vocab, context, d.weighting, ans));
      }
    } else {
      for (std::size_t i : pick) data.examples.push_back(build_qa_example(bundle.qa(d.split)[i], vocab, context));
    }
  }
  if (data.examples.empty()) fail(ErrorKind::usage, "phase '" + phase.name + "' has no examples");

  if (phase.arrangement != Arrangement::none) {
    std::map<std::string, std::size_t> group_of_doc;
    for (std::size_t i = 0; i < data.examples.size(); ++i) {
      const auto& ex = data.examples[i];
      if (ex.kind != ExampleKind::document) continue;
      group_of_doc[ex.source_ids[0]] = data.groups.size();
      data.groups.push_back({i, {}});
    }
    for (std::size_t i = 0; i < data.examples.size(); ++i) {
      const auto& ex = data.examples[i];
      if (ex.kind != ExampleKind::qa) continue;
      auto it = group_of_doc.find(ex.source_ids[1]);
      if (it == group_of_doc.end())
        fail(ErrorKind::usage, "phase '" + phase.name + "': QA '" + ex.source_ids[0] +
                                   "' is not linked to any document of the phase");
      data.groups[it->second].qa.push_back(i);
    }
    for (const auto& g : data.groups)
      if (g.qa.empty())
        fail(ErrorKind::usage, "phase '" + phase.name + "': document '" + data.examples[g.doc].source_ids[0] +
                                   "' has no linked QA pair in the phase");
  }
  return data;
}

std::vector<std::vector<std::size_t>> phase_schedule(const PhaseSpec& phase, const PhaseData& data,
                                                     std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> epochs;
  if (phase.arrangement == Arrangement::none) {
    std::vector<std::size_t> order(data.examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t e = 0; e < phase.epochs; ++e) {
      Rng rng(Rng::mix(seed, e));
      rng.shuffle(order);
      epochs.push_back(order);
    }
    return epochs;
  }
  const auto stream = arrange(data.groups, phase.arrangement, phase.qa_position, phase.epochs, Rng::mix(seed, 0xa77));
  const std::size_t per = stream.size() / phase.epochs;
  for (std::size_t e = 0; e < phase.epochs; ++e)
    epochs.emplace_back(stream.begin() + static_cast<std::ptrdiff_t>(e * per),
                        stream.begin() + static_cast<std::ptrdiff_t>((e + 1) * per));
  return epochs;
}

template <Real T>
PhaseResult run_phase(Model<T>& model, OptimState<T>& optim, const PhaseSpec& phase,
                      std::size_t phase_index, const CorpusBundle& bundle, const Vocab& vocab,
                      std::uint64_t seed, const EpochHook<T>& on_epoch, bool every_epoch) {
  const std::uint64_t phase_seed = Rng::mix(seed, 0x9000 + phase_index);
  const PhaseData data = build_phase_data(phase, bundle, vocab, model.config().context, phase_seed);
  const auto schedule = phase_schedule(phase, data, phase_seed);

  std::size_t total_steps = 0;
  for (const auto& e : schedule) total_steps += (e.size() + phase.batch_size - 1) / phase.batch_size;
  OptimConfig oc;
  oc.lr0 = phase.lr0;
  oc.total_steps = std::max<std::size_t>(total_steps, 1);
  oc.validate();
  optim = OptimState<T>{};

  PhaseResult result;
  Tape<T> tape;
  std::size_t step = 0;
  for (std::size_t e = 0; e < schedule.size(); ++e) {
    const auto& order = schedule[e];
    double loss_sum = 0;
    std::size_t batches = 0;
    double lr = oc.lr0;
    for (std::size_t start = 0; start < order.size(); start += phase.batch_size) {
      std::vector<const TrainExample*> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + phase.batch_size); ++i)
        batch.push_back(&data.examples[order[i]]);
      tape.reset();
      model.zero_grad();
      const Var loss = batch_loss(tape, model, batch);
      const double value = tape.value(loss).item();
      if (!std::isfinite(value))
        fail(ErrorKind::numerical, "non-finite loss in phase '" + phase.name + "' epoch " + std::to_string(e + 1) +
                                       " step " + std::to_string(step + 1) + " (first example '" +
                                       batch.front()->source_ids.front() + "')");
      tape.backward(loss);
      lr = lr_at(step, oc);
      adamw_step(model.parameters(), optim, oc, lr);
      ++step;
      loss_sum += value;
      ++batches;
    }
    EpochMetrics m;
    m.phase = phase.name;
    m.phase_index = phase_index;
    m.epoch = e + 1;
    m.step = step;
    m.lr = lr;
    m.train_loss = batches ? loss_sum / static_cast<double>(batches) : 0.0;
    if (on_epoch && (every_epoch || e + 1 == schedule.size())) on_epoch(model, m);
    result.epochs.push_back(std::move(m));
  }
  result.steps = step;
  return result;
}

std::vector<std::string> preset_names() {
  return {"cont_pretrain",
          "standard_it",
          "it_no_forget",
          "it_no_train_doc",
          "weighted_cont_pretrain",
          "adapted_cont_pretrain",
          "mix_all",
          "pit_qa_only",
          "pit_seq",
          "pit",
          "pit_grouped_before",
          "pit_grouped_after",
          "pit_interleaved_before",
          "pit_interleaved_after",
          "pit_minus",
          "pit_pp",
          "xdomain_standard_it",
          "xdomain_pit"};
}

CurriculumSpec preset(std::string_view name, const PresetOptions& o) {
  using namespace splits;
  auto phase = [&](std::string pname, std::vector<DatasetRef> ds, std::size_t epochs, double lr) {
    PhaseSpec p;
    p.name = std::move(pname);
    p.datasets = std::move(ds);
    p.epochs = epochs;
    p.lr0 = lr;
    p.batch_size = o.batch_size;
    return p;
  };
  auto ref = [](std::string split) { return DatasetRef{std::move(split), DocWeighting::uniform, 0, ""}; };
  const DatasetRef anchors{oldworld_qa, DocWeighting::uniform, o.format_anchors, retention_qa};
  auto test_docs = [&](DocWeighting w = DocWeighting::uniform) {
    std::vector<DatasetRef> ds = {DatasetRef{test_doc, w, 0, ""}};
    if (o.format_anchors > 0) ds.push_back(anchors);
    return phase("test_doc", ds, o.doc_epochs, o.doc_lr);
  };
  auto pit_mix = [&](Arrangement a, QaPosition pos) {
    PhaseSpec p = phase("train_qa+train_doc", {ref(train_qa), ref(train_doc)}, o.pit_epochs, o.doc_lr);
    p.arrangement = a;
    p.qa_position = pos;
    return p;
  };

  CurriculumSpec c;
  c.name = std::string(name);
  c.seed = o.seed;
  auto& ph = c.phases;
  if (name == "cont_pretrain") {
    ph = {test_docs()};
  } else if (name == "standard_it") {
    ph = {phase("train_doc+test_doc", {ref(train_doc), ref(test_doc)}, o.doc_epochs, o.doc_lr),
          phase("train_qa", {ref(train_qa)}, o.it_epochs, o.qa_lr)};
  } else if (name == "it_no_forget") {
    ph = {phase("train_doc+test_doc", {ref(train_doc), ref(test_doc)}, o.doc_epochs, o.doc_lr),
          phase("train_qa+test_doc", {ref(train_qa), ref(test_doc)}, o.it_epochs, o.doc_lr)};
  } else if (name == "it_no_train_doc") {
    ph = {phase("test_doc", {ref(test_doc)}, o.doc_epochs, o.doc_lr),
          phase("train_qa", {ref(train_qa)}, o.it_epochs, o.qa_lr)};
  } else if (name == "weighted_cont_pretrain") {
    ph = {test_docs(DocWeighting::answer_upweighted)};
  } else if (name == "adapted_cont_pretrain") {
    ph = {phase("train_doc", {ref(train_doc)}, o.doc_epochs, o.doc_lr), test_docs()};
  } else if (name == "mix_all") {
    ph = {phase("train_qa+train_doc+test_doc", {ref(train_qa), ref(train_doc), ref(test_doc)}, o.pit_epochs,
                o.doc_lr)};
  } else if (name == "pit_qa_only") {
    ph = {phase("train_qa", {ref(train_qa)}, o.pit_epochs, o.qa_lr), test_docs()};
  } else if (name == "pit_seq") {
    ph = {phase("train_qa", {ref(train_qa)}, o.pit_epochs, o.qa_lr),
          phase("train_doc", {ref(train_doc)}, o.pit_epochs, o.doc_lr), test_docs()};
  } else if (name == "pit") {
    ph = {pit_mix(Arrangement::none, QaPosition::before), test_docs()};
  } else if (name == "pit_grouped_before") {
    ph = {pit_mix(Arrangement::grouped, QaPosition::before), test_docs()};
  } else if (name == "pit_grouped_after") {
    ph = {pit_mix(Arrangement::grouped, QaPosition::after), test_docs()};
  } else if (name == "pit_interleaved_before") {
    ph = {pit_mix(Arrangement::interleaved, QaPosition::before), test_docs()};
  } else if (name == "pit_interleaved_after") {
    ph = {pit_mix(Arrangement::interleaved, QaPosition::after), test_docs()};
  } else if (name == "pit_minus") {
    ph = {pit_mix(Arrangement::none, QaPosition::before), phase("train_qa", {ref(train_qa)}, o.pit_epochs, o.qa_lr),
          test_docs()};
  } else if (name == "pit_pp") {
    ph = {phase("train_qa", {ref(train_qa)}, o.pit_epochs, o.qa_lr), pit_mix(Arrangement::none, QaPosition::before),
          test_docs()};
  } else if (name == "xdomain_standard_it") {
    ph = {phase("xdomain_train_doc+test_doc", {ref(xdomain_train_doc), ref(test_doc)}, o.doc_epochs, o.doc_lr),
          phase("xdomain_train_qa", {ref(xdomain_train_qa)}, o.it_epochs, o.qa_lr)};
  } else if (name == "xdomain_pit") {
    ph = {phase("xdomain_train_qa+xdomain_train_doc", {ref(xdomain_train_qa), ref(xdomain_train_doc)}, o.pit_epochs,
                o.doc_lr),
          test_docs()};
  } else {
    std::string valid;
    for (const auto& n : preset_names()) valid += (valid.empty() ? "" : ", ") + n;
    fail(ErrorKind::usage, "unknown preset '" + std::string(name) + "'; valid presets: " + valid);
  }
  c.validate();
  return c;
}

template Var batch_loss<float>(Tape<float>&, Model<float>&, std::span<const TrainExample* const>);
template Var batch_loss<double>(Tape<double>&, Model<double>&, std::span<const TrainExample* const>);
template double pooled_loss<float>(const Model<float>&, std::span<const TrainExample>, std::size_t);
template double pooled_loss<double>(const Model<double>&, std::span<const TrainExample>, std::size_t);
template PhaseResult run_phase<float>(Model<float>&, OptimState<float>&, const PhaseSpec&, std::size_t,
                                      const CorpusBundle&, const Vocab&, std::uint64_t, const EpochHook<float>&,
                                      bool);
template PhaseResult run_phase<double>(Model<double>&, OptimState<double>&, const PhaseSpec&, std::size_t,
                                       const CorpusBundle&, const Vocab&, std::uint64_t, const EpochHook<double>&,
                                       bool);

}  // namespace pitlab
