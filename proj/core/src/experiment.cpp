// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

#include "pitlab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <set>

#include "json_io.hpp"
#include "pitlab/checkpoint.hpp"
#include "pitlab/eval.hpp"
#include "pitlab/hash.hpp"

namespace pitlab {

namespace fs = std::filesystem;
using detail::get_or;
using detail::ojson;

namespace {

ojson opt(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

std::optional<double> opt_from(const ojson& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

ojson to_json(const EvalSettings& e) {
  ojson j;
  j["qa_split"] = e.qa_split;
  j["doc_split"] = e.doc_split;
  j["retention"] = e.retention;
  j["open_book"] = e.open_book;
  j["max_new"] = e.max_new;
  j["batch_size"] = e.batch_size;
  return j;
}

EvalSettings eval_from_json(const ojson& j) {
  EvalSettings e;
  e.qa_split = get_or(j, "qa_split", e.qa_split);
  e.doc_split = get_or(j, "doc_split", e.doc_split);
  e.retention = get_or(j, "retention", e.retention);
  e.open_book = get_or(j, "open_book", e.open_book);
  e.max_new = get_or(j, "max_new", e.max_new);
  e.batch_size = get_or(j, "batch_size", e.batch_size);
  return e;
}

ojson to_json(const EpochMetrics& m) {
  ojson j;
  j["phase"] = m.phase;
  j["phase_index"] = m.phase_index;
  j["epoch"] = m.epoch;
  j["step"] = m.step;
  j["lr"] = m.lr;
  j["train_loss"] = m.train_loss;
  j["doc_ppl"] = opt(m.doc_ppl);
  j["test_em"] = opt(m.test_em);
  j["test_recall"] = opt(m.test_recall);
  j["test_rouge_l"] = opt(m.test_rouge_l);
  j["retention_em"] = opt(m.retention_em);
  return j;
}

EpochMetrics epoch_from_json(const ojson& j) {
  EpochMetrics m;
  m.phase = get_or<std::string>(j, "phase", "");
  m.phase_index = get_or<std::size_t>(j, "phase_index", 0);
  m.epoch = get_or<std::size_t>(j, "epoch", 0);
  m.step = get_or<std::size_t>(j, "step", 0);
  m.lr = get_or<double>(j, "lr", 0.0);
  m.train_loss = get_or<double>(j, "train_loss", 0.0);
  m.doc_ppl = opt_from(j, "doc_ppl");
  m.test_em = opt_from(j, "test_em");
  m.test_recall = opt_from(j, "test_recall");
  m.test_rouge_l = opt_from(j, "test_rouge_l");
  m.retention_em = opt_from(j, "retention_em");
  return m;
}

ojson to_json(const BaseRecipe& r) {
  ojson j;
  j["doc_fraction"] = r.doc_fraction;
  j["open_book_fraction"] = r.open_book_fraction;
  j["epochs"] = r.epochs;
  j["lr"] = r.lr0;
  j["batch_size"] = r.batch_size;
  j["retention_threshold"] = r.retention_threshold;
  j["ppl_threshold"] = r.ppl_threshold;
  j["format_threshold"] = r.format_threshold;
  return j;
}

BaseRecipe recipe_from_json(const ojson& j) {
  BaseRecipe r;
  r.doc_fraction = get_or(j, "doc_fraction", r.doc_fraction);
  r.open_book_fraction = get_or(j, "open_book_fraction", r.open_book_fraction);
  r.epochs = get_or(j, "epochs", r.epochs);
  r.lr0 = get_or(j, "lr", r.lr0);
  r.batch_size = get_or(j, "batch_size", r.batch_size);
  r.retention_threshold = get_or(j, "retention_threshold", r.retention_threshold);
  r.ppl_threshold = get_or(j, "ppl_threshold", r.ppl_threshold);
  r.format_threshold = get_or(j, "format_threshold", r.format_threshold);
  r.validate();
  return r;
}

ojson to_json(const PresetOptions& o) {
  ojson j;
  j["doc_lr"] = o.doc_lr;
  j["qa_lr"] = o.qa_lr;
  j["doc_epochs"] = o.doc_epochs;
  j["it_epochs"] = o.it_epochs;
  j["pit_epochs"] = o.pit_epochs;
  j["batch_size"] = o.batch_size;
  j["format_anchors"] = o.format_anchors;
  return j;
}

PresetOptions presets_from_json(const ojson& j) {
  PresetOptions o;
  o.doc_lr = get_or(j, "doc_lr", o.doc_lr);
  o.qa_lr = get_or(j, "qa_lr", o.qa_lr);
  o.doc_epochs = get_or(j, "doc_epochs", o.doc_epochs);
  o.it_epochs = get_or(j, "it_epochs", o.it_epochs);
  o.pit_epochs = get_or(j, "pit_epochs", o.pit_epochs);
  o.batch_size = get_or(j, "batch_size", o.batch_size);
  o.format_anchors = get_or(j, "format_anchors", o.format_anchors);
  return o;
}

ojson to_json(const SplitPlan& p) {
  ojson j;
  j["domains"] = p.domains;
  j["entities"] = p.entities;
  return j;
}

SplitPlan plan_from_json(const ojson& j, SplitPlan p) {
  p.domains = get_or(j, "domains", p.domains);
  p.entities = get_or(j, "entities", p.entities);
  return p;
}

ojson to_json(const CorpusOptions& c) {
  ojson j;
  j["oldworld"] = to_json(c.oldworld);
  j["train"] = to_json(c.train);
  j["test"] = to_json(c.test);
  j["xdomain_train"] = to_json(c.xdomain_train);
  j["retention_qa"] = c.retention_qa;
  j["qa_per_entity"] = c.qa_per_entity;
  if (c.oldworld_qa_per_entity) j["oldworld_qa_per_entity"] = *c.oldworld_qa_per_entity;
  j["min_attributes"] = c.min_attributes;
  j["max_attributes"] = c.max_attributes;
  j["test_value_fraction"] = c.test_value_fraction;
  j["seed"] = c.seed;
  return j;
}

CorpusOptions corpus_from_json(const ojson& j) {
  CorpusOptions c;
  if (j.contains("oldworld")) c.oldworld = plan_from_json(j["oldworld"], c.oldworld);
  if (j.contains("train")) c.train = plan_from_json(j["train"], c.train);
  if (j.contains("test")) c.test = plan_from_json(j["test"], c.test);
  if (j.contains("xdomain_train")) c.xdomain_train = plan_from_json(j["xdomain_train"], c.xdomain_train);
  c.retention_qa = get_or(j, "retention_qa", c.retention_qa);
  c.qa_per_entity = get_or(j, "qa_per_entity", c.qa_per_entity);
  if (j.contains("oldworld_qa_per_entity") && !j["oldworld_qa_per_entity"].is_null())
    c.oldworld_qa_per_entity = j["oldworld_qa_per_entity"].get<int>();
  c.min_attributes = get_or(j, "min_attributes", c.min_attributes);
  c.max_attributes = get_or(j, "max_attributes", c.max_attributes);
  c.test_value_fraction = get_or(j, "test_value_fraction", c.test_value_fraction);
  c.seed = get_or(j, "seed", c.seed);
  return c;
}

std::string fmt(double v, const char* f = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void write_atomically(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  detail::write_text_file(tmp, text);
  fs::rename(tmp, path);
}

std::string curve_csv(const RunManifest& m) {
  std::string out = "phase,phase_index,epoch,step,train_loss,doc_ppl,test_em,retention_em\n";
  auto o = [](const std::optional<double>& v) { return v ? fmt(*v, "%.6f") : std::string(); };
  for (const auto& e : m.epochs)
    out += e.phase + "," + std::to_string(e.phase_index) + "," + std::to_string(e.epoch) + "," +
           std::to_string(e.step) + "," + fmt(e.train_loss, "%.6f") + "," + o(e.doc_ppl) + "," + o(e.test_em) +
           "," + o(e.retention_em) + "\n";
  return out;
}

}  // namespace

std::string RunConfig::to_json() const {
  ojson j;
  j["format"] = "pitlab-run";
  j["label"] = label;
  j["curriculum"] = ojson::parse(curriculum.to_json());
  j["bundle"] = bundle.string();
  j["base"] = base.string();
  j["seed"] = seed;
  j["eval"] = pitlab::to_json(eval);
  return j.dump(2) + "\n";
}

RunConfig RunConfig::from_json(std::string_view text, const fs::path& relative_to) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const ojson::exception& e) {
    fail(ErrorKind::data, std::string("run config: ") + e.what());
  }
  if (!j.is_object() || !j.contains("curriculum")) fail(ErrorKind::data, "run config needs a 'curriculum' object");
  RunConfig c;
  c.curriculum = CurriculumSpec::from_json(j["curriculum"].dump());
  c.label = get_or<std::string>(j, "label", c.curriculum.name);
  auto resolve = [&](const std::string& p) {
    fs::path path = p;
    return path.empty() || path.is_absolute() || relative_to.empty() ? path : relative_to / path;
  };
  c.bundle = resolve(get_or<std::string>(j, "bundle", ""));
  c.base = resolve(get_or<std::string>(j, "base", ""));
  c.seed = get_or<std::uint64_t>(j, "seed", c.curriculum.seed);
  c.curriculum.seed = c.seed;
  if (j.contains("eval")) c.eval = eval_from_json(j["eval"]);
  return c;
}

std::string RunConfig::hash() const {
  RunConfig canonical = *this;
  canonical.curriculum.seed = seed;
  return hash_hex(canonical.to_json());
}

std::string RunManifest::to_json() const {
  ojson j;
  j["format"] = "pitlab-manifest";
  j["label"] = label;
  j["preset"] = preset;
  j["config_hash"] = config_hash;
  j["corpus_hash"] = corpus_hash;
  j["base_vocab_hash"] = base_vocab_hash;
  j["seed"] = seed;
  j["code_version"] = code_version;
  j["wall_clock_seconds"] = wall_clock_seconds;
  j["phases"] = ojson::array();
  for (const auto& p : phases) {
    ojson jp;
    jp["name"] = p.name;
    jp["epochs"] = p.epochs;
    jp["lr"] = p.lr;
    jp["batch_size"] = p.batch_size;
    jp["steps"] = p.steps;
    j["phases"].push_back(jp);
  }
  j["epochs"] = ojson::array();
  for (const auto& e : epochs) j["epochs"].push_back(pitlab::to_json(e));
  ojson f;
  f["em"] = final.em;
  f["recall"] = final.recall;
  f["rouge_l"] = final.rouge_l;
  f["format_rate"] = final.format_rate;
  f["open_book_em"] = opt(final.open_book_em);
  f["open_book_recall"] = opt(final.open_book_recall);
  f["open_book_rouge_l"] = opt(final.open_book_rouge_l);
  f["doc_ppl"] = final.doc_ppl;
  f["retention_em"] = opt(final.retention_em);
  j["final"] = f;
  j["reports"] = reports;
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(std::string_view text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const ojson::exception& e) {
    fail(ErrorKind::data, std::string("manifest: ") + e.what());
  }
  if (get_or<std::string>(j, "format", "") != "pitlab-manifest") fail(ErrorKind::data, "not a pitlab run manifest");
  RunManifest m;
  m.label = get_or<std::string>(j, "label", "");
  m.preset = get_or<std::string>(j, "preset", "");
  m.config_hash = get_or<std::string>(j, "config_hash", "");
  m.corpus_hash = get_or<std::string>(j, "corpus_hash", "");
  m.base_vocab_hash = get_or<std::string>(j, "base_vocab_hash", "");
  m.seed = get_or<std::uint64_t>(j, "seed", 0);
  m.code_version = get_or<std::string>(j, "code_version", "");
  m.wall_clock_seconds = get_or<double>(j, "wall_clock_seconds", 0.0);
  if (j.contains("phases"))
    for (const auto& jp : j["phases"])
      m.phases.push_back({get_or<std::string>(jp, "name", ""), get_or<std::size_t>(jp, "epochs", 0),
                          get_or<double>(jp, "lr", 0.0), get_or<std::size_t>(jp, "batch_size", 0),
                          get_or<std::size_t>(jp, "steps", 0)});
  if (j.contains("epochs"))
    for (const auto& je : j["epochs"]) m.epochs.push_back(epoch_from_json(je));
  if (j.contains("final")) {
    const auto& f = j["final"];
    m.final.em = get_or<double>(f, "em", 0.0);
    m.final.recall = get_or<double>(f, "recall", 0.0);
    m.final.rouge_l = get_or<double>(f, "rouge_l", 0.0);
    m.final.format_rate = get_or<double>(f, "format_rate", 0.0);
    m.final.open_book_em = opt_from(f, "open_book_em");
    m.final.open_book_recall = opt_from(f, "open_book_recall");
    m.final.open_book_rouge_l = opt_from(f, "open_book_rouge_l");
    m.final.doc_ppl = get_or<double>(f, "doc_ppl", 0.0);
    m.final.retention_em = opt_from(f, "retention_em");
  }
  m.reports = get_or<std::map<std::string, std::string>>(j, "reports", {});
  return m;
}

RunManifest RunManifest::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::data, "cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return from_json(ss.str());
  } catch (const Error& e) {
    fail(e.kind(), path.string() + ": " + e.what());
  }
}

RunManifest run_experiment(const RunConfig& config, const fs::path& out, const LogFn& log) {
  const auto started = std::chrono::steady_clock::now();
  auto say = [&](const std::string& s) {
    if (log) log(s);
  };
  if (fs::exists(out / "manifest.json"))
    fail(ErrorKind::data, "refusing to overwrite existing manifest " + (out / "manifest.json").string());
  if (!fs::exists(config.bundle)) fail(ErrorKind::data, "bundle manifest not found: " + config.bundle.string());
  const CorpusBundle bundle = import_bundle(config.bundle);
  CurriculumSpec curriculum = config.curriculum;
  curriculum.seed = config.seed;
  curriculum.validate(bundle);
  if (!bundle.has_split(config.eval.qa_split) || !bundle.has_split(config.eval.doc_split))
    fail(ErrorKind::data, "bundle lacks evaluation split '" + config.eval.qa_split + "' or '" +
                              config.eval.doc_split + "'");
  Checkpoint<float> base = load_checkpoint<float>(config.base);
  Model<float> model = std::move(base.model);
  const Vocab& vocab = base.vocab;

  const std::string config_hash = config.hash();
  fs::create_directories(out / "eval");
  fs::create_directories(out / "checkpoints");
  detail::write_text_file(out / "run_config.json", config.to_json());
  detail::write_text_file(out / "curriculum.json", curriculum.to_json());

  RunManifest manifest;
  manifest.label = config.label.empty() ? curriculum.name : config.label;
  manifest.preset = curriculum.name;
  manifest.config_hash = config_hash;
  manifest.corpus_hash = corpus_hash(bundle);
  manifest.base_vocab_hash = vocab.hash();
  manifest.seed = config.seed;
  manifest.code_version = code_version;

  const auto& test_qa = bundle.qa(config.eval.qa_split);
  const auto& test_docs = bundle.docs(config.eval.doc_split);
  const bool retention = config.eval.retention && bundle.has_split(splits::retention_qa) &&
                         !bundle.qa(splits::retention_qa).empty();
  EvalOptions closed;
  closed.max_new = config.eval.max_new;
  closed.batch_size = config.eval.batch_size;

  auto fill = [&](const Model<float>& m, EpochMetrics& e) {
    e.doc_ppl = doc_perplexity(m, vocab, test_docs);
    const EvalReport r = evaluate_qa(m, vocab, test_qa, bundle, closed, config.eval.qa_split);
    e.test_em = r.em;
    e.test_recall = r.recall;
    e.test_rouge_l = r.rouge_l;
    if (retention)
      e.retention_em = evaluate_qa(m, vocab, bundle.qa(splits::retention_qa), bundle, closed,
                                   std::string(splits::retention_qa)).em;
  };

  EpochMetrics initial;
  initial.phase = "base";
  fill(model, initial);
  manifest.epochs.push_back(initial);

  OptimState<float> optim;
  for (std::size_t i = 0; i < curriculum.phases.size(); ++i) {
    const PhaseSpec& phase = curriculum.phases[i];
    const fs::path ckpt = out / "checkpoints" / ("phase-" + std::to_string(i + 1));
    PhaseRecord record{phase.name, phase.epochs, phase.lr0, phase.batch_size, 0};
    if (is_checkpoint(ckpt)) {
      const auto meta = read_checkpoint_meta(ckpt);
      auto it = meta.find("config_hash");
      if (it == meta.end() || it->second != config_hash)
        fail(ErrorKind::data, "resume mismatch: " + ckpt.string() + " was written by config " +
                                  (it == meta.end() ? std::string("<unknown>") : it->second) + ", current config is " +
                                  config_hash);
      Checkpoint<float> done = load_checkpoint<float>(ckpt);
      if (done.vocab.hash() != vocab.hash()) fail(ErrorKind::data, "resume mismatch: vocabulary differs");
      model = std::move(done.model);
      const ojson epochs = ojson::parse(done.meta["epochs"]);
      for (const auto& je : epochs) manifest.epochs.push_back(epoch_from_json(je));
      record.steps = done.step;
      manifest.phases.push_back(record);
      say("phase " + std::to_string(i + 1) + " '" + phase.name + "': resumed from " + ckpt.string());
      continue;
    }
    say("phase " + std::to_string(i + 1) + " '" + phase.name + "': " + std::to_string(phase.epochs) +
        " epoch(s), lr " + fmt(phase.lr0));
    const PhaseResult result =
        run_phase<float>(model, optim, phase, i, bundle, vocab, curriculum.seed,
                         [&](const Model<float>& m, EpochMetrics& e) {
                           fill(m, e);
                           say("  epoch " + std::to_string(e.epoch) + " loss " + fmt(e.train_loss, "%.4f") +
                               " ppl " + fmt(*e.doc_ppl, "%.4f") + " em " + fmt(*e.test_em, "%.4f") +
                               (e.retention_em ? " retention " + fmt(*e.retention_em, "%.4f") : ""));
                         },
                         curriculum.eval_each_epoch);
    ojson epochs = ojson::array();
    for (const auto& e : result.epochs) {
      manifest.epochs.push_back(e);
      epochs.push_back(pitlab::to_json(e));
    }
    record.steps = result.steps;
    manifest.phases.push_back(record);
    save_checkpoint<float>(ckpt, model, vocab, &optim, result.steps,
                           {{"config_hash", config_hash},
                            {"phase", phase.name},
                            {"phase_index", std::to_string(i + 1)},
                            {"corpus_hash", manifest.corpus_hash},
                            {"epochs", epochs.dump()}});
  }

  const EvalReport final_closed = evaluate_qa(model, vocab, test_qa, bundle, closed, config.eval.qa_split);
  detail::write_text_file(out / "eval" / "closed_book.json", final_closed.to_json());
  detail::write_text_file(out / "eval" / "closed_book.csv", final_closed.to_csv());
  manifest.reports["closed_book"] = "eval/closed_book.json";
  manifest.reports["closed_book_csv"] = "eval/closed_book.csv";
  manifest.final.em = final_closed.em;
  manifest.final.recall = final_closed.recall;
  manifest.final.rouge_l = final_closed.rouge_l;
  manifest.final.format_rate = final_closed.format_rate;
  if (config.eval.open_book) {
    EvalOptions ob = closed;
    ob.mode = EvalMode::open_book;
    const EvalReport r = evaluate_qa(model, vocab, test_qa, bundle, ob, config.eval.qa_split);
    detail::write_text_file(out / "eval" / "open_book.json", r.to_json());
    detail::write_text_file(out / "eval" / "open_book.csv", r.to_csv());
    manifest.reports["open_book"] = "eval/open_book.json";
    manifest.reports["open_book_csv"] = "eval/open_book.csv";
    manifest.final.open_book_em = r.em;
    manifest.final.open_book_recall = r.recall;
    manifest.final.open_book_rouge_l = r.rouge_l;
  }
  manifest.final.doc_ppl = doc_perplexity(model, vocab, test_docs);
  if (retention) manifest.final.retention_em = retention_probe(model, vocab, bundle.qa(splits::retention_qa), bundle);

  detail::write_text_file(out / "curve.csv", curve_csv(manifest));
  manifest.reports["curve"] = "curve.csv";
  manifest.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_atomically(out / "manifest.json", manifest.to_json());
  say("final closed-book EM " + fmt(manifest.final.em, "%.4f") +
      (manifest.final.open_book_em ? ", open-book EM " + fmt(*manifest.final.open_book_em, "%.4f") : "") +
      ", test-doc PPL " + fmt(manifest.final.doc_ppl, "%.4f"));
  return manifest;
}

std::vector<RunConfig> expand_sweep(const SweepSpec& sweep) {
  if (sweep.seeds.empty()) fail(ErrorKind::usage, "sweep needs at least one seed");
  const std::vector<std::optional<std::size_t>> epochs =
      sweep.epochs.empty() ? std::vector<std::optional<std::size_t>>{std::nullopt}
                           : std::vector<std::optional<std::size_t>>(sweep.epochs.begin(), sweep.epochs.end());
  const std::vector<std::optional<double>> lrs =
      sweep.lrs.empty() ? std::vector<std::optional<double>>{std::nullopt}
                        : std::vector<std::optional<double>>(sweep.lrs.begin(), sweep.lrs.end());
  std::vector<RunConfig> out;
  for (const auto& e : epochs)
    for (const auto& lr : lrs)
      for (std::uint64_t seed : sweep.seeds) {
        PresetOptions o = sweep.options;
        o.seed = seed;
        std::string label = sweep.preset;
        if (e) {
          if (*e < 1) fail(ErrorKind::usage, "sweep epochs must be >= 1");
          o.doc_epochs = *e;
          label += " e=" + std::to_string(*e);
        }
        if (lr) {
          if (!(*lr > 0)) fail(ErrorKind::usage, "sweep learning rates must be positive");
          o.doc_lr = *lr;
          label += " lr=" + fmt(*lr, "%g");
        }
        RunConfig c;
        c.curriculum = preset(sweep.preset, o);
        c.curriculum.eval_each_epoch = sweep.eval_each_epoch;
        c.label = label;
        c.bundle = sweep.bundle;
        c.base = sweep.base;
        c.seed = seed;
        c.eval = sweep.eval;
        out.push_back(std::move(c));
      }
  return out;
}

std::vector<RunManifest> load_manifests(const std::vector<fs::path>& paths) {
  std::vector<RunManifest> out;
  for (const auto& p : paths) {
    if (fs::is_regular_file(p)) {
      out.push_back(RunManifest::load(p));
    } else if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::recursive_directory_iterator(p))
        if (entry.is_regular_file() && entry.path().filename() == "manifest.json" &&
            entry.path().parent_path().filename() != "corpus")
          found.push_back(entry.path());
      std::sort(found.begin(), found.end());
      for (const auto& f : found) {
        std::ifstream in(f);
        std::stringstream ss;
        ss << in.rdbuf();
        // Bundle manifests share the file name; only run manifests qualify.
        if (ss.str().find("\"pitlab-manifest\"") == std::string::npos) continue;
        out.push_back(RunManifest::load(f));
      }
    } else {
      fail(ErrorKind::data, "no run manifest at " + p.string());
    }
  }
  if (out.empty()) fail(ErrorKind::data, "no run manifests found");
  std::stable_sort(out.begin(), out.end(), [](const RunManifest& a, const RunManifest& b) {
    return a.label != b.label ? a.label < b.label : a.seed < b.seed;
  });
  return out;
}

std::vector<ReportRow> summarize(const std::vector<RunManifest>& runs) {
  if (runs.empty()) fail(ErrorKind::data, "report over no runs");
  std::set<std::string> hashes;
  for (const auto& r : runs) hashes.insert(r.corpus_hash);
  if (hashes.size() > 1) {
    std::string list;
    for (const auto& h : hashes) list += (list.empty() ? "" : ", ") + h;
    fail(ErrorKind::data, "runs use different corpora (" + list + "); their numbers are not comparable");
  }
  const auto names = preset_names();
  auto order = [&](const std::string& preset) {
    auto it = std::find(names.begin(), names.end(), preset);
    return static_cast<std::size_t>(it - names.begin());
  };
  std::map<std::string, std::vector<const RunManifest*>> groups;
  for (const auto& r : runs) groups[r.label].push_back(&r);

  auto stats = [](const std::vector<double>& v, double& mean, double& spread) {
    mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    spread = 0;
    if (v.size() > 1) {
      for (double x : v) spread += (x - mean) * (x - mean);
      spread = std::sqrt(spread / static_cast<double>(v.size() - 1));
    }
  };
  std::vector<ReportRow> rows;
  for (const auto& [label, list] : groups) {
    ReportRow row;
    row.label = label;
    row.preset = list.front()->preset;
    row.runs = list.size();
    std::vector<double> em, rec, rl, ob, ppl, ret;
    for (const RunManifest* m : list) {
      em.push_back(m->final.em);
      rec.push_back(m->final.recall);
      rl.push_back(m->final.rouge_l);
      ppl.push_back(m->final.doc_ppl);
      if (m->final.open_book_em) ob.push_back(*m->final.open_book_em);
      if (m->final.retention_em) ret.push_back(*m->final.retention_em);
    }
    stats(em, row.em_mean, row.em_spread);
    stats(rec, row.recall_mean, row.recall_spread);
    stats(rl, row.rouge_mean, row.rouge_spread);
    double unused = 0, mean = 0;
    stats(ppl, row.doc_ppl_mean, unused);
    if (ob.size() == list.size()) {
      stats(ob, mean, unused);
      row.open_book_em_mean = mean;
    }
    if (ret.size() == list.size()) {
      stats(ret, mean, unused);
      row.retention_em_mean = mean;
    }
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(), [&](const ReportRow& a, const ReportRow& b) {
    const auto oa = order(a.preset), ob = order(b.preset);
    return oa != ob ? oa < ob : a.label < b.label;
  });
  return rows;
}

void write_report(const std::vector<RunManifest>& runs, const fs::path& out) {
  const auto rows = summarize(runs);
  auto pct = [](double v) { return fmt(100.0 * v, "%.1f"); };
  auto cell = [&](double mean, double spread, std::size_t n) {
    return n > 1 ? pct(mean) + " ± " + pct(spread) : pct(mean);
  };
  std::string md = "| Setting | Runs | EM | Rec. | R-L | Open-book EM | Doc PPL | Retention EM |\n"
                   "|---|---:|---:|---:|---:|---:|---:|---:|\n";
  std::string csv =
      "label,preset,runs,em_mean,em_spread,recall_mean,recall_spread,rouge_l_mean,rouge_l_spread,"
      "open_book_em_mean,doc_ppl_mean,retention_em_mean\n";
  for (const auto& r : rows) {
    md += "| " + r.label + " | " + std::to_string(r.runs) + " | " + cell(r.em_mean, r.em_spread, r.runs) + " | " +
          cell(r.recall_mean, r.recall_spread, r.runs) + " | " + cell(r.rouge_mean, r.rouge_spread, r.runs) + " | " +
          (r.open_book_em_mean ? pct(*r.open_book_em_mean) : "") + " | " + fmt(r.doc_ppl_mean, "%.3f") + " | " +
          (r.retention_em_mean ? pct(*r.retention_em_mean) : "") + " |\n";
    csv += "\"" + r.label + "\"," + r.preset + "," + std::to_string(r.runs) + "," + fmt(r.em_mean) + "," +
           fmt(r.em_spread) + "," + fmt(r.recall_mean) + "," + fmt(r.recall_spread) + "," + fmt(r.rouge_mean) + "," +
           fmt(r.rouge_spread) + "," + (r.open_book_em_mean ? fmt(*r.open_book_em_mean) : "") + "," +
           fmt(r.doc_ppl_mean) + "," + (r.retention_em_mean ? fmt(*r.retention_em_mean) : "") + "\n";
  }
  fs::create_directories(out / "curves");
  detail::write_text_file(out / "report.md", md);
  detail::write_text_file(out / "report.csv", csv);
  for (const auto& m : runs) {
    std::string name = m.label;
    for (char& c : name)
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.') c = '_';
    detail::write_text_file(out / "curves" / (name + "-seed" + std::to_string(m.seed) + ".csv"), curve_csv(m));
  }
}

Profile Profile::from_json(std::string_view text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const ojson::exception& e) {
    fail(ErrorKind::data, std::string("profile: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::data, "profile must be a JSON object");
  Profile p;
  try {
    if (j.contains("corpus")) p.corpus = corpus_from_json(j["corpus"]);
    if (j.contains("model")) p.model = detail::model_config_from_json(j["model"]);
    if (j.contains("base")) p.base = recipe_from_json(j["base"]);
    p.base_seed = get_or(j, "base_seed", p.base_seed);
    if (j.contains("presets")) p.presets = presets_from_json(j["presets"]);
    if (j.contains("eval")) p.eval = eval_from_json(j["eval"]);
    p.eval_each_epoch = get_or(j, "eval_each_epoch", p.eval_each_epoch);
    p.seeds = get_or(j, "seeds", p.seeds);
  } catch (const ojson::exception& e) {
    fail(ErrorKind::data, std::string("profile: ") + e.what());
  }
  return p;
}

Profile Profile::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::data, "cannot open profile " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string Profile::to_json() const {
  ojson j;
  j["corpus"] = pitlab::to_json(corpus);
  j["model"] = detail::to_json(model);
  j["base"] = pitlab::to_json(base);
  j["base_seed"] = base_seed;
  j["presets"] = pitlab::to_json(presets);
  j["eval"] = pitlab::to_json(eval);
  j["eval_each_epoch"] = eval_each_epoch;
  j["seeds"] = seeds;
  return j.dump(2) + "\n";
}

fs::path output_root() {
  const char* v = std::getenv(output_root_env);
  return v && *v ? fs::path(v) : fs::current_path() / "runs";
}

}  // namespace pitlab
