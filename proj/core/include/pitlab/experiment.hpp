// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pitlab/baseprep.hpp"
#include "pitlab/corpus.hpp"
#include "pitlab/curriculum.hpp"
#include "pitlab/model.hpp"

namespace pitlab {

inline constexpr const char* code_version = "pitlab 0.1.0";

struct EvalSettings {
  std::string qa_split = "test_qa";
  std::string doc_split = "test_doc";
  bool retention = true;
  /// Also score the final checkpoint with the source document in the prompt.
  bool open_book = true;
  std::size_t max_new = 12;
  std::size_t batch_size = 64;

  friend bool operator==(const EvalSettings&, const EvalSettings&) = default;
};

/// Everything that determines a run's numbers.
struct RunConfig {
  std::string label;  // table row name; defaults to the curriculum name
  CurriculumSpec curriculum;
  std::filesystem::path bundle;  // bundle manifest
  std::filesystem::path base;    // base checkpoint directory
  std::uint64_t seed = 1;
  EvalSettings eval;

  std::string to_json() const;
  static RunConfig from_json(std::string_view text, const std::filesystem::path& relative_to = {});
  /// Hash of the canonical JSON form.
  std::string hash() const;
};

struct PhaseRecord {
  std::string name;
  std::size_t epochs = 0;
  double lr = 0.0;
  std::size_t batch_size = 0;
  std::size_t steps = 0;
};

struct FinalMetrics {
  double em = 0.0;
  double recall = 0.0;
  double rouge_l = 0.0;
  double format_rate = 0.0;
  std::optional<double> open_book_em;
  std::optional<double> open_book_recall;
  std::optional<double> open_book_rouge_l;
  double doc_ppl = 0.0;
  std::optional<double> retention_em;
};

struct RunManifest {
  std::string label;
  std::string preset;
  std::string config_hash;
  std::string corpus_hash;
  std::string base_vocab_hash;
  std::uint64_t seed = 0;
  std::string code_version;
  double wall_clock_seconds = 0.0;
  std::vector<PhaseRecord> phases;
  /// Epoch 0 of phase "base" holds the metrics of the starting checkpoint.
  std::vector<EpochMetrics> epochs;
  FinalMetrics final;
  std::map<std::string, std::string> reports;  // name -> path relative to the run directory

  std::string to_json() const;
  static RunManifest from_json(std::string_view text);
  static RunManifest load(const std::filesystem::path& path);
};

using LogFn = std::function<void(const std::string&)>;

/// Trains and evaluates one run into `out`: run_config.json,
/// curriculum.json, checkpoints/phase-N/, eval/*.json|csv, curve.csv and
/// finally manifest.json. Existing phase checkpoints from the same config are
/// reused; a checkpoint from a different config is a data error, as is an
/// existing manifest.json.
RunManifest run_experiment(const RunConfig& config, const std::filesystem::path& out, const LogFn& log = {});

/// Axis values of a sweep; empty axes keep the preset default.
struct SweepSpec {
  std::string preset;
  PresetOptions options;
  std::vector<std::size_t> epochs;
  std::vector<double> lrs;
  std::vector<std::uint64_t> seeds{1};
  std::filesystem::path bundle;
  std::filesystem::path base;
  EvalSettings eval;
  bool eval_each_epoch = true;
};

/// Expands a sweep into run configs; epoch/lr overrides apply to
/// document-bearing phases.
std::vector<RunConfig> expand_sweep(const SweepSpec& sweep);

/// Manifests under each path (a manifest file, or a directory searched
/// recursively for manifest.json), sorted by label then seed.
std::vector<RunManifest> load_manifests(const std::vector<std::filesystem::path>& paths);

struct ReportRow {
  std::string label;
  std::string preset;
  std::size_t runs = 0;
  double em_mean = 0, em_spread = 0;
  double recall_mean = 0, recall_spread = 0;
  double rouge_mean = 0, rouge_spread = 0;
  std::optional<double> open_book_em_mean;
  double doc_ppl_mean = 0;
  std::optional<double> retention_em_mean;
};

/// One row per label, mean and sample standard deviation over seeds, rows in
/// preset order. Mixed corpus hashes are a data error.
std::vector<ReportRow> summarize(const std::vector<RunManifest>& runs);

/// Writes report.md, report.csv and curves/<label>-seed<N>.csv into `out`.
void write_report(const std::vector<RunManifest>& runs, const std::filesystem::path& out);

/// Settings file shared by the CLI and the acceptance suite.
struct Profile {
  CorpusOptions corpus;
  ModelConfig model;
  BaseRecipe base;
  std::uint64_t base_seed = 1;
  PresetOptions presets;
  EvalSettings eval;
  bool eval_each_epoch = true;
  std::vector<std::uint64_t> seeds{1, 2, 3};

  static Profile from_json(std::string_view text);
  static Profile load(const std::filesystem::path& path);
  std::string to_json() const;
};

/// Environment variable naming the default output root.
inline constexpr const char* output_root_env = "PITLAB_OUTPUT_ROOT";
std::filesystem::path output_root();

}  // namespace pitlab
