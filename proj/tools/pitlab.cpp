// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0
//
// pitlab command-line front end. Anything that changes results lives in a
// JSON file (profile, run config, curriculum); flags only choose files,
// presets and seeds.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pitlab/baseprep.hpp"
#include "pitlab/checkpoint.hpp"
#include "pitlab/corpus.hpp"
#include "pitlab/curriculum.hpp"
#include "pitlab/error.hpp"
#include "pitlab/eval.hpp"
#include "pitlab/experiment.hpp"

namespace fs = std::filesystem;
using namespace pitlab;

namespace {

void log_line(const std::string& s) {
  std::cerr << s << std::endl;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::data, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::data, "cannot write " + path.string());
  out << text;
}

Profile load_profile(const std::string& path) {
  return path.empty() ? Profile{} : Profile::load(path);
}

fs::path out_or_default(const std::string& out, const std::string& fallback) {
  return out.empty() ? output_root() / fallback : fs::path(out);
}

// "oldworld=300,train=100,test=48,xdomain=0"
void apply_counts(CorpusOptions& c, const std::string& spec) {
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) fail(ErrorKind::usage, "--counts expects split=count pairs, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    int n = 0;
    try {
      std::size_t used = 0;
      n = std::stoi(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1 || n < 0) throw std::invalid_argument("count");
    } catch (const std::exception&) {
      fail(ErrorKind::usage, "--counts: bad count in '" + item + "'");
    }
    if (key == "oldworld") c.oldworld.entities = n;
    else if (key == "train") c.train.entities = n;
    else if (key == "test") c.test.entities = n;
    else if (key == "xdomain" || key == "xdomain_train") c.xdomain_train.entities = n;
    else if (key == "retention") c.retention_qa = n;
    else fail(ErrorKind::usage, "--counts: unknown split '" + key + "' (oldworld, train, test, xdomain, retention)");
  }
}

std::vector<double> parse_doubles(const std::string& s, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      fail(ErrorKind::usage, std::string(flag) + ": not a number: '" + item + "'");
    }
  }
  return out;
}

template <typename U>
std::vector<U> parse_unsigned(const std::string& s, const char* flag) {
  std::vector<U> out;
  for (double v : parse_doubles(s, flag)) {
    if (v < 0 || v != static_cast<double>(static_cast<U>(v)))
      fail(ErrorKind::usage, std::string(flag) + ": expected non-negative integers");
    out.push_back(static_cast<U>(v));
  }
  return out;
}

std::string run_dir_name(const RunConfig& c) {
  std::string name = c.label.empty() ? c.curriculum.name : c.label;
  for (char& ch : name)
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_' && ch != '-' && ch != '.') ch = '_';
  return name + "-seed" + std::to_string(c.seed);
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return 1;
    case ErrorKind::data: return 2;
    case ErrorKind::numerical: return 3;
    case ErrorKind::state: return 1;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pitlab: knowledge-injection curricula on a desk-scale transformer"};
  app.require_subcommand(1);

  // generate-corpus
  auto* gen = app.add_subcommand("generate-corpus", "Generate a synthetic biography bundle");
  std::string gen_schema, gen_counts, gen_profile, gen_out;
  int gen_qa = -1;
  std::uint64_t gen_seed = 0;
  bool gen_seed_set = false;
  gen->add_option("--schema", gen_schema, "JSON domain schema file (default: built-in film/politics/music)");
  gen->add_option("--counts", gen_counts, "Entity counts, e.g. oldworld=300,train=100,test=48,xdomain=0");
  gen->add_option("--qa-per-entity", gen_qa, "QA pairs per entity");
  gen->add_option("--seed", gen_seed, "Generator seed")->each([&](const std::string&) { gen_seed_set = true; });
  gen->add_option("--profile", gen_profile, "Profile JSON supplying corpus options");
  gen->add_option("--out", gen_out, "Bundle directory");

  // pretrain-base
  auto* base = app.add_subcommand("pretrain-base", "Train the old-world base checkpoint");
  std::string base_bundle, base_profile, base_out;
  std::uint64_t base_seed = 0;
  bool base_seed_set = false, base_no_enforce = false;
  base->add_option("--bundle", base_bundle, "Bundle manifest")->required();
  base->add_option("--profile", base_profile, "Profile JSON (model and base recipe)");
  base->add_option("--seed", base_seed, "Training seed")->each([&](const std::string&) { base_seed_set = true; });
  base->add_flag("--no-enforce", base_no_enforce, "Keep a base that misses the retention/perplexity bars");
  base->add_option("--out", base_out, "Checkpoint directory");

  // train
  auto* train = app.add_subcommand("train", "Run one curriculum");
  std::string tr_config, tr_preset, tr_profile, tr_bundle, tr_base, tr_out;
  std::uint64_t tr_seed = 1;
  auto* tr_config_opt = train->add_option("--config", tr_config, "Run config JSON");
  train->add_option("--preset", tr_preset, "Preset curriculum name")->excludes(tr_config_opt);
  train->add_option("--profile", tr_profile, "Profile JSON for preset options")->excludes(tr_config_opt);
  train->add_option("--bundle", tr_bundle, "Bundle manifest")->excludes(tr_config_opt);
  train->add_option("--base", tr_base, "Base checkpoint directory")->excludes(tr_config_opt);
  train->add_option("--seed", tr_seed, "Run seed")->excludes(tr_config_opt);
  train->add_option("--out", tr_out, "Run directory");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run a preset over epochs x learning rates x seeds");
  std::string sw_preset, sw_profile, sw_bundle, sw_base, sw_out, sw_epochs, sw_lrs, sw_seeds;
  bool sw_dry = false;
  sweep->add_option("--preset", sw_preset, "Preset curriculum name")->required();
  sweep->add_option("--profile", sw_profile, "Profile JSON");
  sweep->add_option("--bundle", sw_bundle, "Bundle manifest")->required();
  sweep->add_option("--base", sw_base, "Base checkpoint directory")->required();
  sweep->add_option("--epochs-list", sw_epochs, "Comma-separated document epochs");
  sweep->add_option("--lr-list", sw_lrs, "Comma-separated document learning rates");
  sweep->add_option("--seeds", sw_seeds, "Comma-separated seeds (default: profile seeds)");
  sweep->add_flag("--dry-run", sw_dry, "Write the run configs without training");
  sweep->add_option("--out", sw_out, "Sweep directory");

  // report
  auto* report = app.add_subcommand("report", "Tabulate run manifests");
  std::vector<std::string> rp_runs;
  std::string rp_out;
  report->add_option("--runs", rp_runs, "Manifest files or directories")->required();
  report->add_option("--out", rp_out, "Report directory");

  // preset
  auto* pre = app.add_subcommand("preset", "Print a preset curriculum as JSON");
  std::string pr_name, pr_profile;
  std::uint64_t pr_seed = 1;
  bool pr_list = false;
  pre->add_option("name", pr_name, "Preset name");
  pre->add_option("--profile", pr_profile, "Profile JSON for preset options");
  pre->add_option("--seed", pr_seed, "Curriculum seed");
  pre->add_flag("--list", pr_list, "List preset names");

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a QA split");
  std::string ev_ckpt, ev_bundle, ev_split = "test_qa", ev_docs, ev_mode = "closed_book", ev_out;
  std::size_t ev_max_new = 12;
  ev->add_option("--checkpoint", ev_ckpt, "Checkpoint directory")->required();
  ev->add_option("--bundle", ev_bundle, "Bundle manifest")->required();
  ev->add_option("--split", ev_split, "QA split");
  ev->add_option("--doc-split", ev_docs, "Document split for perplexity");
  ev->add_option("--mode", ev_mode, "closed_book, open_book or fewshot");
  ev->add_option("--max-new", ev_max_new, "Maximum answer tokens");
  ev->add_option("--out", ev_out, "Report JSON path (CSV written alongside)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      Profile profile = load_profile(gen_profile);
      CorpusOptions options = profile.corpus;
      if (!gen_schema.empty()) options.schemas = load_schemas(gen_schema);
      if (!gen_counts.empty()) apply_counts(options, gen_counts);
      if (gen_qa >= 0) options.qa_per_entity = gen_qa;
      if (gen_seed_set) options.seed = gen_seed;
      const fs::path out = out_or_default(gen_out, "corpus");
      if (fs::exists(out / "manifest.json"))
        fail(ErrorKind::data, "refusing to overwrite existing bundle " + out.string());
      const CorpusBundle bundle = generate_corpus(options);
      export_bundle(bundle, out);
      std::cout << "bundle " << out.string() << " corpus_hash " << corpus_hash(bundle) << "\n";
      return 0;
    }

    if (*base) {
      const Profile profile = load_profile(base_profile);
      const CorpusBundle bundle = import_bundle(base_bundle);
      const fs::path out = out_or_default(base_out, "base");
      if (is_checkpoint(out)) fail(ErrorKind::data, "refusing to overwrite existing checkpoint " + out.string());
      const std::uint64_t seed = base_seed_set ? base_seed : profile.base_seed;
      const auto started = std::chrono::steady_clock::now();
      auto result = pretrain_base<float>(bundle, profile.model, profile.base, seed, !base_no_enforce,
                                         [](const EpochMetrics& e) {
                                           char buf[128];
                                           std::snprintf(buf, sizeof buf, "epoch %zu loss %.4f lr %.3g", e.epoch,
                                                         e.train_loss, e.lr);
                                           log_line(buf);
                                         });
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      char buf[64];
      auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.6g", v);
        return std::string(buf);
      };
      save_checkpoint<float>(out, result.model, result.vocab, nullptr, 0,
                             {{"role", "base"},
                              {"corpus_hash", corpus_hash(bundle)},
                              {"seed", std::to_string(seed)},
                              {"retention_em", num(result.retention_em)},
                              {"format_rate", num(result.format_rate)},
                              {"doc_ppl", num(result.doc_ppl)},
                              {"wall_clock_seconds", num(secs)}});
      std::cout << "base " << out.string() << " retention_em " << result.retention_em << " format_rate "
                << result.format_rate << " doc_ppl " << result.doc_ppl << "\n";
      return 0;
    }

    if (*train) {
      RunConfig config;
      if (!tr_config.empty()) {
        config = RunConfig::from_json(slurp(tr_config), fs::path(tr_config).parent_path());
      } else {
        if (tr_preset.empty() || tr_bundle.empty() || tr_base.empty())
          fail(ErrorKind::usage, "train needs --config, or --preset with --bundle and --base");
        const Profile profile = load_profile(tr_profile);
        PresetOptions o = profile.presets;
        o.seed = tr_seed;
        config.curriculum = preset(tr_preset, o);
        config.curriculum.eval_each_epoch = profile.eval_each_epoch;
        config.label = tr_preset;
        config.bundle = tr_bundle;
        config.base = tr_base;
        config.seed = tr_seed;
        config.eval = profile.eval;
      }
      const fs::path out = out_or_default(tr_out, run_dir_name(config));
      const RunManifest m = run_experiment(config, out, log_line);
      std::cout << "run " << out.string() << " em " << m.final.em << " doc_ppl " << m.final.doc_ppl << "\n";
      return 0;
    }

    if (*sweep) {
      const Profile profile = load_profile(sw_profile);
      SweepSpec spec;
      spec.preset = sw_preset;
      spec.options = profile.presets;
      if (!sw_epochs.empty()) spec.epochs = parse_unsigned<std::size_t>(sw_epochs, "--epochs-list");
      if (!sw_lrs.empty()) spec.lrs = parse_doubles(sw_lrs, "--lr-list");
      spec.seeds = sw_seeds.empty() ? profile.seeds : parse_unsigned<std::uint64_t>(sw_seeds, "--seeds");
      spec.bundle = sw_bundle;
      spec.base = sw_base;
      spec.eval = profile.eval;
      spec.eval_each_epoch = profile.eval_each_epoch;
      const auto configs = expand_sweep(spec);
      if (!fs::exists(spec.bundle)) fail(ErrorKind::data, "bundle manifest not found: " + spec.bundle.string());
      const fs::path out = out_or_default(sw_out, "sweep-" + sw_preset);
      for (const auto& c : configs) {
        const fs::path dir = out / run_dir_name(c);
        if (sw_dry) {
          write_file(dir / "run_config.json", c.to_json());
          continue;
        }
        if (fs::exists(dir / "manifest.json")) {
          log_line("skip " + dir.string() + " (manifest exists)");
          continue;
        }
        log_line("run " + dir.string());
        run_experiment(c, dir, log_line);
      }
      std::cout << "sweep " << out.string() << " cells " << configs.size() << "\n";
      return 0;
    }

    if (*report) {
      std::vector<fs::path> paths(rp_runs.begin(), rp_runs.end());
      const auto runs = load_manifests(paths);
      const fs::path out = out_or_default(rp_out, "report");
      write_report(runs, out);
      std::cout << slurp(out / "report.md");
      return 0;
    }

    if (*pre) {
      if (pr_list) {
        for (const auto& n : preset_names()) std::cout << n << "\n";
        return 0;
      }
      if (pr_name.empty()) fail(ErrorKind::usage, "preset needs a name (or --list)");
      const Profile profile = load_profile(pr_profile);
      PresetOptions o = profile.presets;
      o.seed = pr_seed;
      CurriculumSpec spec = preset(pr_name, o);
      spec.eval_each_epoch = profile.eval_each_epoch;
      std::cout << spec.to_json();
      return 0;
    }

    if (*ev) {
      const CorpusBundle bundle = import_bundle(ev_bundle);
      const Checkpoint<float> ckpt = load_checkpoint<float>(ev_ckpt);
      if (!bundle.has_split(ev_split)) fail(ErrorKind::data, "bundle has no split '" + ev_split + "'");
      EvalOptions options;
      options.mode = eval_mode_from_string(ev_mode);
      options.max_new = ev_max_new;
      const std::vector<QAPair> pool =
          bundle.has_split(splits::oldworld_qa) ? bundle.qa(splits::oldworld_qa) : std::vector<QAPair>{};
      options.exemplar_pool = pool;
      EvalReport r = evaluate_qa(ckpt.model, ckpt.vocab, bundle.qa(ev_split), bundle, options, ev_split);
      if (!ev_docs.empty()) {
        if (!bundle.has_split(ev_docs)) fail(ErrorKind::data, "bundle has no split '" + ev_docs + "'");
        r.doc_ppl = doc_perplexity(ckpt.model, ckpt.vocab, bundle.docs(ev_docs));
      }
      if (!ev_out.empty()) {
        write_file(ev_out, r.to_json());
        write_file(fs::path(ev_out).replace_extension(".csv"), r.to_csv());
      }
      std::cout << "split " << ev_split << " mode " << r.mode << " em " << r.em << " recall " << r.recall
                << " rouge_l " << r.rouge_l << " format_rate " << r.format_rate;
      if (r.doc_ppl) std::cout << " doc_ppl " << *r.doc_ppl;
      std::cout << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "pitlab: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "pitlab: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
