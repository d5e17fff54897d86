// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion.
//
// Criteria 1-4 rerun the property suites of pitlab_tests. Criteria 5-10
// train the preset curricula on the acceptance profile. The bundle, the base
// checkpoint and every run are cached under --cache, keyed by the profile
// hash, so an interrupted suite resumes where it stopped.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "pitlab/baseprep.hpp"
#include "pitlab/checkpoint.hpp"
#include "pitlab/eval.hpp"
#include "pitlab/experiment.hpp"
#include "pitlab/hash.hpp"

using namespace pitlab;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  int criterion;
  bool pass;
  std::string detail;
};

std::vector<Verdict> verdicts;

void report(int criterion, bool pass, const std::string& detail) {
  verdicts.push_back({criterion, pass, detail});
  std::cout << "criterion " << criterion << ": " << (pass ? "PASS" : "FAIL") << " (" << detail << ")" << std::endl;
}

void progress(const std::string& line) { std::cerr << "  " << line << std::endl; }

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100 * v);
  return buf;
}

std::string num(double v, const char* f = "%.4f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

// Runs a filtered slice of the unit-test binary; returns (passed, seconds).
std::pair<bool, double> run_suite(const std::string& binary, const std::string& filters) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string cmd = binary + " " + filters + " --no-intro=true --minimal=true 1>&2";
  const int status = std::system(cmd.c_str());
  const bool ok = WIFEXITED(status) && WEXITSTATUS(status) == 0;
  return {ok, seconds_since(t0)};
}

// Manifest without the timing field.
std::string stable(RunManifest m) {
  m.wall_clock_seconds = 0;
  return m.to_json();
}

struct Lab {
  Profile profile;
  fs::path root;
  fs::path bundle;
  fs::path base;
  std::map<std::string, std::vector<RunManifest>> runs;  // preset -> one per seed

  RunConfig config(const std::string& name, std::uint64_t seed, bool each_epoch) const {
    PresetOptions o = profile.presets;
    o.seed = seed;
    RunConfig c;
    c.curriculum = preset(name, o);
    c.curriculum.eval_each_epoch = each_epoch;
    c.label = name;
    c.bundle = bundle;
    c.base = base;
    c.seed = seed;
    c.eval = profile.eval;
    return c;
  }

  fs::path run_dir(const std::string& name, std::uint64_t seed) const {
    return root / "runs" / (name + "-seed" + std::to_string(seed));
  }

  void prepare() {
    fs::create_directories(root);
    {
      std::ofstream(root / "profile.json") << profile.to_json();
    }
    bundle = root / "bundle" / "manifest.json";
    if (!fs::exists(bundle)) {
      progress("generating bundle");
      const fs::path tmp = root / "bundle.tmp";
      fs::remove_all(tmp);
      export_bundle(generate_corpus(profile.corpus), tmp);
      fs::rename(tmp, root / "bundle");
    }
    base = root / "base";
    if (!fs::exists(base / "manifest.json")) {
      progress("training base checkpoint");
      const CorpusBundle b = import_bundle(bundle);
      const auto t0 = std::chrono::steady_clock::now();
      auto r = pretrain_base<float>(b, profile.model, profile.base, profile.base_seed, false,
                                    [](const EpochMetrics& e) {
                                      progress("base epoch " + std::to_string(e.epoch) + " loss " +
                                               num(e.train_loss));
                                    });
      const fs::path tmp = root / "base.tmp";
      fs::remove_all(tmp);
      save_checkpoint<float>(tmp, r.model, r.vocab, nullptr, 0,
                             {{"role", "base"},
                              {"corpus_hash", corpus_hash(b)},
                              {"retention_em", num(r.retention_em, "%.17g")},
                              {"format_rate", num(r.format_rate, "%.17g")},
                              {"doc_ppl", num(r.doc_ppl, "%.17g")},
                              {"wall_clock_seconds", num(seconds_since(t0), "%.1f")}});
      fs::rename(tmp, base);
    }
    const auto meta = read_checkpoint_meta(base);
    const double retention = std::stod(meta.at("retention_em")), ppl = std::stod(meta.at("doc_ppl")),
                 format = std::stod(meta.at("format_rate"));
    const BaseRecipe& r = profile.base;
    std::cout << "base: retention EM " << pct(retention) << "% (bar " << pct(r.retention_threshold)
              << "%), old-world doc PPL " << num(ppl) << " (bar " << num(r.ppl_threshold, "%.2f")
              << "), format rate " << pct(format) << "% (bar " << pct(r.format_threshold) << "%)" << std::endl;
  }

  const std::vector<RunManifest>& get(const std::string& name) {
    auto it = runs.find(name);
    if (it != runs.end()) return it->second;
    std::vector<RunManifest> out;
    for (std::uint64_t seed : profile.seeds) {
      const fs::path dir = run_dir(name, seed);
      if (fs::exists(dir / "manifest.json")) {
        out.push_back(RunManifest::load(dir / "manifest.json"));
        continue;
      }
      progress("run " + name + " seed " + std::to_string(seed));
      out.push_back(run_experiment(config(name, seed, name == "cont_pretrain"), dir, progress));
    }
    return runs[name] = out;
  }

  double mean_em(const std::string& name) {
    double s = 0;
    const auto& r = get(name);
    for (const auto& m : r) s += m.final.em;
    return s / static_cast<double>(r.size());
  }

  std::string per_seed(const std::string& name) {
    std::string s;
    for (const auto& m : get(name)) s += (s.empty() ? "" : "/") + pct(m.final.em);
    return s;
  }
};

void criterion_5(Lab& lab) {
  const auto& runs = lab.get("cont_pretrain");
  // Mean curve over seeds of the document phase, plus the starting point.
  std::vector<double> em, ppl;
  const std::size_t n = runs.front().epochs.size();
  for (std::size_t i = 0; i < n; ++i) {
    double e = 0, p = 0;
    for (const auto& m : runs) {
      e += m.epochs.at(i).test_em.value_or(0);
      p += m.epochs.at(i).doc_ppl.value_or(0);
    }
    em.push_back(e / static_cast<double>(runs.size()));
    ppl.push_back(p / static_cast<double>(runs.size()));
  }
  std::size_t drops = 0;
  for (std::size_t i = 1; i < em.size(); ++i) drops += em[i] < em[i - 1];
  double open = 0, closed = 0, final_ppl = 0;
  for (const auto& m : runs) {
    open += m.final.open_book_em.value_or(0);
    closed += m.final.em;
    final_ppl += m.final.doc_ppl;
  }
  const double k = static_cast<double>(runs.size());
  open /= k;
  closed /= k;
  final_ppl /= k;
  const bool ppl_ok = final_ppl <= 1.05;
  const bool rises = drops <= 1 && em.back() > em.front();
  const bool gap_ok = open - closed >= 0.20;
  std::string curve;
  for (double e : em) curve += (curve.empty() ? "" : " ") + pct(e);
  report(5, ppl_ok && rises && gap_ok,
         "test-doc PPL " + num(final_ppl) + " (<= 1.05 " + (ppl_ok ? "ok" : "missed") + "); closed-book EM by epoch [" +
             curve + "] with " + std::to_string(drops) + " drop(s) (" + (rises ? "ok" : "missed") +
             "); open-book EM " + pct(open) + " vs closed-book " + pct(closed) + " (gap >= 20 " +
             (gap_ok ? "ok" : "missed") + ")");
}

void criterion_6(Lab& lab) {
  const double pp = lab.mean_em("pit_pp"), pit = lab.mean_em("pit"), mix = lab.mean_em("mix_all"),
               it = lab.mean_em("standard_it");
  const bool ok = pp >= pit && pit > mix && mix > it && pit - it >= 0.05;
  report(6, ok,
         "EM pit_pp " + pct(pp) + " [" + lab.per_seed("pit_pp") + "] >= pit " + pct(pit) + " [" + lab.per_seed("pit") +
             "] > mix_all " + pct(mix) + " [" + lab.per_seed("mix_all") + "] > standard_it " + pct(it) + " [" +
             lab.per_seed("standard_it") + "], pit - standard_it " + pct(pit - it) + " (>= 5.0)");
}

void criterion_7(Lab& lab) {
  const double gb = lab.mean_em("pit_grouped_before"), ga = lab.mean_em("pit_grouped_after"),
               ib = lab.mean_em("pit_interleaved_before"), ia = lab.mean_em("pit_interleaved_after");
  report(7, gb - ga >= 0.03 && ib >= ia,
         "grouped before " + pct(gb) + " vs after " + pct(ga) + " (diff " + pct(gb - ga) +
             ", >= 3.0); interleaved before " + pct(ib) + " vs after " + pct(ia));
}

void criterion_8(Lab& lab) {
  const double it = lab.mean_em("standard_it"), nf = lab.mean_em("it_no_forget"), cp = lab.mean_em("cont_pretrain"),
               wcp = lab.mean_em("weighted_cont_pretrain");
  report(8, nf - it <= 0.02 && wcp - cp <= 0.02,
         "it_no_forget " + pct(nf) + " - standard_it " + pct(it) + " = " + pct(nf - it) +
             " (<= 2.0); weighted_cont_pretrain " + pct(wcp) + " - cont_pretrain " + pct(cp) + " = " +
             pct(wcp - cp) + " (<= 2.0)");
}

void criterion_9(Lab& lab) {
  const double x = lab.mean_em("xdomain_pit"), s = lab.mean_em("xdomain_standard_it");
  report(9, x - s >= 0.03,
         "xdomain_pit " + pct(x) + " vs xdomain_standard_it " + pct(s) + " (diff " + pct(x - s) + ", >= 3.0)");
}

void criterion_10(Lab& lab) {
  // Regenerate one reported cell from its stored config alone.
  const std::uint64_t seed = lab.profile.seeds.front();
  const fs::path dir = lab.run_dir("pit", seed);
  lab.get("pit");
  const RunManifest reported = RunManifest::load(dir / "manifest.json");
  const RunConfig stored = RunConfig::from_json(slurp(dir / "run_config.json"));
  const fs::path again = lab.root / "regenerated";
  fs::remove_all(again);
  progress("regenerating pit seed " + std::to_string(seed));
  const RunManifest redo = run_experiment(stored, again, progress);
  bool same_cell = stable(redo) == stable(reported);
  for (const char* f : {"eval/closed_book.json", "eval/open_book.json", "curve.csv"})
    same_cell = same_cell && slurp(dir / f) == slurp(again / f);

  // Checkpoint round trip of the final phase.
  const fs::path last = dir / "checkpoints" / ("phase-" + std::to_string(reported.phases.size()));
  const auto ck = load_checkpoint<float>(last);
  const fs::path copy = lab.root / "roundtrip";
  fs::remove_all(copy);
  save_checkpoint<float>(copy, ck.model, ck.vocab, ck.optim ? &*ck.optim : nullptr, ck.step, ck.meta);
  const auto back = load_checkpoint<float>(copy);
  bool same_ckpt = back.vocab == ck.vocab && back.step == ck.step && back.optim == ck.optim;
  for (std::size_t i = 0; i < ck.model.parameters().size(); ++i)
    same_ckpt = same_ckpt && back.model.parameters()[i].value == ck.model.parameters()[i].value;
  const CorpusBundle b = import_bundle(lab.bundle);
  const TokenSequence probe = eval_prompt(b.qa(splits::test_qa).front(), ck.vocab, EvalMode::closed_book);
  same_ckpt = same_ckpt && back.model.logits(probe) == ck.model.logits(probe);
  fs::remove_all(copy);
  fs::remove_all(again);
  report(10, same_cell && same_ckpt,
         std::string("pit seed ") + std::to_string(seed) + " regenerated from run_config.json " +
             (same_cell ? "bit-identical" : "DIFFERS") + "; checkpoint save/load " +
             (same_ckpt ? "bit-identical" : "DIFFERS"));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pitlab acceptance suite"};
  std::string profile_path = PITLAB_ACCEPTANCE_PROFILE;
  std::string cache = "acceptance-cache";
  std::string unit_tests = PITLAB_UNIT_TESTS;
  std::vector<int> only;
  app.add_option("--profile", profile_path, "Acceptance profile JSON");
  app.add_option("--cache", cache, "Cache directory for the bundle, base checkpoint and runs");
  app.add_option("--unit-tests", unit_tests, "pitlab_tests binary used by criteria 1-4");
  app.add_option("--criteria", only, "Criteria to run (default: all)");
  CLI11_PARSE(app, argc, argv);
  auto wanted = [&](int c) { return only.empty() || std::find(only.begin(), only.end(), c) != only.end(); };

  try {
    const auto started = std::chrono::steady_clock::now();
    if (wanted(1)) {
      const auto [ok, secs] = run_suite(
          unit_tests, "--test-suite=tensorcore,model --test-case='*central differences*,*gradient*,*agree with double*'");
      report(1, ok && secs < 120,
             std::string("finite-difference checks ") + (ok ? "pass" : "fail") + " in " + num(secs, "%.1f") + " s (< 120 s)");
    }
    if (wanted(2)) {
      const auto [ok, secs] = run_suite(
          unit_tests,
          "--test-suite=curriculum --test-case='*zero-weight*,*question tokens*,*unweighted token-mean*,"
          "*exp of the pooled*,*per-example weighted means*,*document examples*'");
      report(2, ok, std::string("masking, L_d and perplexity identities ") + (ok ? "hold" : "fail") + " (" +
                        num(secs, "%.1f") + " s)");
    }
    if (wanted(3)) {
      const auto [ok, secs] =
          run_suite(unit_tests, "--test-suite=eval --test-case='*goldens*,*metric examples*,*brute-force*'");
      report(3, ok, std::string("normalization goldens and 1000-pair metric oracles ") + (ok ? "match" : "fail") +
                        " (" + num(secs, "%.1f") + " s)");
    }
    if (wanted(4)) {
      const auto [ok, secs] = run_suite(unit_tests, "--test-suite=optim");
      report(4, ok, std::string("schedule endpoints, hand-computed AdamW steps and quadratic descent ") +
                        (ok ? "pass" : "fail") + " (" + num(secs, "%.1f") + " s)");
    }

    const bool needs_lab = wanted(5) || wanted(6) || wanted(7) || wanted(8) || wanted(9) || wanted(10);
    if (needs_lab) {
      Lab lab;
      lab.profile = Profile::load(profile_path);
      lab.root = fs::absolute(cache) / hash_hex(lab.profile.to_json());
      std::cout << "profile " << profile_path << ", cache " << lab.root.string() << std::endl;
      lab.prepare();
      if (wanted(5)) criterion_5(lab);
      if (wanted(6)) criterion_6(lab);
      if (wanted(7)) criterion_7(lab);
      if (wanted(8)) criterion_8(lab);
      if (wanted(9)) criterion_9(lab);
      if (wanted(10)) criterion_10(lab);

      std::vector<RunManifest> all;
      for (const auto& [_, rs] : lab.runs) all.insert(all.end(), rs.begin(), rs.end());
      if (!all.empty()) {
        write_report(all, lab.root / "report");
        std::cout << "report " << (lab.root / "report" / "report.md").string() << std::endl;
      }
    }
    std::size_t failed = 0;
    for (const auto& v : verdicts) failed += !v.pass;
    std::cout << "acceptance: " << verdicts.size() - failed << "/" << verdicts.size() << " criteria pass in "
              << num(seconds_since(started), "%.0f") << " s" << std::endl;
    return failed == 0 ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
}
