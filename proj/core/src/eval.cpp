// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

#include "pitlab/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "json_io.hpp"
#include "pitlab/random.hpp"

namespace pitlab {

using detail::ojson;

std::string normalize(std::string_view text) {
  std::string s;
  s.reserve(text.size());
  for (unsigned char c : text) {
    if (std::ispunct(c)) continue;
    s.push_back(static_cast<char>(std::tolower(c)));
  }
  std::istringstream words(s);
  std::string w, out;
  while (words >> w) {
    if (w == "a" || w == "an" || w == "the") continue;
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

bool exact_match(std::string_view prediction, std::string_view gold) {
  return normalize(prediction) == normalize(gold);
}

bool answer_recall(std::string_view prediction, std::string_view gold) {
  return normalize(prediction).find(normalize(gold)) != std::string::npos;
}

namespace {

std::vector<std::string> tokens_of(std::string_view text) {
  std::istringstream in(normalize(text));
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

double rouge_l(std::string_view prediction, std::string_view gold) {
  const auto p = tokens_of(prediction);
  const auto g = tokens_of(gold);
  if (p.empty() && g.empty()) return 1.0;
  if (p.empty() || g.empty()) return 0.0;
  std::vector<std::size_t> prev(g.size() + 1, 0), cur(g.size() + 1, 0);
  for (std::size_t i = 1; i <= p.size(); ++i) {
    for (std::size_t j = 1; j <= g.size(); ++j)
      cur[j] = p[i - 1] == g[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  const double lcs = static_cast<double>(prev[g.size()]);
  if (lcs == 0) return 0.0;
  const double precision = lcs / static_cast<double>(p.size());
  const double recall = lcs / static_cast<double>(g.size());
  return 2 * precision * recall / (precision + recall);
}

std::string to_string(EvalMode mode) {
  switch (mode) {
    case EvalMode::closed_book: return "closed_book";
    case EvalMode::open_book: return "open_book";
    case EvalMode::fewshot: return "fewshot";
  }
  return "closed_book";
}

EvalMode eval_mode_from_string(std::string_view s) {
  if (s == "closed_book") return EvalMode::closed_book;
  if (s == "open_book") return EvalMode::open_book;
  if (s == "fewshot") return EvalMode::fewshot;
  fail(ErrorKind::usage, "unknown eval mode '" + std::string(s) + "' (closed_book, open_book, fewshot)");
}

std::string EvalReport::to_json() const {
  ojson j;
  j["split"] = split;
  j["mode"] = mode;
  j["count"] = count;
  j["em"] = em;
  j["recall"] = recall;
  j["rouge_l"] = rouge_l;
  j["format_rate"] = format_rate;
  if (doc_ppl) j["doc_ppl"] = *doc_ppl;
  if (retention_em) j["retention_em"] = *retention_em;
  j["records"] = ojson::array();
  for (const auto& r : records) {
    ojson jr;
    jr["id"] = r.id;
    jr["question"] = r.question;
    jr["gold"] = r.gold;
    jr["prediction"] = r.prediction;
    jr["em"] = r.em;
    jr["recall"] = r.recall;
    jr["rouge_l"] = r.rouge_l;
    jr["well_formed"] = r.well_formed;
    j["records"].push_back(jr);
  }
  return j.dump(2) + "\n";
}

std::string EvalReport::to_csv() const {
  std::string out = "id,question,gold,prediction,em,recall,rouge_l,well_formed\n";
  char buf[32];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%.6f", r.rouge_l);
    out += csv_field(r.id) + "," + csv_field(r.question) + "," + csv_field(r.gold) + "," +
           csv_field(r.prediction) + "," + (r.em ? "1" : "0") + "," + (r.recall ? "1" : "0") + "," + buf + "," +
           (r.well_formed ? "1" : "0") + "\n";
  }
  return out;
}

TokenSequence eval_prompt(const QAPair& qa, const Vocab& vocab, EvalMode mode, const Document* doc,
                          std::span<const QAPair> exemplars) {
  TokenSequence t = {Vocab::bos};
  auto add_question = [&](const QAPair& q) {
    t.push_back(Vocab::q_marker);
    const auto enc = encode(q.question, vocab);
    t.insert(t.end(), enc.begin(), enc.end());
    t.push_back(Vocab::newline);
    t.push_back(Vocab::a_marker);
  };
  if (mode == EvalMode::open_book) {
    if (doc == nullptr) fail(ErrorKind::data, "open-book evaluation of '" + qa.id + "' needs its linked document");
    const auto enc = encode(doc->text, vocab);
    t.insert(t.end(), enc.begin(), enc.end());
    t.push_back(Vocab::newline);
  } else if (mode == EvalMode::fewshot) {
    for (const auto& ex : exemplars) {
      add_question(ex);
      const auto a = encode(ex.answer, vocab);
      t.insert(t.end(), a.begin(), a.end());
      t.push_back(Vocab::newline);
    }
  }
  add_question(qa);
  return t;
}

std::vector<QAPair> pick_exemplars(std::span<const QAPair> pool, std::size_t k, std::uint64_t seed,
                                   std::span<const QAPair> exclude) {
  std::set<std::string> skip;
  for (const auto& q : exclude) skip.insert(q.id);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (!skip.count(pool[i].id)) idx.push_back(i);
  if (idx.size() < k)
    fail(ErrorKind::data, "few-shot evaluation needs " + std::to_string(k) + " exemplars, pool has " +
                              std::to_string(idx.size()));
  Rng rng(seed);
  rng.shuffle(idx);
  std::vector<QAPair> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(pool[idx[i]]);
  return out;
}

template <Real T>
EvalReport evaluate_qa(const Model<T>& model, const Vocab& vocab, std::span<const QAPair> qa,
                       const CorpusBundle& bundle, const EvalOptions& options, std::string split_name) {
  if (qa.empty()) fail(ErrorKind::usage, "evaluate_qa: empty QA set");
  std::vector<QAPair> exemplars;
  if (options.mode == EvalMode::fewshot)
    exemplars = pick_exemplars(options.exemplar_pool, options.fewshot_k, options.fewshot_seed, qa);

  std::vector<TokenSequence> prompts;
  prompts.reserve(qa.size());
  for (const auto& q : qa) {
    const Document* doc = options.mode == EvalMode::open_book ? bundle.find_doc(q.doc_id) : nullptr;
    prompts.push_back(eval_prompt(q, vocab, options.mode, doc, exemplars));
  }
  const auto decoded = greedy_decode(model, prompts, options.max_new, {}, options.batch_size);

  EvalReport report;
  report.split = std::move(split_name);
  report.mode = to_string(options.mode);
  report.count = qa.size();
  for (std::size_t i = 0; i < qa.size(); ++i) {
    QaRecord r;
    r.id = qa[i].id;
    r.question = qa[i].question;
    r.gold = qa[i].answer;
    r.prediction = decode(decoded[i].tokens, vocab);
    r.em = exact_match(r.prediction, r.gold);
    r.recall = answer_recall(r.prediction, r.gold);
    r.rouge_l = rouge_l(r.prediction, r.gold);
    r.well_formed = decoded[i].stopped && !decoded[i].tokens.empty();
    report.records.push_back(std::move(r));
  }
  std::stable_sort(report.records.begin(), report.records.end(),
                   [](const QaRecord& a, const QaRecord& b) { return a.id < b.id; });
  for (const auto& r : report.records) {
    report.em += r.em;
    report.recall += r.recall;
    report.rouge_l += r.rouge_l;
    report.format_rate += r.well_formed;
  }
  const double n = static_cast<double>(report.count);
  report.em /= n;
  report.recall /= n;
  report.rouge_l /= n;
  report.format_rate /= n;
  return report;
}

template <Real T>
double doc_perplexity(const Model<T>& model, const Vocab& vocab, std::span<const Document> docs,
                      std::size_t batch_size) {
  if (docs.empty()) fail(ErrorKind::usage, "doc_perplexity: no documents");
  batch_size = std::max<std::size_t>(batch_size, 1);
  double nll = 0;
  std::size_t count = 0;
  Tape<T> tape;
  for (std::size_t start = 0; start < docs.size(); start += batch_size) {
    std::vector<TokenSequence> full, inputs;
    for (std::size_t i = start; i < std::min(docs.size(), start + batch_size); ++i) {
      TokenSequence t = {Vocab::bos};
      const auto enc = encode(docs[i].text, vocab);
      t.insert(t.end(), enc.begin(), enc.end());
      if (t.size() < 2) continue;
      inputs.emplace_back(t.begin(), t.end() - 1);
      full.push_back(std::move(t));
    }
    if (inputs.empty()) continue;
    const PackedBatch batch = PackedBatch::pack(inputs);
    tape.reset();
    const Tensor<T>& logits = tape.value(model.forward_inference(tape, batch));
    const std::size_t v = logits.cols();
    for (std::size_t s = 0; s < full.size(); ++s) {
      const auto& seg = batch.segments[s];
      for (std::size_t i = 0; i < seg.length; ++i) {
        const T* row = logits.data() + (seg.offset + i) * v;
        const double mx = static_cast<double>(*std::max_element(row, row + v));
        double z = 0;
        for (std::size_t c = 0; c < v; ++c) z += std::exp(static_cast<double>(row[c]) - mx);
        nll += mx + std::log(z) - static_cast<double>(row[full[s][i + 1]]);
        ++count;
      }
    }
  }
  if (count == 0) fail(ErrorKind::usage, "doc_perplexity: documents hold no tokens");
  return std::exp(nll / static_cast<double>(count));
}

template <Real T>
double retention_probe(const Model<T>& model, const Vocab& vocab, std::span<const QAPair> retention,
                       const CorpusBundle& bundle) {
  if (retention.empty()) fail(ErrorKind::usage, "retention_probe: empty retention set");
  return evaluate_qa(model, vocab, retention, bundle, {}, std::string(splits::retention_qa)).em;
}

template EvalReport evaluate_qa<float>(const Model<float>&, const Vocab&, std::span<const QAPair>,
                                       const CorpusBundle&, const EvalOptions&, std::string);
template EvalReport evaluate_qa<double>(const Model<double>&, const Vocab&, std::span<const QAPair>,
                                        const CorpusBundle&, const EvalOptions&, std::string);
template double doc_perplexity<float>(const Model<float>&, const Vocab&, std::span<const Document>, std::size_t);
template double doc_perplexity<double>(const Model<double>&, const Vocab&, std::span<const Document>, std::size_t);
template double retention_probe<float>(const Model<float>&, const Vocab&, std::span<const QAPair>,
                                       const CorpusBundle&);
template double retention_probe<double>(const Model<double>&, const Vocab&, std::span<const QAPair>,
                                        const CorpusBundle&);

}  // namespace pitlab
