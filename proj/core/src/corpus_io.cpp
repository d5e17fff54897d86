// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"
#include "pitlab/corpus.hpp"
#include "pitlab/error.hpp"
#include "pitlab/hash.hpp"

namespace pitlab {
namespace {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

ojson to_json(const Document& d) {
  ojson j;
  j["id"] = d.id;
  j["entity_id"] = d.entity_id;
  j["domain"] = d.domain;
  j["title"] = d.title;
  j["text"] = d.text;
  return j;
}

ojson to_json(const QAPair& q) {
  ojson j;
  j["id"] = q.id;
  j["doc_id"] = q.doc_id;
  j["domain"] = q.domain;
  j["question"] = q.question;
  j["answer"] = q.answer;
  return j;
}

std::string field(const ojson& j, const char* key, std::vector<std::string>& missing) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    missing.emplace_back(key);
    return {};
  }
  return it->get<std::string>();
}

struct Problems {
  std::vector<std::string> lines;
  void add(const std::string& where, const std::string& what) {
    lines.push_back(where + ": " + what);
  }
};

}  // namespace

std::string serialize_split(const CorpusBundle& bundle, std::string_view split) {
  std::string out;
  if (is_doc_split(split)) {
    for (const auto& d : bundle.docs(split)) out += to_json(d).dump() + "\n";
  } else {
    for (const auto& q : bundle.qa(split)) out += to_json(q).dump() + "\n";
  }
  return out;
}

std::string corpus_hash(const CorpusBundle& bundle) {
  Fnv1a h;
  for (const auto& name : bundle.split_names()) {
    h.update(name);
    h.update("\n");
    h.update(serialize_split(bundle, name));
  }
  return h.hex();
}

void export_bundle(const CorpusBundle& bundle, const fs::path& dir) {
  fs::create_directories(dir);
  ojson manifest = ojson::object();
  for (const auto& name : bundle.split_names()) {
    const std::string file = name + ".jsonl";
    std::ofstream out(dir / file, std::ios::binary);
    if (!out) fail(ErrorKind::data, "cannot write " + (dir / file).string());
    out << serialize_split(bundle, name);
    manifest[name] = file;
  }
  std::ofstream m(dir / "manifest.json", std::ios::binary);
  if (!m) fail(ErrorKind::data, "cannot write " + (dir / "manifest.json").string());
  m << manifest.dump(2) << "\n";
}

CorpusBundle import_bundle(const fs::path& manifest, const ImportOptions& options) {
  std::ifstream in(manifest);
  if (!in) fail(ErrorKind::data, "cannot open bundle manifest " + manifest.string());
  ojson j;
  try {
    in >> j;
  } catch (const ojson::exception& e) {
    fail(ErrorKind::data, "bundle manifest " + manifest.string() + ": " + e.what());
  }
  if (!j.is_object())
    fail(ErrorKind::data, "bundle manifest must map split names to file paths");
  std::map<std::string, fs::path> paths;
  for (const auto& [name, value] : j.items()) {
    if (!value.is_string())
      fail(ErrorKind::data, "bundle manifest entry '" + name + "' is not a path");
    fs::path p = value.get<std::string>();
    paths[name] = p.is_absolute() ? p : manifest.parent_path() / p;
  }
  return import_bundle(paths, options);
}

CorpusBundle import_bundle(const std::map<std::string, fs::path>& paths,
                           const ImportOptions& options) {
  CorpusBundle bundle;
  Problems problems;
  std::map<std::string, std::string> doc_location;  // doc id -> split
  std::map<std::string, std::string> qa_location;   // "split:line" for QA ids

  for (const auto& [name, path] : paths) {
    const bool docs = is_doc_split(name);
    if (!docs && !is_qa_split(name)) {
      problems.add(name, "split name must end in _doc or _qa");
      continue;
    }
    std::ifstream in(path);
    if (!in) {
      problems.add(path.string(), "cannot open file");
      continue;
    }
    if (docs) bundle.doc_splits[name];
    else bundle.qa_splits[name];
    std::set<std::string> ids_in_split;
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
      if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const std::string where = path.filename().string() + ":" + std::to_string(lineno);
      ojson rec;
      try {
        rec = ojson::parse(line);
      } catch (const ojson::exception&) {
        problems.add(where, "malformed JSON record");
        continue;
      }
      if (!rec.is_object()) {
        problems.add(where, "record is not a JSON object");
        continue;
      }
      std::vector<std::string> missing;
      if (docs) {
        Document d{field(rec, "id", missing), field(rec, "entity_id", missing),
                   field(rec, "domain", missing), field(rec, "title", missing),
                   field(rec, "text", missing)};
        if (!missing.empty()) {
          std::string m;
          for (const auto& k : missing) m += (m.empty() ? "" : ", ") + k;
          problems.add(where, "missing or non-string field(s): " + m);
          continue;
        }
        if (!ids_in_split.insert(d.id).second || doc_location.count(d.id)) {
          problems.add(where, "duplicate document id '" + d.id + "'");
          continue;
        }
        doc_location[d.id] = name;
        bundle.doc_splits[name].push_back(std::move(d));
      } else {
        QAPair q{field(rec, "id", missing), field(rec, "doc_id", missing),
                 field(rec, "domain", missing), field(rec, "question", missing),
                 field(rec, "answer", missing)};
        if (!missing.empty()) {
          std::string m;
          for (const auto& k : missing) m += (m.empty() ? "" : ", ") + k;
          problems.add(where, "missing or non-string field(s): " + m);
          continue;
        }
        // retention_qa is a probe view over old-world QA and may repeat its ids.
        const bool probe = name == splits::retention_qa;
        if (!ids_in_split.insert(q.id).second || (!probe && qa_location.count(q.id))) {
          problems.add(where, "duplicate QA id '" + q.id + "'");
          continue;
        }
        if (!probe) qa_location[q.id] = where;
        bundle.qa_splits[name].push_back(std::move(q));
      }
    }
  }

  // Linkage checks need every document loaded first.
  for (const auto& [name, list] : bundle.qa_splits) {
    for (const auto& q : list) {
      auto it = doc_location.find(q.doc_id);
      if (it == doc_location.end()) {
        problems.add(name, "QA '" + q.id + "' references missing doc '" + q.doc_id + "'");
        continue;
      }
      if (name == splits::retention_qa && it->second != splits::oldworld_doc)
        problems.add(name, "retention QA '" + q.id + "' must reference an old-world doc");
      if (options.require_answer_in_doc) {
        const Document* d = bundle.find_doc(q.doc_id);
        if (d->text.find(q.answer) == std::string::npos)
          problems.add(name, "answer of QA '" + q.id + "' does not occur in its document");
      }
    }
  }
  if (bundle.doc_splits.count(splits::test_doc)) {
    std::set<std::string> test_entities;
    for (const auto& d : bundle.doc_splits.at(splits::test_doc)) test_entities.insert(d.entity_id);
    for (const auto& [name, list] : bundle.doc_splits) {
      if (name == splits::test_doc) continue;
      for (const auto& d : list)
        if (test_entities.count(d.entity_id))
          problems.add(name, "document '" + d.id + "' shares test entity '" + d.entity_id + "'");
    }
  }

  if (!problems.lines.empty()) {
    std::string msg = "bundle validation failed (" + std::to_string(problems.lines.size()) +
                      " problem(s)):";
    for (const auto& l : problems.lines) msg += "\n  " + l;
    fail(ErrorKind::data, msg);
  }
  return bundle;
}

std::map<std::string, std::vector<std::string>> answers_by_doc(const CorpusBundle& bundle) {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& [name, list] : bundle.qa_splits) {
    if (name == splits::retention_qa) continue;
    for (const auto& q : list) out[q.doc_id].push_back(q.answer);
  }
  return out;
}

}  // namespace pitlab
