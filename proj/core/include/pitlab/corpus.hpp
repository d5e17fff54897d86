// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pitlab {

/// Canonical split names. A bundle is a set of named splits; the suffix
/// decides whether a split holds documents ("_doc") or QA pairs ("_qa").
namespace splits {
inline constexpr const char* oldworld_doc = "oldworld_doc";
inline constexpr const char* oldworld_qa = "oldworld_qa";
inline constexpr const char* train_doc = "train_doc";
inline constexpr const char* train_qa = "train_qa";
inline constexpr const char* test_doc = "test_doc";
inline constexpr const char* test_qa = "test_qa";
inline constexpr const char* retention_qa = "retention_qa";
inline constexpr const char* xdomain_train_doc = "xdomain_train_doc";
inline constexpr const char* xdomain_train_qa = "xdomain_train_qa";
}  // namespace splits

bool is_doc_split(std::string_view name);
bool is_qa_split(std::string_view name);

struct Entity {
  std::string id;
  std::string domain;
  std::string title;
  std::vector<std::pair<std::string, std::string>> attributes;

  const std::string* find(std::string_view attribute) const;
};

struct Document {
  std::string id;
  std::string entity_id;
  std::string domain;
  std::string title;
  std::string text;

  friend bool operator==(const Document&, const Document&) = default;
};

struct QAPair {
  std::string id;
  std::string doc_id;
  std::string domain;
  std::string question;
  std::string answer;

  friend bool operator==(const QAPair&, const QAPair&) = default;
};

struct CorpusBundle {
  std::map<std::string, std::vector<Document>> doc_splits;
  std::map<std::string, std::vector<QAPair>> qa_splits;

  bool has_split(std::string_view name) const;
  /// Throws a usage error naming the missing split.
  const std::vector<Document>& docs(std::string_view split) const;
  const std::vector<QAPair>& qa(std::string_view split) const;
  std::vector<std::string> split_names() const;
  std::set<std::string> domains(std::string_view split) const;

  /// Looks a document up across every document split.
  const Document* find_doc(std::string_view doc_id) const;

  friend bool operator==(const CorpusBundle&, const CorpusBundle&) = default;
};

/// Template set for one attribute slot of a domain.
struct AttributeSchema {
  std::string name;
  std::string value_kind;
  std::string question;              // must contain {title}
  std::vector<std::string> titled;   // fact sentences naming the subject
  std::vector<std::string> elided;   // fact sentences using pronoun/elision
};

struct DomainSchema {
  std::string domain;
  std::string title_kind;
  std::string intro;  // first sentence, must contain {title}
  std::vector<AttributeSchema> attributes;

  const AttributeSchema* find(std::string_view attribute) const;
};

/// film, politics and music schemas shipped with the generator.
std::vector<DomainSchema> builtin_schemas();
/// Reads a JSON schema file (array of domains, see README).
std::vector<DomainSchema> load_schemas(const std::filesystem::path& path);

/// Every phrase a value kind can take, in a fixed order.
std::vector<std::string> value_space(std::string_view kind);
std::vector<std::string> title_space(std::string_view kind);

struct SplitPlan {
  std::vector<std::string> domains;
  int entities = 0;
};

struct CorpusOptions {
  std::vector<DomainSchema> schemas;  // empty: builtin_schemas()
  SplitPlan oldworld{{"film", "politics", "music"}, 2000};
  SplitPlan train{{"film"}, 500};
  SplitPlan test{{"film"}, 128};
  SplitPlan xdomain_train{{"politics", "music"}, 0};
  int retention_qa = 256;
  int qa_per_entity = 5;
  std::optional<int> oldworld_qa_per_entity;
  int min_attributes = 6;
  int max_attributes = 12;
  /// Share of each attribute's value space reserved for test entities.
  double test_value_fraction = 0.25;
  std::uint64_t seed = 0;
};

/// Generates a leakage-free bundle. Entities are drawn first for the test
/// split from a reserved partition of every attribute's value space, so no
/// test answer occurs in the same slot anywhere else.
CorpusBundle generate_corpus(const CorpusOptions& options);

/// Same as generate_corpus but also returns the sampled entities.
CorpusBundle generate_corpus(const CorpusOptions& options,
                             std::vector<Entity>* entities);

Document render_document(const DomainSchema& schema, const Entity& entity,
                         std::uint64_t style_seed);

QAPair make_qa(const DomainSchema& schema, const Entity& entity,
               std::string_view attribute);

/// Counts case-insensitive, word-bounded occurrences of `phrase` in `text`.
std::size_t count_phrase(std::string_view text, std::string_view phrase);

struct ImportOptions {
  /// Reject QA pairs whose answer is not a verbatim substring of the doc.
  bool require_answer_in_doc = false;
};

/// Loads split files listed in a manifest (split name -> path, relative
/// to the manifest's directory). All problems are collected and reported
/// together in one data error.
CorpusBundle import_bundle(const std::filesystem::path& manifest,
                           const ImportOptions& options = {});
CorpusBundle import_bundle(const std::map<std::string, std::filesystem::path>& paths,
                           const ImportOptions& options = {});

/// Writes <split>.jsonl files and manifest.json into `dir`.
void export_bundle(const CorpusBundle& bundle, const std::filesystem::path& dir);

/// Canonical serialisation used for fingerprints and byte comparisons.
std::string serialize_split(const CorpusBundle& bundle, std::string_view split);
std::string corpus_hash(const CorpusBundle& bundle);

/// QA answers grouped by the document they were generated from.
std::map<std::string, std::vector<std::string>> answers_by_doc(const CorpusBundle& bundle);

}  // namespace pitlab
