// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

#include "pitlab/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "pitlab/error.hpp"
#include "pitlab/hash.hpp"
#include "pitlab/random.hpp"

namespace pitlab {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 ||
         (static_cast<unsigned char>(c) & 0x80) != 0;
}

std::string substitute(std::string text, std::string_view key, std::string_view value) {
  for (std::size_t pos = text.find(key); pos != std::string::npos;
       pos = text.find(key, pos + value.size())) {
    text.replace(pos, key.size(), value);
  }
  return text;
}

bool contains_phrase(std::string_view haystack, std::string_view needle) {
  return count_phrase(haystack, needle) > 0;
}

struct ValuePartition {
  std::vector<std::string> test;
  std::vector<std::string> rest;
};

struct SplitSpec {
  const char* doc_split;
  const char* qa_split;
  const SplitPlan* plan;
  int qa_per_entity;
  bool is_test;
};

}  // namespace

bool is_doc_split(std::string_view name) {
  return name.size() > 4 && name.substr(name.size() - 4) == "_doc";
}

bool is_qa_split(std::string_view name) {
  return name.size() > 3 && name.substr(name.size() - 3) == "_qa";
}

const std::string* Entity::find(std::string_view attribute) const {
  for (const auto& [name, value] : attributes)
    if (name == attribute) return &value;
  return nullptr;
}

const AttributeSchema* DomainSchema::find(std::string_view attribute) const {
  for (const auto& a : attributes)
    if (a.name == attribute) return &a;
  return nullptr;
}

bool CorpusBundle::has_split(std::string_view name) const {
  return doc_splits.count(std::string(name)) > 0 || qa_splits.count(std::string(name)) > 0;
}

const std::vector<Document>& CorpusBundle::docs(std::string_view split) const {
  auto it = doc_splits.find(std::string(split));
  if (it == doc_splits.end())
    fail(ErrorKind::usage, "bundle has no document split '" + std::string(split) + "'");
  return it->second;
}

const std::vector<QAPair>& CorpusBundle::qa(std::string_view split) const {
  auto it = qa_splits.find(std::string(split));
  if (it == qa_splits.end())
    fail(ErrorKind::usage, "bundle has no QA split '" + std::string(split) + "'");
  return it->second;
}

std::vector<std::string> CorpusBundle::split_names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : doc_splits) out.push_back(name);
  for (const auto& [name, _] : qa_splits) out.push_back(name);
  std::sort(out.begin(), out.end());
  return out;
}

std::set<std::string> CorpusBundle::domains(std::string_view split) const {
  std::set<std::string> out;
  if (is_doc_split(split)) {
    for (const auto& d : docs(split)) out.insert(d.domain);
  } else {
    for (const auto& q : qa(split)) out.insert(q.domain);
  }
  return out;
}

const Document* CorpusBundle::find_doc(std::string_view doc_id) const {
  for (const auto& [_, list] : doc_splits)
    for (const auto& d : list)
      if (d.id == doc_id) return &d;
  return nullptr;
}

std::size_t count_phrase(std::string_view text, std::string_view phrase) {
  if (phrase.empty()) return 0;
  const std::string t = lower(text);
  const std::string p = lower(phrase);
  std::size_t count = 0;
  for (std::size_t pos = t.find(p); pos != std::string::npos; pos = t.find(p, pos + 1)) {
    const bool left_ok = pos == 0 || !is_word_char(t[pos - 1]);
    const std::size_t end = pos + p.size();
    const bool right_ok = end >= t.size() || !is_word_char(t[end]);
    if (left_ok && right_ok) ++count;
  }
  return count;
}

Document render_document(const DomainSchema& schema, const Entity& entity,
                         std::uint64_t style_seed) {
  Rng rng(style_seed);
  const std::size_t k = entity.attributes.size();
  const int titled_count = rng.uniform_int(0, static_cast<int>(k / 2));

  std::vector<std::size_t> order(k);
  for (std::size_t i = 0; i < k; ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<bool> titled(k, false);
  for (int i = 0; i < titled_count; ++i) titled[order[static_cast<std::size_t>(i)]] = true;

  std::vector<std::string> facts;
  facts.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto& [name, value] = entity.attributes[i];
    const AttributeSchema* a = schema.find(name);
    if (a == nullptr)
      fail(ErrorKind::usage, "domain '" + schema.domain + "' has no attribute '" + name + "'");
    const auto& templates = titled[i] ? a->titled : a->elided;
    std::string sentence = templates[rng.index(templates.size())];
    sentence = substitute(std::move(sentence), "{title}", entity.title);
    sentence = substitute(std::move(sentence), "{value}", value);
    facts.push_back(std::move(sentence));
  }
  rng.shuffle(facts);

  std::string text = substitute(schema.intro, "{title}", entity.title);
  for (const auto& f : facts) {
    text += ' ';
    text += f;
  }
  return Document{"doc-" + entity.id, entity.id, entity.domain, entity.title, std::move(text)};
}

QAPair make_qa(const DomainSchema& schema, const Entity& entity, std::string_view attribute) {
  const std::string* value = entity.find(attribute);
  const AttributeSchema* a = schema.find(attribute);
  if (value == nullptr || a == nullptr)
    fail(ErrorKind::usage,
         "entity '" + entity.id + "' has no attribute '" + std::string(attribute) + "'");
  return QAPair{"qa-" + entity.id + "-" + std::string(attribute), "doc-" + entity.id,
                entity.domain, substitute(a->question, "{title}", entity.title), *value};
}

CorpusBundle generate_corpus(const CorpusOptions& options) {
  return generate_corpus(options, nullptr);
}

CorpusBundle generate_corpus(const CorpusOptions& o, std::vector<Entity>* entities_out) {
  if (o.qa_per_entity < 1) fail(ErrorKind::usage, "qa_per_entity must be at least 1");
  if (o.oldworld_qa_per_entity && *o.oldworld_qa_per_entity < 0)
    fail(ErrorKind::usage, "oldworld qa_per_entity must be non-negative");
  if (o.min_attributes < 1 || o.max_attributes < o.min_attributes)
    fail(ErrorKind::usage, "attribute range must satisfy 1 <= min <= max");
  if (o.qa_per_entity > o.min_attributes)
    fail(ErrorKind::usage, "qa_per_entity exceeds the minimum number of attributes");
  if (o.test_value_fraction <= 0.0 || o.test_value_fraction >= 1.0)
    fail(ErrorKind::usage, "test_value_fraction must lie in (0, 1)");

  const std::vector<DomainSchema> schemas = o.schemas.empty() ? builtin_schemas() : o.schemas;
  if (schemas.empty()) fail(ErrorKind::usage, "schema is empty");
  std::map<std::string, const DomainSchema*> by_domain;
  for (const auto& s : schemas) by_domain[s.domain] = &s;

  const SplitSpec specs[] = {
      {splits::test_doc, splits::test_qa, &o.test, o.qa_per_entity, true},
      {splits::train_doc, splits::train_qa, &o.train, o.qa_per_entity, false},
      {splits::xdomain_train_doc, splits::xdomain_train_qa, &o.xdomain_train, o.qa_per_entity,
       false},
      {splits::oldworld_doc, splits::oldworld_qa, &o.oldworld,
       o.oldworld_qa_per_entity.value_or(o.qa_per_entity), false},
  };
  bool any = false;
  for (const auto& s : specs) {
    if (s.plan->entities < 0) fail(ErrorKind::usage, std::string(s.doc_split) + " count is negative");
    if (s.plan->entities == 0) continue;
    any = true;
    if (s.plan->domains.empty())
      fail(ErrorKind::usage, std::string(s.doc_split) + " lists no domains");
    for (const auto& d : s.plan->domains) {
      auto it = by_domain.find(d);
      if (it == by_domain.end()) fail(ErrorKind::usage, "unknown domain '" + d + "'");
      if (static_cast<int>(it->second->attributes.size()) < s.qa_per_entity)
        fail(ErrorKind::usage, "domain '" + d + "' has fewer attributes than qa_per_entity");
    }
  }
  if (!any) fail(ErrorKind::usage, "no split has a positive entity count");

  // Partition every attribute's value space: test entities draw only from
  // the reserved share, every other split only from the remainder.
  std::map<std::string, ValuePartition> partitions;
  std::set<std::string> test_attributes;
  if (o.test.entities > 0)
    for (const auto& d : o.test.domains)
      for (const auto& a : by_domain.at(d)->attributes) test_attributes.insert(a.name);
  for (const auto& s : schemas) {
    for (const auto& a : s.attributes) {
      const std::string key = a.name + "/" + a.value_kind;
      if (partitions.count(key)) continue;
      std::vector<std::string> space = value_space(a.value_kind);
      Fnv1a key_hash;
      key_hash.update(key);
      Rng prng(Rng::mix(o.seed, key_hash.value()));
      prng.shuffle(space);
      ValuePartition p;
      if (test_attributes.count(a.name)) {
        const auto n_test = static_cast<std::size_t>(
            std::ceil(o.test_value_fraction * static_cast<double>(space.size())));
        if (n_test < 1 || n_test >= space.size())
          fail(ErrorKind::usage, "vocabulary too small to keep test values of attribute '" +
                                     a.name + "' disjoint from other splits");
        p.test.assign(space.begin(), space.begin() + static_cast<std::ptrdiff_t>(n_test));
        p.rest.assign(space.begin() + static_cast<std::ptrdiff_t>(n_test), space.end());
      } else {
        p.rest = std::move(space);
      }
      partitions.emplace(key, std::move(p));
    }
  }

  Rng rng(o.seed);
  std::map<std::string, std::vector<std::string>> titles;
  std::map<std::string, std::size_t> title_cursor;
  auto next_title = [&](const std::string& kind) {
    auto it = titles.find(kind);
    if (it == titles.end()) {
      auto space = title_space(kind);
      Fnv1a kind_hash;
      kind_hash.update(kind);
      Rng trng(Rng::mix(o.seed, kind_hash.value()));
      trng.shuffle(space);
      it = titles.emplace(kind, std::move(space)).first;
    }
    std::size_t& cursor = title_cursor[kind];
    if (cursor >= it->second.size())
      fail(ErrorKind::usage, "title space '" + kind + "' exhausted; reduce entity counts");
    return it->second[cursor++];
  };

  CorpusBundle bundle;
  std::vector<Entity> all_entities;
  std::uint64_t entity_index = 0;

  for (const auto& s : specs) {
    if (s.plan->entities == 0) continue;
    auto& docs = bundle.doc_splits[s.doc_split];
    auto& qas = bundle.qa_splits[s.qa_split];
    const std::string tag = std::string(s.doc_split).substr(0, std::string(s.doc_split).size() - 4);
    for (int i = 0; i < s.plan->entities; ++i, ++entity_index) {
      const std::string& domain = s.plan->domains[static_cast<std::size_t>(i) % s.plan->domains.size()];
      const DomainSchema& schema = *by_domain.at(domain);
      char idbuf[16];
      std::snprintf(idbuf, sizeof(idbuf), "%05d", i);

      Entity e;
      e.id = domain + "-" + tag + "-" + idbuf;
      e.domain = domain;
      e.title = next_title(schema.title_kind);

      const int n_attr = static_cast<int>(schema.attributes.size());
      const int k = std::min(rng.uniform_int(o.min_attributes, o.max_attributes), n_attr);
      std::vector<std::size_t> pick(static_cast<std::size_t>(n_attr));
      for (std::size_t j = 0; j < pick.size(); ++j) pick[j] = j;
      rng.shuffle(pick);
      pick.resize(static_cast<std::size_t>(k));
      std::sort(pick.begin(), pick.end());

      for (std::size_t j : pick) {
        const AttributeSchema& a = schema.attributes[j];
        const ValuePartition& p = partitions.at(a.name + "/" + a.value_kind);
        const auto& pool = s.is_test ? p.test : p.rest;
        bool placed = false;
        for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
          const std::string& candidate = pool[rng.index(pool.size())];
          bool clash = contains_phrase(e.title, candidate) || contains_phrase(candidate, e.title);
          for (const auto& [_, v] : e.attributes)
            clash = clash || contains_phrase(v, candidate) || contains_phrase(candidate, v);
          if (!clash) {
            e.attributes.emplace_back(a.name, candidate);
            placed = true;
          }
        }
        if (!placed)
          fail(ErrorKind::usage, "vocabulary too small to draw distinct values for attribute '" +
                                     a.name + "'");
      }

      Document doc = render_document(schema, e, Rng::mix(o.seed, 0xd0c0000ULL + entity_index));
      for (const auto& [name, value] : e.attributes)
        if (count_phrase(doc.text, value) != 1)
          fail(ErrorKind::usage, "attribute '" + name + "' value '" + value +
                                     "' is not mentioned exactly once; template collision");
      docs.push_back(std::move(doc));

      std::vector<std::size_t> ask(e.attributes.size());
      for (std::size_t j = 0; j < ask.size(); ++j) ask[j] = j;
      rng.shuffle(ask);
      ask.resize(static_cast<std::size_t>(std::min<int>(s.qa_per_entity, static_cast<int>(ask.size()))));
      std::sort(ask.begin(), ask.end());
      for (std::size_t j : ask) qas.push_back(make_qa(schema, e, e.attributes[j].first));

      all_entities.push_back(std::move(e));
    }
  }

  // Retention probe: a seeded subset of old-world QA, kept in corpus order.
  if (o.oldworld.entities > 0 && o.retention_qa >= 0) {
    const auto& pool = bundle.qa_splits[splits::oldworld_qa];
    std::vector<std::size_t> idx(pool.size());
    for (std::size_t j = 0; j < idx.size(); ++j) idx[j] = j;
    Rng rrng(Rng::mix(o.seed, 0x7e7e7e));
    rrng.shuffle(idx);
    idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(o.retention_qa)));
    std::sort(idx.begin(), idx.end());
    auto& retention = bundle.qa_splits[splits::retention_qa];
    for (std::size_t j : idx) retention.push_back(pool[j]);
  }

  if (entities_out != nullptr) *entities_out = std::move(all_entities);
  return bundle;
}

}  // namespace pitlab
