// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <map>
#include <set>

#include "doctest.h"
#include "pitlab/corpus.hpp"
#include "pitlab/eval.hpp"
#include "pitlab/tokenizer.hpp"
#include "support.hpp"

using namespace pitlab;

namespace {

CorpusOptions small_options(std::uint64_t seed = 3) {
  CorpusOptions o;
  o.oldworld.entities = 60;
  o.train.entities = 30;
  o.test.entities = 20;
  o.xdomain_train.entities = 12;
  o.retention_qa = 40;
  o.seed = seed;
  return o;
}

const DomainSchema& film_schema() {
  static const std::vector<DomainSchema> schemas = builtin_schemas();
  for (const auto& s : schemas)
    if (s.domain == "film") return s;
  throw std::logic_error("no film schema");
}

void write_lines(const std::filesystem::path& p, const std::vector<std::string>& lines) {
  std::ofstream out(p);
  for (const auto& l : lines) out << l << "\n";
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("five QA pairs per film entity") {
  CorpusOptions o;
  o.oldworld = {{"film"}, 1976};
  o.train.entities = o.test.entities = o.xdomain_train.entities = 0;
  o.retention_qa = 0;
  o.seed = 1;
  const CorpusBundle b = generate_corpus(o);
  CHECK(b.docs(splits::oldworld_doc).size() == 1976);
  CHECK(b.qa(splits::oldworld_qa).size() == 9880);
}

TEST_CASE("split sizes follow the requested counts") {
  const CorpusBundle b = generate_corpus(small_options());
  CHECK(b.docs(splits::oldworld_doc).size() == 60);
  CHECK(b.docs(splits::train_doc).size() == 30);
  CHECK(b.docs(splits::test_doc).size() == 20);
  CHECK(b.docs(splits::xdomain_train_doc).size() == 12);
  CHECK(b.qa(splits::test_qa).size() == 100);
  CHECK(b.qa(splits::retention_qa).size() == 40);
  CHECK(b.domains(splits::test_doc) == std::set<std::string>{"film"});
  CHECK(b.domains(splits::xdomain_train_doc) == std::set<std::string>{"music", "politics"});
}

TEST_CASE("an empty retention set is allowed") {
  CorpusOptions o = small_options();
  o.retention_qa = 0;
  o.oldworld_qa_per_entity = 0;
  const CorpusBundle b = generate_corpus(o);
  CHECK((!b.has_split(splits::retention_qa) || b.qa(splits::retention_qa).empty()));
  CHECK((!b.has_split(splits::oldworld_qa) || b.qa(splits::oldworld_qa).empty()));
}

TEST_CASE("generation is deterministic per seed") {
  const CorpusBundle a = generate_corpus(small_options(7));
  const CorpusBundle b = generate_corpus(small_options(7));
  CHECK(a == b);
  for (const auto& split : a.split_names()) CHECK(serialize_split(a, split) == serialize_split(b, split));
  CHECK(corpus_hash(a) == corpus_hash(b));
  CHECK(corpus_hash(a) != corpus_hash(generate_corpus(small_options(8))));
}

TEST_CASE("documents and QA pairs satisfy the structural invariants") {
  std::vector<Entity> entities;
  const CorpusBundle b = generate_corpus(small_options(), &entities);
  std::map<std::string, const Entity*> by_id;
  for (const auto& e : entities) {
    CHECK(by_id.emplace(e.id, &e).second);
    CHECK(e.attributes.size() >= 6);
    CHECK(e.attributes.size() <= 12);
  }
  std::map<std::string, std::string> doc_split_of;
  for (const auto& split : b.split_names())
    if (is_doc_split(split))
      for (const auto& d : b.docs(split)) {
        doc_split_of[d.id] = split;
        const Entity& e = *by_id.at(d.entity_id);
        // Every fact appears exactly once, recovered by phrase extraction.
        for (const auto& [name, value] : e.attributes) {
          CHECK_MESSAGE(count_phrase(d.text, value) == 1, d.id << " " << name);
          CHECK_FALSE(value.empty());
        }
        // Title in the opening sentence; at most half the facts restate it.
        CHECK(d.text.rfind(d.title, 0) != std::string::npos);
        CHECK(d.text.find(d.title) < d.text.find('.'));
        CHECK(2 * (count_phrase(d.text, d.title) - 1) <= e.attributes.size());
      }
  for (const auto& split : b.split_names())
    if (is_qa_split(split))
      for (const auto& q : b.qa(split)) {
        const Document* d = b.find_doc(q.doc_id);
        REQUIRE(d != nullptr);
        CHECK(d->text.find(q.answer) != std::string::npos);
        CHECK(q.question.find(d->title) != std::string::npos);
        if (split == splits::retention_qa) CHECK(doc_split_of.at(q.doc_id) == splits::oldworld_doc);
        if (split == splits::test_qa) CHECK(doc_split_of.at(q.doc_id) == splits::test_doc);
      }
}

TEST_CASE("test answers never occur in the same slot outside the test split") {
  std::vector<Entity> entities;
  const CorpusBundle b = generate_corpus(small_options(), &entities);
  std::set<std::string> test_ids;
  for (const auto& d : b.docs(splits::test_doc)) test_ids.insert(d.entity_id);
  std::map<std::string, std::set<std::string>> other_values;  // attribute -> normalized values
  std::set<std::string> other_titles;
  for (const auto& e : entities) {
    if (test_ids.count(e.id)) continue;
    other_titles.insert(e.title);
    for (const auto& [name, value] : e.attributes) other_values[name].insert(normalize(value));
  }
  for (const auto& e : entities) {
    if (!test_ids.count(e.id)) continue;
    CHECK_FALSE(other_titles.count(e.title));
    for (const auto& [name, value] : e.attributes) CHECK_FALSE(other_values[name].count(normalize(value)));
  }
}

TEST_CASE("the editing sentence uses elision") {
  Entity e{"film-x-00000", "film", "Oppenheimer", {{"editor", "Jennifer Lame"}}};
  const Document d = render_document(film_schema(), e, 1);
  CHECK(d.text.find("Editing was handled by Jennifer Lame") != std::string::npos);
  // One title sentence plus one fact sentence.
  CHECK(std::count(d.text.begin(), d.text.end(), '.') == 2);
}

TEST_CASE("style seeds reorder sentences but keep the facts") {
  std::vector<Entity> entities;
  generate_corpus(small_options(), &entities);
  const Entity& e = entities.front();
  bool differs = false;
  const Document a = render_document(film_schema(), e, 1);
  for (std::uint64_t seed = 2; seed < 10; ++seed) {
    const Document b = render_document(film_schema(), e, seed);
    for (const auto& [_, value] : e.attributes) CHECK(count_phrase(b.text, value) == 1);
    differs = differs || a.text != b.text;
  }
  CHECK(differs);
}

TEST_CASE("make_qa follows the attribute template") {
  Entity e{"film-x-00000", "film", "Oppenheimer", {{"editor", "Jennifer Lame"}, {"director", "Christopher Nolan"}}};
  const QAPair q = make_qa(film_schema(), e, "editor");
  CHECK(q.question == "Who handled the editing of Oppenheimer?");
  CHECK(q.answer == "Jennifer Lame");
  CHECK(make_qa(film_schema(), e, "director").question.find("Oppenheimer") != std::string::npos);
  CHECK_THROWS_AS(make_qa(film_schema(), e, "budget"), Error);
}

TEST_CASE("an exhausted value space is reported with the attribute name") {
  CorpusOptions o = small_options();
  o.test_value_fraction = 0.99999;
  CHECK_THROWS_WITH_AS(generate_corpus(o), doctest::Contains("attribute '"), Error);
  o = small_options();
  o.qa_per_entity = 0;
  CHECK_THROWS_AS(generate_corpus(o), Error);
}

TEST_CASE("export and import round-trip") {
  pitlab::testing::TempDir dir("bundle");
  const CorpusBundle b = generate_corpus(small_options());
  export_bundle(b, dir.path());
  const CorpusBundle back = import_bundle(dir / "manifest.json");
  CHECK(back == b);
  CHECK(corpus_hash(back) == corpus_hash(b));
}

TEST_CASE("import validates records") {
  pitlab::testing::TempDir dir("import");
  write_lines(dir / "docs.jsonl",
              {R"({"id":"d1","entity_id":"e1","domain":"film","title":"A","text":"A is a film. It runs long."})",
               R"({"id":"d2","entity_id":"e2","domain":"film","title":"B","text":"B is a film."})",
               R"({"id":"d3","entity_id":"e3","domain":"film","title":"C","text":"C is a film."})"});
  write_lines(dir / "qa.jsonl", {R"({"id":"q1","doc_id":"d1","domain":"film","question":"Is A long?","answer":"long"})"});
  const CorpusBundle ok = import_bundle({{"test_doc", dir / "docs.jsonl"}, {"test_qa", dir / "qa.jsonl"}});
  CHECK(ok.docs("test_doc").size() == 3);

  write_lines(dir / "dangling.jsonl",
              {R"({"id":"q9","doc_id":"missing","domain":"film","question":"?","answer":"x"})"});
  CHECK_THROWS_WITH_AS(import_bundle({{"test_doc", dir / "docs.jsonl"}, {"test_qa", dir / "dangling.jsonl"}}),
                       doctest::Contains("q9"), Error);

  write_lines(dir / "dup.jsonl",
              {R"({"id":"d1","entity_id":"e1","domain":"film","title":"A","text":"x"})",
               R"({"id":"d1","entity_id":"e1","domain":"film","title":"A","text":"y"})"});
  CHECK_THROWS_WITH_AS(import_bundle({{"test_doc", dir / "dup.jsonl"}}), doctest::Contains("d1"), Error);

  write_lines(dir / "bad.jsonl", {"{not json"});
  try {
    import_bundle({{"test_doc", dir / "bad.jsonl"}});
    FAIL("expected a data error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::data);
  }
  CHECK_THROWS_AS(import_bundle(dir / "no-manifest.json"), Error);
}

}  // TEST_SUITE

TEST_SUITE("tokenizer") {

TEST_CASE("vocabulary covers every word after the reserved block") {
  const std::vector<std::string> texts{"a b", "b c"};
  const Vocab v = build_vocab(texts);
  CHECK(v.size() == Vocab::reserved_count + 3);
  CHECK(v.token(Vocab::pad) == "<pad>");
  CHECK(v.token(Vocab::unk) == "<unk>");
  CHECK(v.token(Vocab::bos) == "<bos>");
  CHECK(v.token(Vocab::q_marker) == "Q:");
  CHECK(v.token(Vocab::a_marker) == "A:");
  // b is most frequent, then a and c lexicographically.
  CHECK(v.id("b") == 6);
  CHECK(v.id("a") == 7);
  CHECK(v.id("c") == 8);
}

TEST_CASE("case is folded") {
  const std::vector<std::string> texts{"Lame", "lame"};
  const Vocab v = build_vocab(texts);
  CHECK(v.size() == Vocab::reserved_count + 1);
}

TEST_CASE("vocabulary building is deterministic") {
  const CorpusBundle b = generate_corpus(small_options());
  CHECK(build_vocab(b) == build_vocab(b));
  CHECK(build_vocab(b).hash() == build_vocab(b).hash());
}

TEST_CASE("encode and decode examples") {
  const std::vector<std::string> texts{"Jennifer Lame edited it."};
  const Vocab v = build_vocab(texts);
  const auto ids = encode("Jennifer Lame", v);
  CHECK(ids.size() == 2);
  CHECK(decode(ids, v) == "jennifer lame");
  CHECK(encode("", v).empty());
  CHECK(encode("zzyzx", v) == TokenSequence{Vocab::unk});
  CHECK(encode("Q: x\nA:", v) == TokenSequence{Vocab::q_marker, Vocab::unk, Vocab::newline, Vocab::a_marker});
}

TEST_CASE("decode inverts encode on canonical corpus text") {
  const CorpusBundle b = generate_corpus(small_options());
  const Vocab v = build_vocab(b);
  std::set<TokenSequence> seen;
  std::set<std::string> texts;
  for (const auto& split : b.split_names()) {
    if (is_doc_split(split))
      for (const auto& d : b.docs(split)) texts.insert(canonicalize(d.text));
    else
      for (const auto& q : b.qa(split)) texts.insert(canonicalize("Q: " + q.question + "\nA: " + q.answer));
  }
  for (const auto& t : texts) {
    const auto ids = encode(t, v);
    for (TokenId id : ids) CHECK(id != Vocab::unk);
    CHECK(decode(ids, v) == t);
    seen.insert(ids);
  }
  CHECK(seen.size() == texts.size());
}

TEST_CASE("vocabulary JSON round-trips") {
  pitlab::testing::TempDir dir("vocab");
  const Vocab v = build_vocab(generate_corpus(small_options()));
  v.save(dir / "vocab.json");
  CHECK(Vocab::load(dir / "vocab.json") == v);
  CHECK_THROWS_AS(Vocab::from_json("{\"format\":\"other\"}"), Error);
}

}  // TEST_SUITE
