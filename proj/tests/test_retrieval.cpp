// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>

#include "critplan/error.hpp"
#include "critplan/retrieval.hpp"
#include "critplan/text.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace critplan;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no exception");
  return ErrorCode::kIo;
}

Corpus cats() {
  return Corpus::build({{"a", "the cat sat on the mat"},
                        {"b", "dogs chase the cat and the cat runs"},
                        {"c", "birds fly south"}});
}

}  // namespace

TEST_CASE("three-document example against the reference scorer") {
  Corpus corpus = cats();
  CHECK(corpus.average_length() == doctest::Approx(17.0 / 3.0));
  CHECK(corpus.document_frequency("cat") == 2);
  auto hits = corpus.search("cat", 10);
  REQUIRE(hits.size() == 2);
  auto expected = oracle::bm25_scores({"the cat sat on the mat", "dogs chase the cat and the cat runs",
                                       "birds fly south"},
                                      "cat");
  CHECK(expected[2] == 0.0);
  // b has tf 2 but is longer; the oracle decides the order.
  std::size_t first = expected[0] > expected[1] ? 0 : 1;
  CHECK(hits[0].doc_index == first);
  for (const auto& h : hits) CHECK(h.score == doctest::Approx(expected[h.doc_index]).epsilon(1e-12));
}

TEST_CASE("random corpora agree with the reference scorer") {
  std::mt19937_64 rng(7);
  const std::vector<std::string> vocab{"alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta"};
  for (int round = 0; round < 20; ++round) {
    std::vector<Document> docs;
    std::vector<std::string> texts;
    std::size_t n = 2 + rng() % 12;
    for (std::size_t i = 0; i < n; ++i) {
      std::string text;
      std::size_t len = 1 + rng() % 15;
      for (std::size_t w = 0; w < len; ++w) text += vocab[rng() % vocab.size()] + " ";
      texts.push_back(text);
      docs.push_back({"d" + std::to_string(100 + i), text});
    }
    std::string query = vocab[rng() % 8] + " " + vocab[rng() % 8] + " " + vocab[rng() % 8];
    auto expected = oracle::bm25_scores(texts, query);
    Corpus corpus = Corpus::build(docs);
    auto hits = corpus.search(query, n);
    std::size_t nonzero = 0;
    for (double s : expected) nonzero += s > 0.0;
    REQUIRE(hits.size() == nonzero);
    for (std::size_t i = 0; i < hits.size(); ++i) {
      CHECK(hits[i].score == doctest::Approx(expected[hits[i].doc_index]).epsilon(1e-12));
      if (i > 0) CHECK(hits[i - 1].score >= hits[i].score);
    }
  }
}

TEST_CASE("repeated query terms count once") {
  Corpus corpus = cats();
  auto once = corpus.search("cat", 3);
  auto twice = corpus.search("cat CAT cat", 3);
  REQUIRE(once.size() == twice.size());
  CHECK(once[0].score == twice[0].score);
}

TEST_CASE("ties break by doc id") {
  Corpus corpus = Corpus::build({{"z", "same words here"}, {"m", "same words here"}, {"a", "other"}});
  auto hits = corpus.search("words", 5);
  REQUIRE(hits.size() == 2);
  CHECK(corpus.document(hits[0].doc_index).doc_id == "m");
  CHECK(corpus.document(hits[1].doc_index).doc_id == "z");
  auto top = corpus.search("words", 1);
  REQUIRE(top.size() == 1);
  CHECK(corpus.document(top[0].doc_index).doc_id == "m");
}

TEST_CASE("edge cases") {
  Corpus empty = Corpus::build({});
  CHECK(empty.search("anything", 5).empty());
  CHECK(code_of([&] { cats().search("  ?! ", 5); }) == ErrorCode::kEmptyQuery);
  CHECK(cats().search("unicorn", 5).empty());
  CHECK(code_of([] { Corpus::build({{"a", "x"}, {"a", "y"}}); }) == ErrorCode::kIngestion);
  CHECK(code_of([] { Corpus::build({{"a", "..."}}); }) == ErrorCode::kIngestion);
  CHECK(code_of([] { Corpus::build({{"a", "x"}}, Bm25Params{0.0, 0.75}); }) == ErrorCode::kIngestion);
  CHECK(code_of([] { Corpus::build({{"a", "x"}}, Bm25Params{1.2, 1.5}); }) == ErrorCode::kIngestion);
}

TEST_CASE("retrieve returns Doc observations") {
  auto docs = retrieve(cats(), "birds", 3);
  REQUIRE(docs.size() == 1);
  CHECK(docs[0].kind == ObservationKind::kDoc);
  CHECK(docs[0].doc_id == "c");
  CHECK(docs[0].text == "birds fly south");
}

TEST_CASE("index round trip is exact") {
  Corpus corpus = Corpus::build({{"x1", "Ünïcode words and \"quotes\"\nnewline"}, {"x2", "plain words"}},
                                Bm25Params{1.5, 0.5}, "mine");
  std::string data = corpus.serialize();
  CHECK(data.rfind("CRITPLAN-BM25 1\n", 0) == 0);
  Corpus back = Corpus::deserialize(data);
  CHECK(back.serialize() == data);
  CHECK(back.id() == "mine");
  CHECK(back.params().k1 == 1.5);
  auto a = corpus.search("words", 2);
  auto b = back.search("words", 2);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].doc_index == b[i].doc_index);
    CHECK(a[i].score == b[i].score);
  }

  testing::TempDir dir("idx");
  corpus.save(dir / "index.bm25");
  CHECK(Corpus::load(dir / "index.bm25").serialize() == data);
}

TEST_CASE("corrupt indexes are rejected with a line number") {
  std::string data = cats().serialize();
  CHECK(code_of([] { Corpus::deserialize(""); }) == ErrorCode::kIngestion);
  CHECK(code_of([] { Corpus::deserialize("NOT-AN-INDEX\n"); }) == ErrorCode::kIngestion);
  CHECK(code_of([] { Corpus::deserialize("CRITPLAN-BM25 9\n"); }) == ErrorCode::kIngestion);
  std::string truncated = data.substr(0, data.find('\n', data.find('\n') + 1) + 1);
  try {
    Corpus::deserialize(truncated, "idx");
    FAIL("accepted a truncated index");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).rfind("idx:3:", 0) == 0);
  }
  std::string edited = data;
  edited.replace(edited.find("birds"), 5, "bards");
  CHECK(code_of([&] { Corpus::deserialize(edited); }) == ErrorCode::kIngestion);
}

TEST_CASE("directory and jsonl ingestion") {
  testing::TempDir dir("docs");
  std::filesystem::create_directories(dir / "sub");
  write_file(dir / "b.txt", "second\n");
  write_file(dir / "a.txt", "  first  ");
  write_file(dir / "sub/c.md", "third");
  auto docs = read_documents_from_directory(dir.str());
  REQUIRE(docs.size() == 3);
  CHECK(docs[0].doc_id == "a.txt");
  CHECK(docs[0].text == "first");
  CHECK(docs[1].text == "second");
  CHECK(docs[2].doc_id == "sub/c.md");
  CHECK(code_of([&] { read_documents_from_directory(dir / "missing"); }) == ErrorCode::kIngestion);

  write_file(dir / "docs.jsonl", "{\"id\":\"1\",\"text\":\"one\"}\n\n{\"id\":\"2\",\"text\":\"two\"}\n");
  CHECK(read_documents_from_jsonl(dir / "docs.jsonl").size() == 2);
  write_file(dir / "bad.jsonl", "{\"id\":\"1\",\"text\":\"one\"}\n{\"id\":2}\n");
  try {
    read_documents_from_jsonl(dir / "bad.jsonl");
    FAIL("accepted bad jsonl");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIngestion);
    CHECK(std::string(e.what()).find("bad.jsonl:2:") != std::string::npos);
  }
}
