// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "critplan/mdp.hpp"

namespace critplan {

struct Document {
  std::string doc_id;
  std::string text;
};

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

struct SearchHit {
  std::size_t doc_index = 0;
  double score = 0.0;
};

/// Immutable BM25 index over a document collection. Terms come from
/// tokenize(): lowercase, split on non-alphanumerics, no stemming.
class Corpus {
 public:
  static constexpr const char* kMagic = "CRITPLAN-BM25";
  static constexpr int kFormatVersion = 1;

  Corpus() = default;

  /// Throws Error(kIngestion) on duplicate doc_ids or bad parameters.
  static Corpus build(std::vector<Document> documents, Bm25Params params = {},
                      std::string corpus_id = "corpus");

  const std::string& id() const noexcept { return corpus_id_; }
  const Bm25Params& params() const noexcept { return params_; }
  std::size_t size() const noexcept { return documents_.size(); }
  bool empty() const noexcept { return documents_.empty(); }
  const Document& document(std::size_t index) const { return documents_.at(index); }
  std::size_t length(std::size_t index) const { return lengths_.at(index); }
  double average_length() const noexcept { return avgdl_; }
  std::size_t document_frequency(std::string_view term) const;
  const Document* find(std::string_view doc_id) const;

  /// Okapi BM25 with IDF = ln((N - df + 0.5) / (df + 0.5) + 1). Query terms
  /// are deduplicated. Zero-score documents are dropped; ties go to the
  /// smaller doc_id. Throws Error(kEmptyQuery) if the query has no tokens.
  std::vector<SearchHit> search(std::string_view query, std::size_t k) const;

  std::string serialize() const;
  static Corpus deserialize(std::string_view data, const std::string& source = "<memory>");
  void save(const std::string& path) const;
  static Corpus load(const std::string& path);

 private:
  struct Posting {
    std::size_t doc_index;
    std::size_t tf;
  };

  void index_documents();

  std::string corpus_id_ = "corpus";
  Bm25Params params_;
  std::vector<Document> documents_;
  std::vector<std::size_t> lengths_;
  double avgdl_ = 0.0;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

/// Top-k Doc observations for `query`, best first.
std::vector<Observation> retrieve(const Corpus& corpus, std::string_view query, std::size_t k);

/// Every regular file under `dir`, doc_id = path relative to dir with '/'
/// separators, sorted by doc_id. File contents are trimmed.
std::vector<Document> read_documents_from_directory(const std::string& dir);

/// One {"id": ..., "text": ...} object per line.
std::vector<Document> read_documents_from_jsonl(const std::string& path);

}  // namespace critplan
