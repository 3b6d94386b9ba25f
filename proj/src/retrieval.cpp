// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

#include "critplan/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "critplan/error.hpp"
#include "critplan/text.hpp"

namespace critplan {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kTokenizerName = "lower-alnum";

}  // namespace

Corpus Corpus::build(std::vector<Document> documents, Bm25Params params, std::string corpus_id) {
  if (!(params.k1 > 0.0)) fail(ErrorCode::kIngestion, "BM25 k1 must be positive");
  if (params.b < 0.0 || params.b > 1.0) fail(ErrorCode::kIngestion, "BM25 b must lie in [0, 1]");
  Corpus corpus;
  corpus.corpus_id_ = std::move(corpus_id);
  corpus.params_ = params;
  corpus.documents_ = std::move(documents);
  corpus.index_documents();
  return corpus;
}

void Corpus::index_documents() {
  by_id_.clear();
  postings_.clear();
  lengths_.assign(documents_.size(), 0);
  std::size_t total = 0;
  for (std::size_t i = 0; i < documents_.size(); ++i) {
    const auto& doc = documents_[i];
    if (!by_id_.emplace(doc.doc_id, i).second) {
      fail(ErrorCode::kIngestion, "duplicate doc_id '" + doc.doc_id + "'");
    }
    std::map<std::string, std::size_t> counts;
    auto tokens = tokenize(doc.text);
    for (auto& token : tokens) ++counts[token];
    lengths_[i] = tokens.size();
    total += tokens.size();
    for (auto& [term, tf] : counts) postings_[term].push_back(Posting{i, tf});
  }
  avgdl_ = documents_.empty() ? 0.0 : static_cast<double>(total) / documents_.size();
  if (!documents_.empty() && avgdl_ <= 0.0) {
    fail(ErrorCode::kIngestion, "corpus has no tokens; average document length is zero");
  }
}

std::size_t Corpus::document_frequency(std::string_view term) const {
  auto it = postings_.find(std::string(term));
  return it == postings_.end() ? 0 : it->second.size();
}

const Document* Corpus::find(std::string_view doc_id) const {
  auto it = by_id_.find(std::string(doc_id));
  return it == by_id_.end() ? nullptr : &documents_[it->second];
}

std::vector<SearchHit> Corpus::search(std::string_view query, std::size_t k) const {
  require(k >= 1, "retrieval k must be at least 1");
  auto tokens = tokenize(query);
  if (tokens.empty()) fail(ErrorCode::kEmptyQuery, "query has no tokens after tokenization");
  std::set<std::string> terms(tokens.begin(), tokens.end());

  const double n = static_cast<double>(documents_.size());
  std::vector<double> scores(documents_.size(), 0.0);
  std::vector<bool> touched(documents_.size(), false);
  for (const auto& term : terms) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const double df = static_cast<double>(it->second.size());
    const double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
    for (const auto& p : it->second) {
      const double tf = static_cast<double>(p.tf);
      const double norm =
          params_.k1 * (1.0 - params_.b + params_.b * static_cast<double>(lengths_[p.doc_index]) / avgdl_);
      scores[p.doc_index] += idf * tf * (params_.k1 + 1.0) / (tf + norm);
      touched[p.doc_index] = true;
    }
  }

  std::vector<SearchHit> hits;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (touched[i] && scores[i] > 0.0) hits.push_back(SearchHit{i, scores[i]});
  }
  auto better = [&](const SearchHit& a, const SearchHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return documents_[a.doc_index].doc_id < documents_[b.doc_index].doc_id;
  };
  if (hits.size() > k) {
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(), better);
    hits.resize(k);
  } else {
    std::sort(hits.begin(), hits.end(), better);
  }
  return hits;
}

std::string Corpus::serialize() const {
  std::string out = std::string(kMagic) + " " + std::to_string(kFormatVersion) + "\n";
  ordered_json meta;
  meta["corpus_id"] = corpus_id_;
  meta["k1"] = params_.k1;
  meta["b"] = params_.b;
  meta["tokenizer"] = kTokenizerName;
  meta["documents"] = documents_.size();
  meta["terms"] = postings_.size();
  out += meta.dump() + "\n";
  for (std::size_t i = 0; i < documents_.size(); ++i) {
    ordered_json d;
    d["id"] = documents_[i].doc_id;
    d["len"] = lengths_[i];
    d["text"] = documents_[i].text;
    out += d.dump() + "\n";
  }
  std::vector<const std::string*> terms;
  terms.reserve(postings_.size());
  for (const auto& [term, _] : postings_) terms.push_back(&term);
  std::sort(terms.begin(), terms.end(), [](auto* a, auto* b) { return *a < *b; });
  for (const auto* term : terms) {
    ordered_json t;
    t["t"] = *term;
    json postings = json::array();
    for (const auto& p : postings_.at(*term)) postings.push_back({p.doc_index, p.tf});
    t["p"] = std::move(postings);
    out += t.dump() + "\n";
  }
  return out;
}

Corpus Corpus::deserialize(std::string_view data, const std::string& source) {
  std::istringstream in{std::string(data)};
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() -> bool {
    ++line_no;
    return static_cast<bool>(std::getline(in, line));
  };
  auto bad = [&](const std::string& why) {
    fail(ErrorCode::kIngestion, source + ":" + std::to_string(line_no) + ": " + why);
  };

  if (!next()) bad("empty index file");
  std::string expected = std::string(kMagic) + " " + std::to_string(kFormatVersion);
  if (line.rfind(kMagic, 0) != 0) bad("not a BM25 index (bad magic)");
  if (line != expected) bad("unsupported index format version '" + line + "'");

  Corpus corpus;
  try {
    if (!next()) bad("missing metadata line");
    json meta = json::parse(line);
    if (meta.at("tokenizer").get<std::string>() != kTokenizerName) bad("unknown tokenizer");
    corpus.corpus_id_ = meta.at("corpus_id").get<std::string>();
    corpus.params_ = Bm25Params{meta.at("k1").get<double>(), meta.at("b").get<double>()};
    auto n_docs = meta.at("documents").get<std::size_t>();
    auto n_terms = meta.at("terms").get<std::size_t>();
    for (std::size_t i = 0; i < n_docs; ++i) {
      if (!next()) bad("truncated document section");
      json d = json::parse(line);
      corpus.documents_.push_back(Document{d.at("id").get<std::string>(), d.at("text").get<std::string>()});
    }
    // Postings are recomputed from the documents and checked against the
    // stored ones, so a hand-edited index cannot silently disagree.
    corpus.index_documents();
    for (std::size_t i = 0; i < n_terms; ++i) {
      if (!next()) bad("truncated term section");
      json t = json::parse(line);
      auto it = corpus.postings_.find(t.at("t").get<std::string>());
      if (it == corpus.postings_.end() || it->second.size() != t.at("p").size()) {
        bad("postings disagree with document text");
      }
    }
    if (corpus.postings_.size() != n_terms) bad("term count disagrees with document text");
  } catch (const json::exception& e) {
    bad(e.what());
  }
  return corpus;
}

void Corpus::save(const std::string& path) const { write_file(path, serialize()); }

Corpus Corpus::load(const std::string& path) { return deserialize(read_file(path), path); }

std::vector<Observation> retrieve(const Corpus& corpus, std::string_view query, std::size_t k) {
  std::vector<Observation> out;
  for (const auto& hit : corpus.search(query, k)) {
    const auto& doc = corpus.document(hit.doc_index);
    out.push_back(Observation::doc(doc.doc_id, doc.text));
  }
  return out;
}

std::vector<Document> read_documents_from_directory(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) fail(ErrorCode::kIngestion, "'" + dir + "' is not a directory");
  std::vector<Document> docs;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    docs.push_back(Document{fs::relative(entry.path(), dir).generic_string(),
                            trim(read_file(entry.path().string()))});
  }
  std::sort(docs.begin(), docs.end(),
            [](const Document& a, const Document& b) { return a.doc_id < b.doc_id; });
  return docs;
}

std::vector<Document> read_documents_from_jsonl(const std::string& path) {
  std::vector<Document> docs;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      docs.push_back(Document{j.at("id").get<std::string>(), j.at("text").get<std::string>()});
    } catch (const json::exception& e) {
      fail(ErrorCode::kIngestion, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return docs;
}

}  // namespace critplan
