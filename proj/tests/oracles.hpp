// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

// Reference evaluations in 50-digit binary floating point. They share no
// code with the engine: tokenization, IDF and DCG are re-derived here from
// their definitions.

#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracle {

using Real = boost::multiprecision::cpp_bin_float_50;

inline double ucb1(double v, std::size_t n, std::size_t np, double c) {
  Real rv(v), rn(n), rnp(np), rc(c);
  Real r = rv / rn + rc * boost::multiprecision::sqrt(boost::multiprecision::log(rnp) / rn);
  return r.convert_to<double>();
}

// -log(sigmoid(x)) = log(1 + exp(-x)).
inline double pairwise_loss(double chosen, double rejected) {
  Real x = Real(chosen) - Real(rejected);
  Real r = boost::multiprecision::log(Real(1) + boost::multiprecision::exp(-x));
  return r.convert_to<double>();
}

inline double ndcg_at_10(const std::vector<std::string>& ranking, const std::set<std::string>& relevant) {
  if (relevant.empty()) return 0.0;
  Real dcg = 0, idcg = 0;
  for (std::size_t i = 0; i < ranking.size() && i < 10; ++i) {
    if (relevant.count(ranking[i])) dcg += Real(1) / boost::multiprecision::log2(Real(i + 2));
  }
  for (std::size_t i = 0; i < relevant.size() && i < 10; ++i) {
    idcg += Real(1) / boost::multiprecision::log2(Real(i + 2));
  }
  Real r = dcg / idcg;
  return r.convert_to<double>();
}

inline std::vector<std::string> words(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char ch : text) {
    if (std::isalnum(ch) || ch >= 0x80) {
      cur += static_cast<char>(std::tolower(ch));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// Brute-force Okapi BM25 of every document against a query, with the
// query treated as a set of terms.
inline std::vector<double> bm25_scores(const std::vector<std::string>& docs, const std::string& query,
                                       double k1 = 1.2, double b = 0.75) {
  std::vector<std::vector<std::string>> toks;
  Real total = 0;
  for (const auto& d : docs) {
    toks.push_back(words(d));
    total += Real(toks.back().size());
  }
  const Real n_docs(docs.size());
  const Real avgdl = docs.empty() ? Real(0) : total / n_docs;
  auto q = words(query);
  std::set<std::string> terms(q.begin(), q.end());
  std::vector<double> out;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    Real score = 0;
    for (const auto& t : terms) {
      std::size_t df = 0;
      for (const auto& other : toks) {
        if (std::find(other.begin(), other.end(), t) != other.end()) ++df;
      }
      std::size_t tf = std::count(toks[d].begin(), toks[d].end(), t);
      if (tf == 0) continue;
      Real idf = boost::multiprecision::log((n_docs - Real(df) + Real(0.5)) / (Real(df) + Real(0.5)) + Real(1));
      Real len(toks[d].size());
      Real denom = Real(tf) + Real(k1) * (Real(1) - Real(b) + Real(b) * len / avgdl);
      score += idf * Real(tf) * (Real(k1) + Real(1)) / denom;
    }
    out.push_back(score.convert_to<double>());
  }
  return out;
}

}  // namespace oracle
