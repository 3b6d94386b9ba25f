// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

#include "critplan/critics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <set>

#include "critplan/error.hpp"
#include "critplan/text.hpp"

namespace critplan {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const char* to_string(CriticKind kind) noexcept {
  switch (kind) {
    case CriticKind::kSubGoal: return "SubGoal";
    case CriticKind::kRationale: return "Rationale";
    case CriticKind::kQuery: return "Query";
    case CriticKind::kDoc: return "Doc";
  }
  return "?";
}

CriticKind critic_kind_from_string(std::string_view name) {
  for (auto kind : kAllCriticKinds) {
    if (name == to_string(kind)) return kind;
  }
  fail(ErrorCode::kInvalidArgument, "unknown critic kind '" + std::string(name) + "'");
}

CriticKind critic_kind_for_state(const Observation* last) noexcept {
  if (last == nullptr) return CriticKind::kSubGoal;
  switch (last->kind) {
    case ObservationKind::kReason: return CriticKind::kRationale;
    case ObservationKind::kGenQuery: return CriticKind::kQuery;
    case ObservationKind::kRetrieve: return CriticKind::kDoc;
    default: return CriticKind::kSubGoal;
  }
}

std::vector<Observation> context_for(CriticKind kind, const State& state) {
  std::vector<Observation> out;
  switch (kind) {
    case CriticKind::kSubGoal:
      return state.observations();
    case CriticKind::kRationale:
      for (auto& obs : state.observations()) {
        if (obs.kind == ObservationKind::kRationale) out.push_back(std::move(obs));
      }
      return out;
    case CriticKind::kQuery:
    case CriticKind::kDoc: {
      const Observation* rationale = nullptr;
      const Observation* query = nullptr;
      state.visit_backwards([&](const Step& step) {
        const auto& obs = step.observation;
        if (obs.kind == ObservationKind::kRationale && rationale == nullptr) rationale = &obs;
        if (obs.kind == ObservationKind::kQuery && query == nullptr) query = &obs;
        return rationale == nullptr || (kind == CriticKind::kDoc && query == nullptr);
      });
      if (rationale != nullptr) out.push_back(*rationale);
      if (kind == CriticKind::kDoc && query != nullptr) out.push_back(*query);
      return out;
    }
  }
  return out;
}

CriticContext make_context(CriticKind kind, const State& state, Observation candidate) {
  return CriticContext{kind, state.problem().statement, context_for(kind, state),
                       std::move(candidate)};
}

// ---------------------------------------------------------------------------
// Backends

LookupCritic LookupCritic::from_file(const std::string& path, double fallback) {
  std::vector<Entry> entries;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      Entry e{critic_kind_from_string(j.at("kind").get<std::string>()),
              j.at("candidate").get<std::string>(), std::nullopt, j.at("score").get<double>()};
      if (j.contains("context_size")) e.context_size = j["context_size"].get<std::size_t>();
      entries.push_back(std::move(e));
    } catch (const json::exception& e) {
      fail(ErrorCode::kConfiguration, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return LookupCritic(std::move(entries), fallback);
}

double LookupCritic::score(const CriticContext& ctx) const {
  for (const auto& e : entries_) {
    if (e.kind != ctx.kind || e.candidate != ctx.candidate.text) continue;
    if (e.context_size && *e.context_size != ctx.context_observations.size()) continue;
    return e.score;
  }
  return fallback_;
}

void CriticSet::set(CriticKind kind, std::shared_ptr<const CriticBackend> critic) {
  critics_[static_cast<std::size_t>(kind)] = std::move(critic);
}

const CriticBackend* CriticSet::get(CriticKind kind) const noexcept {
  return critics_[static_cast<std::size_t>(kind)].get();
}

const CriticBackend& CriticSet::require(CriticKind kind) const {
  const CriticBackend* critic = get(kind);
  if (critic == nullptr) {
    fail(ErrorCode::kConfiguration, std::string("no critic configured for kind ") + to_string(kind));
  }
  return *critic;
}

bool CriticSet::complete() const noexcept {
  return std::all_of(critics_.begin(), critics_.end(), [](const auto& c) { return c != nullptr; });
}

CriticSet CriticSet::constant(double value) {
  CriticSet set;
  auto critic = std::make_shared<const ConstantCritic>(value);
  for (auto kind : kAllCriticKinds) set.set(kind, critic);
  return set;
}

double reward(const State& state, const Action& action, const CriticSet& critics) {
  CriticKind kind = critic_kind_for_state(state.last_observation());
  Observation candidate;
  if (kind == CriticKind::kSubGoal) {
    candidate = f_rule(state, action);
  } else {
    const auto* pick = std::get_if<ChooseCandidate>(&action);
    critplan::require(pick != nullptr, "sub-goal states only admit ChooseCandidate actions");
    candidate = pick->candidate;
  }
  return critics.require(kind).score(make_context(kind, state, std::move(candidate)));
}

double pairwise_loss(double score_chosen, double score_rejected) {
  // softplus(-x) = max(-x, 0) + log1p(exp(-|x|))
  double x = score_chosen - score_rejected;
  return std::max(-x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

// ---------------------------------------------------------------------------
// Reference linear critic

LinearCritic::LinearCritic(CriticKind kind, FeaturizerSpec featurizer, std::uint64_t seed)
    : kind_(kind), featurizer_(featurizer), seed_(seed) {
  critplan::require(featurizer_.dimensions >= 16, "featurizer needs at least 16 dimensions");
  weights_.assign(featurizer_.dimensions, 0.0);
}

std::vector<std::pair<std::uint32_t, double>> LinearCritic::features(
    const std::vector<Observation>& context, const Observation& candidate) const {
  // The seed salts the hash so independent critics do not share collisions.
  const std::uint64_t salt = fnv1a(std::to_string(seed_));
  std::vector<std::pair<std::uint32_t, double>> out;
  auto add_group = [&](const std::set<std::string>& keys) {
    if (keys.empty()) return;
    const double value = 1.0 / std::sqrt(static_cast<double>(keys.size()));
    for (const auto& key : keys) {
      out.emplace_back(static_cast<std::uint32_t>(fnv1a(key, salt) % featurizer_.dimensions), value);
    }
  };

  std::set<std::string> cand;
  for (auto& tok : tokenize(candidate.text)) cand.insert("c:" + tok);
  std::set<std::string> ctx;
  for (const auto& obs : context) {
    for (auto& tok : tokenize(obs.text)) ctx.insert("x:" + tok);
  }
  add_group(cand);
  add_group(ctx);
  if (featurizer_.cross_features) {
    std::string last = context.empty() ? "none" : to_string(context.back().kind);
    std::set<std::string> cross;
    for (auto& tok : tokenize(candidate.text)) cross.insert("k:" + last + "|" + tok);
    add_group(cross);
  }

  std::sort(out.begin(), out.end());
  std::vector<std::pair<std::uint32_t, double>> merged;
  for (const auto& f : out) {
    if (!merged.empty() && merged.back().first == f.first) {
      merged.back().second += f.second;
    } else {
      merged.push_back(f);
    }
  }
  return merged;
}

double LinearCritic::score(const std::vector<Observation>& context,
                           const Observation& candidate) const {
  double s = 0.0;
  for (const auto& [index, value] : features(context, candidate)) s += weights_[index] * value;
  return s;
}

double LinearCritic::score(const CriticContext& ctx) const {
  return score(ctx.context_observations, ctx.candidate);
}

std::string LinearCritic::serialize() const {
  ordered_json j;
  j["format"] = kFormat;
  j["version"] = kFormatVersion;
  j["kind"] = to_string(kind_);
  j["dimensions"] = featurizer_.dimensions;
  j["cross_features"] = featurizer_.cross_features;
  j["seed"] = seed_;
  json w = json::array();
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (weights_[i] != 0.0) w.push_back({i, weights_[i]});
  }
  j["weights"] = std::move(w);
  return j.dump() + "\n";
}

LinearCritic LinearCritic::deserialize(std::string_view data, const std::string& source) {
  try {
    json j = json::parse(data);
    if (j.at("format").get<std::string>() != kFormat) {
      fail(ErrorCode::kImport, source + ": not a critic file");
    }
    if (j.at("version").get<int>() != kFormatVersion) {
      fail(ErrorCode::kImport, source + ": unsupported critic format version");
    }
    FeaturizerSpec spec{j.at("dimensions").get<std::uint32_t>(), j.at("cross_features").get<bool>()};
    LinearCritic critic(critic_kind_from_string(j.at("kind").get<std::string>()), spec,
                        j.at("seed").get<std::uint64_t>());
    for (const auto& entry : j.at("weights")) {
      auto index = entry.at(0).get<std::size_t>();
      if (index >= critic.weights_.size()) fail(ErrorCode::kImport, source + ": weight index out of range");
      critic.weights_[index] = entry.at(1).get<double>();
    }
    return critic;
  } catch (const json::exception& e) {
    fail(ErrorCode::kImport, source + ": " + e.what());
  }
}

void LinearCritic::save(const std::string& path) const { write_file(path, serialize()); }

LinearCritic LinearCritic::load(const std::string& path) { return deserialize(read_file(path), path); }

namespace {

struct PairFeatures {
  std::vector<std::pair<std::uint32_t, double>> diff;  // phi(chosen) - phi(rejected)
};

std::vector<std::pair<std::uint32_t, double>> subtract(
    const std::vector<std::pair<std::uint32_t, double>>& a,
    const std::vector<std::pair<std::uint32_t, double>>& b) {
  std::vector<std::pair<std::uint32_t, double>> out;
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
      out.push_back(a[i++]);
    } else if (i == a.size() || b[j].first < a[i].first) {
      out.emplace_back(b[j].first, -b[j].second);
      ++j;
    } else {
      double v = a[i].second - b[j].second;
      if (v != 0.0) out.emplace_back(a[i].first, v);
      ++i;
      ++j;
    }
  }
  return out;
}

double dot(const std::vector<double>& w, const std::vector<std::pair<std::uint32_t, double>>& x) {
  double s = 0.0;
  for (const auto& [index, value] : x) s += w[index] * value;
  return s;
}

double mean_loss(const std::vector<double>& w, const std::vector<PairFeatures>& data) {
  double total = 0.0;
  for (const auto& p : data) total += pairwise_loss(dot(w, p.diff), 0.0);
  return total / static_cast<double>(data.size());
}

}  // namespace

LinearCritic train_reference_critic(const std::vector<PreferencePair>& pairs,
                                    const TrainingOptions& options) {
  if (pairs.empty()) fail(ErrorCode::kTraining, "no preference pairs to train on");
  const CriticKind kind = pairs.front().kind;
  bool informative = false;
  for (const auto& p : pairs) {
    if (p.kind != kind) fail(ErrorCode::kTraining, "preference pairs mix critic kinds");
    informative = informative || p.chosen.text != p.rejected.text;
  }
  if (!informative) {
    fail(ErrorCode::kTraining, "every pair is degenerate (chosen text equals rejected text)");
  }

  LinearCritic critic(kind, options.featurizer, options.seed);
  std::vector<PairFeatures> data;
  data.reserve(pairs.size());
  for (const auto& p : pairs) {
    data.push_back({subtract(critic.features(p.context_observations, p.chosen),
                             critic.features(p.context_observations, p.rejected))});
  }

  auto& w = critic.weights();
  std::vector<double> grad(w.size(), 0.0);
  std::vector<std::uint32_t> touched;
  const double scale = options.learning_rate / static_cast<double>(data.size());
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    if (options.loss_curve) options.loss_curve->push_back(mean_loss(w, data));
    touched.clear();
    for (const auto& p : data) {
      // d/dw softplus(-w.x) = -sigmoid(-w.x) x
      double margin = dot(w, p.diff);
      double coeff = 1.0 / (1.0 + std::exp(margin));
      for (const auto& [index, value] : p.diff) {
        if (grad[index] == 0.0) touched.push_back(index);
        grad[index] -= coeff * value;
      }
    }
    for (auto index : touched) {
      w[index] -= scale * grad[index];
      grad[index] = 0.0;
    }
  }
  if (options.loss_curve) options.loss_curve->push_back(mean_loss(w, data));
  return critic;
}

double mean_pairwise_loss(const LinearCritic& critic, const std::vector<PreferencePair>& pairs) {
  critplan::require(!pairs.empty(), "mean loss over an empty pair set");
  double total = 0.0;
  for (const auto& p : pairs) {
    total += pairwise_loss(critic.score(p.context_observations, p.chosen),
                           critic.score(p.context_observations, p.rejected));
  }
  return total / static_cast<double>(pairs.size());
}

double pairwise_accuracy(const CriticBackend& critic, const std::vector<PreferencePair>& pairs,
                         const std::string& problem_statement) {
  critplan::require(!pairs.empty(), "accuracy over an empty pair set");
  std::size_t correct = 0;
  for (const auto& p : pairs) {
    double c = critic.score(CriticContext{p.kind, problem_statement, p.context_observations, p.chosen});
    double r = critic.score(CriticContext{p.kind, problem_statement, p.context_observations, p.rejected});
    if (c > r) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

// ---------------------------------------------------------------------------
// Pair files

namespace {

ordered_json observation_to_json(const Observation& obs) {
  ordered_json j;
  j["kind"] = to_string(obs.kind);
  j["text"] = obs.text;
  if (obs.doc_id) j["doc_id"] = *obs.doc_id;
  return j;
}

Observation observation_from_json(const json& j) {
  Observation obs;
  obs.kind = observation_kind_from_string(j.at("kind").get<std::string>());
  obs.text = j.at("text").get<std::string>();
  if (j.contains("doc_id") && !j["doc_id"].is_null()) obs.doc_id = j["doc_id"].get<std::string>();
  return obs;
}

const json& field(const json& j, const char* name) {
  if (!j.contains(name)) throw std::invalid_argument(std::string("missing field '") + name + "'");
  return j.at(name);
}

}  // namespace

std::string pair_file_name(CriticKind kind) {
  return std::string("pairs.") + to_string(kind) + ".jsonl";
}

std::string serialize_pairs(CriticKind kind, const std::vector<PreferencePair>& pairs) {
  ordered_json header;
  header["format"] = kPairFormat;
  header["version"] = kPairFormatVersion;
  header["kind"] = to_string(kind);
  std::string out = header.dump() + "\n";
  for (const auto& p : pairs) {
    if (p.kind != kind) continue;
    ordered_json j;
    j["kind"] = to_string(p.kind);
    j["problem_id"] = p.problem_id;
    ordered_json ctx = ordered_json::array();
    for (const auto& obs : p.context_observations) ctx.push_back(observation_to_json(obs));
    j["context_observations"] = std::move(ctx);
    j["chosen"] = observation_to_json(p.chosen);
    j["rejected"] = observation_to_json(p.rejected);
    j["chosen_value"] = p.chosen_value;
    j["rejected_value"] = p.rejected_value;
    j["chosen_visits"] = p.chosen_visits;
    j["rejected_visits"] = p.rejected_visits;
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<PreferencePair> parse_pairs(std::string_view data, const std::string& source) {
  std::vector<PreferencePair> pairs;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  while (pos < data.size()) {
    std::size_t nl = data.find('\n', pos);
    std::string_view line = data.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    pos = nl == std::string_view::npos ? data.size() : nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    auto where = source + ":" + std::to_string(line_no) + ": ";
    try {
      json j = json::parse(line);
      if (!header_seen) {
        if (!j.contains("format") || j["format"] != kPairFormat) {
          fail(ErrorCode::kImport, where + "missing format header line");
        }
        if (j.at("version").get<int>() != kPairFormatVersion) {
          fail(ErrorCode::kImport, where + "unsupported pair format version");
        }
        header_seen = true;
        continue;
      }
      PreferencePair p;
      p.kind = critic_kind_from_string(field(j, "kind").get<std::string>());
      p.problem_id = field(j, "problem_id").get<std::string>();
      for (const auto& obs : field(j, "context_observations")) {
        p.context_observations.push_back(observation_from_json(obs));
      }
      p.chosen = observation_from_json(field(j, "chosen"));
      p.rejected = observation_from_json(field(j, "rejected"));
      p.chosen_value = field(j, "chosen_value").get<double>();
      p.rejected_value = field(j, "rejected_value").get<double>();
      p.chosen_visits = field(j, "chosen_visits").get<std::size_t>();
      p.rejected_visits = field(j, "rejected_visits").get<std::size_t>();
      pairs.push_back(std::move(p));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kImport) throw;
      fail(ErrorCode::kImport, where + e.what());
    } catch (const std::exception& e) {
      fail(ErrorCode::kImport, where + e.what());
    }
  }
  return pairs;
}

std::size_t export_pairs(const std::vector<PreferencePair>& pairs, const std::string& dir) {
  namespace fs = std::filesystem;
  std::size_t written = 0;
  for (auto kind : kAllCriticKinds) {
    write_file((fs::path(dir) / pair_file_name(kind)).string(), serialize_pairs(kind, pairs));
    written += static_cast<std::size_t>(
        std::count_if(pairs.begin(), pairs.end(), [&](const auto& p) { return p.kind == kind; }));
  }
  return written;
}

std::vector<PreferencePair> import_pair_file(const std::string& path) {
  return parse_pairs(read_file(path), path);
}

std::vector<PreferencePair> import_pairs(const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<PreferencePair> pairs;
  for (auto kind : kAllCriticKinds) {
    auto path = fs::path(dir) / pair_file_name(kind);
    if (!fs::exists(path)) continue;
    auto part = import_pair_file(path.string());
    pairs.insert(pairs.end(), std::make_move_iterator(part.begin()),
                 std::make_move_iterator(part.end()));
  }
  return pairs;
}

}  // namespace critplan
