// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "critplan/generation.hpp"
#include "critplan/mdp.hpp"

namespace critplan {

enum class CriticKind { kSubGoal, kRationale, kQuery, kDoc };

inline constexpr std::array<CriticKind, 4> kAllCriticKinds = {
    CriticKind::kSubGoal, CriticKind::kRationale, CriticKind::kQuery, CriticKind::kDoc};

const char* to_string(CriticKind kind) noexcept;
CriticKind critic_kind_from_string(std::string_view name);

/// Critic responsible for choosing among children of a node whose last
/// observation is `last` (null = root).
CriticKind critic_kind_for_state(const Observation* last) noexcept;

struct CriticContext {
  CriticKind kind = CriticKind::kSubGoal;
  std::string problem_statement;
  std::vector<Observation> context_observations;
  Observation candidate;
};

/// Context observations a critic of `kind` sees for a candidate proposed at
/// `state`:
///   Rationale - every earlier Rationale
///   Query     - the nearest earlier Rationale
///   Doc       - the nearest earlier Rationale, then the nearest earlier Query
///   SubGoal   - every earlier observation
std::vector<Observation> context_for(CriticKind kind, const State& state);

CriticContext make_context(CriticKind kind, const State& state, Observation candidate);

class CriticBackend {
 public:
  virtual ~CriticBackend() = default;
  virtual double score(const CriticContext& ctx) const = 0;
};

class ConstantCritic final : public CriticBackend {
 public:
  explicit ConstantCritic(double value = 0.0) : value_(value) {}
  double score(const CriticContext&) const override { return value_; }

 private:
  double value_;
};

/// Scores by exact candidate text, optionally keyed on the number of context
/// observations; unmatched candidates get `fallback`. File format, one JSON
/// object per line: {"kind", "candidate", "score", "context_size"?}.
class LookupCritic final : public CriticBackend {
 public:
  struct Entry {
    CriticKind kind;
    std::string candidate;
    std::optional<std::size_t> context_size;
    double score;
  };

  explicit LookupCritic(std::vector<Entry> entries, double fallback = 0.0)
      : entries_(std::move(entries)), fallback_(fallback) {}
  static LookupCritic from_file(const std::string& path, double fallback = 0.0);

  double score(const CriticContext& ctx) const override;

 private:
  std::vector<Entry> entries_;
  double fallback_;
};

/// POSTs {kind, problem, context: [...], candidate} and reads {score}.
class HttpCritic final : public CriticBackend {
 public:
  explicit HttpCritic(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  double score(const CriticContext& ctx) const override;

 private:
  HttpEndpoint endpoint_;
};

/// One backend per critic kind; shared, immutable.
class CriticSet {
 public:
  CriticSet() = default;

  void set(CriticKind kind, std::shared_ptr<const CriticBackend> critic);
  const CriticBackend* get(CriticKind kind) const noexcept;
  /// Throws Error(kConfiguration) if the critic is missing.
  const CriticBackend& require(CriticKind kind) const;
  bool complete() const noexcept;

  static CriticSet constant(double value = 0.0);

 private:
  std::array<std::shared_ptr<const CriticBackend>, 4> critics_{};
};

/// Expected reward of taking `action` at `state`, dispatched on the state's
/// last observation.
double reward(const State& state, const Action& action, const CriticSet& critics);

/// -log(sigmoid(chosen - rejected)) in a form that does not overflow.
double pairwise_loss(double score_chosen, double score_rejected);

struct PreferencePair {
  CriticKind kind = CriticKind::kSubGoal;
  std::string problem_id;
  std::vector<Observation> context_observations;
  Observation chosen;
  Observation rejected;
  double chosen_value = 0.0;
  double rejected_value = 0.0;
  std::size_t chosen_visits = 0;
  std::size_t rejected_visits = 0;

  friend bool operator==(const PreferencePair&, const PreferencePair&) = default;
};

/// Hashed bag-of-words features. Context tokens, candidate tokens and
/// (last context kind x candidate token) crosses land in separate
/// namespaces of one hashed space.
struct FeaturizerSpec {
  std::uint32_t dimensions = 1u << 18;
  bool cross_features = true;
};

struct TrainingOptions {
  FeaturizerSpec featurizer;
  std::size_t epochs = 200;
  double learning_rate = 0.5;
  std::uint64_t seed = 0;
  /// Optional per-epoch mean loss output (loss before each epoch's update,
  /// plus the final loss).
  std::vector<double>* loss_curve = nullptr;
};

/// Linear scorer w . phi(context ++ candidate).
class LinearCritic final : public CriticBackend {
 public:
  static constexpr const char* kFormat = "critplan-critic";
  static constexpr int kFormatVersion = 1;

  LinearCritic(CriticKind kind, FeaturizerSpec featurizer, std::uint64_t seed);

  CriticKind kind() const noexcept { return kind_; }
  const FeaturizerSpec& featurizer() const noexcept { return featurizer_; }

  double score(const CriticContext& ctx) const override;
  double score(const std::vector<Observation>& context, const Observation& candidate) const;

  /// Sparse feature vector (index, value), sorted by index, duplicates merged.
  std::vector<std::pair<std::uint32_t, double>> features(const std::vector<Observation>& context,
                                                         const Observation& candidate) const;

  std::vector<double>& weights() noexcept { return weights_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  std::string serialize() const;
  static LinearCritic deserialize(std::string_view data, const std::string& source = "<memory>");
  void save(const std::string& path) const;
  static LinearCritic load(const std::string& path);

 private:
  CriticKind kind_;
  FeaturizerSpec featurizer_;
  std::uint64_t seed_;
  std::vector<double> weights_;
};

/// Full-batch gradient descent on the mean pairwise loss, zero-initialized.
/// Throws Error(kTraining) for empty input, mixed kinds, or when every pair
/// has identical chosen and rejected text.
LinearCritic train_reference_critic(const std::vector<PreferencePair>& pairs,
                                    const TrainingOptions& options = {});

double mean_pairwise_loss(const LinearCritic& critic, const std::vector<PreferencePair>& pairs);

/// Fraction of pairs scored chosen > rejected.
double pairwise_accuracy(const CriticBackend& critic, const std::vector<PreferencePair>& pairs,
                         const std::string& problem_statement = {});

// --- preference files -------------------------------------------------------

inline constexpr const char* kPairFormat = "critplan-pairs";
inline constexpr int kPairFormatVersion = 1;

/// File name of the partition for `kind`, e.g. "pairs.Rationale.jsonl".
std::string pair_file_name(CriticKind kind);

std::string serialize_pairs(CriticKind kind, const std::vector<PreferencePair>& pairs);
std::vector<PreferencePair> parse_pairs(std::string_view data, const std::string& source);

/// Writes one file per kind under `dir` (all four, empty ones included) and
/// returns the number of pairs written.
std::size_t export_pairs(const std::vector<PreferencePair>& pairs, const std::string& dir);

/// Reads whichever of the four partition files exist under `dir`, in kind
/// order. Malformed records throw Error(kImport) naming the line.
std::vector<PreferencePair> import_pairs(const std::string& dir);
std::vector<PreferencePair> import_pair_file(const std::string& path);

}  // namespace critplan
