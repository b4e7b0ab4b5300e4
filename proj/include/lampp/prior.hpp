#pragma once

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lampp/vocab.hpp"

namespace lampp {

// Zero probabilities are floored here before taking logs.
inline constexpr double kProbFloor = 1e-12;

inline double floored_log(double p) { return std::log(p < kProbFloor ? kProbFloor : p); }

// LM probabilities of the completions " plausible" and " implausible".
struct PlausibilityScore {
  double p_plausible = 0.0;
  double p_implausible = 0.0;
};

// p_plausible / (p_plausible + p_implausible). Throws DegenerateScore when
// both are zero.
double relative_plausibility(const PlausibilityScore& score);

// Dense conditional probability table. Rows are indexed by the context label
// (room, true object, ...) and columns by the predicted label, so
// at(ctx, row) reads p(row | ctx).
class PriorTable {
 public:
  PriorTable() = default;
  PriorTable(std::string kind, LabelVocab ctx_vocab, LabelVocab row_vocab, bool normalized_over_rows,
             std::vector<double> probs);

  const std::string& kind() const noexcept { return kind_; }
  const LabelVocab& ctx_vocab() const noexcept { return ctx_vocab_; }
  const LabelVocab& row_vocab() const noexcept { return row_vocab_; }
  bool normalized_over_rows() const noexcept { return normalized_; }

  double at(std::size_t ctx, std::size_t row) const { return probs_[ctx * row_vocab_.size() + row]; }
  double at(std::string_view ctx, std::string_view row) const {
    return at(ctx_vocab_.index(ctx), row_vocab_.index(row));
  }
  std::span<const double> row(std::size_t ctx) const {
    return {probs_.data() + ctx * row_vocab_.size(), row_vocab_.size()};
  }
  const std::vector<double>& probs() const noexcept { return probs_; }

 private:
  std::string kind_;
  LabelVocab ctx_vocab_;
  LabelVocab row_vocab_;
  bool normalized_ = false;
  std::vector<double> probs_;
};

using ScoreGrid = std::map<std::pair<std::string, std::string>, PlausibilityScore>;

// Converts raw (ctx, row) plausibility scores into a table. With
// normalize_rows each context row is rescaled to sum to one.
PriorTable build_conditional_table(std::string kind, const LabelVocab& ctx_vocab, const LabelVocab& row_vocab,
                                   const ScoreGrid& raw, bool normalize_rows);

// 1 / (number of room types), the uninformative navigation prior.
double uniform_goal_prior(std::size_t room_types);

// Dirichlet hyperparameters over successor actions for one task:
// alpha(y, y') = lambda * successor(y, y').
class DirichletPrior {
 public:
  DirichletPrior() = default;
  DirichletPrior(std::string task, LabelVocab actions, std::vector<double> successor, double lambda);

  const std::string& task() const noexcept { return task_; }
  const LabelVocab& actions() const noexcept { return actions_; }
  double lambda() const noexcept { return lambda_; }
  double alpha(std::size_t from, std::size_t to) const {
    return flat_ ? 1.0 : lambda_ * successor_[from * actions_.size() + to];
  }
  std::span<const double> successor_row(std::size_t from) const {
    return {successor_.data() + from * actions_.size(), actions_.size()};
  }
  const std::vector<double>& successor() const noexcept { return successor_; }

  DirichletPrior with_lambda(double lambda) const;
  // alpha = 1 everywhere: the prior under which MAP equals MLE.
  static DirichletPrior flat(std::string task, const LabelVocab& actions);
  bool is_flat() const noexcept { return flat_; }

 private:
  std::string task_;
  LabelVocab actions_;
  std::vector<double> successor_;
  double lambda_ = 1.0;
  bool flat_ = false;
};

// lm_rows maps each source action to its successor distribution in vocab
// order. Rows within 1e-2 of unit mass are renormalized.
DirichletPrior build_dirichlet(std::string task, const LabelVocab& actions,
                               const std::map<std::string, std::vector<double>>& lm_rows, double lambda);

nlohmann::json to_json(const PriorTable& table);
PriorTable prior_table_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DirichletPrior& prior);
DirichletPrior dirichlet_from_json(const nlohmann::json& j);

}  // namespace lampp
