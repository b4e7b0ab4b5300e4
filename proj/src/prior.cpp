#include "lampp/prior.hpp"

#include <cmath>

#include "lampp/error.hpp"

namespace lampp {

namespace {

constexpr double kRowTolerance = 1e-9;
// LM rows are renormalized when their mass is this close to one.
constexpr double kSuccessorTolerance = 1e-2;

}  // namespace

double relative_plausibility(const PlausibilityScore& score) {
  if (!(score.p_plausible >= 0.0) || !(score.p_implausible >= 0.0) || !std::isfinite(score.p_plausible) ||
      !std::isfinite(score.p_implausible)) {
    throw Error(Errc::InvalidInput, "plausibility scores must be finite and nonnegative");
  }
  const double total = score.p_plausible + score.p_implausible;
  if (total <= 0.0) throw Error(Errc::DegenerateScore, "plausible and implausible both have zero probability");
  return score.p_plausible / total;
}

PriorTable::PriorTable(std::string kind, LabelVocab ctx_vocab, LabelVocab row_vocab, bool normalized_over_rows,
                       std::vector<double> probs)
    : kind_(std::move(kind)),
      ctx_vocab_(std::move(ctx_vocab)),
      row_vocab_(std::move(row_vocab)),
      normalized_(normalized_over_rows),
      probs_(std::move(probs)) {
  if (probs_.size() != ctx_vocab_.size() * row_vocab_.size()) {
    throw Error(Errc::InvalidInput, "table shape does not match its vocabularies");
  }
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw Error(Errc::InvalidInput, "table entries must lie in [0, 1]");
    }
  }
  if (normalized_) {
    for (std::size_t c = 0; c < ctx_vocab_.size(); ++c) {
      double sum = 0.0;
      for (double p : row(c)) sum += p;
      if (std::abs(sum - 1.0) > kRowTolerance) {
        throw Error(Errc::InvalidInput, "row '" + ctx_vocab_.name(c) + "' does not sum to one");
      }
    }
  }
}

PriorTable build_conditional_table(std::string kind, const LabelVocab& ctx_vocab, const LabelVocab& row_vocab,
                                   const ScoreGrid& raw, bool normalize_rows) {
  const std::size_t n_rows = row_vocab.size();
  std::vector<double> probs(ctx_vocab.size() * n_rows);
  for (std::size_t c = 0; c < ctx_vocab.size(); ++c) {
    for (std::size_t r = 0; r < n_rows; ++r) {
      auto it = raw.find({ctx_vocab.name(c), row_vocab.name(r)});
      if (it == raw.end()) {
        throw Error(Errc::IncompleteGrid, "no score for (" + ctx_vocab.name(c) + ", " + row_vocab.name(r) + ")");
      }
      probs[c * n_rows + r] = relative_plausibility(it->second);
    }
    if (normalize_rows) {
      double sum = 0.0;
      for (std::size_t r = 0; r < n_rows; ++r) sum += probs[c * n_rows + r];
      if (sum <= 0.0) throw Error(Errc::DegenerateRow, "row '" + ctx_vocab.name(c) + "' has zero mass");
      for (std::size_t r = 0; r < n_rows; ++r) probs[c * n_rows + r] /= sum;
    }
  }
  return PriorTable(std::move(kind), ctx_vocab, row_vocab, normalize_rows, std::move(probs));
}

double uniform_goal_prior(std::size_t room_types) {
  if (room_types == 0) throw Error(Errc::EmptyEnvironment, "environment has no room types");
  return 1.0 / static_cast<double>(room_types);
}

DirichletPrior::DirichletPrior(std::string task, LabelVocab actions, std::vector<double> successor, double lambda)
    : task_(std::move(task)), actions_(std::move(actions)), successor_(std::move(successor)), lambda_(lambda) {
  if (actions_.empty()) throw Error(Errc::EmptyVocab, "action inventory is empty");
  if (!(lambda_ > 0.0) || !std::isfinite(lambda_)) throw Error(Errc::BadLambda, "lambda must be positive");
  const std::size_t n = actions_.size();
  if (successor_.size() != n * n) throw Error(Errc::InvalidInput, "successor table shape mismatch");
  for (std::size_t y = 0; y < n; ++y) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double p = successor_[y * n + k];
      if (!std::isfinite(p) || p < 0.0) throw Error(Errc::InvalidInput, "successor probabilities must be >= 0");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kRowTolerance) {
      throw Error(Errc::InvalidInput, "successor row '" + actions_.name(y) + "' does not sum to one");
    }
  }
}

DirichletPrior DirichletPrior::with_lambda(double lambda) const {
  if (flat_) return *this;
  return DirichletPrior(task_, actions_, successor_, lambda);
}

DirichletPrior DirichletPrior::flat(std::string task, const LabelVocab& actions) {
  const std::size_t n = actions.size();
  if (n == 0) throw Error(Errc::EmptyVocab, "action inventory is empty");
  std::vector<double> uniform(n * n);
  for (std::size_t y = 0; y < n; ++y) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) sum += uniform[y * n + k] = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) uniform[y * n + k] /= sum;
  }
  DirichletPrior prior(std::move(task), actions, std::move(uniform), static_cast<double>(n));
  prior.flat_ = true;
  return prior;
}

DirichletPrior build_dirichlet(std::string task, const LabelVocab& actions,
                               const std::map<std::string, std::vector<double>>& lm_rows, double lambda) {
  if (actions.empty()) throw Error(Errc::EmptyVocab, "action inventory is empty");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error(Errc::BadLambda, "lambda must be positive");
  const std::size_t n = actions.size();
  std::vector<double> successor(n * n);
  for (std::size_t y = 0; y < n; ++y) {
    auto it = lm_rows.find(actions.name(y));
    if (it == lm_rows.end()) throw Error(Errc::IncompleteGrid, "no successor row for '" + actions.name(y) + "'");
    const std::vector<double>& row = it->second;
    if (row.size() != n) throw Error(Errc::IncompleteGrid, "successor row for '" + actions.name(y) + "' has wrong length");
    double sum = 0.0;
    for (double p : row) {
      if (!std::isfinite(p) || p < 0.0) throw Error(Errc::InvalidInput, "successor probabilities must be >= 0");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kSuccessorTolerance) {
      throw Error(Errc::InvalidInput, "successor row for '" + actions.name(y) + "' is not a distribution");
    }
    for (std::size_t k = 0; k < n; ++k) successor[y * n + k] = row[k] / sum;
  }
  return DirichletPrior(std::move(task), actions, std::move(successor), lambda);
}

nlohmann::json to_json(const PriorTable& table) {
  nlohmann::json probs = nlohmann::json::array();
  for (std::size_t c = 0; c < table.ctx_vocab().size(); ++c) {
    auto r = table.row(c);
    probs.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return {{"kind", table.kind()},
          {"row_vocab", to_json(table.row_vocab())},
          {"ctx_vocab", to_json(table.ctx_vocab())},
          {"normalized_over_rows", table.normalized_over_rows()},
          {"probs", std::move(probs)}};
}

namespace {

std::vector<double> flatten_rows(const nlohmann::json& rows, std::size_t n_ctx, std::size_t n_row) {
  if (!rows.is_array() || rows.size() != n_ctx) throw Error(Errc::InvalidInput, "probs has wrong number of rows");
  std::vector<double> flat;
  flat.reserve(n_ctx * n_row);
  for (const auto& r : rows) {
    if (!r.is_array() || r.size() != n_row) throw Error(Errc::InvalidInput, "probs row has wrong length");
    for (const auto& v : r) flat.push_back(v.get<double>());
  }
  return flat;
}

}  // namespace

PriorTable prior_table_from_json(const nlohmann::json& j) {
  LabelVocab rows = vocab_from_json(j.at("row_vocab"));
  LabelVocab ctx = vocab_from_json(j.at("ctx_vocab"));
  auto flat = flatten_rows(j.at("probs"), ctx.size(), rows.size());
  return PriorTable(j.at("kind").get<std::string>(), std::move(ctx), std::move(rows),
                    j.at("normalized_over_rows").get<bool>(), std::move(flat));
}

nlohmann::json to_json(const DirichletPrior& prior) {
  const std::size_t n = prior.actions().size();
  nlohmann::json probs = nlohmann::json::array();
  for (std::size_t y = 0; y < n; ++y) {
    auto r = prior.successor_row(y);
    probs.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return {{"kind", prior.is_flat() ? "dirichlet_flat" : "dirichlet"},
          {"task", prior.task()},
          {"lambda", prior.lambda()},
          {"row_vocab", to_json(prior.actions())},
          {"ctx_vocab", to_json(prior.actions())},
          {"normalized_over_rows", true},
          {"probs", std::move(probs)}};
}

DirichletPrior dirichlet_from_json(const nlohmann::json& j) {
  LabelVocab actions = vocab_from_json(j.at("row_vocab"));
  std::string task = j.value("task", std::string{});
  if (j.at("kind").get<std::string>() == "dirichlet_flat") return DirichletPrior::flat(std::move(task), actions);
  auto flat = flatten_rows(j.at("probs"), actions.size(), actions.size());
  return DirichletPrior(std::move(task), std::move(actions), std::move(flat), j.at("lambda").get<double>());
}

}  // namespace lampp
