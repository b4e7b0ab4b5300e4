#include "lampp/hmm.hpp"

#include <cmath>
#include <limits>
#include <set>

#include "lampp/error.hpp"
#include "lampp/kernels.hpp"

namespace lampp::hmm {

std::vector<const Video*> TaskDataset::split(Split s) const {
  std::vector<const Video*> out;
  for (const Video& v : videos) {
    if (v.split == s) out.push_back(&v);
  }
  return out;
}

void validate(const TaskDataset& data) {
  if (data.actions.empty()) throw Error(Errc::EmptyVocab, "task '" + data.task + "' has no actions");
  if (data.obs_vocab.empty()) throw Error(Errc::EmptyVocab, "task '" + data.task + "' has no observation symbols");
  if (data.background >= data.actions.size()) throw Error(Errc::InvalidInput, "background label out of range");
  std::set<std::string> ids;
  for (const Video& v : data.videos) {
    if (!ids.insert(v.id).second) throw Error(Errc::InvalidInput, "duplicate video id '" + v.id + "'");
    if (v.obs.empty()) throw Error(Errc::EmptySequence, "video '" + v.id + "' is empty");
    if (v.obs.size() != v.labels.size()) {
      throw Error(Errc::InvalidInput, "video '" + v.id + "' has mismatched obs/labels lengths");
    }
    for (std::size_t o : v.obs) {
      if (o >= data.obs_vocab.size()) throw Error(Errc::UnknownLabel, "observation out of range in '" + v.id + "'");
    }
    for (std::size_t y : v.labels) {
      if (y >= data.actions.size()) throw Error(Errc::UnknownLabel, "label out of range in '" + v.id + "'");
    }
  }
}

namespace {

struct RowFit {
  std::vector<double> row;
  bool floored = false;
};

// Shared closed form for MAP and zero-shot rows. `degenerate` is thrown when
// the normalizer is nonpositive and the row is not the 0/0 flat case.
RowFit dirichlet_row(const DirichletPrior& prior, std::size_t from, std::span<const double> counts,
                     double source_count, Errc degenerate) {
  const std::size_t n = prior.actions().size();
  RowFit fit;
  fit.row.resize(n);
  double alpha_sum = 0.0;
  bool all_zero = true;
  for (std::size_t k = 0; k < n; ++k) {
    const double a = prior.alpha(from, k);
    alpha_sum += a;
    double numer = a + counts[k] - 1.0;
    if (numer != 0.0) all_zero = false;
    if (numer < 0.0) {
      numer = kProbFloor;
      fit.floored = true;
    }
    fit.row[k] = numer;
  }
  const double normalizer = alpha_sum + source_count - static_cast<double>(n);
  if (normalizer <= 0.0) {
    if (all_zero) {
      fit.row.assign(n, 1.0 / static_cast<double>(n));
      return fit;
    }
    throw Error(degenerate, "transition row for '" + prior.actions().name(from) + "' has nonpositive normalizer " +
                                std::to_string(normalizer));
  }
  double sum = 0.0;
  for (double v : fit.row) sum += v;
  for (double& v : fit.row) v /= sum;
  return fit;
}

std::vector<double> smoothed_emissions(std::size_t n_actions, std::size_t n_obs,
                                       std::span<const std::pair<std::size_t, std::size_t>> frames) {
  std::vector<double> counts(n_actions * n_obs, 0.0);
  std::vector<double> totals(n_actions, 0.0);
  for (const auto& [y, o] : frames) {
    counts[y * n_obs + o] += 1.0;
    totals[y] += 1.0;
  }
  std::vector<double> eta(n_actions * n_obs);
  for (std::size_t y = 0; y < n_actions; ++y) {
    for (std::size_t o = 0; o < n_obs; ++o) {
      eta[y * n_obs + o] = (counts[y * n_obs + o] + 1.0) / (totals[y] + static_cast<double>(n_obs));
    }
  }
  return eta;
}

void check_prior(const DirichletPrior& prior, const LabelVocab& actions) {
  if (prior.actions().names() != actions.names()) {
    throw Error(Errc::InvalidInput, "prior action inventory differs from the dataset's");
  }
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> unordered_frames(const TaskDataset& data) {
  std::vector<std::pair<std::size_t, std::size_t>> frames;
  for (const Video* v : data.split(Split::Train)) {
    for (std::size_t t = 0; t < v->obs.size(); ++t) frames.emplace_back(v->labels[t], v->obs[t]);
  }
  return frames;
}

HmmParams fit_map(const TaskDataset& data, const DirichletPrior& prior) {
  validate(data);
  check_prior(prior, data.actions);
  const std::size_t n = data.actions.size();
  const auto train = data.split(Split::Train);

  HmmParams params;
  params.task = data.task;
  params.actions = data.actions;
  params.obs_vocab = data.obs_vocab;
  params.transition_counts.assign(n * n, 0.0);
  params.source_counts.assign(n, 0.0);
  std::vector<double> first(n, 0.0);
  for (const Video* v : train) {
    first[v->labels.front()] += 1.0;
    for (std::size_t t = 1; t < v->labels.size(); ++t) {
      params.transition_counts[v->labels[t - 1] * n + v->labels[t]] += 1.0;
      params.source_counts[v->labels[t - 1]] += 1.0;
    }
  }
  if (train.empty()) params.warnings.push_back("training split is empty; transitions come from the prior alone");

  params.theta.resize(n * n);
  for (std::size_t y = 0; y < n; ++y) {
    auto fit = dirichlet_row(prior, y, {params.transition_counts.data() + y * n, n}, params.source_counts[y],
                             Errc::DegeneratePosterior);
    if (fit.floored) {
      params.warnings.push_back("alpha + count - 1 < 0 in row '" + data.actions.name(y) + "'; floored at 1e-12");
    }
    std::copy(fit.row.begin(), fit.row.end(), params.theta.begin() + static_cast<std::ptrdiff_t>(y * n));
  }

  params.eta = smoothed_emissions(n, data.obs_vocab.size(), unordered_frames(data));
  params.initial.resize(n);
  for (std::size_t y = 0; y < n; ++y) {
    params.initial[y] = (first[y] + 1.0) / (static_cast<double>(train.size()) + static_cast<double>(n));
  }
  return params;
}

HmmParams fit_zero_shot(const LabelVocab& actions, const LabelVocab& obs_vocab, const DirichletPrior& prior,
                        std::span<const std::pair<std::size_t, std::size_t>> frames, std::string task) {
  check_prior(prior, actions);
  if (frames.empty()) throw Error(Errc::InvalidInput, "zero-shot emissions need labeled frames");
  const std::size_t n = actions.size();
  for (const auto& [y, o] : frames) {
    if (y >= n || o >= obs_vocab.size()) throw Error(Errc::UnknownLabel, "frame outside the vocabularies");
  }

  HmmParams params;
  params.task = task.empty() ? prior.task() : std::move(task);
  params.actions = actions;
  params.obs_vocab = obs_vocab;
  params.transition_counts.assign(n * n, 0.0);
  params.source_counts.assign(n, 0.0);
  params.theta.resize(n * n);
  const std::vector<double> zeros(n, 0.0);
  for (std::size_t y = 0; y < n; ++y) {
    auto fit = dirichlet_row(prior, y, zeros, 0.0, Errc::PriorTooWeak);
    if (fit.floored) {
      params.warnings.push_back("alpha - 1 < 0 in row '" + actions.name(y) + "'; floored at 1e-12");
    }
    std::copy(fit.row.begin(), fit.row.end(), params.theta.begin() + static_cast<std::ptrdiff_t>(y * n));
  }
  params.eta = smoothed_emissions(n, obs_vocab.size(), frames);
  params.initial.assign(n, 1.0 / static_cast<double>(n));
  return params;
}

std::vector<std::size_t> viterbi_decode(const HmmParams& params, std::span<const std::size_t> obs) {
  if (obs.empty()) throw Error(Errc::EmptySequence, "nothing to decode");
  const std::size_t n = params.actions.size();
  const std::size_t m = params.obs_vocab.size();
  for (std::size_t o : obs) {
    if (o >= m) throw Error(Errc::UnknownLabel, "observation symbol out of range");
  }

  std::vector<double> log_theta(n * n), log_eta(n * m);
  for (std::size_t i = 0; i < n * n; ++i) log_theta[i] = floored_log(params.theta[i]);
  for (std::size_t i = 0; i < n * m; ++i) log_eta[i] = floored_log(params.eta[i]);

  // Backward pass: suffix[t][y] = best log-score of frames t+1.. given y at t.
  // Transposed theta lets the max-plus kernel reduce over the successor.
  std::vector<double> theta_t(n * n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) theta_t[b * n + a] = log_theta[a * n + b];
  }
  const std::size_t len = obs.size();
  std::vector<double> suffix(len * n, 0.0), step(n);
  std::vector<std::uint32_t> arg(n);
  for (std::size_t t = len - 1; t > 0; --t) {
    for (std::size_t y = 0; y < n; ++y) step[y] = log_eta[y * m + obs[t]] + suffix[t * n + y];
    kernels::max_plus(step, theta_t, {suffix.data() + (t - 1) * n, n}, arg);
  }

  // Forward pass: the lexicographically smallest label sequence whose score
  // reaches the optimum. Scores within a relative 1e-12 count as ties.
  std::vector<double> head(n);
  for (std::size_t y = 0; y < n; ++y) head[y] = floored_log(params.initial[y]) + log_eta[y * m + obs[0]];
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t y = 0; y < n; ++y) best = std::max(best, head[y] + suffix[y]);
  const double slack = 1e-12 * (1.0 + std::abs(best));

  std::vector<std::size_t> path(len);
  double prefix = 0.0;
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t y = 0; y < n; ++y) {
      const double here =
          t == 0 ? head[y] : prefix + log_theta[path[t - 1] * n + y] + log_eta[y * m + obs[t]];
      if (here + suffix[t * n + y] >= best - slack || y + 1 == n) {
        path[t] = y;
        prefix = here;
        break;
      }
    }
  }
  return path;
}

double sequence_log_prob(const HmmParams& params, std::span<const std::size_t> obs,
                         std::span<const std::size_t> labels) {
  const std::size_t n = params.actions.size();
  const std::size_t m = params.obs_vocab.size();
  double lp = floored_log(params.initial[labels[0]]) + floored_log(params.eta[labels[0] * m + obs[0]]);
  for (std::size_t t = 1; t < obs.size(); ++t) {
    lp += floored_log(params.theta[labels[t - 1] * n + labels[t]]) + floored_log(params.eta[labels[t] * m + obs[t]]);
  }
  return lp;
}

std::optional<double> video_step_recall(std::span<const std::size_t> predicted, std::span<const std::size_t> gold,
                                        std::size_t background) {
  std::set<std::size_t> want, got;
  for (std::size_t y : gold) {
    if (y != background) want.insert(y);
  }
  if (want.empty()) return std::nullopt;
  for (std::size_t y : predicted) got.insert(y);
  std::size_t hit = 0;
  for (std::size_t y : want) hit += got.count(y);
  return static_cast<double>(hit) / static_cast<double>(want.size());
}

RecallReport step_recall(std::span<const TaskPredictions> tasks) {
  RecallReport report;
  double total = 0.0;
  double task_sum = 0.0;
  std::size_t tasks_scored = 0;
  for (const TaskPredictions& tp : tasks) {
    if (tp.predicted.size() != tp.gold.size()) {
      throw Error(Errc::VideoMismatch, "task '" + tp.task + "' has " + std::to_string(tp.predicted.size()) +
                                           " predictions for " + std::to_string(tp.gold.size()) + " videos");
    }
    double sum = 0.0;
    std::size_t count = 0;
    std::map<std::size_t, std::pair<std::size_t, std::size_t>> action_hits;
    for (const auto& [id, gold] : tp.gold) {
      auto it = tp.predicted.find(id);
      if (it == tp.predicted.end()) throw Error(Errc::VideoMismatch, "no prediction for video '" + id + "'");
      auto r = video_step_recall(it->second, gold, tp.background);
      if (!r) continue;
      sum += *r;
      ++count;
      std::set<std::size_t> want(gold.begin(), gold.end()), got(it->second.begin(), it->second.end());
      for (std::size_t y : want) {
        if (y == tp.background) continue;
        ++action_hits[y].second;
        action_hits[y].first += got.count(y);
      }
    }
    if (count == 0) continue;
    report.per_task[tp.task] = sum / static_cast<double>(count);
    task_sum += report.per_task[tp.task];
    ++tasks_scored;
    total += sum;
    report.videos_scored += count;
    for (const auto& [y, hits] : action_hits) {
      report.per_action[tp.task + "/" + tp.actions.name(y)] =
          static_cast<double>(hits.first) / static_cast<double>(hits.second);
    }
  }
  if (report.videos_scored > 0) {
    report.freq_avg = total / static_cast<double>(report.videos_scored);
    report.class_avg = task_sum / static_cast<double>(tasks_scored);
  }
  return report;
}

bool contains_transition(const Video& video, std::size_t from, std::size_t to) {
  for (std::size_t t = 1; t < video.labels.size(); ++t) {
    if (video.labels[t - 1] == from && video.labels[t] == to) return true;
  }
  return false;
}

TaskDataset bias_transition_holdout(const TaskDataset& data, std::size_t from, std::size_t to) {
  TaskDataset out = data;
  out.videos.clear();
  std::size_t removed = 0;
  for (const Video& v : data.videos) {
    if (v.split == Split::Train && contains_transition(v, from, to)) {
      ++removed;
      continue;
    }
    out.videos.push_back(v);
  }
  if (removed == 0) {
    throw Error(Errc::NothingToHoldOut, "no training video contains " + data.actions.name(from) + " -> " +
                                            data.actions.name(to));
  }
  return out;
}

TaskDataset dataset_from_json(const nlohmann::json& j) {
  TaskDataset data;
  data.task = j.at("task").get<std::string>();
  data.actions = LabelVocab(VocabKind::Action, j.at("actions").get<std::vector<std::string>>());
  data.background = data.actions.index(j.at("background").get<std::string>());
  data.obs_vocab = LabelVocab(VocabKind::Object, j.at("obs_vocab").get<std::vector<std::string>>());
  for (const auto& v : j.at("videos")) {
    Video video;
    video.id = v.at("id").get<std::string>();
    for (const auto& o : v.at("obs")) video.obs.push_back(data.obs_vocab.index(o.get<std::string>()));
    for (const auto& y : v.at("labels")) video.labels.push_back(data.actions.index(y.get<std::string>()));
    const std::string split = v.value("split", std::string("train"));
    if (split == "train") video.split = Split::Train;
    else if (split == "eval") video.split = Split::Eval;
    else throw Error(Errc::InvalidInput, "unknown split '" + split + "'");
    data.videos.push_back(std::move(video));
  }
  validate(data);
  return data;
}

nlohmann::json to_json(const TaskDataset& data) {
  nlohmann::json videos = nlohmann::json::array();
  for (const Video& v : data.videos) {
    std::vector<std::string> obs, labels;
    for (std::size_t o : v.obs) obs.push_back(data.obs_vocab.name(o));
    for (std::size_t y : v.labels) labels.push_back(data.actions.name(y));
    videos.push_back({{"id", v.id}, {"split", v.split == Split::Train ? "train" : "eval"}, {"obs", obs},
                      {"labels", labels}});
  }
  return {{"task", data.task},
          {"actions", data.actions.names()},
          {"background", data.actions.name(data.background)},
          {"obs_vocab", data.obs_vocab.names()},
          {"videos", std::move(videos)}};
}

namespace {

nlohmann::json matrix_json(const std::vector<double>& flat, std::size_t cols) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < flat.size(); i += cols) {
    rows.push_back(std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(i),
                                       flat.begin() + static_cast<std::ptrdiff_t>(i + cols)));
  }
  return rows;
}

std::vector<double> matrix_from_json(const nlohmann::json& rows, std::size_t n_rows, std::size_t cols) {
  if (rows.size() != n_rows) throw Error(Errc::InvalidInput, "matrix has wrong number of rows");
  std::vector<double> flat;
  for (const auto& r : rows) {
    if (r.size() != cols) throw Error(Errc::InvalidInput, "matrix row has wrong length");
    for (const auto& v : r) flat.push_back(v.get<double>());
  }
  return flat;
}

void check_stochastic(std::span<const double> flat, std::size_t cols, const char* what) {
  for (std::size_t i = 0; i < flat.size(); i += cols) {
    double sum = 0.0;
    for (std::size_t k = 0; k < cols; ++k) {
      if (!(flat[i + k] >= 0.0)) throw Error(Errc::InvalidInput, std::string(what) + " has negative entries");
      sum += flat[i + k];
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error(Errc::InvalidInput, std::string(what) + " rows must sum to 1");
  }
}

}  // namespace

nlohmann::json to_json(const HmmParams& params) {
  const std::size_t n = params.actions.size();
  return {{"task", params.task},
          {"actions", params.actions.names()},
          {"obs_vocab", params.obs_vocab.names()},
          {"theta", matrix_json(params.theta, n)},
          {"eta", matrix_json(params.eta, params.obs_vocab.size())},
          {"initial", params.initial},
          {"transition_counts", matrix_json(params.transition_counts, n)},
          {"source_counts", params.source_counts},
          {"warnings", params.warnings}};
}

HmmParams params_from_json(const nlohmann::json& j) {
  HmmParams p;
  p.task = j.at("task").get<std::string>();
  p.actions = LabelVocab(VocabKind::Action, j.at("actions").get<std::vector<std::string>>());
  p.obs_vocab = LabelVocab(VocabKind::Object, j.at("obs_vocab").get<std::vector<std::string>>());
  const std::size_t n = p.actions.size();
  p.theta = matrix_from_json(j.at("theta"), n, n);
  p.eta = matrix_from_json(j.at("eta"), n, p.obs_vocab.size());
  p.initial = j.at("initial").get<std::vector<double>>();
  if (p.initial.size() != n) throw Error(Errc::InvalidInput, "initial distribution has wrong length");
  check_stochastic(p.theta, n, "theta");
  check_stochastic(p.eta, p.obs_vocab.size(), "eta");
  check_stochastic(p.initial, n, "initial");
  if (j.contains("transition_counts")) p.transition_counts = matrix_from_json(j.at("transition_counts"), n, n);
  if (j.contains("source_counts")) p.source_counts = j.at("source_counts").get<std::vector<double>>();
  if (j.contains("warnings")) p.warnings = j.at("warnings").get<std::vector<std::string>>();
  return p;
}

}  // namespace lampp::hmm
