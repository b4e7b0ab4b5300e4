#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lampp/prior.hpp"
#include "lampp/vocab.hpp"

namespace lampp::hmm {

enum class Split { Train, Eval };

struct Video {
  std::string id;
  std::vector<std::size_t> obs;     // indices into obs_vocab
  std::vector<std::size_t> labels;  // indices into actions
  Split split = Split::Train;
};

struct TaskDataset {
  std::string task;
  LabelVocab actions;  // includes the background label
  std::size_t background = 0;
  LabelVocab obs_vocab;
  std::vector<Video> videos;

  std::vector<const Video*> split(Split s) const;
};

// Checks labels/observations against the vocabularies and that sequences
// are nonempty and aligned.
void validate(const TaskDataset& data);

struct HmmParams {
  std::string task;
  LabelVocab actions;
  LabelVocab obs_vocab;
  std::vector<double> theta;    // [from * n + to]
  std::vector<double> eta;      // [action * n_obs + symbol]
  std::vector<double> initial;  // [action]
  std::vector<double> transition_counts;
  std::vector<double> source_counts;
  std::vector<std::string> warnings;

  double transition(std::size_t from, std::size_t to) const { return theta[from * actions.size() + to]; }
  std::span<const double> theta_row(std::size_t from) const {
    return {theta.data() + from * actions.size(), actions.size()};
  }
};

// Dirichlet-MAP transitions from the training split:
//   theta(y -> y') = (alpha + #(y -> y') - 1) / (sum_y'' alpha(y -> y'') + #(y) - |Y|)
// where #(y) counts transitions out of y. Emissions and the initial
// distribution are add-one smoothed relative frequencies.
HmmParams fit_map(const TaskDataset& data, const DirichletPrior& prior);

// Zero-shot fit: theta = (alpha - 1) / (sum alpha - |Y|) from the prior alone
// (uniform for the flat prior); emissions from unordered labeled frames.
HmmParams fit_zero_shot(const LabelVocab& actions, const LabelVocab& obs_vocab, const DirichletPrior& prior,
                        std::span<const std::pair<std::size_t, std::size_t>> frames, std::string task = {});

// (label, observation) pairs from the training split, order discarded.
std::vector<std::pair<std::size_t, std::size_t>> unordered_frames(const TaskDataset& data);

// Exact MAP label sequence in log space. Among optimal sequences (scores
// equal within a relative 1e-12) the lexicographically smallest wins.
std::vector<std::size_t> viterbi_decode(const HmmParams& params, std::span<const std::size_t> obs);

// Joint log-probability of a labeling under params, with the same floors as
// the decoder.
double sequence_log_prob(const HmmParams& params, std::span<const std::size_t> obs,
                         std::span<const std::size_t> labels);

// Fraction of distinct non-background gold actions that appear anywhere in
// the prediction. nullopt when the gold sequence is all background.
std::optional<double> video_step_recall(std::span<const std::size_t> predicted, std::span<const std::size_t> gold,
                                        std::size_t background);

struct TaskPredictions {
  std::string task;
  LabelVocab actions;
  std::size_t background = 0;
  std::map<std::string, std::vector<std::size_t>> predicted;
  std::map<std::string, std::vector<std::size_t>> gold;
};

struct RecallReport {
  double class_avg = 0.0;  // mean over tasks of per-task recall
  double freq_avg = 0.0;   // mean over videos
  std::map<std::string, double> per_task;
  std::map<std::string, double> per_action;  // diagnostic, "task/action"
  std::size_t videos_scored = 0;
};

RecallReport step_recall(std::span<const TaskPredictions> tasks);

bool contains_transition(const Video& video, std::size_t from, std::size_t to);

// Removes every training video containing from -> to. Eval videos are kept.
TaskDataset bias_transition_holdout(const TaskDataset& data, std::size_t from, std::size_t to);

TaskDataset dataset_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TaskDataset& data);
nlohmann::json to_json(const HmmParams& params);
HmmParams params_from_json(const nlohmann::json& j);

}  // namespace lampp::hmm
