#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lampp/prior.hpp"
#include "lampp/scorer.hpp"
#include "lampp/vocab.hpp"

namespace lampp::segment {

// One base-model segment: p_seg(d | x) over the object vocabulary and its
// argmax d*.
struct SegmentObservation {
  std::string id;
  std::vector<double> dist;
  std::size_t dstar = 0;
  std::uint64_t pixel_count = 0;
};

// Validates the distribution (sums to 1 within 1e-6) and fills in d* with the
// first maximal entry in vocab order.
SegmentObservation make_segment(std::string id, std::vector<double> dist, std::uint64_t pixel_count);

// Room -> true object -> noisy object -> segment.
struct SceneModel {
  LabelVocab rooms;
  LabelVocab objects;
  std::vector<double> room_prior;  // p(r)
  PriorTable object_given_room;    // ctx room, row object: p(y | r)
  PriorTable confusion;            // ctx true object, row noisy object: p(d | y)
};

// Uniform p(r) unless room_prior is given. Throws on inconsistent vocabularies.
SceneModel make_scene(PriorTable object_given_room, PriorTable confusion,
                      std::optional<std::vector<double>> room_prior = std::nullopt);

struct RelabelResult {
  std::vector<std::vector<double>> posteriors;  // per segment, over objects
  std::vector<std::size_t> labels;              // argmax per segment
  std::vector<double> room_posterior;           // diagnostic
};

// Max-marginal relabeling with the simplified decision rule:
//   score(y_i) = p(y_i | d*_i) p(d*_i | x_i)
//                * sum_r p(r) p(y_i | r) prod_{j != i} sum_{y_j} p(r | y_j) p(d_j = y_j | x_j) / p(r)
// evaluated in log space.
RelabelResult relabel_scene(const SceneModel& scene, std::span<const SegmentObservation> segments);

// Largest joint configuration count brute_force_posterior will enumerate.
inline constexpr double kOracleBudget = 1e7;

// Exact marginals p(y_i | x) by enumerating every (r, y, d) configuration.
// Throws OracleTooLarge past kOracleBudget.
RelabelResult brute_force_posterior(const SceneModel& scene, std::span<const SegmentObservation> segments);

struct ChainingResult {
  std::size_t room = 0;
  std::vector<std::size_t> labels;
};

// Model-chaining baseline: the LM names the room from the list of unique
// detections, then names the true object behind each detected label.
ChainingResult mc_relabel(std::span<const SegmentObservation> segments, const LabelVocab& rooms,
                          const LabelVocab& objects, Scorer& scorer);

struct LabeledSegment {
  std::string id;
  std::string label;
  std::uint64_t pixel_count = 0;
};

struct IouReport {
  std::map<std::string, double> per_class;
  double miou = 0.0;
};

// Pixel-weighted IoU per class over classes seen in gold or prediction;
// mIoU is their unweighted mean.
IouReport miou(std::span<const LabeledSegment> predicted, const std::map<std::string, std::string>& gold);

struct SceneInput {
  std::vector<SegmentObservation> segments;
  std::map<std::string, std::string> gold;
};

SceneInput scene_from_json(const nlohmann::json& j, const LabelVocab& objects);

}  // namespace lampp::segment
