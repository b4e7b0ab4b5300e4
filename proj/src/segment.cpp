#include "lampp/segment.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "lampp/error.hpp"
#include "lampp/kernels.hpp"

namespace lampp::segment {

namespace {

std::size_t first_argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

std::vector<double> normalize_log_scores(const std::vector<double>& log_scores) {
  const double z = kernels::log_sum_exp(log_scores);
  std::vector<double> p(log_scores.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) sum += p[k] = std::exp(log_scores[k] - z);
  for (double& v : p) v /= sum;
  return p;
}

void check_segments(const SceneModel& scene, std::span<const SegmentObservation> segments) {
  if (segments.empty()) throw Error(Errc::InvalidInput, "scene has no segments");
  for (const auto& s : segments) {
    if (s.dist.size() != scene.objects.size()) {
      throw Error(Errc::UnknownLabel, "segment '" + s.id + "' distribution does not match the object vocabulary");
    }
  }
}

}  // namespace

SegmentObservation make_segment(std::string id, std::vector<double> dist, std::uint64_t pixel_count) {
  if (dist.empty()) throw Error(Errc::InvalidInput, "segment '" + id + "' has an empty distribution");
  double sum = 0.0;
  for (double p : dist) {
    if (!std::isfinite(p) || p < 0.0) throw Error(Errc::InvalidInput, "segment '" + id + "' has invalid probabilities");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw Error(Errc::InvalidInput, "segment '" + id + "' distribution does not sum to 1");
  SegmentObservation s{std::move(id), std::move(dist), 0, pixel_count};
  s.dstar = first_argmax(s.dist);
  return s;
}

SceneModel make_scene(PriorTable object_given_room, PriorTable confusion, std::optional<std::vector<double>> room_prior) {
  const LabelVocab rooms = object_given_room.ctx_vocab();
  const LabelVocab objects = object_given_room.row_vocab();
  if (confusion.ctx_vocab().names() != objects.names() || confusion.row_vocab().names() != objects.names()) {
    throw Error(Errc::InvalidInput, "confusion table vocabulary differs from the object vocabulary");
  }
  if (!object_given_room.normalized_over_rows() || !confusion.normalized_over_rows()) {
    throw Error(Errc::InvalidInput, "scene tables must be row-normalized");
  }
  if (rooms.empty() || objects.empty()) throw Error(Errc::EmptyVocab, "scene needs rooms and objects");
  std::vector<double> prior;
  if (room_prior) {
    prior = std::move(*room_prior);
    if (prior.size() != rooms.size()) throw Error(Errc::InvalidInput, "room prior has wrong length");
    double sum = 0.0;
    for (double p : prior) {
      if (!std::isfinite(p) || p < 0.0) throw Error(Errc::InvalidInput, "room prior must be nonnegative");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error(Errc::InvalidInput, "room prior does not sum to 1");
  } else {
    prior.assign(rooms.size(), 1.0 / static_cast<double>(rooms.size()));
  }
  return {rooms, objects, std::move(prior), std::move(object_given_room), std::move(confusion)};
}

RelabelResult relabel_scene(const SceneModel& scene, std::span<const SegmentObservation> segments) {
  check_segments(scene, segments);
  const std::size_t n_rooms = scene.rooms.size();
  const std::size_t n_obj = scene.objects.size();
  const std::size_t n_seg = segments.size();

  // log p(y | d) with uniform p(y), p(d): p(d | y) renormalized over y. Indexed [d][y].
  std::vector<double> log_y_given_d(n_obj * n_obj);
  for (std::size_t d = 0; d < n_obj; ++d) {
    double z = 0.0;
    for (std::size_t y = 0; y < n_obj; ++y) z += scene.confusion.at(y, d);
    for (std::size_t y = 0; y < n_obj; ++y) {
      log_y_given_d[d * n_obj + y] = floored_log(z > 0.0 ? scene.confusion.at(y, d) / z : 0.0);
    }
  }

  // log p(r | y) = p(y | r) p(r) renormalized over r, stored [r][y] for the kernel.
  std::vector<double> log_r_given_y(n_rooms * n_obj);
  for (std::size_t y = 0; y < n_obj; ++y) {
    double z = 0.0;
    for (std::size_t r = 0; r < n_rooms; ++r) z += scene.object_given_room.at(r, y) * scene.room_prior[r];
    for (std::size_t r = 0; r < n_rooms; ++r) {
      const double p = z > 0.0 ? scene.object_given_room.at(r, y) * scene.room_prior[r] / z : 0.0;
      log_r_given_y[r * n_obj + y] = floored_log(p);
    }
  }

  std::vector<double> log_room(n_rooms);
  for (std::size_t r = 0; r < n_rooms; ++r) log_room[r] = floored_log(scene.room_prior[r]);

  // context[j][r] = log sum_{y_j} p(r | y_j) p_seg(y_j | x_j) / p(r)
  std::vector<double> context(n_seg * n_rooms);
  std::vector<double> total(n_rooms, 0.0);
  std::vector<double> log_seg(n_obj);
  for (std::size_t j = 0; j < n_seg; ++j) {
    for (std::size_t y = 0; y < n_obj; ++y) log_seg[y] = floored_log(segments[j].dist[y]);
    for (std::size_t r = 0; r < n_rooms; ++r) {
      const double c = kernels::log_sum_exp_sum({log_r_given_y.data() + r * n_obj, n_obj}, log_seg) - log_room[r];
      context[j * n_rooms + r] = c;
      total[r] += c;
    }
  }

  RelabelResult result;
  result.posteriors.reserve(n_seg);
  result.labels.reserve(n_seg);
  std::vector<double> per_room(n_rooms);
  std::vector<double> scores(n_obj);
  for (std::size_t i = 0; i < n_seg; ++i) {
    const std::size_t dstar = segments[i].dstar;
    const double log_dstar = floored_log(segments[i].dist[dstar]);
    for (std::size_t y = 0; y < n_obj; ++y) {
      for (std::size_t r = 0; r < n_rooms; ++r) {
        per_room[r] = log_room[r] + floored_log(scene.object_given_room.at(r, y)) + total[r] -
                      context[i * n_rooms + r];
      }
      scores[y] = log_y_given_d[dstar * n_obj + y] + log_dstar + kernels::log_sum_exp(per_room);
    }
    result.labels.push_back(first_argmax(scores));
    result.posteriors.push_back(normalize_log_scores(scores));
  }

  std::vector<double> room_scores(n_rooms);
  for (std::size_t r = 0; r < n_rooms; ++r) room_scores[r] = log_room[r] + total[r];
  result.room_posterior = normalize_log_scores(room_scores);
  return result;
}

RelabelResult brute_force_posterior(const SceneModel& scene, std::span<const SegmentObservation> segments) {
  check_segments(scene, segments);
  const std::size_t n_rooms = scene.rooms.size();
  const std::size_t n_obj = scene.objects.size();
  const std::size_t n_seg = segments.size();

  const double labelings = std::pow(static_cast<double>(n_obj), static_cast<double>(n_seg));
  if (labelings * static_cast<double>(n_rooms) * labelings > kOracleBudget) {
    throw Error(Errc::OracleTooLarge, std::to_string(n_seg) + " segments over " + std::to_string(n_obj) +
                                          " objects exceeds the enumeration budget");
  }
  const std::size_t n_cfg = static_cast<std::size_t>(labelings);

  std::vector<std::vector<double>> marginal(n_seg, std::vector<double>(n_obj, 0.0));
  std::vector<double> room_mass(n_rooms, 0.0);
  std::vector<std::size_t> ys(n_seg), ds(n_seg);
  for (std::size_t r = 0; r < n_rooms; ++r) {
    for (std::size_t yc = 0; yc < n_cfg; ++yc) {
      for (std::size_t j = 0, code = yc; j < n_seg; ++j, code /= n_obj) ys[j] = code % n_obj;
      for (std::size_t dc = 0; dc < n_cfg; ++dc) {
        for (std::size_t j = 0, code = dc; j < n_seg; ++j, code /= n_obj) ds[j] = code % n_obj;
        // p(x | d) taken as p_seg(d | x) under a uniform p(d).
        double joint = scene.room_prior[r];
        for (std::size_t j = 0; j < n_seg; ++j) {
          joint *= scene.object_given_room.at(r, ys[j]) * scene.confusion.at(ys[j], ds[j]) * segments[j].dist[ds[j]];
        }
        room_mass[r] += joint;
        for (std::size_t j = 0; j < n_seg; ++j) marginal[j][ys[j]] += joint;
      }
    }
  }

  RelabelResult result;
  for (auto& row : marginal) {
    double z = 0.0;
    for (double v : row) z += v;
    if (!(z > 0.0)) throw Error(Errc::InvariantViolation, "scene has zero joint probability");
    for (double& v : row) v /= z;
    result.labels.push_back(first_argmax(row));
    result.posteriors.push_back(std::move(row));
  }
  double z = 0.0;
  for (double v : room_mass) z += v;
  for (double& v : room_mass) v /= z;
  result.room_posterior = std::move(room_mass);
  return result;
}

ChainingResult mc_relabel(std::span<const SegmentObservation> segments, const LabelVocab& rooms,
                          const LabelVocab& objects, Scorer& scorer) {
  if (segments.empty()) throw Error(Errc::InvalidInput, "model chaining needs at least one segment");
  std::set<std::size_t> unique;
  for (const auto& s : segments) {
    if (s.dist.size() != objects.size()) throw Error(Errc::UnknownLabel, "segment '" + s.id + "' vocabulary mismatch");
    unique.insert(s.dstar);
  }
  std::vector<std::string> detections;
  for (std::size_t d : unique) detections.push_back(objects.name(d));

  std::vector<std::string> room_candidates, object_candidates;
  for (const auto& r : rooms.names()) room_candidates.push_back(as_completion(r));
  for (const auto& y : objects.names()) object_candidates.push_back(as_completion(y));

  const PromptTemplate& tpl = prompt_template(TemplateId::McSegment);
  Slots slots{{"detections", join_labels(detections)}};
  const auto room_dist = scorer.distribution(render_prefix(tpl, slots, "r"), room_candidates);
  ChainingResult out;
  out.room = first_argmax(room_dist);
  slots["r"] = as_completion(rooms.name(out.room));

  std::map<std::size_t, std::size_t> replacement;
  for (std::size_t d : unique) {
    slots["d"] = objects.name(d);
    const auto dist = scorer.distribution(render_prefix(tpl, slots, "y"), object_candidates);
    replacement[d] = first_argmax(dist);
  }
  for (const auto& s : segments) out.labels.push_back(replacement.at(s.dstar));
  return out;
}

IouReport miou(std::span<const LabeledSegment> predicted, const std::map<std::string, std::string>& gold) {
  if (predicted.size() != gold.size()) throw Error(Errc::SegmentMismatch, "prediction and gold cover different segments");
  std::map<std::string, std::uint64_t> inter, uni;
  for (const auto& seg : predicted) {
    auto it = gold.find(seg.id);
    if (it == gold.end()) throw Error(Errc::SegmentMismatch, "segment '" + seg.id + "' has no gold label");
    const std::string& truth = it->second;
    if (seg.label == truth) {
      inter[truth] += seg.pixel_count;
      uni[truth] += seg.pixel_count;
    } else {
      uni[truth] += seg.pixel_count;
      uni[seg.label] += seg.pixel_count;
    }
  }
  IouReport report;
  double sum = 0.0;
  for (const auto& [label, u] : uni) {
    const double iou = u > 0 ? static_cast<double>(inter[label]) / static_cast<double>(u) : 0.0;
    report.per_class[label] = iou;
    sum += iou;
  }
  report.miou = report.per_class.empty() ? 0.0 : sum / static_cast<double>(report.per_class.size());
  return report;
}

SceneInput scene_from_json(const nlohmann::json& j, const LabelVocab& objects) {
  SceneInput input;
  std::set<std::string> seen;
  for (const auto& s : j.at("segments")) {
    const auto& idj = s.at("id");
    std::string id = idj.is_string() ? idj.get<std::string>() : idj.dump();
    if (!seen.insert(id).second) throw Error(Errc::InvalidInput, "duplicate segment id '" + id + "'");
    std::vector<double> dist(objects.size(), 0.0);
    for (const auto& [label, p] : s.at("dist").items()) dist[objects.index(label)] = p.get<double>();
    input.segments.push_back(make_segment(std::move(id), std::move(dist), s.value("pixel_count", std::uint64_t{1})));
  }
  if (auto it = j.find("gold"); it != j.end()) {
    for (const auto& [id, label] : it->items()) {
      objects.index(label.get<std::string>());
      input.gold[id] = label.get<std::string>();
    }
  }
  return input;
}

}  // namespace lampp::segment
