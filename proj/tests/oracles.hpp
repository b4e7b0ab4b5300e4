#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Everything here works in plain probability space with explicit loops and
// shares no code with the library beyond its data types.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "lampp/hmm.hpp"
#include "lampp/segment.hpp"

namespace oracle {

inline std::size_t argmax_first(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

// Segmentation decision rule, evaluated term by term:
//   score(y_i) = p(y_i | d*_i) p_seg_i(d*_i)
//                * sum_r p(r) p(y_i | r) prod_{j != i} sum_{y_j} p(r | y_j) p_seg_j(y_j) / p(r)
// with p(y | d) proportional to p(d | y) and p(r | y) proportional to p(y | r) p(r).
// Returns per-segment scores normalized over y_i.
inline std::vector<std::vector<double>> naive_decision_rule(const lampp::segment::SceneModel& scene,
                                                            std::span<const lampp::segment::SegmentObservation> segs) {
  const std::size_t R = scene.rooms.size();
  const std::size_t Y = scene.objects.size();
  auto p_r = [&](std::size_t r) { return scene.room_prior[r]; };
  auto p_y_given_r = [&](std::size_t y, std::size_t r) { return scene.object_given_room.at(r, y); };
  auto p_d_given_y = [&](std::size_t d, std::size_t y) { return scene.confusion.at(y, d); };
  auto p_y_given_d = [&](std::size_t y, std::size_t d) {
    double z = 0.0;
    for (std::size_t k = 0; k < Y; ++k) z += p_d_given_y(d, k);
    return p_d_given_y(d, y) / z;
  };
  auto p_r_given_y = [&](std::size_t r, std::size_t y) {
    double z = 0.0;
    for (std::size_t k = 0; k < R; ++k) z += p_y_given_r(y, k) * p_r(k);
    return p_y_given_r(y, r) * p_r(r) / z;
  };

  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    std::size_t dstar = 0;
    for (std::size_t d = 1; d < Y; ++d) {
      if (segs[i].dist[d] > segs[i].dist[dstar]) dstar = d;
    }
    std::vector<double> score(Y, 0.0);
    for (std::size_t y = 0; y < Y; ++y) {
      double sum_r = 0.0;
      for (std::size_t r = 0; r < R; ++r) {
        double prod = 1.0;
        for (std::size_t j = 0; j < segs.size(); ++j) {
          if (j == i) continue;
          double inner = 0.0;
          for (std::size_t yj = 0; yj < Y; ++yj) inner += p_r_given_y(r, yj) * segs[j].dist[yj];
          prod *= inner / p_r(r);
        }
        sum_r += p_r(r) * p_y_given_r(y, r) * prod;
      }
      score[y] = p_y_given_d(y, dstar) * segs[i].dist[dstar] * sum_r;
    }
    double z = 0.0;
    for (double s : score) z += s;
    for (double& s : score) s /= z;
    out.push_back(std::move(score));
  }
  return out;
}

// Exact HMM MAP sequence by enumerating all |Y|^n label sequences in
// lexicographic order. The first sequence within a relative 1e-12 of the
// maximum wins.
inline std::vector<std::size_t> exhaustive_viterbi(const lampp::hmm::HmmParams& p, std::span<const std::size_t> obs) {
  const std::size_t Y = p.actions.size();
  const std::size_t M = p.obs_vocab.size();
  const std::size_t n = obs.size();
  auto lg = [](double v) { return std::log(std::max(v, 1e-12)); };
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= Y;
  std::vector<std::size_t> seq(n);
  std::vector<double> scores(total);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (std::size_t i = n; i-- > 0;) {
      seq[i] = c % Y;
      c /= Y;
    }
    double lp = lg(p.initial[seq[0]]) + lg(p.eta[seq[0] * M + obs[0]]);
    for (std::size_t i = 1; i < n; ++i) lp += lg(p.theta[seq[i - 1] * Y + seq[i]]) + lg(p.eta[seq[i] * M + obs[i]]);
    scores[code] = lp;
  }
  const double best = *std::max_element(scores.begin(), scores.end());
  std::size_t code = 0;
  while (scores[code] < best - 1e-12 * (1.0 + std::abs(best))) ++code;
  for (std::size_t i = n; i-- > 0;) {
    seq[i] = code % Y;
    code /= Y;
  }
  return seq;
}

// Log of the Dirichlet-MAP objective for one transition row:
//   sum_k (alpha_k - 1) log theta_k + count_k log theta_k
inline double dirichlet_row_objective(const std::vector<double>& theta, const std::vector<double>& alpha,
                                      const std::vector<double>& counts) {
  double v = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double w = alpha[k] - 1.0 + counts[k];
    if (w == 0.0) continue;
    if (theta[k] <= 0.0) return -std::numeric_limits<double>::infinity();
    v += w * std::log(theta[k]);
  }
  return v;
}

// Dense grid search over the 2-simplex (|Y| = 3) at the given resolution.
inline std::vector<double> grid_search_row(const std::vector<double>& alpha, const std::vector<double>& counts,
                                           double step = 1e-3) {
  const int n = static_cast<int>(std::lround(1.0 / step));
  std::vector<double> best(3, 1.0 / 3.0), theta(3);
  double best_v = -std::numeric_limits<double>::infinity();
  for (int a = 0; a <= n; ++a) {
    for (int b = 0; a + b <= n; ++b) {
      theta = {a * step, b * step, (n - a - b) * step};
      const double v = dirichlet_row_objective(theta, alpha, counts);
      if (v > best_v) {
        best_v = v;
        best = theta;
      }
    }
  }
  return best;
}

// Transition counts from labeled sequences, [from * Y + to].
inline std::vector<double> transition_counts(const std::vector<std::vector<std::size_t>>& seqs, std::size_t Y) {
  std::vector<double> c(Y * Y, 0.0);
  for (const auto& s : seqs) {
    for (std::size_t i = 1; i < s.size(); ++i) c[s[i - 1] * Y + s[i]] += 1.0;
  }
  return c;
}

// Mean IoU by explicit pixel-count tallies.
inline double hand_miou(const std::vector<std::tuple<std::string, std::string, std::uint64_t>>& rows) {
  std::map<std::string, double> inter, pred, gold;
  std::set<std::string> classes;
  for (const auto& [p, g, px] : rows) {
    classes.insert(p);
    classes.insert(g);
    pred[p] += static_cast<double>(px);
    gold[g] += static_cast<double>(px);
    if (p == g) inter[p] += static_cast<double>(px);
  }
  double sum = 0.0;
  for (const auto& c : classes) sum += inter[c] / (pred[c] + gold[c] - inter[c]);
  return sum / static_cast<double>(classes.size());
}

}  // namespace oracle
