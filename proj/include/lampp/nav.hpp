#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lampp/prior.hpp"
#include "lampp/scorer.hpp"

namespace lampp::nav {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

double distance(Point a, Point b);

struct Room {
  std::string id;
  std::string type;
  Point centroid;
  std::vector<std::string> adjacent;
};

// Detector confidence for one observation. Beta(alpha, beta) unless `point`
// pins it to a constant.
struct ScoreDistribution {
  double alpha = 1.0;
  double beta = 1.0;
  std::optional<double> point;

  double sample(std::mt19937_64& rng) const;
};

struct DetectorModel {
  ScoreDistribution true_positive{8.0, 2.0, std::nullopt};
  ScoreDistribution false_positive{2.0, 8.0, std::nullopt};
  std::map<std::string, std::pair<ScoreDistribution, ScoreDistribution>> per_goal;

  const ScoreDistribution& distribution(const std::string& goal, bool present) const;
};

// Single-floor room graph with object placements.
class EnvironmentSpec {
 public:
  EnvironmentSpec() = default;
  EnvironmentSpec(std::string name, std::vector<Room> rooms, std::map<std::string, std::set<std::string>> placements,
                  DetectorModel detector = {}, std::size_t max_rooms = 0);

  const std::string& name() const noexcept { return name_; }
  const std::vector<Room>& rooms() const noexcept { return rooms_; }
  const DetectorModel& detector() const noexcept { return detector_; }
  // Navigation-action budget per episode; 0 means unlimited.
  std::size_t max_rooms() const noexcept { return max_rooms_; }
  void set_max_rooms(std::size_t n) noexcept { max_rooms_ = n; }

  std::size_t room_index(const std::string& id) const;
  bool contains(std::size_t room, const std::string& object) const;
  bool contains_anywhere(const std::string& object) const;
  // Distinct room types in order of first appearance, with counts.
  const std::vector<std::pair<std::string, int>>& inventory() const noexcept { return inventory_; }
  const std::map<std::string, std::set<std::string>>& placements() const noexcept { return placements_; }

 private:
  std::string name_;
  std::vector<Room> rooms_;
  std::map<std::string, std::set<std::string>> placements_;
  DetectorModel detector_;
  std::size_t max_rooms_ = 0;
  std::vector<std::pair<std::string, int>> inventory_;
};

enum class PolicyKind { Lampp, Uniform, Mc, Ablation };

std::string_view policy_name(PolicyKind kind);
PolicyKind parse_policy(std::string_view name);

struct PolicyConfig {
  PolicyKind kind = PolicyKind::Lampp;
  double tau = 0.5;
  int k = 5;  // observations per visited room
  // p(y = 1 | r, g): ctx room type, row goal. Required by lampp and ablation.
  std::shared_ptr<const PriorTable> priors;
  // Required by mc.
  std::shared_ptr<Scorer> scorer;

  void validate() const;
};

// Fused selection posterior p(y=1 | x, r, g) from a calibrated detector score
// s = p(y=1 | x) and the room prior p = p(y=1 | r, g):
//   s p / (s p + (1 - s)(1 - p)), 0 when both terms vanish.
double fused_posterior(double score, double prior);

// Prior p(y=1 | r, g) the policy uses for a room.
double room_prior(const PolicyConfig& policy, const EnvironmentSpec& env, std::size_t room, const std::string& goal);

// Unvisited room with maximal prior; ties go to the nearest centroid, then to
// environment order. Throws Exhausted when everything is visited.
std::size_t navigate_choice(const PolicyConfig& policy, const EnvironmentSpec& env, const std::vector<bool>& visited,
                            const std::string& goal, Point position);

// true = stop (declare the goal found). Fused posteriors must exceed tau by more
// than 1e-12; raw scores are compared strictly.
bool select_decision(const PolicyConfig& policy, const EnvironmentSpec& env, double score, std::size_t room,
                     const std::string& goal);

// Iterative LM room-type ordering for the chaining baseline.
class McRoomOrderer {
 public:
  McRoomOrderer(const EnvironmentSpec& env, std::string goal, Scorer& scorer);

  bool done() const noexcept { return chosen_.size() == env_->inventory().size(); }
  // Queries the LM for the best remaining room type.
  const std::string& next();
  const std::vector<std::string>& chosen() const noexcept { return chosen_; }
  std::size_t queries() const noexcept { return queries_; }

 private:
  const EnvironmentSpec* env_;
  std::string goal_;
  Scorer* scorer_;
  std::vector<std::string> chosen_;
  std::size_t queries_ = 0;
};

std::vector<std::string> mc_room_ordering(const EnvironmentSpec& env, const std::string& goal, Scorer& scorer);

struct TraceStep {
  enum class Kind { Navigate, Select };
  Kind kind;
  std::string room;
  std::optional<double> score;  // Select only
  bool stop = false;
};

struct Episode {
  std::string env;
  std::string goal;
  std::string start_room;
  std::uint64_t seed = 0;
  std::vector<TraceStep> trace;
  bool success = false;
  std::size_t steps = 0;    // navigation actions
  std::size_t queries = 0;  // LM queries issued during the episode
};

Episode run_episode(const PolicyConfig& policy, const EnvironmentSpec& env, const std::string& goal,
                    const std::string& start_room, std::uint64_t seed);

struct EpisodePlan {
  std::size_t env = 0;
  std::string goal;
  std::string start_room;
  std::uint64_t seed = 0;
};

// Deterministic episode plan: environments round-robin, goals cycled among
// those placed in the environment, start rooms and per-episode seeds drawn
// from `seed`.
std::vector<EpisodePlan> plan_episodes(const std::vector<EnvironmentSpec>& envs, const std::vector<std::string>& goals,
                                       std::size_t n_episodes, std::uint64_t seed);

std::vector<Episode> run_batch(const PolicyConfig& policy, const std::vector<EnvironmentSpec>& envs,
                               const std::vector<EpisodePlan>& plan, std::size_t workers = 0);

struct SuccessMetrics {
  double class_avg = 0.0;
  double freq_avg = 0.0;
  std::map<std::string, double> per_goal;
  std::map<std::string, std::size_t> episodes_per_goal;
};

SuccessMetrics success_metrics(const std::vector<Episode>& episodes);

// Per-goal SR(run) - SR(baseline) over goals present in both.
std::map<std::string, double> success_delta(const SuccessMetrics& run, const SuccessMetrics& baseline);

nlohmann::json to_json(const Episode& episode);
EnvironmentSpec environment_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EnvironmentSpec& env);
// Accepts a single environment or {"environments": [...]}.
std::vector<EnvironmentSpec> environments_from_json(const nlohmann::json& j);

}  // namespace lampp::nav
