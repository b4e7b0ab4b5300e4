#include "lampp/nav.hpp"

#include <cmath>
#include <limits>

#include "lampp/error.hpp"
#include "lampp/parallel.hpp"

namespace lampp::nav {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

double ScoreDistribution::sample(std::mt19937_64& rng) const {
  if (point) return *point;
  std::gamma_distribution<double> ga(alpha, 1.0), gb(beta, 1.0);
  const double a = ga(rng);
  const double b = gb(rng);
  return a + b > 0.0 ? a / (a + b) : 0.5;
}

const ScoreDistribution& DetectorModel::distribution(const std::string& goal, bool present) const {
  if (auto it = per_goal.find(goal); it != per_goal.end()) return present ? it->second.first : it->second.second;
  return present ? true_positive : false_positive;
}

EnvironmentSpec::EnvironmentSpec(std::string name, std::vector<Room> rooms,
                                 std::map<std::string, std::set<std::string>> placements, DetectorModel detector,
                                 std::size_t max_rooms)
    : name_(std::move(name)),
      rooms_(std::move(rooms)),
      placements_(std::move(placements)),
      detector_(std::move(detector)),
      max_rooms_(max_rooms) {
  if (rooms_.empty()) throw Error(Errc::EmptyEnvironment, "environment '" + name_ + "' has no rooms");
  std::set<std::string> ids;
  for (const Room& r : rooms_) {
    if (r.id.empty() || r.type.empty()) throw Error(Errc::InvalidInput, "rooms need an id and a type");
    if (!ids.insert(r.id).second) throw Error(Errc::InvalidInput, "duplicate room id '" + r.id + "'");
    if (!std::isfinite(r.centroid.x) || !std::isfinite(r.centroid.y)) {
      throw Error(Errc::InvalidInput, "room '" + r.id + "' has a non-finite centroid");
    }
  }
  for (const Room& r : rooms_) {
    for (const auto& a : r.adjacent) {
      if (!ids.count(a)) throw Error(Errc::InvalidInput, "room '" + r.id + "' is adjacent to unknown room '" + a + "'");
    }
  }
  for (const auto& [room, objects] : placements_) {
    if (!ids.count(room)) throw Error(Errc::InvalidInput, "placement refers to unknown room '" + room + "'");
  }
  auto check_dist = [](const ScoreDistribution& d) {
    if (d.point) {
      if (!(*d.point >= 0.0 && *d.point <= 1.0)) throw Error(Errc::InvalidInput, "detector score must lie in [0, 1]");
    } else if (!(d.alpha > 0.0 && d.beta > 0.0)) {
      throw Error(Errc::InvalidInput, "Beta parameters must be positive");
    }
  };
  check_dist(detector_.true_positive);
  check_dist(detector_.false_positive);
  for (const auto& [g, pair] : detector_.per_goal) {
    check_dist(pair.first);
    check_dist(pair.second);
  }
  for (const Room& r : rooms_) {
    auto it = std::find_if(inventory_.begin(), inventory_.end(), [&](const auto& e) { return e.first == r.type; });
    if (it == inventory_.end()) inventory_.emplace_back(r.type, 1);
    else ++it->second;
  }
}

std::size_t EnvironmentSpec::room_index(const std::string& id) const {
  for (std::size_t i = 0; i < rooms_.size(); ++i) {
    if (rooms_[i].id == id) return i;
  }
  throw Error(Errc::UnknownLabel, "no room '" + id + "' in environment '" + name_ + "'");
}

bool EnvironmentSpec::contains(std::size_t room, const std::string& object) const {
  auto it = placements_.find(rooms_.at(room).id);
  return it != placements_.end() && it->second.count(object) > 0;
}

bool EnvironmentSpec::contains_anywhere(const std::string& object) const {
  for (std::size_t i = 0; i < rooms_.size(); ++i) {
    if (contains(i, object)) return true;
  }
  return false;
}

std::string_view policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Lampp: return "lampp";
    case PolicyKind::Uniform: return "uniform";
    case PolicyKind::Mc: return "mc";
    case PolicyKind::Ablation: return "ablation";
  }
  return "lampp";
}

PolicyKind parse_policy(std::string_view name) {
  for (PolicyKind k : {PolicyKind::Lampp, PolicyKind::Uniform, PolicyKind::Mc, PolicyKind::Ablation}) {
    if (policy_name(k) == name) return k;
  }
  throw Error(Errc::InvalidInput, "unknown policy '" + std::string(name) + "'");
}

void PolicyConfig::validate() const {
  if (!(tau > 0.0 && tau < 1.0)) throw Error(Errc::InvalidInput, "tau must lie in (0, 1)");
  if (k < 1) throw Error(Errc::InvalidInput, "k must be at least 1");
  if ((kind == PolicyKind::Lampp || kind == PolicyKind::Ablation) && !priors) {
    throw Error(Errc::InvalidInput, std::string(policy_name(kind)) + " policy needs a prior table");
  }
  if (priors && priors->normalized_over_rows()) {
    throw Error(Errc::InvalidInput, "navigation priors are per-cell plausibilities, not row-normalized");
  }
  if (kind == PolicyKind::Mc && !scorer) throw Error(Errc::InvalidInput, "mc policy needs an LM scorer");
}

namespace {

constexpr double kTieTolerance = 1e-12;

}  // namespace

double fused_posterior(double score, double prior) {
  const double positive = score * prior;
  const double denom = positive + (1.0 - score) * (1.0 - prior);
  return denom > 0.0 ? positive / denom : 0.0;
}

double room_prior(const PolicyConfig& policy, const EnvironmentSpec& env, std::size_t room, const std::string& goal) {
  if (policy.kind == PolicyKind::Uniform || !policy.priors) return uniform_goal_prior(env.inventory().size());
  return policy.priors->at(env.rooms().at(room).type, goal);
}

namespace {

// Best unvisited room under `key` (higher first), then proximity, then order.
template <typename Key>
std::size_t pick_room(const EnvironmentSpec& env, const std::vector<bool>& visited, Point position, Key key) {
  std::size_t best = env.rooms().size();
  double best_key = -std::numeric_limits<double>::infinity();
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < env.rooms().size(); ++i) {
    if (visited[i]) continue;
    const double k = key(i);
    const double d = distance(position, env.rooms()[i].centroid);
    if (best == env.rooms().size() || k > best_key || (k == best_key && d < best_dist)) {
      best = i;
      best_key = k;
      best_dist = d;
    }
  }
  if (best == env.rooms().size()) throw Error(Errc::Exhausted, "every room has been visited");
  return best;
}

}  // namespace

std::size_t navigate_choice(const PolicyConfig& policy, const EnvironmentSpec& env, const std::vector<bool>& visited,
                            const std::string& goal, Point position) {
  if (visited.size() != env.rooms().size()) throw Error(Errc::InvalidInput, "visited mask has wrong length");
  if (policy.kind == PolicyKind::Uniform || policy.kind == PolicyKind::Mc) {
    return pick_room(env, visited, position, [](std::size_t) { return 0.0; });
  }
  return pick_room(env, visited, position, [&](std::size_t i) { return room_prior(policy, env, i, goal); });
}

bool select_decision(const PolicyConfig& policy, const EnvironmentSpec& env, double score, std::size_t room,
                     const std::string& goal) {
  switch (policy.kind) {
    case PolicyKind::Lampp:
    case PolicyKind::Uniform:
      // Posteriors within rounding of tau count as ties, which continue.
      return fused_posterior(score, room_prior(policy, env, room, goal)) > policy.tau + kTieTolerance;
    case PolicyKind::Mc:
    case PolicyKind::Ablation:
      return score > policy.tau;
  }
  return false;
}

McRoomOrderer::McRoomOrderer(const EnvironmentSpec& env, std::string goal, Scorer& scorer)
    : env_(&env), goal_(std::move(goal)), scorer_(&scorer) {}

const std::string& McRoomOrderer::next() {
  if (done()) throw Error(Errc::Exhausted, "every room type has been ordered");
  std::vector<std::string> remaining, candidates;
  for (const auto& [type, count] : env_->inventory()) {
    if (std::find(chosen_.begin(), chosen_.end(), type) != chosen_.end()) continue;
    remaining.push_back(type);
    candidates.push_back(as_completion(type));
  }
  const auto dist = scorer_->distribution(mc_navigation_prompt(env_->inventory(), goal_, chosen_), candidates);
  ++queries_;
  std::size_t best = 0;
  for (std::size_t i = 1; i < dist.size(); ++i) {
    if (dist[i] > dist[best]) best = i;
  }
  chosen_.push_back(remaining[best]);
  return chosen_.back();
}

std::vector<std::string> mc_room_ordering(const EnvironmentSpec& env, const std::string& goal, Scorer& scorer) {
  McRoomOrderer orderer(env, goal, scorer);
  while (!orderer.done()) orderer.next();
  return orderer.chosen();
}

Episode run_episode(const PolicyConfig& policy, const EnvironmentSpec& env, const std::string& goal,
                    const std::string& start_room, std::uint64_t seed) {
  policy.validate();
  if (policy.priors && !policy.priors->row_vocab().contains(goal)) {
    throw Error(Errc::UnknownLabel, "goal '" + goal + "' is not in the prior table");
  }
  if (policy.priors) {
    for (const auto& [type, count] : env.inventory()) policy.priors->ctx_vocab().index(type);
  }

  Episode ep;
  ep.env = env.name();
  ep.goal = goal;
  ep.start_room = start_room;
  ep.seed = seed;

  std::mt19937_64 rng(seed);
  const std::size_t n_rooms = env.rooms().size();
  std::vector<bool> visited(n_rooms, false);
  Point position = env.rooms()[env.room_index(start_room)].centroid;
  const std::size_t budget = env.max_rooms() == 0 ? n_rooms : std::min(env.max_rooms(), n_rooms);

  std::optional<McRoomOrderer> orderer;
  std::string current_type;
  if (policy.kind == PolicyKind::Mc) orderer.emplace(env, goal, *policy.scorer);

  while (ep.steps < budget) {
    std::size_t room;
    if (orderer) {
      auto has_unvisited = [&](const std::string& type) {
        for (std::size_t i = 0; i < n_rooms; ++i) {
          if (!visited[i] && env.rooms()[i].type == type) return true;
        }
        return false;
      };
      while (current_type.empty() || !has_unvisited(current_type)) current_type = orderer->next();
      room = pick_room(env, visited, position,
                       [&](std::size_t i) { return env.rooms()[i].type == current_type ? 1.0 : 0.0; });
    } else {
      room = navigate_choice(policy, env, visited, goal, position);
    }
    visited[room] = true;
    position = env.rooms()[room].centroid;
    ++ep.steps;
    ep.trace.push_back({TraceStep::Kind::Navigate, env.rooms()[room].id, std::nullopt, false});

    const bool present = env.contains(room, goal);
    const ScoreDistribution& dist = env.detector().distribution(goal, present);
    for (int obs = 0; obs < policy.k; ++obs) {
      const double s = dist.sample(rng);
      const bool stop = select_decision(policy, env, s, room, goal);
      ep.trace.push_back({TraceStep::Kind::Select, env.rooms()[room].id, s, stop});
      if (stop) {
        ep.success = present;
        if (orderer) ep.queries = orderer->queries();
        return ep;
      }
    }
    if (std::find(visited.begin(), visited.end(), false) == visited.end()) break;
  }
  if (orderer) ep.queries = orderer->queries();
  return ep;
}

std::vector<EpisodePlan> plan_episodes(const std::vector<EnvironmentSpec>& envs, const std::vector<std::string>& goals,
                                       std::size_t n_episodes, std::uint64_t seed) {
  if (envs.empty()) throw Error(Errc::EmptyEnvironment, "no environments");
  if (goals.empty()) throw Error(Errc::InvalidInput, "no goals");
  std::vector<EpisodePlan> plan;
  plan.reserve(n_episodes);
  for (std::size_t e = 0; e < n_episodes; ++e) {
    const std::size_t ei = e % envs.size();
    const EnvironmentSpec& env = envs[ei];
    std::vector<std::string> present;
    for (const auto& g : goals) {
      if (env.contains_anywhere(g)) present.push_back(g);
    }
    const auto& pool = present.empty() ? goals : present;
    const std::uint64_t episode_seed = splitmix64(seed ^ splitmix64(e));
    const std::size_t start = static_cast<std::size_t>(splitmix64(episode_seed) % env.rooms().size());
    plan.push_back({ei, pool[(e / envs.size()) % pool.size()], env.rooms()[start].id, episode_seed});
  }
  return plan;
}

std::vector<Episode> run_batch(const PolicyConfig& policy, const std::vector<EnvironmentSpec>& envs,
                               const std::vector<EpisodePlan>& plan, std::size_t workers) {
  std::vector<Episode> out(plan.size());
  parallel_for(plan.size(), workers == 0 ? default_workers() : workers, [&](std::size_t i) {
    const EpisodePlan& p = plan[i];
    out[i] = run_episode(policy, envs.at(p.env), p.goal, p.start_room, p.seed);
  });
  return out;
}

SuccessMetrics success_metrics(const std::vector<Episode>& episodes) {
  if (episodes.empty()) throw Error(Errc::NoEpisodes, "no episodes to score");
  SuccessMetrics m;
  std::map<std::string, std::size_t> wins;
  std::size_t total_wins = 0;
  for (const auto& ep : episodes) {
    ++m.episodes_per_goal[ep.goal];
    wins[ep.goal] += ep.success ? 1 : 0;
    total_wins += ep.success ? 1 : 0;
  }
  double sum = 0.0;
  for (const auto& [goal, count] : m.episodes_per_goal) {
    const double sr = static_cast<double>(wins[goal]) / static_cast<double>(count);
    m.per_goal[goal] = sr;
    sum += sr;
  }
  m.class_avg = sum / static_cast<double>(m.per_goal.size());
  m.freq_avg = static_cast<double>(total_wins) / static_cast<double>(episodes.size());
  return m;
}

std::map<std::string, double> success_delta(const SuccessMetrics& run, const SuccessMetrics& baseline) {
  std::map<std::string, double> delta;
  for (const auto& [goal, sr] : run.per_goal) {
    if (auto it = baseline.per_goal.find(goal); it != baseline.per_goal.end()) delta[goal] = sr - it->second;
  }
  return delta;
}

nlohmann::json to_json(const Episode& episode) {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& step : episode.trace) {
    if (step.kind == TraceStep::Kind::Navigate) {
      trace.push_back({{"action", "navigate"}, {"room", step.room}});
    } else {
      trace.push_back({{"action", "select"}, {"room", step.room}, {"score", *step.score}, {"stop", step.stop}});
    }
  }
  return {{"env", episode.env},         {"goal", episode.goal},       {"start_room", episode.start_room},
          {"seed", episode.seed},       {"success", episode.success}, {"steps", episode.steps},
          {"queries", episode.queries}, {"trace", std::move(trace)}};
}

namespace {

ScoreDistribution dist_from_json(const nlohmann::json& j) {
  ScoreDistribution d;
  if (j.contains("point")) {
    d.point = j.at("point").get<double>();
  } else {
    d.alpha = j.at("alpha").get<double>();
    d.beta = j.at("beta").get<double>();
  }
  return d;
}

nlohmann::json dist_to_json(const ScoreDistribution& d) {
  if (d.point) return {{"point", *d.point}};
  return {{"alpha", d.alpha}, {"beta", d.beta}};
}

}  // namespace

EnvironmentSpec environment_from_json(const nlohmann::json& j) {
  std::vector<Room> rooms;
  for (const auto& r : j.at("rooms")) {
    Room room;
    room.id = r.at("id").get<std::string>();
    room.type = r.at("type").get<std::string>();
    const auto& c = r.at("centroid");
    room.centroid = {c.at(0).get<double>(), c.at(1).get<double>()};
    if (r.contains("adjacent")) room.adjacent = r.at("adjacent").get<std::vector<std::string>>();
    rooms.push_back(std::move(room));
  }
  std::map<std::string, std::set<std::string>> placements;
  if (j.contains("placements")) {
    for (const auto& [room, objs] : j.at("placements").items()) {
      placements[room] = objs.get<std::set<std::string>>();
    }
  }
  DetectorModel detector;
  if (j.contains("detector")) {
    const auto& d = j.at("detector");
    if (d.contains("true_positive")) detector.true_positive = dist_from_json(d.at("true_positive"));
    if (d.contains("false_positive")) detector.false_positive = dist_from_json(d.at("false_positive"));
    if (d.contains("per_goal")) {
      for (const auto& [g, pair] : d.at("per_goal").items()) {
        detector.per_goal[g] = {dist_from_json(pair.at("true_positive")), dist_from_json(pair.at("false_positive"))};
      }
    }
  }
  return EnvironmentSpec(j.value("name", std::string("env")), std::move(rooms), std::move(placements),
                         std::move(detector), j.value("max_rooms", std::size_t{0}));
}

nlohmann::json to_json(const EnvironmentSpec& env) {
  nlohmann::json rooms = nlohmann::json::array();
  for (const auto& r : env.rooms()) {
    rooms.push_back({{"id", r.id}, {"type", r.type}, {"centroid", {r.centroid.x, r.centroid.y}}, {"adjacent", r.adjacent}});
  }
  nlohmann::json placements = nlohmann::json::object();
  for (const auto& [room, objs] : env.placements()) placements[room] = objs;
  nlohmann::json detector{{"true_positive", dist_to_json(env.detector().true_positive)},
                          {"false_positive", dist_to_json(env.detector().false_positive)}};
  for (const auto& [g, pair] : env.detector().per_goal) {
    detector["per_goal"][g] = {{"true_positive", dist_to_json(pair.first)},
                               {"false_positive", dist_to_json(pair.second)}};
  }
  return {{"name", env.name()},
          {"rooms", std::move(rooms)},
          {"placements", std::move(placements)},
          {"detector", std::move(detector)},
          {"max_rooms", env.max_rooms()}};
}

std::vector<EnvironmentSpec> environments_from_json(const nlohmann::json& j) {
  std::vector<EnvironmentSpec> envs;
  if (j.contains("environments")) {
    for (const auto& e : j.at("environments")) envs.push_back(environment_from_json(e));
  } else {
    envs.push_back(environment_from_json(j));
  }
  return envs;
}

}  // namespace lampp::nav
