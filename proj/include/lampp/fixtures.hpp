#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lampp/hmm.hpp"
#include "lampp/nav.hpp"
#include "lampp/prior.hpp"
#include "lampp/segment.hpp"

// Deterministic synthetic inputs: scenes, room-graph environments, and
// labeled action videos, each with a mock-LM fixture that reproduces its
// priors through the scoring path.
namespace lampp::fixtures {

// Uniform double in [0, 1) from the top 53 bits.
double uniform01(std::mt19937_64& rng);

struct SceneShape {
  std::size_t rooms = 2;
  std::size_t objects = 3;
  std::size_t segments = 3;
  // p(d = y | y) is drawn once per scene from [keep_min, keep_max]; the
  // remainder goes to one look-alike label.
  double keep_min = 0.85;
  double keep_max = 0.95;
  // Base-model mass on the observed label, drawn from [peak_min, peak_max].
  double peak_min = 0.8;
  double peak_max = 0.95;
  double room_concentration = 1.0;  // Dirichlet concentration of p(y | r)
};

struct SceneFixture {
  segment::SceneModel scene;
  std::vector<segment::SegmentObservation> segments;
  std::map<std::string, std::string> gold;
};

// Samples a scene from the generative model (room, true objects, noisy
// labels) with peaked base-model distributions around the noisy labels.
SceneFixture random_scene(std::uint64_t seed, SceneShape shape);

// Bathroom with a confident bathtub and a segment split between "curtain"
// and "shower curtain". With uniform_priors, p(y | r) carries no information.
SceneFixture bathroom_scene(bool uniform_priors = false);

struct NavFixture {
  std::vector<nav::EnvironmentSpec> envs;
  PriorTable priors;  // p(y=1 | room type, goal)
  std::vector<std::string> goals;
  nlohmann::json mock_lm;
};

struct NavShape {
  std::size_t envs = 8;
  std::size_t min_rooms = 6;
  std::size_t max_rooms = 9;
  std::size_t budget = 0;  // navigation actions per episode, 0 = unlimited
  nav::ScoreDistribution true_positive{8.0, 2.0, std::nullopt};
  nav::ScoreDistribution false_positive{2.0, 8.0, std::nullopt};
};

NavFixture nav_batch(std::uint64_t seed, const NavShape& shape = {});

struct VideoShape {
  std::size_t train = 60;
  std::size_t eval = 30;
  std::size_t max_len = 80;
  double emission_hit = 0.55;
};

struct VideoFixture {
  hmm::TaskDataset data;
  std::vector<double> true_theta;
  std::vector<double> true_eta;
  std::vector<double> true_initial;
  std::map<std::string, std::vector<double>> lm_rows;  // successor distributions the mock encodes
  std::pair<std::size_t, std::size_t> common_transition;
  nlohmann::json mock_lm;
};

VideoFixture video_task(std::uint64_t seed, const VideoShape& shape = {});

// Mock-LM rule set reproducing a plausibility table through the prompt
// template (plausible = p, implausible = 1 - p).
nlohmann::json plausibility_rules(TemplateId id, const PriorTable& table);

enum class Kind { Scene, Nav, Video, All };
Kind parse_kind(std::string_view name);

// Writes fixture files under `dir` and returns their paths.
std::vector<std::filesystem::path> gen_fixtures(Kind kind, std::uint64_t seed, const std::filesystem::path& dir);

}  // namespace lampp::fixtures
