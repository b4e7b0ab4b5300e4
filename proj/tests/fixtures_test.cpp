#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "lampp/fixtures.hpp"
#include "lampp/scorer.hpp"
#include "lampp/prior_build.hpp"

using namespace lampp;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("lampp_fx_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("same seed writes byte-identical files") {
  const auto a = fresh_dir("a"), b = fresh_dir("b");
  const auto files_a = fixtures::gen_fixtures(fixtures::Kind::All, 7, a);
  const auto files_b = fixtures::gen_fixtures(fixtures::Kind::All, 7, b);
  REQUIRE(files_a.size() == files_b.size());
  REQUIRE(!files_a.empty());
  for (std::size_t i = 0; i < files_a.size(); ++i) {
    CAPTURE(files_a[i].filename().string());
    CHECK(files_a[i].filename() == files_b[i].filename());
    CHECK(slurp(files_a[i]) == slurp(files_b[i]));
  }
  const auto c = fresh_dir("c");
  fixtures::gen_fixtures(fixtures::Kind::Video, 8, c);
  CHECK(slurp(c / "video_data.json") != slurp(a / "video_data.json"));
  fs::remove_all(a);
  fs::remove_all(b);
  fs::remove_all(c);
}

TEST_CASE("nav placements lie inside the prior's support") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto fx = fixtures::nav_batch(seed);
    for (const auto& env : fx.envs) {
      for (const auto& room : env.rooms()) {
        auto it = env.placements().find(room.id);
        if (it == env.placements().end()) continue;
        for (const auto& goal : it->second) CHECK(fx.priors.at(room.type, goal) > 0.0);
      }
    }
  }
}

TEST_CASE("mock LM fixtures reproduce the tables they encode") {
  const auto fx = fixtures::nav_batch(4);
  Scorer scorer(std::make_shared<MockProvider>(fx.mock_lm));
  const auto built = build_plausibility_prior(scorer, TemplateId::RoomObject, "nav", fx.priors.ctx_vocab(),
                                              fx.priors.row_vocab(), false);
  for (std::size_t i = 0; i < built.probs().size(); ++i) {
    CHECK(built.probs()[i] == doctest::Approx(fx.priors.probs()[i]).epsilon(1e-12));
  }

  const auto scene = fixtures::random_scene(3, {2, 3, 2});
  Scorer s2(std::make_shared<MockProvider>(
      nlohmann::json{{"rules", fixtures::plausibility_rules(TemplateId::RoomObject, scene.scene.object_given_room)}}));
  const auto oyr = build_plausibility_prior(s2, TemplateId::RoomObject, "room_object", scene.scene.rooms,
                                            scene.scene.objects, true);
  for (std::size_t i = 0; i < oyr.probs().size(); ++i) {
    CHECK(oyr.probs()[i] == doctest::Approx(scene.scene.object_given_room.probs()[i]).epsilon(1e-9));
  }
}

TEST_CASE("random scenes have uniform label marginals") {
  const auto fx = fixtures::random_scene(12, {3, 4, 3});
  const std::size_t n = fx.scene.objects.size();
  for (std::size_t y = 0; y < n; ++y) {
    double py = 0.0, pd = 0.0;
    for (std::size_t r = 0; r < fx.scene.rooms.size(); ++r) py += fx.scene.room_prior[r] * fx.scene.object_given_room.at(r, y);
    for (std::size_t k = 0; k < n; ++k) pd += fx.scene.confusion.at(k, y) / static_cast<double>(n);
    CHECK(py == doctest::Approx(1.0 / static_cast<double>(n)).epsilon(1e-9));
    CHECK(pd == doctest::Approx(1.0 / static_cast<double>(n)).epsilon(1e-9));
  }
}

TEST_CASE("video transition counts are consistent with the generating chain") {
  for (std::uint64_t seed : {1u, 5u, 9u}) {
    const auto fx = fixtures::video_task(seed);
    const std::size_t n = fx.data.actions.size();
    std::vector<double> counts(n * n, 0.0);
    for (const auto& v : fx.data.videos) {
      for (std::size_t t = 1; t < v.labels.size(); ++t) counts[v.labels[t - 1] * n + v.labels[t]] += 1.0;
    }
    double stat = 0.0;
    double df = 0.0;
    for (std::size_t y = 0; y < n; ++y) {
      double total = 0.0;
      for (std::size_t k = 0; k < n; ++k) total += counts[y * n + k];
      if (total == 0.0) continue;
      std::size_t support = 0;
      for (std::size_t k = 0; k < n; ++k) {
        const double p = fx.true_theta[y * n + k];
        if (p == 0.0) {
          CHECK(counts[y * n + k] == 0.0);
          continue;
        }
        ++support;
        const double expected = total * p;
        stat += (counts[y * n + k] - expected) * (counts[y * n + k] - expected) / expected;
      }
      df += static_cast<double>(support) - 1.0;
    }
    REQUIRE(df > 0.0);
    const double p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), stat));
    CAPTURE(seed);
    CAPTURE(stat);
    CHECK(p_value > 0.001);
  }
}

TEST_CASE("video fixtures carry both splits and a common transition") {
  const auto fx = fixtures::video_task(3);
  CHECK(fx.data.split(hmm::Split::Train).size() == 60);
  CHECK(fx.data.split(hmm::Split::Eval).size() == 30);
  const auto [from, to] = fx.common_transition;
  std::size_t with = 0;
  for (const auto* v : fx.data.split(hmm::Split::Train)) with += hmm::contains_transition(*v, from, to);
  CHECK(with > 0);
}
