#include <doctest.h>

#include <cmath>

#include "lampp/error.hpp"
#include "lampp/fixtures.hpp"
#include "lampp/segment.hpp"
#include "oracles.hpp"

using namespace lampp;
using namespace lampp::segment;

namespace {

LabelVocab room_vocab(std::vector<std::string> n) { return LabelVocab(VocabKind::Room, std::move(n)); }
LabelVocab object_vocab(std::vector<std::string> n) { return LabelVocab(VocabKind::Object, std::move(n)); }

SceneModel identity_scene(std::size_t n_rooms, std::size_t n_obj) {
  std::vector<std::string> rn, on;
  for (std::size_t i = 0; i < n_rooms; ++i) rn.push_back("room" + std::to_string(i));
  for (std::size_t i = 0; i < n_obj; ++i) on.push_back("obj" + std::to_string(i));
  std::vector<double> eye(n_obj * n_obj, 0.0);
  for (std::size_t i = 0; i < n_obj; ++i) eye[i * n_obj + i] = 1.0;
  return make_scene(PriorTable("room_object", room_vocab(rn), object_vocab(on), true,
                               std::vector<double>(n_rooms * n_obj, 1.0 / static_cast<double>(n_obj))),
                    PriorTable("confusion", object_vocab(on), object_vocab(on), true, eye));
}

// 2 rooms x 3 objects, written out by hand.
SceneModel hand_scene() {
  const auto rooms = room_vocab({"kitchen", "bedroom"});
  const auto objs = object_vocab({"oven", "bed", "lamp"});
  return make_scene(PriorTable("room_object", rooms, objs, true, {0.6, 0.05, 0.35, 0.05, 0.6, 0.35}),
                    PriorTable("confusion", objs, objs, true, {0.8, 0.1, 0.1, 0.1, 0.7, 0.2, 0.05, 0.25, 0.7}));
}

}  // namespace

TEST_CASE("segments validate their distribution and pick the first maximum") {
  const auto s = make_segment("a", {0.4, 0.4, 0.2}, 10);
  CHECK(s.dstar == 0);
  CHECK_THROWS_AS(make_segment("b", {0.5, 0.4}, 10), Error);
  CHECK_THROWS_AS(make_segment("c", {1.2, -0.2}, 10), Error);
}

TEST_CASE("uninformative priors with identity confusion keep the base labels") {
  const auto scene = identity_scene(1, 4);
  const std::vector<SegmentObservation> segs = {make_segment("a", {0.1, 0.6, 0.2, 0.1}, 5),
                                                make_segment("b", {0.7, 0.1, 0.1, 0.1}, 5),
                                                make_segment("c", {0.25, 0.25, 0.2, 0.3}, 5)};
  const auto rule = relabel_scene(scene, segs);
  const auto exact = brute_force_posterior(scene, segs);
  for (std::size_t i = 0; i < segs.size(); ++i) {
    CHECK(rule.labels[i] == segs[i].dstar);
    CHECK(exact.labels[i] == segs[i].dstar);
  }

  SUBCASE("with several uniform rooms too") {
    const auto multi = identity_scene(3, 4);
    const auto r = relabel_scene(multi, segs);
    for (std::size_t i = 0; i < segs.size(); ++i) CHECK(r.labels[i] == segs[i].dstar);
  }
}

TEST_CASE("decision rule matches an independent nested-loop evaluation") {
  const auto scene = hand_scene();
  const std::vector<SegmentObservation> segs = {make_segment("a", {0.7, 0.1, 0.2}, 100),
                                                make_segment("b", {0.2, 0.35, 0.45}, 50)};
  const auto got = relabel_scene(scene, segs);
  const auto want = oracle::naive_decision_rule(scene, segs);
  for (std::size_t i = 0; i < segs.size(); ++i) {
    for (std::size_t y = 0; y < 3; ++y) CHECK(std::abs(got.posteriors[i][y] - want[i][y]) <= 1e-9);
    CHECK(got.labels[i] == oracle::argmax_first(want[i]));
  }
}

TEST_CASE("rule and exact marginal agree on the hand-built fixture") {
  const auto scene = hand_scene();
  const std::vector<SegmentObservation> segs = {make_segment("a", {0.7, 0.1, 0.2}, 100),
                                                make_segment("b", {0.2, 0.35, 0.45}, 50)};
  const auto rule = relabel_scene(scene, segs);
  const auto exact = brute_force_posterior(scene, segs);
  CHECK(rule.labels == exact.labels);
  for (const auto& row : exact.posteriors) {
    double s = 0.0;
    for (double p : row) s += p;
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
  double rs = 0.0;
  for (double p : exact.room_posterior) rs += p;
  CHECK(std::abs(rs - 1.0) <= 1e-12);
}

TEST_CASE("bathroom context turns a curtain into a shower curtain") {
  const auto fx = fixtures::bathroom_scene();
  const auto r = relabel_scene(fx.scene, fx.segments);
  CHECK(fx.scene.objects.name(fx.segments[1].dstar) == "curtain");
  CHECK(fx.scene.objects.name(r.labels[1]) == "shower curtain");
  CHECK(fx.scene.objects.name(r.labels[0]) == "bathtub");
  const auto flat = fixtures::bathroom_scene(true);
  CHECK(flat.scene.objects.name(relabel_scene(flat.scene, flat.segments).labels[1]) == "curtain");
}

TEST_CASE("strengthening the room association never lowers that object's posterior") {
  const auto fx = fixtures::bathroom_scene();
  const std::size_t sc = fx.scene.objects.index("shower curtain");
  const std::size_t bath = fx.scene.rooms.index("bathroom");
  double last = relabel_scene(fx.scene, fx.segments).posteriors[1][sc];
  for (double bump : {0.02, 0.05, 0.1, 0.2}) {
    auto probs = fx.scene.object_given_room.probs();
    const std::size_t n = fx.scene.objects.size();
    probs[bath * n + sc] += bump;
    double z = 0.0;
    for (std::size_t y = 0; y < n; ++y) z += probs[bath * n + y];
    for (std::size_t y = 0; y < n; ++y) probs[bath * n + y] /= z;
    const auto scene = make_scene(PriorTable("room_object", fx.scene.rooms, fx.scene.objects, true, probs),
                                  fx.scene.confusion);
    const double now = relabel_scene(scene, fx.segments).posteriors[1][sc];
    CHECK(now >= last - 1e-12);
    last = now;
  }
}

TEST_CASE("posteriors are normalized and reproducible") {
  const auto fx = fixtures::random_scene(42, {3, 4, 4});
  const auto r = relabel_scene(fx.scene, fx.segments);
  for (const auto& row : r.posteriors) {
    double s = 0.0;
    for (double p : row) s += p;
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
  const auto r2 = relabel_scene(fx.scene, fx.segments);
  for (std::size_t i = 0; i < r.posteriors.size(); ++i) CHECK(r.posteriors[i] == r2.posteriors[i]);
}

TEST_CASE("oracle enumeration guard") {
  const auto scene = identity_scene(2, 10);
  std::vector<SegmentObservation> segs;
  for (int i = 0; i < 5; ++i) {
    std::vector<double> d(10, 0.05);
    d[i] = 0.55;
    segs.push_back(make_segment("s" + std::to_string(i), d, 1));
  }
  try {
    brute_force_posterior(scene, segs);
    FAIL("expected OracleTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::OracleTooLarge);
  }
}

TEST_CASE("unknown labels are rejected") {
  const auto scene = hand_scene();
  CHECK_THROWS_AS(scene_from_json(nlohmann::json::parse(R"({"segments": [{"id": "a", "pixel_count": 3,
      "dist": {"oven": 0.5, "toaster": 0.5}}], "gold": {}})"),
                                  scene.objects),
                  Error);
  const auto in = scene_from_json(nlohmann::json::parse(R"({"segments": [{"id": "a", "pixel_count": 3,
      "dist": {"oven": 0.25, "bed": 0.75}}], "gold": {"a": "bed"}})"),
                                  scene.objects);
  REQUIRE(in.segments.size() == 1);
  CHECK(in.segments[0].dist == std::vector<double>{0.25, 0.75, 0.0});
  CHECK(in.segments[0].dstar == 1);
  CHECK(in.gold.at("a") == "bed");
}

TEST_CASE("model chaining relabels every segment sharing a detection") {
  const auto fx = fixtures::bathroom_scene();
  nlohmann::json rules = nlohmann::json::array();
  rules.push_back({{"prompt_contains", {"You can see:"}}, {"completion", " bathroom"}, {"logprob", -0.1}});
  rules.push_back({{"prompt_contains", {"looks like curtain is actually"}}, {"completion", " shower curtain"},
                   {"logprob", -0.2}});
  rules.push_back({{"prompt_contains", {"looks like bathtub is actually"}}, {"completion", " bathtub"}, {"logprob", -0.2}});
  auto mock = std::make_shared<MockProvider>(nlohmann::json{{"rules", rules}});
  Scorer scorer(mock);
  auto segs = fx.segments;
  segs.push_back(make_segment("hanging2", {0.02, 0.6, 0.34, 0.02, 0.02}, 10));
  const auto mc = mc_relabel(segs, fx.scene.rooms, fx.scene.objects, scorer);
  CHECK(fx.scene.rooms.name(mc.room) == "bathroom");
  CHECK(fx.scene.objects.name(mc.labels[0]) == "bathtub");
  CHECK(fx.scene.objects.name(mc.labels[1]) == "shower curtain");
  CHECK(fx.scene.objects.name(mc.labels[2]) == "shower curtain");
  // One room query plus one per unique detection.
  CHECK(scorer.stats().queries == 3);

  SUBCASE("identity when the LM keeps the detection") {
    auto keep = std::make_shared<MockProvider>(nlohmann::json{
        {"rules", {{{"prompt_contains", {"looks like sofa is actually"}}, {"completion", " sofa"}, {"logprob", -0.1}}}}});
    Scorer s2(keep);
    const std::vector<SegmentObservation> one = {make_segment("x", {0.1, 0.1, 0.1, 0.1, 0.6}, 10)};
    CHECK(mc_relabel(one, fx.scene.rooms, fx.scene.objects, s2).labels == std::vector<std::size_t>{4});
  }
  SUBCASE("no segments") {
    CHECK_THROWS_AS(mc_relabel({}, fx.scene.rooms, fx.scene.objects, scorer), Error);
  }
}

TEST_CASE("mean IoU") {
  const std::map<std::string, std::string> gold = {{"a", "bed"}, {"b", "sofa"}, {"c", "sofa"}};
  SUBCASE("perfect prediction") {
    const std::vector<LabeledSegment> pred = {{"a", "bed", 10}, {"b", "sofa", 5}, {"c", "sofa", 5}};
    const auto r = miou(pred, gold);
    CHECK(r.miou == 1.0);
    for (const auto& [c, v] : r.per_class) CHECK(v == 1.0);
  }
  SUBCASE("class never predicted") {
    const std::vector<LabeledSegment> pred = {{"a", "sofa", 10}, {"b", "sofa", 5}, {"c", "sofa", 5}};
    const auto r = miou(pred, gold);
    CHECK(r.per_class.at("bed") == 0.0);
    CHECK(r.per_class.at("sofa") == doctest::Approx(10.0 / 20.0));
  }
  SUBCASE("half overlap") {
    // bed: 10 gold pixels, 10 predicted, 5 shared.
    const std::map<std::string, std::string> g = {{"a", "bed"}, {"b", "bed"}, {"c", "sofa"}};
    const std::vector<LabeledSegment> pred = {{"a", "bed", 5}, {"b", "sofa", 5}, {"c", "bed", 5}};
    const auto r = miou(pred, g);
    CHECK(r.per_class.at("bed") == doctest::Approx(5.0 / 15.0));
    const double hand = oracle::hand_miou({{"bed", "bed", 5}, {"sofa", "bed", 5}, {"bed", "sofa", 5}});
    CHECK(r.miou == doctest::Approx(hand).epsilon(1e-15));
  }
  SUBCASE("id mismatch") {
    const std::vector<LabeledSegment> pred = {{"a", "bed", 10}, {"z", "sofa", 5}};
    try {
      miou(pred, gold);
      FAIL("expected SegmentMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::SegmentMismatch);
    }
  }
}
