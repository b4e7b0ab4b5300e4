#include "lampp/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "lampp/error.hpp"
#include "lampp/prompt.hpp"

namespace lampp::fixtures {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

namespace {

std::vector<double> dirichlet(std::mt19937_64& rng, std::size_t n, double concentration) {
  std::gamma_distribution<double> gamma(concentration, 1.0);
  std::vector<double> v(n);
  double sum = 0.0;
  for (double& x : v) sum += x = gamma(rng) + 1e-6;
  for (double& x : v) x /= sum;
  return v;
}

std::size_t sample_index(std::mt19937_64& rng, std::span<const double> probs) {
  double u = uniform01(rng);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (u < probs[i]) return i;
    u -= probs[i];
  }
  return probs.size() - 1;
}

std::vector<std::string> numbered(const char* stem, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::string(stem) + std::to_string(i));
  return out;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::InvalidInput, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

nlohmann::json plausibility_rule(const std::string& prompt, double p) {
  nlohmann::json rules = nlohmann::json::array();
  rules.push_back({{"prompt", prompt}, {"completion", " plausible"}, {"logprob", std::log(p)}});
  rules.push_back({{"prompt", prompt}, {"completion", " implausible"}, {"logprob", std::log1p(-p)}});
  return rules;
}

}  // namespace

nlohmann::json plausibility_rules(TemplateId id, const PriorTable& table) {
  nlohmann::json rules = nlohmann::json::array();
  const PromptTemplate& tpl = prompt_template(id);
  for (std::size_t c = 0; c < table.ctx_vocab().size(); ++c) {
    for (std::size_t r = 0; r < table.row_vocab().size(); ++r) {
      Slots slots;
      if (id == TemplateId::ObjectConfusion) {
        slots = {{"d", table.row_vocab().name(r)}, {"y", table.ctx_vocab().name(c)}};
      } else {
        slots = {{"r", table.ctx_vocab().name(c)}, {"y", table.row_vocab().name(r)}};
      }
      const double p = std::clamp(table.at(c, r), 1e-9, 1.0 - 1e-9);
      for (auto& rule : plausibility_rule(render_prefix(tpl, slots, "completion"), p)) rules.push_back(rule);
    }
  }
  return rules;
}

// ---------------------------------------------------------------------------
// Scenes

SceneFixture random_scene(std::uint64_t seed, SceneShape shape) {
  std::mt19937_64 rng(seed);
  LabelVocab rooms(VocabKind::Room, numbered("room", shape.rooms));
  LabelVocab objects(VocabKind::Object, numbered("obj", shape.objects));
  const std::size_t n_obj = shape.objects;

  std::vector<double> oyr;
  for (std::size_t r = 0; r < shape.rooms; ++r) {
    auto row = dirichlet(rng, n_obj, shape.room_concentration);
    for (double& v : row) v = std::max(v, 1e-4);
    oyr.insert(oyr.end(), row.begin(), row.end());
  }
  // Sinkhorn scaling: rows stay distributions and p(y) becomes uniform under
  // a uniform p(r), matching the label-marginal assumption of the rule.
  const double col_target = static_cast<double>(shape.rooms) / static_cast<double>(n_obj);
  for (int it = 0; it < 500; ++it) {
    for (std::size_t y = 0; y < n_obj; ++y) {
      double c = 0.0;
      for (std::size_t r = 0; r < shape.rooms; ++r) c += oyr[r * n_obj + y];
      for (std::size_t r = 0; r < shape.rooms; ++r) oyr[r * n_obj + y] *= col_target / c;
    }
    for (std::size_t r = 0; r < shape.rooms; ++r) {
      double z = 0.0;
      for (std::size_t y = 0; y < n_obj; ++y) z += oyr[r * n_obj + y];
      for (std::size_t y = 0; y < n_obj; ++y) oyr[r * n_obj + y] /= z;
    }
  }
  // Confusion: a shared keep rate on the diagonal and the remainder on a
  // look-alike given by a fixed-point-free permutation, so p(d) is uniform too.
  std::vector<std::size_t> order(n_obj);
  for (std::size_t k = 0; k < n_obj; ++k) order[k] = k;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> look_alike(n_obj);
  for (std::size_t k = 0; k < n_obj; ++k) look_alike[order[k]] = order[(k + 1) % n_obj];
  const double keep = shape.keep_min + (shape.keep_max - shape.keep_min) * uniform01(rng);
  const double floor = 1e-3;
  std::vector<double> conf;
  for (std::size_t y = 0; y < n_obj; ++y) {
    std::vector<double> row(n_obj, floor);
    row[y] += keep;
    row[look_alike[y]] += 1.0 - keep;
    const double z = 1.0 + floor * static_cast<double>(n_obj);
    for (double v : row) conf.push_back(v / z);
  }
  PriorTable object_given_room("room_object", rooms, objects, true, oyr);
  PriorTable confusion("confusion", objects, objects, true, conf);

  SceneFixture fx;
  fx.scene = segment::make_scene(object_given_room, confusion);
  const std::size_t room = static_cast<std::size_t>(rng() % shape.rooms);
  for (std::size_t j = 0; j < shape.segments; ++j) {
    const std::size_t y = sample_index(rng, object_given_room.row(room));
    const std::size_t d = sample_index(rng, confusion.row(y));
    auto noise = dirichlet(rng, n_obj, 1.0);
    const double peak = shape.peak_min + (shape.peak_max - shape.peak_min) * uniform01(rng);
    std::vector<double> dist(n_obj);
    double sum = 0.0;
    for (std::size_t k = 0; k < n_obj; ++k) sum += dist[k] = (k == d ? peak : 0.0) + (1.0 - peak) * noise[k];
    for (double& p : dist) p /= sum;
    std::string id = "s" + std::to_string(j);
    fx.gold[id] = objects.name(y);
    fx.segments.push_back(segment::make_segment(std::move(id), std::move(dist), 100 + rng() % 900));
  }
  return fx;
}

SceneFixture bathroom_scene(bool uniform_priors) {
  LabelVocab rooms(VocabKind::Room, {"bathroom", "bedroom", "living room"});
  LabelVocab objects(VocabKind::Object, {"bathtub", "curtain", "shower curtain", "bed", "sofa"});
  // p(y | r); rows: bathroom, bedroom, living room.
  std::vector<double> oyr = {
      0.45, 0.04, 0.45, 0.03, 0.03,  //
      0.02, 0.38, 0.02, 0.50, 0.08,  //
      0.02, 0.40, 0.02, 0.06, 0.50,  //
  };
  if (uniform_priors) oyr.assign(oyr.size(), 0.2);
  // p(d | y); rows: true label.
  const std::vector<double> conf = {
      0.90, 0.02, 0.04, 0.02, 0.02,  //
      0.02, 0.86, 0.08, 0.02, 0.02,  //
      0.02, 0.40, 0.54, 0.02, 0.02,  //
      0.02, 0.02, 0.02, 0.90, 0.04,  //
      0.02, 0.02, 0.02, 0.04, 0.90,  //
  };
  SceneFixture fx;
  fx.scene = segment::make_scene(PriorTable("room_object", rooms, objects, true, oyr),
                                 PriorTable("confusion", objects, objects, true, conf));
  fx.segments.push_back(segment::make_segment("tub", {0.92, 0.02, 0.02, 0.02, 0.02}, 4000));
  fx.segments.push_back(segment::make_segment("hanging", {0.02, 0.52, 0.42, 0.02, 0.02}, 2500));
  fx.gold = {{"tub", "bathtub"}, {"hanging", "shower curtain"}};
  return fx;
}

// ---------------------------------------------------------------------------
// Navigation

namespace {

const std::vector<std::string> kRoomTypes = {"bedroom", "bathroom", "kitchen", "living room", "office", "dining room"};
const std::vector<std::string> kGoals = {"bed", "toilet", "tv monitor", "oven", "plant", "sofa", "chair"};

// p(goal present | room type); rows follow kRoomTypes, columns kGoals.
const std::vector<double> kCooccurrence = {
    // bed   toilet  tv     oven   plant  sofa   chair
    0.90, 0.02, 0.30, 0.02, 0.25, 0.05, 0.30,  // bedroom
    0.02, 0.95, 0.02, 0.02, 0.15, 0.02, 0.05,  // bathroom
    0.02, 0.02, 0.05, 0.90, 0.30, 0.02, 0.45,  // kitchen
    0.05, 0.02, 0.80, 0.02, 0.50, 0.90, 0.40,  // living room
    0.05, 0.02, 0.20, 0.02, 0.40, 0.10, 0.80,  // office
    0.02, 0.02, 0.05, 0.05, 0.35, 0.05, 0.90,  // dining room
};

}  // namespace

NavFixture nav_batch(std::uint64_t seed, const NavShape& shape) {
  std::mt19937_64 rng(seed);
  NavFixture fx;
  fx.goals = kGoals;
  fx.priors = PriorTable("nav", LabelVocab(VocabKind::Room, kRoomTypes), LabelVocab(VocabKind::Goal, kGoals), false,
                         kCooccurrence);

  nav::DetectorModel detector;
  detector.true_positive = shape.true_positive;
  detector.false_positive = shape.false_positive;

  for (std::size_t e = 0; e < shape.envs; ++e) {
    const std::size_t n_rooms = shape.min_rooms + rng() % (shape.max_rooms - shape.min_rooms + 1);
    std::vector<nav::Room> rooms;
    std::map<std::string, std::set<std::string>> placements;
    for (std::size_t i = 0; i < n_rooms; ++i) {
      // The first four rooms cover bedroom, bathroom, kitchen and living room.
      const std::size_t t = i < 4 ? i : rng() % kRoomTypes.size();
      nav::Room room;
      room.id = "e" + std::to_string(e) + "r" + std::to_string(i);
      room.type = kRoomTypes[t];
      room.centroid = {20.0 * uniform01(rng), 20.0 * uniform01(rng)};
      for (std::size_t g = 0; g < kGoals.size(); ++g) {
        if (uniform01(rng) < kCooccurrence[t * kGoals.size() + g]) placements[room.id].insert(kGoals[g]);
      }
      rooms.push_back(std::move(room));
    }
    // Shuffle room order so list position carries no type information.
    for (std::size_t i = rooms.size(); i > 1; --i) std::swap(rooms[i - 1], rooms[rng() % i]);
    for (std::size_t i = 0; i + 1 < rooms.size(); ++i) {
      rooms[i].adjacent.push_back(rooms[i + 1].id);
      rooms[i + 1].adjacent.push_back(rooms[i].id);
    }
    fx.envs.emplace_back("env" + std::to_string(e), std::move(rooms), std::move(placements), detector, shape.budget);
  }

  nlohmann::json rules = plausibility_rules(TemplateId::RoomObject, fx.priors);
  for (std::size_t g = 0; g < kGoals.size(); ++g) {
    for (std::size_t t = 0; t < kRoomTypes.size(); ++t) {
      rules.push_back({{"prompt_contains", {"You want to find a " + kGoals[g] + "."}},
                       {"completion", as_completion(kRoomTypes[t])},
                       {"logprob", std::log(kCooccurrence[t * kGoals.size() + g])}});
    }
  }
  fx.mock_lm = {{"default_logprob", MockProvider::kDefaultLogprob}, {"rules", std::move(rules)}};
  return fx;
}

// ---------------------------------------------------------------------------
// Videos

VideoFixture video_task(std::uint64_t seed, const VideoShape& shape) {
  std::mt19937_64 rng(seed);
  const std::vector<std::string> actions = {"background", "add flour", "add egg", "whisk mixture", "pour batter",
                                            "flip pancake"};
  const std::size_t n = actions.size();
  std::vector<std::string> symbols;
  for (const auto& a : actions) symbols.push_back("frame:" + a);

  VideoFixture fx;
  fx.true_theta.assign(n * n, 0.0);
  auto set = [&](std::size_t a, std::size_t b, double p) { fx.true_theta[a * n + b] = p; };
  set(0, 0, 0.70);
  set(0, 1, 0.30);
  for (std::size_t k = 1; k <= 3; ++k) {
    set(k, k, 0.75);
    set(k, k + 1, 0.20);
    set(k, k + 2, 0.05);
  }
  set(4, 4, 0.75);
  set(4, 5, 0.25);
  set(5, 5, 0.80);
  set(5, 0, 0.20);

  const std::size_t m = symbols.size();
  fx.true_eta.assign(n * m, (1.0 - shape.emission_hit) / static_cast<double>(m - 1));
  for (std::size_t y = 0; y < n; ++y) fx.true_eta[y * m + y] = shape.emission_hit;
  fx.true_initial.assign(n, 0.0);
  fx.true_initial[0] = 1.0;

  fx.data.task = "make pancakes";
  fx.data.actions = LabelVocab(VocabKind::Action, actions);
  fx.data.background = 0;
  fx.data.obs_vocab = LabelVocab(VocabKind::Object, symbols);

  const std::size_t total = shape.train + shape.eval;
  for (std::size_t v = 0; v < total; ++v) {
    hmm::Video video;
    video.id = (v < shape.train ? "train" : "eval") + std::to_string(v);
    video.split = v < shape.train ? hmm::Split::Train : hmm::Split::Eval;
    std::size_t y = sample_index(rng, fx.true_initial);
    // The video ends on the first background frame after the last step, so
    // every sampled transition is recorded.
    bool reached_end = false, done = false;
    while (video.labels.size() < shape.max_len) {
      video.labels.push_back(y);
      video.obs.push_back(sample_index(rng, std::span<const double>(fx.true_eta.data() + y * m, m)));
      if (done) break;
      if (y == 5) reached_end = true;
      const std::size_t next = sample_index(rng, std::span<const double>(fx.true_theta.data() + y * n, n));
      done = reached_end && next == 0;
      y = next;
    }
    fx.data.videos.push_back(std::move(video));
  }

  // LM successor beliefs: the true ordering without self-loops, blended with
  // a uniform floor.
  nlohmann::json rules = nlohmann::json::array();
  for (std::size_t a = 0; a < n; ++a) {
    double off = 0.0;
    for (std::size_t b = 0; b < n; ++b) off += b == a ? 0.0 : fx.true_theta[a * n + b];
    std::vector<double> row(n);
    for (std::size_t b = 0; b < n; ++b) {
      const double ordered = b == a ? 0.0 : fx.true_theta[a * n + b] / off;
      row[b] = 0.9 * ordered + 0.1 / static_cast<double>(n);
      rules.push_back({{"prompt_contains", {"The step after " + actions[a] + " can be"}},
                       {"completion", as_completion(actions[b])},
                       {"logprob", std::log(row[b])}});
    }
    fx.lm_rows[actions[a]] = std::move(row);
  }
  fx.mock_lm = {{"default_logprob", MockProvider::kDefaultLogprob}, {"rules", std::move(rules)}};

  // A frequent non-self transition among the ordered steps.
  const std::vector<std::pair<std::size_t, std::size_t>> common = {{1, 2}, {2, 3}, {3, 4}, {4, 5}};
  fx.common_transition = common[rng() % common.size()];
  return fx;
}

// ---------------------------------------------------------------------------
// Files

Kind parse_kind(std::string_view name) {
  if (name == "scene") return Kind::Scene;
  if (name == "nav") return Kind::Nav;
  if (name == "video") return Kind::Video;
  if (name == "all") return Kind::All;
  throw Error(Errc::InvalidInput, "unknown fixture kind '" + std::string(name) + "'");
}

std::vector<std::filesystem::path> gen_fixtures(Kind kind, std::uint64_t seed, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, const nlohmann::json& j) {
    write_json(dir / name, j);
    written.push_back(dir / name);
  };
  // Scene and nav vocabularies overlap ("bathroom", "bed"), so each kind gets
  // its own mock LM.
  auto emit_mock = [&](const std::string& name, const nlohmann::json& rules) {
    emit(name, {{"default_logprob", MockProvider::kDefaultLogprob}, {"rules", rules}});
  };

  if (kind == Kind::Scene || kind == Kind::All) {
    const SceneFixture fx = bathroom_scene(false);
    const SceneFixture extra = random_scene(seed, {3, 4, 4});
    auto scene_json = [](const SceneFixture& s) {
      nlohmann::json segs = nlohmann::json::array();
      for (const auto& seg : s.segments) {
        nlohmann::json dist = nlohmann::json::object();
        for (std::size_t k = 0; k < seg.dist.size(); ++k) dist[s.scene.objects.name(k)] = seg.dist[k];
        segs.push_back({{"id", seg.id}, {"pixel_count", seg.pixel_count}, {"dist", dist}});
      }
      return nlohmann::json{{"segments", segs}, {"gold", s.gold}};
    };
    auto bundle = [](const SceneFixture& s) {
      return nlohmann::json{{"room_object", to_json(s.scene.object_given_room)},
                            {"confusion", to_json(s.scene.confusion)}};
    };
    emit("scene.json", scene_json(fx));
    emit("scene_priors.json", bundle(fx));
    emit("scene_vocab.json", {{"rooms", fx.scene.rooms.names()}, {"objects", fx.scene.objects.names()}});
    emit("scene_random.json", scene_json(extra));
    emit("scene_random_priors.json", bundle(extra));
    nlohmann::json scene_rules = plausibility_rules(TemplateId::RoomObject, fx.scene.object_given_room);
    for (const auto& r : plausibility_rules(TemplateId::ObjectConfusion, fx.scene.confusion)) scene_rules.push_back(r);
    // Chaining baseline: the LM infers a bathroom and reads the curtain as a shower curtain.
    scene_rules.push_back({{"prompt_contains", {"You can see:"}}, {"completion", " bathroom"}, {"logprob", -0.1}});
    scene_rules.push_back({{"prompt_contains", {"looks like curtain is actually"}},
                           {"completion", " shower curtain"},
                           {"logprob", -0.2}});
    for (const auto& obj : fx.scene.objects.names()) {
      scene_rules.push_back({{"prompt_contains", {"looks like " + obj + " is actually"}},
                             {"completion", as_completion(obj)},
                             {"logprob", -1.0}});
    }
    emit_mock("scene_mock_lm.json", scene_rules);
  }

  if (kind == Kind::Nav || kind == Kind::All) {
    const NavFixture fx = nav_batch(seed);
    nlohmann::json envs = nlohmann::json::array();
    for (const auto& e : fx.envs) envs.push_back(to_json(e));
    emit("nav_envs.json", {{"environments", envs}});
    emit("nav_priors.json", to_json(fx.priors));
    emit("nav_vocab.json", {{"rooms", fx.priors.ctx_vocab().names()}, {"goals", fx.goals}});
    {
      std::ofstream out(dir / "nav_goals.txt");
      for (const auto& g : fx.goals) out << g << '\n';
      written.push_back(dir / "nav_goals.txt");
    }
    emit_mock("nav_mock_lm.json", fx.mock_lm.at("rules"));
  }

  if (kind == Kind::Video || kind == Kind::All) {
    const VideoFixture fx = video_task(seed);
    emit("video_data.json", hmm::to_json(fx.data));
    emit("video_prior.json", to_json(build_dirichlet(fx.data.task, fx.data.actions, fx.lm_rows, 10.0)));
    emit("video_vocab.json", {{"task", fx.data.task}, {"actions", fx.data.actions.names()}});
    {
      std::ofstream out(dir / "video_holdout.txt");
      out << fx.data.actions.name(fx.common_transition.first) << '>'
          << fx.data.actions.name(fx.common_transition.second);
      written.push_back(dir / "video_holdout.txt");
    }
    emit_mock("video_mock_lm.json", fx.mock_lm.at("rules"));
  }
  return written;
}

}  // namespace lampp::fixtures
