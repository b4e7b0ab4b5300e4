#include "lampp/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include <json.hpp>

#include "lampp/fixtures.hpp"
#include "lampp/hmm.hpp"
#include "lampp/kernels.hpp"
#include "lampp/nav.hpp"
#include "lampp/parallel.hpp"
#include "lampp/prior.hpp"
#include "lampp/prior_build.hpp"
#include "lampp/prompt.hpp"
#include "lampp/report.hpp"
#include "lampp/scorer.hpp"
#include "lampp/segment.hpp"

namespace lampp::cli {

int exit_code(Errc code) {
  switch (code) {
    case Errc::ScoringUnavailable:
    case Errc::ProtocolViolation:
      return kProvider;
    case Errc::InvariantViolation:
      return kInternal;
    default:
      return kValidation;
  }
}

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::InvalidInput, "cannot open " + path);
  return json::parse(in);
}

void write_json(const std::string& path, const json& j) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(Errc::InvalidInput, "cannot write " + path);
  out << j.dump(2) << '\n';
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::InvalidInput, "cannot open " + path);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Options shared by every subcommand that may talk to an LM.
struct ProviderOpts {
  std::string mock_lm;
  std::string cache;
};

void add_provider_opts(CLI::App* cmd, ProviderOpts& o) {
  cmd->add_option("--mock-lm", o.mock_lm, "Mock LM fixture (JSON) used instead of the LM service");
  cmd->add_option("--cache", o.cache, "Append-only score cache (JSONL)");
}

json provider_config(const ProviderOpts& o) {
  json j = {{"cache", o.cache.empty() ? json(nullptr) : json(o.cache)}};
  if (!o.mock_lm.empty()) {
    j["provider"] = "mock";
    j["mock_lm"] = o.mock_lm;
  } else {
    const char* url = std::getenv(kLmUrlEnv);
    j["provider"] = "http";
    j["url"] = url ? json(url) : json(nullptr);
  }
  return j;
}

std::shared_ptr<Scorer> make_scorer(const ProviderOpts& o) {
  std::shared_ptr<ScoreProvider> provider;
  if (!o.mock_lm.empty()) {
    provider = MockProvider::from_file(o.mock_lm);
  } else if (const char* url = std::getenv(kLmUrlEnv); url && *url) {
    provider = std::make_shared<HttpProvider>(url);
  } else {
    throw Error(Errc::ScoringUnavailable, std::string("no LM provider: pass --mock-lm or set ") + kLmUrlEnv);
  }
  std::shared_ptr<ScoreCache> cache = o.cache.empty() ? nullptr : std::make_shared<ScoreCache>(o.cache);
  return std::make_shared<Scorer>(std::move(provider), std::move(cache));
}

json stats_json(const ScorerStats& s) {
  return {{"queries", s.queries}, {"provider_calls", s.provider_calls}, {"cache_hits", s.cache_hits}};
}

// ---------------------------------------------------------------------------
// priors build

struct PriorsOpts {
  std::string domain;
  std::string vocab;
  std::string out;
  std::string report;
  double lambda = 10.0;
  std::size_t parallelism = Scorer::kDefaultParallelism;
  ProviderOpts provider;
};

LabelVocab vocab_field(const json& j, const char* key, VocabKind kind) {
  if (!j.contains(key)) throw Error(Errc::InvalidInput, std::string("vocab file lacks \"") + key + "\"");
  return LabelVocab(kind, j.at(key).get<std::vector<std::string>>());
}

int cmd_priors_build(const PriorsOpts& o) {
  const auto t0 = Clock::now();
  const json vocab = read_json(o.vocab);
  auto scorer = make_scorer(o.provider);
  json prior;
  std::size_t cells = 0;
  if (o.domain == "room_object" || o.domain == "nav") {
    const bool nav = o.domain == "nav";
    LabelVocab rooms = vocab_field(vocab, "rooms", VocabKind::Room);
    LabelVocab rows = nav ? vocab_field(vocab, "goals", VocabKind::Goal) : vocab_field(vocab, "objects", VocabKind::Object);
    const PriorTable t = build_plausibility_prior(*scorer, TemplateId::RoomObject, o.domain, rooms, rows, !nav,
                                                  o.parallelism);
    cells = rooms.size() * rows.size();
    prior = to_json(t);
  } else if (o.domain == "confusion") {
    LabelVocab objects = vocab_field(vocab, "objects", VocabKind::Object);
    const PriorTable t = build_plausibility_prior(*scorer, TemplateId::ObjectConfusion, "confusion", objects, objects,
                                                  true, o.parallelism);
    cells = objects.size() * objects.size();
    prior = to_json(t);
  } else if (o.domain == "action") {
    const std::string task = vocab.at("task").get<std::string>();
    LabelVocab actions = vocab_field(vocab, "actions", VocabKind::Action);
    cells = actions.size() * actions.size();
    prior = to_json(build_action_prior(*scorer, task, actions, o.lambda, o.parallelism));
  } else {
    throw Error(Errc::InvalidInput, "unknown prior domain '" + o.domain + "'");
  }
  write_json(o.out, prior);

  ExperimentReport report;
  report.command = "priors build";
  report.config = {{"domain", o.domain}, {"vocab", o.vocab}, {"out", o.out}, {"parallelism", o.parallelism}};
  if (o.domain == "action") report.config["lambda"] = o.lambda;
  report.config.update(provider_config(o.provider));
  const auto stats = scorer->stats();
  report.metrics = {{"cells", cells},
                    {"queries", stats.queries},
                    {"scoring_calls", stats.provider_calls},
                    {"cache_hits", stats.cache_hits}};
  report.diagnostics = stats_json(scorer->stats());
  report.wall_clock_seconds = seconds_since(t0);
  if (!o.report.empty()) write_json(o.report, to_json(report));
  else std::cerr << "wrote " << o.out << " (" << scorer->stats().queries << " scoring calls)\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// segment relabel

struct SegmentOpts {
  std::string scene;
  std::vector<std::string> priors;
  bool mc = false;
  bool oracle = false;
  bool base = false;
  std::string out;
  ProviderOpts provider;
};

segment::SceneModel load_scene_model(const std::vector<std::string>& paths) {
  std::optional<PriorTable> room_object;
  std::optional<PriorTable> confusion;
  std::optional<std::vector<double>> room_prior;
  auto take = [&](const json& j) {
    PriorTable t = prior_table_from_json(j);
    if (t.kind() == "room_object") room_object = std::move(t);
    else if (t.kind() == "confusion") confusion = std::move(t);
    else throw Error(Errc::InvalidInput, "unexpected prior kind '" + t.kind() + "' for segmentation");
  };
  for (const auto& p : paths) {
    const json j = read_json(p);
    if (j.contains("room_object") || j.contains("confusion")) {
      if (j.contains("room_object")) take(j.at("room_object"));
      if (j.contains("confusion")) take(j.at("confusion"));
      if (j.contains("room_prior")) room_prior = j.at("room_prior").get<std::vector<double>>();
    } else {
      take(j);
    }
  }
  if (!room_object || !confusion) throw Error(Errc::InvalidInput, "segmentation needs room_object and confusion priors");
  return segment::make_scene(std::move(*room_object), std::move(*confusion), std::move(room_prior));
}

int cmd_segment_relabel(const SegmentOpts& o) {
  const auto t0 = Clock::now();
  if (o.mc && o.base) throw Error(Errc::InvalidInput, "--mc and --base are exclusive");
  const segment::SceneModel scene = load_scene_model(o.priors);
  const segment::SceneInput input = segment::scene_from_json(read_json(o.scene), scene.objects);

  const segment::RelabelResult lampp_result = segment::relabel_scene(scene, input.segments);
  std::vector<std::size_t> labels = lampp_result.labels;
  std::string method = "lampp";
  json diagnostics = json::object();
  std::shared_ptr<Scorer> scorer;
  if (o.mc) {
    scorer = make_scorer(o.provider);
    const segment::ChainingResult mc = segment::mc_relabel(input.segments, scene.rooms, scene.objects, *scorer);
    labels = mc.labels;
    method = "mc";
    diagnostics["mc_room"] = scene.rooms.name(mc.room);
    diagnostics["lm"] = stats_json(scorer->stats());
  } else if (o.base) {
    labels.clear();
    for (const auto& s : input.segments) labels.push_back(s.dstar);
    method = "base";
  }

  json segments = json::array();
  std::vector<segment::LabeledSegment> labeled;
  for (std::size_t i = 0; i < input.segments.size(); ++i) {
    const auto& s = input.segments[i];
    json posterior = json::object();
    for (std::size_t y = 0; y < scene.objects.size(); ++y) posterior[scene.objects.name(y)] = lampp_result.posteriors[i][y];
    segments.push_back({{"id", s.id},
                        {"detected", scene.objects.name(s.dstar)},
                        {"label", scene.objects.name(labels[i])},
                        {"posterior", posterior}});
    labeled.push_back({s.id, scene.objects.name(labels[i]), s.pixel_count});
  }
  json room_posterior = json::object();
  for (std::size_t r = 0; r < scene.rooms.size(); ++r) room_posterior[scene.rooms.name(r)] = lampp_result.room_posterior[r];
  diagnostics["room_posterior"] = room_posterior;

  ExperimentReport report;
  report.command = "segment relabel";
  report.config = {{"scene", o.scene}, {"priors", o.priors}, {"method", method}, {"oracle", o.oracle}};
  if (o.mc) report.config.update(provider_config(o.provider));
  report.metrics = {{"segments", segments}, {"relabeled", 0}};
  std::size_t relabeled = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) relabeled += labels[i] != input.segments[i].dstar;
  report.metrics["relabeled"] = relabeled;
  if (!input.gold.empty()) {
    const segment::IouReport iou = segment::miou(labeled, input.gold);
    report.metrics["miou"] = iou.miou;
    report.metrics["per_class_iou"] = iou.per_class;
    // Categories are the gold classes so runs over the same scene compare.
    for (const auto& [id, label] : input.gold) report.per_category[label] = iou.per_class.at(label);
  }
  if (o.oracle) {
    const segment::RelabelResult exact = segment::brute_force_posterior(scene, input.segments);
    std::size_t agree = 0;
    json oracle = json::array();
    for (std::size_t i = 0; i < input.segments.size(); ++i) {
      agree += exact.labels[i] == lampp_result.labels[i];
      oracle.push_back({{"id", input.segments[i].id}, {"label", scene.objects.name(exact.labels[i])}});
    }
    report.metrics["oracle_agreement"] = static_cast<double>(agree) / static_cast<double>(input.segments.size());
    report.metrics["oracle"] = oracle;
  }
  report.diagnostics = diagnostics;
  report.wall_clock_seconds = seconds_since(t0);
  write_json(o.out, to_json(report));
  return kOk;
}

// ---------------------------------------------------------------------------
// nav run

struct NavOpts {
  std::string env;
  std::string policy = "lampp";
  std::string goals;
  std::size_t episodes = 100;
  std::uint64_t seed = 0;
  double tau = 0.5;
  int k = 5;
  std::string priors;
  std::optional<std::size_t> max_rooms;
  std::size_t workers = 0;
  bool traces = true;
  std::string out;
  ProviderOpts provider;
};

int cmd_nav_run(const NavOpts& o) {
  const auto t0 = Clock::now();
  std::vector<nav::EnvironmentSpec> envs = nav::environments_from_json(read_json(o.env));
  if (o.max_rooms) {
    for (auto& e : envs) e.set_max_rooms(*o.max_rooms);
  }
  const std::vector<std::string> goals = read_lines(o.goals);

  nav::PolicyConfig policy;
  policy.kind = nav::parse_policy(o.policy);
  policy.tau = o.tau;
  policy.k = o.k;
  if (!o.priors.empty()) policy.priors = std::make_shared<const PriorTable>(prior_table_from_json(read_json(o.priors)));
  if (policy.kind == nav::PolicyKind::Mc) policy.scorer = make_scorer(o.provider);
  policy.validate();

  const auto plan = nav::plan_episodes(envs, goals, o.episodes, o.seed);
  const auto episodes = nav::run_batch(policy, envs, plan, o.workers);
  const nav::SuccessMetrics sr = nav::success_metrics(episodes);

  std::size_t queries = 0;
  std::size_t steps = 0;
  for (const auto& e : episodes) {
    queries += e.queries;
    steps += e.steps;
  }

  ExperimentReport report;
  report.command = "nav run";
  report.config = {{"env", o.env},     {"policy", o.policy}, {"goals", o.goals}, {"episodes", o.episodes},
                   {"seed", o.seed},   {"tau", o.tau},       {"k", o.k},         {"priors", o.priors},
                   {"max_rooms", o.max_rooms ? json(*o.max_rooms) : json(nullptr)}};
  if (policy.kind == nav::PolicyKind::Mc) report.config.update(provider_config(o.provider));
  report.metrics = {{"sr_class_avg", sr.class_avg},
                    {"sr_freq_avg", sr.freq_avg},
                    {"episodes", episodes.size()},
                    {"lm_queries", queries},
                    {"mean_steps", static_cast<double>(steps) / static_cast<double>(episodes.size())},
                    {"episodes_per_goal", sr.episodes_per_goal}};
  report.per_category = sr.per_goal;
  if (o.traces) {
    json traces = json::array();
    for (const auto& e : episodes) traces.push_back(nav::to_json(e));
    report.metrics["traces"] = traces;
  }
  report.diagnostics = {{"workers", o.workers == 0 ? default_workers() : o.workers},
                        {"kernels", kernels::isa_name(kernels::active().isa)}};
  report.wall_clock_seconds = seconds_since(t0);
  write_json(o.out, to_json(report));
  return kOk;
}

// ---------------------------------------------------------------------------
// video fit | decode | eval

struct VideoOpts {
  std::string data;
  std::string prior;
  std::string params;
  std::string predictions;
  std::optional<double> lambda;
  bool zero_shot = false;
  std::string holdout;
  std::string split = "eval";
  std::string out;
  std::string report;
  ProviderOpts provider;
};

std::pair<std::size_t, std::size_t> parse_holdout(const std::string& spec, const LabelVocab& actions) {
  const auto gt = spec.find('>');
  if (gt == std::string::npos) throw Error(Errc::InvalidInput, "holdout must look like \"from>to\"");
  return {actions.index(spec.substr(0, gt)), actions.index(spec.substr(gt + 1))};
}

std::vector<const hmm::Video*> select_videos(const hmm::TaskDataset& data, const std::string& split) {
  if (split == "train") return data.split(hmm::Split::Train);
  if (split == "eval") return data.split(hmm::Split::Eval);
  if (split == "all") {
    std::vector<const hmm::Video*> out;
    for (const auto& v : data.videos) out.push_back(&v);
    return out;
  }
  throw Error(Errc::InvalidInput, "unknown split '" + split + "'");
}

int cmd_video_fit(const VideoOpts& o) {
  const auto t0 = Clock::now();
  hmm::TaskDataset data = hmm::dataset_from_json(read_json(o.data));
  DirichletPrior prior = dirichlet_from_json(read_json(o.prior));
  if (o.lambda && !prior.is_flat()) prior = prior.with_lambda(*o.lambda);
  if (prior.actions() != data.actions) throw Error(Errc::InvalidInput, "prior and dataset action vocabularies differ");

  std::size_t held_out = 0;
  if (!o.holdout.empty()) {
    const auto [from, to] = parse_holdout(o.holdout, data.actions);
    const std::size_t before = data.split(hmm::Split::Train).size();
    data = hmm::bias_transition_holdout(data, from, to);
    held_out = before - data.split(hmm::Split::Train).size();
  }
  const hmm::HmmParams params =
      o.zero_shot ? hmm::fit_zero_shot(data.actions, data.obs_vocab, prior, hmm::unordered_frames(data), data.task)
                  : hmm::fit_map(data, prior);
  write_json(o.out, hmm::to_json(params));

  ExperimentReport report;
  report.command = "video fit";
  report.config = {{"data", o.data},
                   {"prior", o.prior},
                   {"lambda", prior.is_flat() ? json("flat") : json(prior.lambda())},
                   {"zero_shot", o.zero_shot},
                   {"holdout", o.holdout},
                   {"out", o.out}};
  report.metrics = {{"train_videos", data.split(hmm::Split::Train).size()},
                    {"held_out_videos", held_out},
                    {"theta", params.theta},
                    {"warnings", params.warnings}};
  report.wall_clock_seconds = seconds_since(t0);
  if (!o.report.empty()) write_json(o.report, to_json(report));
  for (const auto& w : params.warnings) std::cerr << "warning: " << w << '\n';
  return kOk;
}

std::vector<std::vector<std::size_t>> decode_all(const hmm::HmmParams& params,
                                                 const std::vector<const hmm::Video*>& videos) {
  std::vector<std::vector<std::size_t>> out(videos.size());
  parallel_for(videos.size(), 0, [&](std::size_t i) { out[i] = hmm::viterbi_decode(params, videos[i]->obs); });
  return out;
}

hmm::HmmParams load_params(const std::string& path, const hmm::TaskDataset& data) {
  hmm::HmmParams params = hmm::params_from_json(read_json(path));
  if (params.actions != data.actions || params.obs_vocab != data.obs_vocab) {
    throw Error(Errc::InvalidInput, "parameters and dataset vocabularies differ");
  }
  return params;
}

int cmd_video_decode(const VideoOpts& o) {
  const auto t0 = Clock::now();
  const hmm::TaskDataset data = hmm::dataset_from_json(read_json(o.data));
  const hmm::HmmParams params = load_params(o.params, data);
  const auto videos = select_videos(data, o.split);
  const auto decoded = decode_all(params, videos);

  json out_videos = json::array();
  double total_lp = 0.0;
  for (std::size_t i = 0; i < videos.size(); ++i) {
    std::vector<std::string> names;
    for (std::size_t y : decoded[i]) names.push_back(data.actions.name(y));
    total_lp += hmm::sequence_log_prob(params, videos[i]->obs, decoded[i]);
    out_videos.push_back({{"id", videos[i]->id}, {"labels", names}});
  }
  ExperimentReport report;
  report.command = "video decode";
  report.config = {{"data", o.data}, {"params", o.params}, {"split", o.split}};
  report.metrics = {{"task", data.task},
                    {"background", data.actions.name(data.background)},
                    {"videos", out_videos},
                    {"log_prob", total_lp}};
  report.wall_clock_seconds = seconds_since(t0);
  write_json(o.out, to_json(report));
  return kOk;
}

int cmd_video_eval(const VideoOpts& o) {
  const auto t0 = Clock::now();
  if (o.params.empty() == o.predictions.empty()) throw Error(Errc::InvalidInput, "pass exactly one of --params, --predictions");
  const hmm::TaskDataset data = hmm::dataset_from_json(read_json(o.data));
  const auto videos = select_videos(data, o.split);

  hmm::TaskPredictions tp{data.task, data.actions, data.background, {}, {}};
  for (const auto* v : videos) tp.gold[v->id] = v->labels;
  if (!o.params.empty()) {
    const auto decoded = decode_all(load_params(o.params, data), videos);
    for (std::size_t i = 0; i < videos.size(); ++i) tp.predicted[videos[i]->id] = decoded[i];
  } else {
    const json pred = read_json(o.predictions);
    const json& list = pred.contains("metrics") ? pred.at("metrics").at("videos") : pred.at("videos");
    for (const auto& v : list) {
      std::vector<std::size_t> labels;
      for (const auto& name : v.at("labels")) labels.push_back(data.actions.index(name.get<std::string>()));
      tp.predicted[v.at("id").get<std::string>()] = std::move(labels);
    }
  }
  const hmm::RecallReport recall = hmm::step_recall(std::span<const hmm::TaskPredictions>(&tp, 1));

  ExperimentReport report;
  report.command = "video eval";
  report.config = {{"data", o.data},
                   {"params", o.params},
                   {"predictions", o.predictions},
                   {"split", o.split},
                   {"holdout", o.holdout}};
  report.metrics = {{"recall_class_avg", recall.class_avg},
                    {"recall_freq_avg", recall.freq_avg},
                    {"videos_scored", recall.videos_scored},
                    {"per_task", recall.per_task}};
  report.per_category = recall.per_action;
  if (!o.holdout.empty()) {
    const auto [from, to] = parse_holdout(o.holdout, data.actions);
    hmm::TaskPredictions sub{data.task, data.actions, data.background, {}, {}};
    for (const auto* v : videos) {
      if (!hmm::contains_transition(*v, from, to)) continue;
      sub.gold[v->id] = v->labels;
      sub.predicted[v->id] = tp.predicted.at(v->id);
    }
    if (!sub.gold.empty()) {
      const auto held = hmm::step_recall(std::span<const hmm::TaskPredictions>(&sub, 1));
      report.metrics["holdout_recall"] = held.freq_avg;
      report.metrics["holdout_videos"] = held.videos_scored;
    } else {
      report.metrics["holdout_recall"] = nullptr;
      report.metrics["holdout_videos"] = 0;
    }
  }
  report.wall_clock_seconds = seconds_since(t0);
  write_json(o.out, to_json(report));
  return kOk;
}

// ---------------------------------------------------------------------------
// fixtures gen, report delta

struct FixtureOpts {
  std::string kind = "all";
  std::uint64_t seed = 0;
  std::string out;
  std::string report;
  ProviderOpts provider;
};

int cmd_fixtures_gen(const FixtureOpts& o) {
  const auto t0 = Clock::now();
  const auto files = fixtures::gen_fixtures(fixtures::parse_kind(o.kind), o.seed, o.out);
  ExperimentReport report;
  report.command = "fixtures gen";
  report.config = {{"kind", o.kind}, {"seed", o.seed}, {"out", o.out}};
  json names = json::array();
  for (const auto& f : files) names.push_back(f.filename().string());
  report.metrics = {{"files", names}};
  report.wall_clock_seconds = seconds_since(t0);
  if (!o.report.empty()) write_json(o.report, to_json(report));
  return kOk;
}

struct DeltaOpts {
  std::string run;
  std::string baseline;
  std::string out;
  ProviderOpts provider;
};

int cmd_report_delta(const DeltaOpts& o) {
  const auto t0 = Clock::now();
  const ExperimentReport run = report_from_json(read_json(o.run));
  const ExperimentReport baseline = report_from_json(read_json(o.baseline));
  const DeltaTable table = report_delta(run, baseline);
  ExperimentReport report;
  report.command = "report delta";
  report.config = {{"run", o.run}, {"baseline", o.baseline}};
  report.metrics = to_json(table);
  for (const auto& row : table.rows) report.per_category[row.category] = row.delta;
  report.wall_clock_seconds = seconds_since(t0);
  write_json(o.out, to_json(report));
  return kOk;
}

int dispatch(int argc, const char* const* argv) {
  CLI::App app{"LM-derived priors for segmentation, navigation and action segmentation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  PriorsOpts priors;
  auto* priors_cmd = app.add_subcommand("priors", "Build prior tables from LM scores");
  priors_cmd->require_subcommand(1);
  auto* build = priors_cmd->add_subcommand("build", "Score the full query grid and write a prior file");
  build->add_option("--domain", priors.domain)->required()->check(CLI::IsMember({"room_object", "confusion", "nav", "action"}));
  build->add_option("--vocab", priors.vocab)->required()->check(CLI::ExistingFile);
  build->add_option("--out", priors.out)->required();
  build->add_option("--lambda", priors.lambda, "Dirichlet concentration (action domain)");
  build->add_option("--parallelism", priors.parallelism, "Scoring requests in flight")->check(CLI::PositiveNumber);
  build->add_option("--report", priors.report, "Write the run report here");
  add_provider_opts(build, priors.provider);

  SegmentOpts seg;
  auto* seg_cmd = app.add_subcommand("segment", "Semantic segmentation relabeling");
  seg_cmd->require_subcommand(1);
  auto* relabel = seg_cmd->add_subcommand("relabel", "Relabel the segments of one scene");
  relabel->add_option("--scene", seg.scene)->required()->check(CLI::ExistingFile);
  relabel->add_option("--priors", seg.priors, "Prior bundle, or room_object and confusion tables")
      ->required()
      ->check(CLI::ExistingFile);
  relabel->add_flag("--mc", seg.mc, "Use the model-chaining baseline for labels");
  relabel->add_flag("--base", seg.base, "Keep the base model's labels");
  relabel->add_flag("--oracle", seg.oracle, "Also compute exact marginals by enumeration");
  relabel->add_option("--out", seg.out);
  add_provider_opts(relabel, seg.provider);

  NavOpts nav;
  auto* nav_cmd = app.add_subcommand("nav", "Object-goal navigation");
  nav_cmd->require_subcommand(1);
  auto* nav_run = nav_cmd->add_subcommand("run", "Run a batch of episodes");
  nav_run->add_option("--env", nav.env)->required()->check(CLI::ExistingFile);
  nav_run->add_option("--policy", nav.policy)->check(CLI::IsMember({"lampp", "uniform", "mc", "ablation"}));
  nav_run->add_option("--goals", nav.goals)->required()->check(CLI::ExistingFile);
  nav_run->add_option("--episodes", nav.episodes)->check(CLI::PositiveNumber);
  nav_run->add_option("--seed", nav.seed);
  nav_run->add_option("--tau", nav.tau)->check(CLI::Range(0.0, 1.0));
  nav_run->add_option("--k", nav.k)->check(CLI::PositiveNumber);
  nav_run->add_option("--priors", nav.priors)->check(CLI::ExistingFile);
  nav_run->add_option("--max-rooms", nav.max_rooms, "Navigation budget per episode (0 = unlimited)");
  nav_run->add_option("--workers", nav.workers);
  nav_run->add_flag("!--no-traces", nav.traces, "Omit per-episode traces");
  nav_run->add_option("--out", nav.out);
  add_provider_opts(nav_run, nav.provider);

  VideoOpts video;
  auto* video_cmd = app.add_subcommand("video", "Action segmentation HMM");
  video_cmd->require_subcommand(1);
  auto* fit = video_cmd->add_subcommand("fit", "Fit HMM parameters");
  fit->add_option("--data", video.data)->required()->check(CLI::ExistingFile);
  fit->add_option("--prior", video.prior)->required()->check(CLI::ExistingFile);
  fit->add_option("--lambda", video.lambda, "Override the prior's concentration");
  fit->add_flag("--zero-shot", video.zero_shot, "Transitions from the prior alone");
  fit->add_option("--holdout", video.holdout, "Drop training videos containing \"from>to\"");
  fit->add_option("--out", video.out)->required();
  fit->add_option("--report", video.report);
  add_provider_opts(fit, video.provider);
  auto* decode = video_cmd->add_subcommand("decode", "Viterbi-decode a split");
  decode->add_option("--data", video.data)->required()->check(CLI::ExistingFile);
  decode->add_option("--params", video.params)->required()->check(CLI::ExistingFile);
  decode->add_option("--split", video.split)->check(CLI::IsMember({"train", "eval", "all"}));
  decode->add_option("--out", video.out);
  add_provider_opts(decode, video.provider);
  auto* eval = video_cmd->add_subcommand("eval", "Step recall of decoded sequences");
  eval->add_option("--data", video.data)->required()->check(CLI::ExistingFile);
  eval->add_option("--params", video.params)->check(CLI::ExistingFile);
  eval->add_option("--predictions", video.predictions)->check(CLI::ExistingFile);
  eval->add_option("--split", video.split)->check(CLI::IsMember({"train", "eval", "all"}));
  eval->add_option("--holdout", video.holdout, "Also report recall on videos containing \"from>to\"");
  eval->add_option("--out", video.out);
  add_provider_opts(eval, video.provider);

  FixtureOpts fx;
  auto* fx_cmd = app.add_subcommand("fixtures", "Synthetic inputs");
  fx_cmd->require_subcommand(1);
  auto* gen = fx_cmd->add_subcommand("gen", "Write deterministic fixture files");
  gen->add_option("--kind", fx.kind)->check(CLI::IsMember({"scene", "nav", "video", "all"}));
  gen->add_option("--seed", fx.seed);
  gen->add_option("--out", fx.out)->required();
  gen->add_option("--report", fx.report);
  add_provider_opts(gen, fx.provider);

  DeltaOpts delta;
  auto* rep_cmd = app.add_subcommand("report", "Compare run reports");
  rep_cmd->require_subcommand(1);
  auto* delta_cmd = rep_cmd->add_subcommand("delta", "Per-category deltas, best and worst");
  delta_cmd->add_option("--run", delta.run)->required()->check(CLI::ExistingFile);
  delta_cmd->add_option("--baseline", delta.baseline)->required()->check(CLI::ExistingFile);
  delta_cmd->add_option("--out", delta.out);
  add_provider_opts(delta_cmd, delta.provider);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kValidation;
  }

  if (build->parsed()) return cmd_priors_build(priors);
  if (relabel->parsed()) return cmd_segment_relabel(seg);
  if (nav_run->parsed()) return cmd_nav_run(nav);
  if (fit->parsed()) return cmd_video_fit(video);
  if (decode->parsed()) return cmd_video_decode(video);
  if (eval->parsed()) return cmd_video_eval(video);
  if (gen->parsed()) return cmd_fixtures_gen(fx);
  if (delta_cmd->parsed()) return cmd_report_delta(delta);
  return kValidation;
}

}  // namespace

int run(int argc, const char* const* argv) {
  try {
    return dispatch(argc, argv);
  } catch (const Error& e) {
    std::cerr << "lampp: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "lampp: invalid JSON: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "lampp: internal error: " << e.what() << '\n';
    return kInternal;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("lampp");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace lampp::cli
