#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "lampp/cli.hpp"

using namespace lampp;
namespace fs = std::filesystem;

namespace {

// Silences the CLI's own diagnostics while a test runs.
class Quiet {
 public:
  Quiet() : out_(std::cout.rdbuf(sink_.rdbuf())), err_(std::cerr.rdbuf(sink_.rdbuf())) {}
  ~Quiet() {
    std::cout.rdbuf(out_);
    std::cerr.rdbuf(err_);
  }

 private:
  std::ostringstream sink_;
  std::streambuf* out_;
  std::streambuf* err_;
};

int run(std::vector<std::string> args) {
  Quiet q;
  return cli::run(args);
}

struct Workdir {
  fs::path dir;
  Workdir() {
    dir = fs::temp_directory_path() / "lampp_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    REQUIRE(run({"fixtures", "gen", "--kind", "all", "--seed", "3", "--out", dir.string()}) == cli::kOk);
  }
  ~Workdir() { fs::remove_all(dir); }
  std::string operator/(const std::string& f) const { return (dir / f).string(); }
};

nlohmann::json load(const std::string& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

}  // namespace

TEST_CASE("exit code mapping") {
  CHECK(cli::exit_code(Errc::ScoringUnavailable) == cli::kProvider);
  CHECK(cli::exit_code(Errc::ProtocolViolation) == cli::kProvider);
  CHECK(cli::exit_code(Errc::InvariantViolation) == cli::kInternal);
  CHECK(cli::exit_code(Errc::UnknownLabel) == cli::kValidation);
  CHECK(cli::exit_code(Errc::ReportMismatch) == cli::kValidation);
}

TEST_CASE("argument errors and help") {
  CHECK(run({"--help"}) == cli::kOk);
  CHECK(run({"nav", "run"}) == cli::kValidation);
  CHECK(run({"bogus"}) == cli::kValidation);
  CHECK(run({"segment", "relabel", "--scene", "/nonexistent.json", "--priors", "/nonexistent.json"}) ==
        cli::kValidation);
}

TEST_CASE("end-to-end subcommands") {
  Workdir w;

  SUBCASE("priors without any provider is a provider error") {
    unsetenv("LAMPP_LM_URL");
    CHECK(run({"priors", "build", "--domain", "room_object", "--vocab", w / "scene_vocab.json", "--out",
               w / "p.json"}) == cli::kProvider);
  }
  SUBCASE("unreachable service is a provider error") {
    CHECK(setenv("LAMPP_LM_URL", "http://127.0.0.1:9", 1) == 0);
    CHECK(run({"priors", "build", "--domain", "room_object", "--vocab", w / "scene_vocab.json", "--out",
               w / "p.json"}) == cli::kProvider);
    unsetenv("LAMPP_LM_URL");
  }
  SUBCASE("priors build reports its grid size and warm caches skip the provider") {
    const std::vector<std::string> base = {"priors", "build", "--domain", "room_object", "--vocab",
                                           w / "scene_vocab.json", "--mock-lm", w / "scene_mock_lm.json",
                                           "--cache", w / "cache.jsonl", "--out", w / "p.json"};
    auto cold = base, warm = base;
    cold.insert(cold.end(), {"--report", w / "cold.json"});
    warm.insert(warm.end(), {"--report", w / "warm.json"});
    REQUIRE(run(cold) == cli::kOk);
    REQUIRE(run(warm) == cli::kOk);
    const auto c = load(w / "cold.json");
    CHECK(c["metrics"]["cells"] == 15);
    CHECK(c["metrics"]["scoring_calls"] == 15);
    CHECK(load(w / "warm.json")["metrics"]["scoring_calls"] == 0);
  }
  SUBCASE("segment relabel flips the curtain") {
    REQUIRE(run({"segment", "relabel", "--scene", w / "scene.json", "--priors", w / "scene_priors.json", "--out",
                 w / "seg.json"}) == cli::kOk);
    const auto r = load(w / "seg.json");
    CHECK(r["metrics"]["relabeled"] == 1);
    REQUIRE(run({"segment", "relabel", "--scene", w / "scene.json", "--priors", w / "scene_priors.json", "--base",
                 "--out", w / "base.json"}) == cli::kOk);
    REQUIRE(run({"report", "delta", "--run", w / "seg.json", "--baseline", w / "base.json", "--out",
                 w / "delta.json"}) == cli::kOk);
    CHECK(load(w / "delta.json")["metrics"]["best"]["category"] == "shower curtain");
  }
  SUBCASE("mismatched reports") {
    REQUIRE(run({"segment", "relabel", "--scene", w / "scene.json", "--priors", w / "scene_priors.json", "--out",
                 w / "seg.json"}) == cli::kOk);
    REQUIRE(run({"nav", "run", "--env", w / "nav_envs.json", "--policy", "uniform", "--goals", w / "nav_goals.txt",
                 "--episodes", "10", "--out", w / "nav.json"}) == cli::kOk);
    CHECK(run({"report", "delta", "--run", w / "seg.json", "--baseline", w / "nav.json"}) == cli::kValidation);
  }
  SUBCASE("nav run needs priors for the prior-driven policies") {
    CHECK(run({"nav", "run", "--env", w / "nav_envs.json", "--policy", "lampp", "--goals", w / "nav_goals.txt",
               "--episodes", "10"}) == cli::kValidation);
    REQUIRE(run({"nav", "run", "--env", w / "nav_envs.json", "--policy", "lampp", "--goals", w / "nav_goals.txt",
                 "--priors", w / "nav_priors.json", "--episodes", "10", "--out", w / "nav.json"}) == cli::kOk);
    const auto r = load(w / "nav.json");
    CHECK(r["metrics"]["episodes"] == 10);
    CHECK(r["metrics"]["lm_queries"] == 0);
  }
  SUBCASE("video fit, decode and eval") {
    REQUIRE(run({"video", "fit", "--data", w / "video_data.json", "--prior", w / "video_prior.json", "--out",
                 w / "params.json"}) == cli::kOk);
    REQUIRE(run({"video", "decode", "--data", w / "video_data.json", "--params", w / "params.json", "--out",
                 w / "pred.json"}) == cli::kOk);
    REQUIRE(run({"video", "eval", "--data", w / "video_data.json", "--predictions", w / "pred.json", "--out",
                 w / "eval.json"}) == cli::kOk);
    const auto r = load(w / "eval.json");
    CHECK(r["metrics"]["recall_freq_avg"].get<double>() > 0.0);
    CHECK(run({"video", "fit", "--data", w / "video_data.json", "--prior", w / "video_prior.json", "--holdout",
               "nonsense", "--out", w / "p2.json"}) == cli::kValidation);
  }
}
