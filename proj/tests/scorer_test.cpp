#include <doctest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "lampp/error.hpp"
#include "lampp/prior_build.hpp"
#include "lampp/scorer.hpp"

using namespace lampp;

namespace {

// Local /score endpoint whose behaviour is set per test.
class TestServer {
 public:
  using Handler = std::function<void(const nlohmann::json&, httplib::Response&)>;

  explicit TestServer(Handler h) : handler_(std::move(h)) {
    server_.Post("/score", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits_;
      handler_(nlohmann::json::parse(req.body), res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~TestServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int hits() const { return hits_.load(); }

 private:
  httplib::Server server_;
  Handler handler_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> hits_{0};
};

void reply_lengths(const nlohmann::json& req, httplib::Response& res) {
  nlohmann::json lp = nlohmann::json::array();
  for (const auto& c : req["completions"]) lp.push_back(-static_cast<double>(c.get<std::string>().size()));
  res.set_content(nlohmann::json{{"logprobs", lp}}.dump(), "application/json");
}

RetryPolicy fast_retry() { return {3, std::chrono::milliseconds(1)}; }

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::InvariantViolation;
}

std::filesystem::path temp_path(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("lampp_test_" + name);
  std::filesystem::remove(p);
  return p;
}

}  // namespace

TEST_CASE("score keys are stable FNV-1a hashes") {
  CHECK(score_key("a", "b").size() == 16);
  CHECK(score_key("a", "b") == score_key("a", "b"));
  CHECK(score_key("ab", "") != score_key("a", "b"));
}

TEST_CASE("mock provider lookup order") {
  const std::string prompt = "A kitchen has an oven:";
  const nlohmann::json fx = {
      {"default_logprob", -7.0},
      {"entries", {{score_key(prompt, " plausible"), -0.25}}},
      {"rules",
       {{{"prompt", prompt}, {"completion", " plausible"}, {"logprob", -3.0}},
        {{"prompt", prompt}, {"completion", " implausible"}, {"logprob", -2.0}},
        {{"prompt_contains", {"kitchen"}}, {"completion", " implausible"}, {"logprob", -9.0}}}}};
  MockProvider m(fx);
  CHECK(m.lookup(prompt, " plausible") == -0.25);
  CHECK(m.lookup(prompt, " implausible") == -2.0);
  CHECK(m.lookup("The kitchen", " implausible") == -9.0);
  CHECK(m.lookup("elsewhere", " implausible") == -7.0);
  MockProvider bare(nlohmann::json::object());
  CHECK(bare.lookup("x", " y") == MockProvider::kDefaultLogprob);
}

TEST_CASE("score_completions orders plausible above implausible for a plausible pair") {
  const std::string prompt = "A bathroom has a shower curtain:";
  auto mock = std::make_shared<MockProvider>(nlohmann::json{
      {"rules",
       {{{"prompt", prompt}, {"completion", " plausible"}, {"logprob", std::log(0.9)}},
        {{"prompt", prompt}, {"completion", " implausible"}, {"logprob", std::log(0.1)}}}}});
  Scorer s(mock, std::make_shared<ScoreCache>());
  const auto lp = score_completions(s, TemplateId::RoomObject, {{"r", "bathroom"}, {"y", "shower curtain"}},
                                    plausibility_completions());
  CHECK(lp.at(" plausible") > lp.at(" implausible"));

  SUBCASE("second identical call is served from cache") {
    const auto again = score_completions(s, TemplateId::RoomObject, {{"r", "bathroom"}, {"y", "shower curtain"}},
                                         plausibility_completions());
    CHECK(again == lp);
    CHECK(mock->calls() == 1);
    CHECK(s.stats().provider_calls == 1);
    CHECK(s.stats().cache_hits == 2);
    CHECK(s.stats().queries == 2);
  }
}

TEST_CASE("next-token distributions") {
  auto mock = std::make_shared<MockProvider>(nlohmann::json{
      {"rules",
       {{{"prompt_contains", {"eq"}}, {"completion", " a"}, {"logprob", -1.5}},
        {{"prompt_contains", {"eq"}}, {"completion", " b"}, {"logprob", -1.5}},
        {{"prompt_contains", {"third"}}, {"completion", " a"}, {"logprob", 0.0}},
        {{"prompt_contains", {"third"}}, {"completion", " b"}, {"logprob", -std::log(3.0)}}}}});
  Scorer s(mock);
  const auto eq = s.distribution("eq", {" a", " b"});
  CHECK(eq[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(eq[1] == doctest::Approx(0.5).epsilon(1e-15));
  const auto third = s.distribution("third", {" a", " b"});
  CHECK(third[0] == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(third[1] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(s.distribution("single", {" a"}) == std::vector<double>{1.0});
  CHECK(normalize_logprobs({-1000.0, -1000.0})[0] == doctest::Approx(0.5));
}

TEST_CASE("action ordering distribution over the inventory sums to one") {
  auto mock = std::make_shared<MockProvider>(nlohmann::json::object());
  Scorer s(mock);
  const std::vector<std::string> acts = {" add flour", " add egg", " whisk mixture"};
  const auto p = next_token_distribution(
      s, TemplateId::ActionOrder,
      {{"t", "make pancakes"}, {"Y", "add flour, add egg, whisk mixture"}, {"y", "add flour"}}, acts);
  REQUIRE(p.size() == 3);
  CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("HTTP provider speaks the score protocol") {
  TestServer server(reply_lengths);
  Scorer s(std::make_shared<HttpProvider>(server.url(), fast_retry()));
  const auto lp = s.score("prompt", {" ab", " abcd"});
  CHECK(lp == std::vector<double>{-3.0, -5.0});
  CHECK(server.hits() == 1);
}

TEST_CASE("HTTP provider retries transient failures") {
  std::atomic<int> seen{0};
  TestServer server([&](const nlohmann::json& req, httplib::Response& res) {
    if (seen++ < 2) {
      res.status = 503;
      return;
    }
    reply_lengths(req, res);
  });
  auto http = std::make_shared<HttpProvider>(server.url(), fast_retry());
  Scorer s(http);
  CHECK(s.score("p", {" x"}) == std::vector<double>{-2.0});
  CHECK(http->attempts_made() == 3);
}

TEST_CASE("HTTP provider gives up after bounded retries") {
  TestServer server([](const nlohmann::json&, httplib::Response& res) { res.status = 500; });
  auto http = std::make_shared<HttpProvider>(server.url(), fast_retry());
  Scorer s(http);
  CHECK(code_of([&] { s.score("p", {" x"}); }) == Errc::ScoringUnavailable);
  CHECK(http->attempts_made() == 3);
  CHECK(server.hits() == 3);
}

TEST_CASE("unreachable service is ScoringUnavailable and echoes the prompt") {
  std::string url;
  {
    TestServer gone(reply_lengths);
    url = gone.url();
  }
  Scorer s(std::make_shared<HttpProvider>(url, fast_retry()));
  try {
    s.score("where is the sofa", {" x"});
    FAIL("expected ScoringUnavailable");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ScoringUnavailable);
    CHECK(std::string(e.what()).find("where is the sofa") != std::string::npos);
  }
}

TEST_CASE("malformed responses are protocol violations") {
  SUBCASE("missing candidate") {
    TestServer server([](const nlohmann::json&, httplib::Response& res) {
      res.set_content(R"({"logprobs": [-1.0]})", "application/json");
    });
    Scorer s(std::make_shared<HttpProvider>(server.url(), fast_retry()));
    CHECK(code_of([&] { s.score("p", {" a", " b"}); }) == Errc::ProtocolViolation);
  }
  SUBCASE("wrong shape") {
    TestServer server([](const nlohmann::json&, httplib::Response& res) {
      res.set_content(R"({"scores": [-1.0]})", "application/json");
    });
    Scorer s(std::make_shared<HttpProvider>(server.url(), fast_retry()));
    CHECK(code_of([&] { s.score("p", {" a"}); }) == Errc::ProtocolViolation);
  }
  SUBCASE("non-numeric") {
    TestServer server([](const nlohmann::json&, httplib::Response& res) {
      res.set_content(R"({"logprobs": ["x"]})", "application/json");
    });
    Scorer s(std::make_shared<HttpProvider>(server.url(), fast_retry()));
    CHECK(code_of([&] { s.score("p", {" a"}); }) == Errc::ProtocolViolation);
  }
}

TEST_CASE("persistent cache is transparent and append-only") {
  const auto path = temp_path("cache.jsonl");
  std::vector<double> cold;
  {
    TestServer server(reply_lengths);
    Scorer s(std::make_shared<HttpProvider>(server.url(), fast_retry()), std::make_shared<ScoreCache>(path));
    cold = s.score("p", {" a", " bb"});
    CHECK(server.hits() == 1);
  }
  std::ifstream in(path);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    const auto rec = nlohmann::json::parse(line);
    CHECK(rec.contains("key"));
    CHECK(rec.contains("logprob"));
    ++lines;
  }
  CHECK(lines == 2);

  // Warm cache: the provider is never consulted, even though it would fail.
  TestServer dead([](const nlohmann::json&, httplib::Response& res) { res.status = 500; });
  Scorer warm(std::make_shared<HttpProvider>(dead.url(), fast_retry()), std::make_shared<ScoreCache>(path));
  CHECK(warm.score("p", {" a", " bb"}) == cold);
  CHECK(dead.hits() == 0);
  CHECK(warm.stats().provider_calls == 0);

  // Only the miss goes out, and only the miss is appended.
  TestServer live(reply_lengths);
  Scorer partial(std::make_shared<HttpProvider>(live.url(), fast_retry()), std::make_shared<ScoreCache>(path));
  CHECK(partial.score("p", {" a", " ccc"}) == std::vector<double>{cold[0], -4.0});
  CHECK(ScoreCache(path).size() == 3);
  std::filesystem::remove(path);
}

TEST_CASE("batch scoring preserves request order") {
  TestServer server(reply_lengths);
  Scorer s(std::make_shared<HttpProvider>(server.url(), fast_retry()));
  std::vector<ScoreRequest> reqs;
  for (int i = 0; i < 20; ++i) reqs.push_back({"p" + std::to_string(i), {std::string(i + 1, 'x')}});
  const auto out = s.score_batch(reqs, 4);
  for (int i = 0; i < 20; ++i) CHECK(out[i] == std::vector<double>{-(i + 1.0)});
}

TEST_CASE("prior grids issue one call per cell and none when warm") {
  const LabelVocab rooms(VocabKind::Room, {"kitchen", "bedroom"});
  const LabelVocab objs(VocabKind::Object, {"oven", "bed"});
  auto mock = std::make_shared<MockProvider>(nlohmann::json::object());
  auto cache = std::make_shared<ScoreCache>();
  Scorer cold(mock, cache);
  const auto t = build_plausibility_prior(cold, TemplateId::RoomObject, "room_object", rooms, objs, true);
  CHECK(mock->calls() == 4);
  Scorer warm(mock, cache);
  const auto t2 = build_plausibility_prior(warm, TemplateId::RoomObject, "room_object", rooms, objs, true);
  CHECK(warm.stats().provider_calls == 0);
  CHECK(t2.probs() == t.probs());

  const LabelVocab acts(VocabKind::Action, {"a", "b", "c", "d", "e"});
  Scorer act(mock);
  const std::size_t before = mock->calls();
  const auto prior = build_action_prior(act, "task", acts, 10.0);
  CHECK(mock->calls() - before == 5);
  CHECK(act.stats().queries == 5);
  CHECK(prior.alpha(0, 0) == doctest::Approx(2.0));
}
