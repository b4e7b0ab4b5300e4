#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "lampp/prior.hpp"
#include "lampp/prompt.hpp"

namespace lampp {

// Anything that returns the total log-probability of each completion given a
// prompt. Implementations must return one finite value per completion.
class ScoreProvider {
 public:
  virtual ~ScoreProvider() = default;
  virtual std::vector<double> score(const std::string& prompt, const std::vector<std::string>& completions) = 0;
  virtual std::string describe() const = 0;
};

// Content hash of (prompt, completion): FNV-1a 64 over the two strings
// separated by 0x1f, as 16 lowercase hex digits. Used by the cache and by
// mock fixtures.
std::string score_key(std::string_view prompt, std::string_view completion);

// Pure lookup provider backed by a JSON fixture:
//   { "default_logprob": -20.0,
//     "entries": { "<score_key>": logprob, ... },
//     "rules": [ { "prompt": "...", "prompt_contains": ["..."],
//                  "completion": " x", "logprob": -1.0 }, ... ] }
// Lookup order: entries, then the first matching rule, then the default.
class MockProvider final : public ScoreProvider {
 public:
  static constexpr double kDefaultLogprob = -20.0;

  explicit MockProvider(const nlohmann::json& fixture);
  static std::shared_ptr<MockProvider> from_file(const std::filesystem::path& path);

  std::vector<double> score(const std::string& prompt, const std::vector<std::string>& completions) override;
  std::string describe() const override { return "mock"; }

  double lookup(const std::string& prompt, const std::string& completion) const;
  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  struct Rule {
    std::optional<std::string> prompt;
    std::vector<std::string> contains;
    std::string completion;
    double logprob;
  };
  double default_logprob_ = kDefaultLogprob;
  std::unordered_map<std::string, double> entries_;
  std::vector<Rule> rules_;
  std::atomic<std::size_t> calls_{0};
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds base_backoff{200};
};

// Client for `POST /score` taking {"prompt", "completions"} and answering
// {"logprobs": [...]}.
class HttpProvider final : public ScoreProvider {
 public:
  explicit HttpProvider(std::string base_url, RetryPolicy retry = {});

  std::vector<double> score(const std::string& prompt, const std::vector<std::string>& completions) override;
  std::string describe() const override { return "http:" + base_url_; }

  std::size_t attempts_made() const noexcept { return attempts_.load(); }

 private:
  std::string base_url_;
  RetryPolicy retry_;
  std::atomic<std::size_t> attempts_{0};
};

inline constexpr const char* kLmUrlEnv = "LAMPP_LM_URL";

// Append-only JSON-lines cache, one {"key", "logprob"} record per line. An
// empty path keeps the cache in memory only.
class ScoreCache {
 public:
  ScoreCache() = default;
  explicit ScoreCache(std::filesystem::path path);

  std::optional<double> lookup(const std::string& key) const;
  void insert(const std::string& key, double logprob);
  std::size_t size() const;

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, double> values_;
  std::ofstream out_;
};

struct ScorerStats {
  std::size_t queries = 0;         // prompts scored, hit or miss
  std::size_t provider_calls = 0;  // requests that reached the provider
  std::size_t cache_hits = 0;      // completions served from cache
};

struct ScoreRequest {
  std::string prompt;
  std::vector<std::string> completions;
};

// Cache-fronted scoring client; safe to share across threads.
class Scorer {
 public:
  explicit Scorer(std::shared_ptr<ScoreProvider> provider, std::shared_ptr<ScoreCache> cache = nullptr);

  std::vector<double> score(const std::string& prompt, const std::vector<std::string>& completions);
  // exp(logp) renormalized over the given completions.
  std::vector<double> distribution(const std::string& prompt, const std::vector<std::string>& completions);
  PlausibilityScore plausibility(const std::string& prompt);

  // Scores every request with at most `parallelism` in flight. Results follow
  // request order.
  std::vector<std::vector<double>> score_batch(const std::vector<ScoreRequest>& requests,
                                               std::size_t parallelism = kDefaultParallelism);

  ScorerStats stats() const;
  const ScoreProvider& provider() const { return *provider_; }

  static constexpr std::size_t kDefaultParallelism = 4;

 private:
  std::shared_ptr<ScoreProvider> provider_;
  std::shared_ptr<ScoreCache> cache_;
  std::atomic<std::size_t> queries_{0};
  std::atomic<std::size_t> provider_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
};

std::map<std::string, double> score_completions(Scorer& scorer, TemplateId id, const Slots& slots,
                                                const std::vector<std::string>& candidates,
                                                std::string_view completion_slot = "completion");

std::vector<double> next_token_distribution(Scorer& scorer, TemplateId id, const Slots& slots,
                                            const std::vector<std::string>& candidates,
                                            std::string_view completion_slot = "completion");

// exp(logp - logsumexp(logp)).
std::vector<double> normalize_logprobs(const std::vector<double>& logprobs);

}  // namespace lampp
