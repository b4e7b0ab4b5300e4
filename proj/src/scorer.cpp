#include "lampp/scorer.hpp"

#include <cmath>
#include <cstdio>
#include <thread>

#include <httplib.h>

#include "lampp/error.hpp"
#include "lampp/kernels.hpp"
#include "lampp/parallel.hpp"

namespace lampp {

std::string score_key(std::string_view prompt, std::string_view completion) {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
  };
  mix(prompt);
  mix("\x1f");
  mix(completion);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// MockProvider

MockProvider::MockProvider(const nlohmann::json& fixture) {
  default_logprob_ = fixture.value("default_logprob", kDefaultLogprob);
  if (!std::isfinite(default_logprob_)) throw Error(Errc::InvalidInput, "mock default_logprob must be finite");
  if (auto it = fixture.find("entries"); it != fixture.end()) {
    for (const auto& [key, value] : it->items()) entries_.emplace(key, value.get<double>());
  }
  if (auto it = fixture.find("rules"); it != fixture.end()) {
    for (const auto& r : *it) {
      Rule rule;
      if (r.contains("prompt")) rule.prompt = r.at("prompt").get<std::string>();
      if (r.contains("prompt_contains")) {
        const auto& c = r.at("prompt_contains");
        if (c.is_string()) rule.contains.push_back(c.get<std::string>());
        else rule.contains = c.get<std::vector<std::string>>();
      }
      rule.completion = r.at("completion").get<std::string>();
      rule.logprob = r.at("logprob").get<double>();
      if (!std::isfinite(rule.logprob)) throw Error(Errc::InvalidInput, "mock rule logprob must be finite");
      rules_.push_back(std::move(rule));
    }
  }
}

std::shared_ptr<MockProvider> MockProvider::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::InvalidInput, "cannot open mock LM fixture " + path.string());
  return std::make_shared<MockProvider>(nlohmann::json::parse(in));
}

double MockProvider::lookup(const std::string& prompt, const std::string& completion) const {
  if (auto it = entries_.find(score_key(prompt, completion)); it != entries_.end()) return it->second;
  for (const Rule& rule : rules_) {
    if (rule.completion != completion) continue;
    if (rule.prompt && *rule.prompt != prompt) continue;
    bool all = true;
    for (const auto& needle : rule.contains) {
      if (prompt.find(needle) == std::string::npos) {
        all = false;
        break;
      }
    }
    if (all) return rule.logprob;
  }
  return default_logprob_;
}

std::vector<double> MockProvider::score(const std::string& prompt, const std::vector<std::string>& completions) {
  ++calls_;
  std::vector<double> out;
  out.reserve(completions.size());
  for (const auto& c : completions) out.push_back(lookup(prompt, c));
  return out;
}

// ---------------------------------------------------------------------------
// HttpProvider

HttpProvider::HttpProvider(std::string base_url, RetryPolicy retry) : base_url_(std::move(base_url)), retry_(retry) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
  if (base_url_.empty()) throw Error(Errc::InvalidInput, "empty LM service URL");
  if (retry_.attempts < 1) retry_.attempts = 1;
}

std::vector<double> HttpProvider::score(const std::string& prompt, const std::vector<std::string>& completions) {
  const std::string body = nlohmann::json{{"prompt", prompt}, {"completions", completions}}.dump();
  std::string last_error;
  for (int attempt = 0; attempt < retry_.attempts; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(retry_.base_backoff * (1 << (attempt - 1)));
    ++attempts_;
    httplib::Client client(base_url_);
    client.set_connection_timeout(5);
    client.set_read_timeout(60);
    auto res = client.Post("/score", body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("logprobs") || !reply["logprobs"].is_array()) {
      throw Error(Errc::ProtocolViolation, "response is not {\"logprobs\": [...]}");
    }
    const auto& lp = reply["logprobs"];
    if (lp.size() != completions.size()) {
      throw Error(Errc::ProtocolViolation, "expected " + std::to_string(completions.size()) + " logprobs, got " +
                                               std::to_string(lp.size()));
    }
    std::vector<double> out;
    out.reserve(lp.size());
    for (const auto& v : lp) {
      if (!v.is_number() || !std::isfinite(v.get<double>())) {
        throw Error(Errc::ProtocolViolation, "non-finite logprob in response");
      }
      out.push_back(v.get<double>());
    }
    return out;
  }
  throw Error(Errc::ScoringUnavailable, base_url_ + " failed after " + std::to_string(retry_.attempts) +
                                            " attempts (" + last_error + ") for prompt: " + prompt);
}

// ---------------------------------------------------------------------------
// ScoreCache

ScoreCache::ScoreCache(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.empty()) return;
  if (std::ifstream in(path_); in) {
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto rec = nlohmann::json::parse(line, nullptr, false);
      if (rec.is_discarded() || !rec.contains("key") || !rec.contains("logprob")) {
        throw Error(Errc::InvalidInput, "corrupt cache line in " + path_.string());
      }
      values_.emplace(rec["key"].get<std::string>(), rec["logprob"].get<double>());
    }
  }
  out_.open(path_, std::ios::app);
  if (!out_) throw Error(Errc::InvalidInput, "cannot open cache file " + path_.string());
}

std::optional<double> ScoreCache::lookup(const std::string& key) const {
  std::lock_guard lock(mu_);
  if (auto it = values_.find(key); it != values_.end()) return it->second;
  return std::nullopt;
}

void ScoreCache::insert(const std::string& key, double logprob) {
  std::lock_guard lock(mu_);
  if (!values_.emplace(key, logprob).second) return;
  if (out_.is_open()) {
    out_ << nlohmann::json{{"key", key}, {"logprob", logprob}}.dump() << '\n';
    out_.flush();
  }
}

std::size_t ScoreCache::size() const {
  std::lock_guard lock(mu_);
  return values_.size();
}

// ---------------------------------------------------------------------------
// Scorer

Scorer::Scorer(std::shared_ptr<ScoreProvider> provider, std::shared_ptr<ScoreCache> cache)
    : provider_(std::move(provider)), cache_(std::move(cache)) {
  if (!provider_) throw Error(Errc::InvalidInput, "scorer needs a provider");
}

std::vector<double> Scorer::score(const std::string& prompt, const std::vector<std::string>& completions) {
  if (completions.empty()) throw Error(Errc::InvalidInput, "no completions to score");
  ++queries_;
  std::vector<double> out(completions.size());
  std::vector<std::size_t> missing;
  std::vector<std::string> keys(completions.size());
  for (std::size_t i = 0; i < completions.size(); ++i) {
    keys[i] = score_key(prompt, completions[i]);
    if (cache_) {
      if (auto hit = cache_->lookup(keys[i])) {
        out[i] = *hit;
        ++cache_hits_;
        continue;
      }
    }
    missing.push_back(i);
  }
  if (missing.empty()) return out;

  std::vector<std::string> request;
  request.reserve(missing.size());
  for (std::size_t i : missing) request.push_back(completions[i]);
  ++provider_calls_;
  std::vector<double> got;
  try {
    got = provider_->score(prompt, request);
  } catch (const Error& e) {
    throw Error(e.code(), e.detail() + " (prompt: \"" + prompt + "\")");
  }
  if (got.size() != request.size()) {
    throw Error(Errc::ProtocolViolation, provider_->describe() + " returned the wrong number of logprobs");
  }
  for (std::size_t k = 0; k < missing.size(); ++k) {
    if (!std::isfinite(got[k])) throw Error(Errc::ProtocolViolation, "non-finite logprob for '" + request[k] + "'");
    const std::size_t i = missing[k];
    if (cache_) {
      cache_->insert(keys[i], got[k]);
      out[i] = *cache_->lookup(keys[i]);
    } else {
      out[i] = got[k];
    }
  }
  return out;
}

std::vector<double> normalize_logprobs(const std::vector<double>& logprobs) {
  if (logprobs.empty()) throw Error(Errc::InvalidInput, "cannot normalize an empty candidate set");
  const double z = kernels::log_sum_exp(logprobs);
  std::vector<double> p(logprobs.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += p[i] = std::exp(logprobs[i] - z);
  for (double& v : p) v /= sum;
  return p;
}

std::vector<double> Scorer::distribution(const std::string& prompt, const std::vector<std::string>& completions) {
  return normalize_logprobs(score(prompt, completions));
}

PlausibilityScore Scorer::plausibility(const std::string& prompt) {
  const auto lp = score(prompt, plausibility_completions());
  return {std::exp(lp[0]), std::exp(lp[1])};
}

std::vector<std::vector<double>> Scorer::score_batch(const std::vector<ScoreRequest>& requests,
                                                     std::size_t parallelism) {
  std::vector<std::vector<double>> results(requests.size());
  parallel_for(requests.size(), parallelism,
               [&](std::size_t i) { results[i] = score(requests[i].prompt, requests[i].completions); });
  return results;
}

ScorerStats Scorer::stats() const { return {queries_.load(), provider_calls_.load(), cache_hits_.load()}; }

std::map<std::string, double> score_completions(Scorer& scorer, TemplateId id, const Slots& slots,
                                                const std::vector<std::string>& candidates,
                                                std::string_view completion_slot) {
  const std::string prompt = render_prefix(prompt_template(id), slots, completion_slot);
  const auto lp = scorer.score(prompt, candidates);
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < candidates.size(); ++i) out.emplace(candidates[i], lp[i]);
  return out;
}

std::vector<double> next_token_distribution(Scorer& scorer, TemplateId id, const Slots& slots,
                                            const std::vector<std::string>& candidates,
                                            std::string_view completion_slot) {
  const std::string prompt = render_prefix(prompt_template(id), slots, completion_slot);
  return scorer.distribution(prompt, candidates);
}

}  // namespace lampp
