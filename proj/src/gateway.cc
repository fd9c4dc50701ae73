#include "gateway.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <sstream>
#include <thread>

#include "util.h"
#include "httplib.h"
#include "json.hpp"

namespace relassay {

std::string cache_key(const CompletionRequest &req) {
  std::string blob;
  blob += req.model;
  blob += '\x1e';
  blob += req.system_prompt;
  blob += '\x1e';
  blob += req.user_prompt;
  blob += '\x1e';
  blob += format_double(req.temperature);
  return sha256_hex(blob);
}

namespace {

struct ParsedUrl {
  std::string scheme_host;  // scheme://host[:port], what httplib::Client takes
  std::string path_prefix;  // leading path, no trailing slash
};

ParsedUrl parse_base_url(const std::string &base_url) {
  auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos)
    throw ConfigError("gateway base URL must include a scheme: " + base_url);
#ifndef RELASSAY_WITH_TLS
  if (base_url.rfind("https://", 0) == 0)
    throw ConfigError("this build has no TLS support; use an http:// base URL or rebuild "
                      "with OpenSSL available");
#endif
  auto path_start = base_url.find('/', scheme_end + 3);
  ParsedUrl out;
  if (path_start == std::string::npos) {
    out.scheme_host = base_url;
  } else {
    out.scheme_host = base_url.substr(0, path_start);
    out.path_prefix = base_url.substr(path_start);
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
  }
  return out;
}

// bounded-concurrency gate
class Semaphore {
 public:
  explicit Semaphore(int count) : count_(count) {}
  void acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return count_ > 0; });
    count_--;
  }
  void release() {
    std::lock_guard lock(mutex_);
    count_++;
    cv_.notify_one();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int count_;
};

}  // namespace

struct HttpGateway::Impl {
  HttpGatewayConfig config;
  ParsedUrl url;
  Semaphore gate;
  std::mutex cache_mutex;
  std::atomic<std::uint64_t> tmp_counter{0};

  explicit Impl(HttpGatewayConfig cfg)
      : config(std::move(cfg)), url(parse_base_url(config.base_url)),
        gate(std::max(1, config.concurrency)) {}

  std::string cache_path(const std::string &key) const {
    return (std::filesystem::path(config.cache_dir) / (key + ".json")).string();
  }

  std::optional<std::string> cache_lookup(const CompletionRequest &req, const std::string &key) {
    if (config.cache_dir.empty()) return std::nullopt;
    std::string path = cache_path(key);
    if (!std::filesystem::exists(path)) return std::nullopt;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(path));
    } catch (const std::exception &) {
      return std::nullopt;  // truncated write from an interrupted job; refetch
    }
    if (j.value("model", "") != req.model || j.value("system", "") != req.system_prompt ||
        j.value("user", "") != req.user_prompt)
      return std::nullopt;
    if (!j.contains("response")) return std::nullopt;
    return j.at("response").get<std::string>();
  }

  void cache_store(const CompletionRequest &req, const std::string &key,
                   const std::string &response) {
    if (config.cache_dir.empty()) return;
    std::filesystem::create_directories(config.cache_dir);
    nlohmann::json j;
    j["model"] = req.model;
    j["system"] = req.system_prompt;
    j["user"] = req.user_prompt;
    j["temperature"] = req.temperature;
    j["response"] = response;
    std::string path = cache_path(key);
    std::string tmp = path + ".tmp" + std::to_string(tmp_counter.fetch_add(1));
    std::lock_guard lock(cache_mutex);
    write_file(tmp, j.dump());
    std::filesystem::rename(tmp, path);
  }

  std::string fetch(const CompletionRequest &req) {
    nlohmann::json body;
    body["model"] = req.model;
    body["messages"] = nlohmann::json::array();
    if (!req.system_prompt.empty())
      body["messages"].push_back({{"role", "system"}, {"content", req.system_prompt}});
    body["messages"].push_back({{"role", "user"}, {"content", req.user_prompt}});
    body["temperature"] = req.temperature;
    body["max_tokens"] = req.max_tokens;
    std::string payload = body.dump();
    std::string endpoint = url.path_prefix + "/chat/completions";

    std::string last_error;
    for (int attempt = 1; attempt <= config.max_attempts; attempt++) {
      if (attempt > 1) {
        int wait_ms = config.backoff_ms << (attempt - 2);
        std::this_thread::sleep_for(std::chrono::milliseconds(wait_ms));
      }
      httplib::Client client(url.scheme_host);
      client.set_connection_timeout(config.timeout_seconds, 0);
      client.set_read_timeout(config.timeout_seconds, 0);
      client.set_bearer_token_auth(config.api_key);
      auto res = client.Post(endpoint, payload, "application/json");
      if (!res) {
        last_error = "connection failure (" + httplib::to_string(res.error()) + ")";
        continue;
      }
      if (res->status == 200) {
        nlohmann::json reply;
        try {
          reply = nlohmann::json::parse(res->body);
          return reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception &e) {
          throw NetworkError(std::string("malformed completion response: ") + e.what());
        }
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP status " + std::to_string(res->status);
        if (res->has_header("Retry-After")) {
          long wait_s = 0;
          if (parse_long(res->get_header_value("Retry-After"), &wait_s) && wait_s > 0)
            std::this_thread::sleep_for(std::chrono::seconds(std::min(wait_s, 30L)));
        }
        continue;
      }
      throw NetworkError("completion request rejected with HTTP status " +
                         std::to_string(res->status) + ": " + res->body);
    }
    throw NetworkError("completion request failed after " +
                       std::to_string(config.max_attempts) + " attempts: " + last_error);
  }
};

HttpGateway::HttpGateway(HttpGatewayConfig config) {
  if (config.base_url.empty()) throw ConfigError("gateway base URL is not configured");
  if (config.api_key.empty()) throw ConfigError("gateway API key is not configured");
  impl_ = std::make_unique<Impl>(std::move(config));
}

HttpGateway::~HttpGateway() = default;

std::string HttpGateway::complete(const CompletionRequest &req) {
  std::string key = cache_key(req);
  if (auto hit = impl_->cache_lookup(req, key)) return *hit;
  impl_->gate.acquire();
  std::string response;
  try {
    response = impl_->fetch(req);
  } catch (...) {
    impl_->gate.release();
    throw;
  }
  impl_->gate.release();
  impl_->cache_store(req, key, response);
  return response;
}

namespace {

// one deterministic draw per (seed, kind, unordered subject)
double noise_draw(const MockOracleConfig &cfg, const std::string &kind, const std::string &qid,
                  const std::string &subject) {
  std::uint64_t h = hash64(kind + "\x1f" + qid + "\x1f" + subject);
  std::uint64_t state = cfg.seed ^ h;
  return static_cast<double>(splitmix64(&state) >> 11) * 0x1.0p-53;
}

std::uint64_t alt_draw(const MockOracleConfig &cfg, const std::string &kind,
                       const std::string &qid, const std::string &subject) {
  std::uint64_t h = hash64("alt\x1f" + kind + "\x1f" + qid + "\x1f" + subject);
  std::uint64_t state = cfg.seed ^ h;
  return splitmix64(&state);
}

constexpr int kGradedMax = 3;

}  // namespace

int mock_binary(const MockOracleConfig &cfg, const std::string &qid, const std::string &doc) {
  int label = cfg.qrels->grade_or_zero(qid, doc) > 0 ? 1 : 0;
  if (cfg.noise > 0.0 && noise_draw(cfg, "binary", qid, doc) < cfg.noise) label = 1 - label;
  return label;
}

int mock_graded(const MockOracleConfig &cfg, const std::string &qid, const std::string &doc) {
  int grade = std::min(cfg.qrels->grade_or_zero(qid, doc), kGradedMax);
  if (cfg.noise > 0.0 && noise_draw(cfg, "graded", qid, doc) < cfg.noise) {
    int offset = 1 + static_cast<int>(alt_draw(cfg, "graded", qid, doc) % kGradedMax);
    grade = (grade + offset) % (kGradedMax + 1);
  }
  return grade;
}

MockPairOutcome mock_pair(const MockOracleConfig &cfg, const std::string &qid,
                          const std::string &doc_a, const std::string &doc_b) {
  // Work in canonical (unordered) space so judging (b,a) is the exact mirror.
  const bool swapped = doc_a > doc_b;
  const std::string &c1 = swapped ? doc_b : doc_a;
  const std::string &c2 = swapped ? doc_a : doc_b;
  int g1 = cfg.qrels->grade_or_zero(qid, c1);
  int g2 = cfg.qrels->grade_or_zero(qid, c2);
  int outcome = g1 > g2 ? 0 : g1 < g2 ? 1 : 2;  // first | second | tie
  if (cfg.noise > 0.0) {
    std::string subject = pair_subject_key(doc_a, doc_b);
    if (noise_draw(cfg, "pair", qid, subject) < cfg.noise) {
      int rotate = 1 + static_cast<int>(alt_draw(cfg, "pair", qid, subject) % 2);
      outcome = (outcome + rotate) % 3;
    }
  }
  if (swapped && outcome != 2) outcome ^= 1;
  return static_cast<MockPairOutcome>(outcome);
}

MockGateway::MockGateway(MockOracleConfig config) : config_(config) {
  if (config_.qrels == nullptr) throw ConfigError("mock gateway requires qrels");
  if (config_.noise < 0.0 || config_.noise > 1.0)
    throw ConfigError("mock noise rate must be within [0,1]");
}

std::string MockGateway::complete(const CompletionRequest &req) {
  const SubjectInfo &s = req.subject;
  if (s.kind == "binary") return std::to_string(mock_binary(config_, s.qid, s.doc_a));
  if (s.kind == "graded") return std::to_string(mock_graded(config_, s.qid, s.doc_a));
  if (s.kind == "pair") {
    // position-aware: equal relevance answers "A" both times, which the
    // swap protocol resolves to a tie
    MockPairOutcome outcome = mock_pair(config_, s.qid, s.doc_a, s.doc_b);
    return outcome == MockPairOutcome::second ? "B" : "A";
  }
  if (s.kind == "exam_generate") {
    std::ostringstream out;
    for (int i = 1; i <= s.count; i++)
      out << i << ". What is aspect " << i << " of the topic (" << s.qid << ")?\n";
    return out.str();
  }
  if (s.kind == "exam_binary") {
    int label = config_.qrels->grade_or_zero(s.qid, s.doc_a) > 0 ? 1 : 0;
    std::ostringstream out;
    for (int i = 0; i < s.count; i++) out << label << '\n';
    return out.str();
  }
  if (s.kind == "exam_graded") {
    int grade = std::min(1 + config_.qrels->grade_or_zero(s.qid, s.doc_a), 5);
    std::ostringstream out;
    for (int i = 0; i < s.count; i++) out << grade << '\n';
    return out.str();
  }
  if (s.kind == "nugget_create") {
    std::ostringstream out;
    for (int i = 1; i <= 5; i++) out << "fact " << i << " about topic " << s.qid << '\n';
    return out.str();
  }
  if (s.kind == "nugget_importance") {
    std::ostringstream out;
    for (int i = 0; i < s.count; i++) out << (i % 2 == 0 ? "vital" : "okay") << '\n';
    return out.str();
  }
  if (s.kind == "nugget_assign") {
    int grade = config_.qrels->grade_or_zero(s.qid, s.doc_a);
    const char *label = grade >= 2 ? "support" : grade == 1 ? "partial_support" : "not_support";
    std::ostringstream out;
    for (int i = 0; i < s.count; i++) out << label << '\n';
    return out.str();
  }
  throw InvalidInput("mock gateway cannot serve completion kind: " + s.kind);
}

}  // namespace relassay
