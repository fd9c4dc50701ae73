#ifndef RELASSAY_GATEWAY_H_
#define RELASSAY_GATEWAY_H_

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>

#include "corpus_io.h"

namespace relassay {

// What the completion is about; HTTP gateways ignore it, the mock oracle and
// scripted test gateways key their behavior on it.
struct SubjectInfo {
  std::string kind;  // binary | graded | pair | exam_generate | exam_binary |
                     // exam_graded | nugget_create | nugget_importance | nugget_assign
  std::string qid;
  std::string doc_a;
  std::string doc_b;
  int count = 0;  // expected item count for list-shaped completions
};

struct CompletionRequest {
  std::string model;
  std::string system_prompt;
  std::string user_prompt;
  double temperature = 0.0;
  int max_tokens = 2048;
  SubjectInfo subject;
};

// Content hash identifying a request; identical requests map to identical keys.
std::string cache_key(const CompletionRequest &req);

class Gateway {
 public:
  virtual ~Gateway() = default;
  virtual std::string complete(const CompletionRequest &req) = 0;
  virtual bool is_offline() const { return false; }
};

struct HttpGatewayConfig {
  std::string base_url;   // e.g. https://api.openai.com/v1 or http://localhost:8080/v1
  std::string api_key;    // bearer credential; empty is a configuration error
  std::string cache_dir;  // empty disables the disk cache
  int max_attempts = 5;
  int backoff_ms = 500;       // doubled per retry; Retry-After takes precedence
  int concurrency = 4;        // bound on in-flight requests
  int timeout_seconds = 120;
};

// Chat-completions client over the de-facto HTTP shape, with a disk cache
// keyed on request content. Safe for concurrent use up to the configured
// parallelism limit.
class HttpGateway : public Gateway {
 public:
  explicit HttpGateway(HttpGatewayConfig config);
  ~HttpGateway() override;
  std::string complete(const CompletionRequest &req) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct MockOracleConfig {
  const Qrels *qrels = nullptr;
  double noise = 0.0;  // in [0,1]; 0 reproduces human labels exactly
  std::uint64_t seed = 0;
};

enum class MockPairOutcome { first, second, tie };

// The qrels-derived oracle behind the mock gateway. Unjudged pairs count as
// grade 0. Total functions; deterministic for a fixed seed.
int mock_binary(const MockOracleConfig &cfg, const std::string &qid, const std::string &doc);
int mock_graded(const MockOracleConfig &cfg, const std::string &qid, const std::string &doc);
MockPairOutcome mock_pair(const MockOracleConfig &cfg, const std::string &qid,
                          const std::string &doc_a, const std::string &doc_b);

// Serves judge-parseable completions from the oracle, keyed on the request's
// SubjectInfo. Never touches the network.
class MockGateway : public Gateway {
 public:
  explicit MockGateway(MockOracleConfig config);
  std::string complete(const CompletionRequest &req) override;
  bool is_offline() const override { return true; }

 private:
  MockOracleConfig config_;
};

}  // namespace relassay

#endif  // RELASSAY_GATEWAY_H_
