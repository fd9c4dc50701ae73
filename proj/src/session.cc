#include "session.h"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <thread>

#include "util.h"
#include "json.hpp"

namespace relassay {

namespace fs = std::filesystem;

namespace {

std::string env_or_empty(const char *name) {
  const char *value = std::getenv(name);
  return value == nullptr ? std::string() : std::string(value);
}

void reject_unknown_keys(const nlohmann::json &obj, const std::set<std::string> &known,
                         const std::string &context) {
  for (const auto &[key, value] : obj.items())
    if (known.find(key) == known.end())
      throw ConfigError("unknown config key \"" + key + "\" in " + context);
}

}  // namespace

ToolConfig config_from_json(const std::string &json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ToolConfig cfg;
  reject_unknown_keys(j, {"paths", "gateway", "methods", "run_include", "seeds", "flags"},
                      "config root");
  if (j.contains("paths")) {
    const auto &paths = j.at("paths");
    reject_unknown_keys(paths,
                        {"queries", "passages", "qrels", "runs_dir", "pool", "out_dir",
                         "store", "nuggets_dir", "cache_dir", "prompt_dir"},
                        "paths");
    cfg.queries_path = paths.value("queries", "");
    cfg.passages_path = paths.value("passages", "");
    cfg.qrels_path = paths.value("qrels", "");
    cfg.runs_dir = paths.value("runs_dir", "");
    cfg.pool_path = paths.value("pool", "");
    cfg.out_dir = paths.value("out_dir", cfg.out_dir);
    cfg.store_path = paths.value("store", "");
    cfg.nuggets_dir = paths.value("nuggets_dir", "");
    cfg.cache_dir = paths.value("cache_dir", "");
    cfg.prompt_dir = paths.value("prompt_dir", "");
  }
  if (j.contains("gateway")) {
    const auto &gw = j.at("gateway");
    reject_unknown_keys(gw,
                        {"mode", "base_url", "model", "api_key_env", "temperature",
                         "max_tokens", "concurrency", "max_attempts", "backoff_ms", "mock"},
                        "gateway");
    cfg.gateway_mode = gw.value("mode", cfg.gateway_mode);
    cfg.base_url = gw.value("base_url", "");
    cfg.model = gw.value("model", "");
    cfg.api_key_env = gw.value("api_key_env", cfg.api_key_env);
    cfg.temperature = gw.value("temperature", cfg.temperature);
    cfg.max_tokens = gw.value("max_tokens", cfg.max_tokens);
    cfg.concurrency = gw.value("concurrency", cfg.concurrency);
    cfg.max_attempts = gw.value("max_attempts", cfg.max_attempts);
    cfg.backoff_ms = gw.value("backoff_ms", cfg.backoff_ms);
    if (gw.contains("mock")) {
      const auto &mock = gw.at("mock");
      reject_unknown_keys(mock, {"noise", "seed"}, "gateway.mock");
      cfg.mock_noise = mock.value("noise", cfg.mock_noise);
      cfg.mock_seed = mock.value("seed", cfg.mock_seed);
    }
  }
  if (j.contains("methods")) cfg.methods = j.at("methods").get<std::vector<std::string>>();
  if (j.contains("run_include"))
    cfg.run_include = j.at("run_include").get<std::vector<std::string>>();
  if (j.contains("seeds")) {
    const auto &seeds = j.at("seeds");
    reject_unknown_keys(seeds, {"pairs", "alignment", "mock"}, "seeds");
    cfg.pair_seed = seeds.value("pairs", cfg.pair_seed);
    cfg.alignment_seed = seeds.value("alignment", cfg.alignment_seed);
    if (seeds.contains("mock")) cfg.mock_seed = seeds.at("mock").get<std::uint64_t>();
  }
  if (j.contains("flags")) {
    const auto &flags = j.at("flags");
    reject_unknown_keys(flags,
                        {"gain", "judged_only", "pair_cap", "preference_budget", "k",
                         "persistence", "dq_source"},
                        "flags");
    std::string gain = flags.value("gain", "linear");
    if (gain == "linear")
      cfg.gain = GainVariant::linear;
    else if (gain == "exponential")
      cfg.gain = GainVariant::exponential;
    else
      throw ConfigError("flags.gain must be linear or exponential");
    cfg.judged_only = flags.value("judged_only", cfg.judged_only);
    cfg.alignment_pair_cap = flags.value("pair_cap", cfg.alignment_pair_cap);
    cfg.preference_budget = flags.value("preference_budget", cfg.preference_budget);
    cfg.ndcg_depth = flags.value("k", cfg.ndcg_depth);
    cfg.persistence = flags.value("persistence", cfg.persistence);
    cfg.dq_source = flags.value("dq_source", cfg.dq_source);
  }
  if (cfg.gateway_mode != "mock" && cfg.gateway_mode != "http")
    throw ConfigError("gateway.mode must be mock or http");
  if (cfg.dq_source != "umbrela" && cfg.dq_source != "binary" && cfg.dq_source != "qrels")
    throw ConfigError("flags.dq_source must be umbrela, binary, or qrels");
  if (!(cfg.persistence > 0.0 && cfg.persistence < 1.0))
    throw ConfigError("flags.persistence must be strictly between 0 and 1");
  if (cfg.preference_budget < 1)
    throw ConfigError("flags.preference_budget must be at least 1");
  if (cfg.ndcg_depth < 1) throw ConfigError("flags.k must be at least 1");
  if (cfg.mock_noise < 0.0 || cfg.mock_noise > 1.0)
    throw ConfigError("gateway.mock.noise must be within [0,1]");
  if (cfg.concurrency < 1) throw ConfigError("gateway.concurrency must be at least 1");
  if (cfg.base_url.empty()) cfg.base_url = env_or_empty("RELASSAY_BASE_URL");
  if (cfg.model.empty()) cfg.model = env_or_empty("RELASSAY_MODEL");
  if (cfg.store_path.empty()) cfg.store_path = cfg.out_dir + "/judgments.jsonl";
  if (cfg.nuggets_dir.empty()) cfg.nuggets_dir = cfg.out_dir + "/nuggets";
  if (cfg.cache_dir.empty()) cfg.cache_dir = cfg.out_dir + "/cache";
  return cfg;
}

struct Session::State {
  bool qrels_loaded = false;
  Qrels qrels;
  bool queries_loaded = false;
  QuerySet queries;
  bool passages_loaded = false;
  PassageMap passages;
  PromptLibrary prompts;
  std::unique_ptr<Gateway> gateway;
  std::map<std::string, ExamNuggetSet> exam_sets;
  bool exam_sets_loaded = false;
  std::map<std::string, AutoNuggetSet> autonugget_sets;
  bool autonugget_sets_loaded = false;
};

Session::Session(ToolConfig config) : config_(std::move(config)), state_(new State) {
  state_->prompts = config_.prompt_dir.empty() ? PromptLibrary::builtin()
                                               : PromptLibrary::from_dir(config_.prompt_dir);
}

Session::~Session() = default;

namespace {

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)> &fn) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; i++) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      fn(i);
    }
  };
  std::size_t spawn = std::min<std::size_t>(static_cast<std::size_t>(workers), count);
  std::vector<std::thread> threads;
  threads.reserve(spawn);
  for (std::size_t w = 0; w < spawn; w++) threads.emplace_back(worker);
  for (auto &thread : threads) thread.join();
}

constexpr std::size_t kAppendChunk = 256;

}  // namespace

// ---- shared loading -------------------------------------------------------

namespace {

struct Subject {
  std::string qid;
  std::string doc;
};

}  // namespace

const Qrels &Session::qrels_() {
  if (!state_->qrels_loaded) {
    if (config_.qrels_path.empty()) throw ConfigError("paths.qrels is required for this command");
    state_->qrels = parse_qrels_file(config_.qrels_path);
    state_->qrels_loaded = true;
  }
  return state_->qrels;
}

const QuerySet &Session::queries_() {
  if (!state_->queries_loaded) {
    if (config_.queries_path.empty())
      throw ConfigError("paths.queries is required for this command");
    state_->queries = parse_queries_file(config_.queries_path);
    state_->queries_loaded = true;
  }
  return state_->queries;
}

const PassageMap &Session::passages_() {
  if (!state_->passages_loaded) {
    if (config_.passages_path.empty())
      throw ConfigError("paths.passages is required for this command");
    state_->passages = parse_passages_file(config_.passages_path);
    state_->passages_loaded = true;
  }
  return state_->passages;
}

Gateway *Session::gateway_() {
  if (state_->gateway) return state_->gateway.get();
  if (config_.gateway_mode == "mock") {
    MockOracleConfig mock;
    mock.qrels = &qrels_();
    mock.noise = config_.mock_noise;
    mock.seed = config_.mock_seed;
    state_->gateway = std::make_unique<MockGateway>(mock);
  } else {
    HttpGatewayConfig http;
    http.base_url = config_.base_url;
    http.api_key = env_or_empty(config_.api_key_env.c_str());
    http.cache_dir = config_.cache_dir;
    http.max_attempts = config_.max_attempts;
    http.backoff_ms = config_.backoff_ms;
    http.concurrency = config_.concurrency;
    if (config_.model.empty())
      throw ConfigError("gateway.model (or RELASSAY_MODEL) is required in http mode");
    if (http.api_key.empty())
      throw ConfigError("API key environment variable " + config_.api_key_env + " is not set");
    state_->gateway = std::make_unique<HttpGateway>(http);
  }
  return state_->gateway.get();
}

namespace {

std::string model_name(const ToolConfig &cfg) {
  if (!cfg.model.empty()) return cfg.model;
  return cfg.gateway_mode == "mock" ? "mock-oracle" : "";
}

std::string out_path(const ToolConfig &cfg, const std::string &name) {
  fs::create_directories(cfg.out_dir);
  return (fs::path(cfg.out_dir) / name).string();
}

void write_out(const ToolConfig &cfg, const std::string &name, std::string_view content) {
  write_file(out_path(cfg, name), content);
}

void write_manifest(const ToolConfig &cfg, const PromptLibrary &prompts,
                    const std::string &command, const std::vector<std::string> &outputs) {
  nlohmann::json j;
  j["command"] = command;
  j["version"] = kToolkitVersion;
  j["ts"] = timestamp_utc();
  j["inputs"] = {{"queries", cfg.queries_path}, {"passages", cfg.passages_path},
                 {"qrels", cfg.qrels_path},     {"runs_dir", cfg.runs_dir},
                 {"pool", cfg.pool_path},       {"store", cfg.store_path},
                 {"prompt_dir", cfg.prompt_dir}};
  j["seeds"] = {{"pairs", cfg.pair_seed}, {"alignment", cfg.alignment_seed},
                {"mock", cfg.mock_seed}};
  j["flags"] = {{"gain", cfg.gain == GainVariant::linear ? "linear" : "exponential"},
                {"judged_only", cfg.judged_only},
                {"pair_cap", cfg.alignment_pair_cap},
                {"preference_budget", cfg.preference_budget},
                {"k", cfg.ndcg_depth},
                {"persistence", cfg.persistence},
                {"dq_source", cfg.dq_source}};
  j["gateway"] = {{"mode", cfg.gateway_mode}, {"model", model_name(cfg)}};
  nlohmann::json hashes;
  for (const auto &stage : prompts.stages()) hashes[stage] = prompts.hash(stage);
  j["prompt_hashes"] = hashes;
  j["outputs"] = outputs;
  write_out(cfg, "manifest.json", j.dump(2));
}

std::vector<Subject> build_pool(const ToolConfig &cfg, const Qrels &qrels,
                                const QuerySet &queries, std::vector<std::string> *errors) {
  std::vector<Subject> pool;
  std::set<std::string> missing_queries;
  auto note_missing = [&](const std::string &qid) {
    if (missing_queries.insert(qid).second)
      errors->push_back("no query text for qid " + qid + "; its subjects were skipped");
  };
  if (!cfg.pool_path.empty()) {
    std::size_t line_no = 0;
    for (const auto &line : split_lines(read_file(cfg.pool_path))) {
      line_no++;
      if (trim(line).empty()) continue;
      auto fields = split_whitespace(line);
      if (fields.size() != 2)
        throw ParseError("pool line must be \"qid doc\" at line " + std::to_string(line_no));
      if (queries.count(fields[0]) == 0) {
        note_missing(fields[0]);
        continue;
      }
      pool.push_back({fields[0], fields[1]});
    }
  } else {
    for (const auto &[qid, docs] : qrels.entries) {
      if (queries.count(qid) == 0) {
        note_missing(qid);
        continue;
      }
      for (const auto &[doc, grade] : docs) pool.push_back({qid, doc});
    }
  }
  return pool;
}

}  // namespace

// ---- judging ---------------------------------------------------------------

namespace {

struct JudgeOutcome {
  std::optional<JudgmentRecord> record;
  std::string error;
};

JudgmentRecord base_record(const ToolConfig &cfg, const PromptLibrary &prompts,
                           const std::string &pass, const std::string &stage,
                           const std::string &qid) {
  JudgmentRecord rec;
  rec.method = pass;
  rec.qid = qid;
  rec.kind = payload_kind_for_method(pass);
  rec.model = model_name(cfg);
  rec.prompt_hash = prompts.hash(stage);
  rec.ts = timestamp_utc();
  return rec;
}

// Runs judged subjects through `judge` in deterministic chunks: parallel
// evaluation, ordered append, so an interrupted job loses at most one chunk.
void run_chunked(const ToolConfig &cfg, JudgmentStore *store, std::size_t count,
                 const std::function<JudgeOutcome(std::size_t)> &judge, JudgeStats *stats,
                 std::vector<std::string> *errors) {
  for (std::size_t base = 0; base < count; base += kAppendChunk) {
    std::size_t chunk = std::min(kAppendChunk, count - base);
    std::vector<JudgeOutcome> outcomes(chunk);
    parallel_for(chunk, cfg.concurrency, [&](std::size_t i) {
      outcomes[i] = judge(base + i);
    });
    std::vector<JudgmentRecord> records;
    records.reserve(chunk);
    for (auto &outcome : outcomes) {
      if (outcome.record)
        records.push_back(std::move(*outcome.record));
      else {
        errors->push_back(outcome.error);
        stats->errors++;
      }
    }
    stats->written += store->append(records);
  }
}

std::vector<std::string> labels_from_ints(const std::vector<int> &values) {
  std::vector<std::string> labels;
  labels.reserve(values.size());
  for (int v : values) labels.push_back(std::to_string(v));
  return labels;
}

std::vector<int> ints_from_labels(const std::vector<std::string> &labels) {
  std::vector<int> values;
  values.reserve(labels.size());
  for (const auto &label : labels) {
    long v = 0;
    if (!parse_long(label, &v)) throw ParseError("non-integer exam label: " + label);
    values.push_back(static_cast<int>(v));
  }
  return values;
}

}  // namespace

JudgeStats Session::cmd_judge(const std::string &method_str) {
  auto id = parse_method_id(method_str);
  if (!id) throw ConfigError("unknown method: " + method_str);
  const std::string pass = storage_pass(*id);

  const Qrels &qrels = qrels_();
  const QuerySet &queries = queries_();
  const PassageMap &passages = passages_();
  Gateway *gateway = gateway_();
  JudgeContext ctx{gateway, &state_->prompts, model_name(config_), config_.temperature,
                   config_.max_tokens};

  fs::create_directories(fs::path(config_.store_path).parent_path().empty()
                             ? "."
                             : fs::path(config_.store_path).parent_path().string());
  JudgmentStore store(config_.store_path);
  JudgmentIndex index(store.read_all());

  JudgeStats stats;
  std::vector<std::string> errors;
  std::vector<Subject> pool = build_pool(config_, qrels, queries, &errors);

  auto passage_of = [&](const Subject &s) -> const std::string * {
    auto it = passages.find(s.doc);
    return it == passages.end() ? nullptr : &it->second;
  };

  if (pass == "binary" || pass == "umbrela") {
    const bool graded = pass == "umbrela";
    const std::string stage = graded ? "umbrela" : "binary";
    std::vector<Subject> todo;
    for (const auto &subject : pool) {
      if (index.contains(pass, subject.qid, subject.doc))
        stats.skipped++;
      else
        todo.push_back(subject);
    }
    run_chunked(config_, &store, todo.size(), [&](std::size_t i) -> JudgeOutcome {
      const Subject &s = todo[i];
      const std::string *passage = passage_of(s);
      if (passage == nullptr)
        return {std::nullopt, "no passage text for doc " + s.doc + " (qid " + s.qid + ")"};
      try {
        int value = graded ? judge_graded(ctx, s.qid, queries.at(s.qid), s.doc, *passage)
                           : judge_binary(ctx, s.qid, queries.at(s.qid), s.doc, *passage);
        JudgmentRecord rec = base_record(config_, state_->prompts, pass, stage, s.qid);
        rec.doc = s.doc;
        rec.number = value;
        return {rec, ""};
      } catch (const Error &e) {
        return {std::nullopt, std::string("judgment error for (") + s.qid + ", " + s.doc +
                                  "): " + e.what()};
      }
    }, &stats, &errors);
  } else if (pass == "exam_binary" || pass == "exam_graded") {
    const bool graded = pass == "exam_graded";
    ensure_exam_sets_loaded_(&errors);
    // generate missing nugget sets for pooled queries
    std::set<std::string> pool_qids;
    for (const auto &subject : pool) pool_qids.insert(subject.qid);
    std::vector<std::string> missing;
    for (const auto &qid : pool_qids)
      if (state_->exam_sets.count(qid) == 0) missing.push_back(qid);
    if (!missing.empty()) {
      std::vector<std::optional<ExamNuggetSet>> generated(missing.size());
      std::vector<std::string> generation_errors(missing.size());
      parallel_for(missing.size(), config_.concurrency, [&](std::size_t i) {
        try {
          generated[i] = exam_generate(ctx, missing[i], queries.at(missing[i]));
        } catch (const Error &e) {
          generation_errors[i] = e.what();
        }
      });
      fs::create_directories(config_.nuggets_dir);
      std::ofstream out(fs::path(config_.nuggets_dir) / "exam_nuggets.jsonl", std::ios::app);
      for (std::size_t i = 0; i < missing.size(); i++) {
        if (generated[i]) {
          out << exam_set_to_json(*generated[i]) << '\n';
          state_->exam_sets.emplace(missing[i], std::move(*generated[i]));
        } else {
          errors.push_back("nugget generation failed for qid " + missing[i] + ": " +
                           generation_errors[i]);
          stats.errors++;
        }
      }
    }
    std::vector<Subject> todo;
    for (const auto &subject : pool) {
      if (state_->exam_sets.count(subject.qid) == 0) continue;  // already counted above
      if (index.contains(pass, subject.qid, subject.doc))
        stats.skipped++;
      else
        todo.push_back(subject);
    }
    run_chunked(config_, &store, todo.size(), [&](std::size_t i) -> JudgeOutcome {
      const Subject &s = todo[i];
      const std::string *passage = passage_of(s);
      if (passage == nullptr)
        return {std::nullopt, "no passage text for doc " + s.doc + " (qid " + s.qid + ")"};
      const ExamNuggetSet &set = state_->exam_sets.at(s.qid);
      ExamJudgments judgments = exam_judge(ctx, set, graded, s.qid, s.doc, *passage);
      JudgmentRecord rec = base_record(config_, state_->prompts, pass,
                                       graded ? "exam_graded" : "exam_binary", s.qid);
      rec.doc = s.doc;
      rec.labels = labels_from_ints(judgments.values);
      rec.flags = judgments.flags;
      return {rec, ""};
    }, &stats, &errors);
  } else if (pass == "nuggets") {
    ensure_autonugget_sets_loaded_(&errors);
    std::set<std::string> pool_qids;
    for (const auto &subject : pool) pool_qids.insert(subject.qid);
    std::vector<std::string> missing;
    for (const auto &qid : pool_qids)
      if (state_->autonugget_sets.count(qid) == 0) missing.push_back(qid);
    if (!missing.empty()) {
      // D_q: positively judged docs under the configured seed judgment
      std::map<std::string, std::map<std::string, double>> seed_scores;
      if (config_.dq_source == "qrels") {
        for (const auto &qid : missing)
          if (qrels.entries.count(qid))
            for (const auto &[doc, grade] : qrels.entries.at(qid))
              seed_scores[qid][doc] = grade;
      } else {
        auto records = index.for_method(config_.dq_source);
        if (records.empty())
          throw ConfigError("nugget generation needs a prior " + config_.dq_source +
                            " pass in the store (flags.dq_source); run judge " +
                            config_.dq_source + " first or set dq_source to qrels");
        for (const auto *rec : records) seed_scores[rec->qid][rec->doc] = rec->number;
      }
      std::vector<std::optional<AutoNuggetSet>> generated(missing.size());
      std::vector<std::string> generation_errors(missing.size());
      parallel_for(missing.size(), config_.concurrency, [&](std::size_t i) {
        const std::string &qid = missing[i];
        std::vector<std::pair<std::string, std::string>> relevant;
        auto q = seed_scores.find(qid);
        if (q != seed_scores.end())
          for (const auto &[doc, score] : q->second) {
            if (score <= 0.0) continue;
            auto text = passages.find(doc);
            if (text != passages.end()) relevant.emplace_back(doc, text->second);
          }
        if (relevant.empty()) {
          generation_errors[i] = "no relevant documents with passage text";
          return;
        }
        try {
          generated[i] = autonugget_generate(ctx, qid, queries.at(qid), relevant);
        } catch (const Error &e) {
          generation_errors[i] = e.what();
        }
      });
      fs::create_directories(config_.nuggets_dir);
      std::ofstream out(fs::path(config_.nuggets_dir) / "autonuggets.jsonl", std::ios::app);
      for (std::size_t i = 0; i < missing.size(); i++) {
        if (generated[i]) {
          out << autonugget_set_to_json(*generated[i]) << '\n';
          state_->autonugget_sets.emplace(missing[i], std::move(*generated[i]));
        } else {
          errors.push_back("autonugget generation failed for qid " + missing[i] + ": " +
                           generation_errors[i]);
          stats.errors++;
        }
      }
    }
    std::vector<Subject> todo;
    for (const auto &subject : pool) {
      if (state_->autonugget_sets.count(subject.qid) == 0) continue;
      if (index.contains(pass, subject.qid, subject.doc))
        stats.skipped++;
      else
        todo.push_back(subject);
    }
    run_chunked(config_, &store, todo.size(), [&](std::size_t i) -> JudgeOutcome {
      const Subject &s = todo[i];
      const std::string *passage = passage_of(s);
      if (passage == nullptr)
        return {std::nullopt, "no passage text for doc " + s.doc + " (qid " + s.qid + ")"};
      const AutoNuggetSet &set = state_->autonugget_sets.at(s.qid);
      NuggetAssignment assignment =
          autonugget_assign(ctx, set, s.qid, queries.at(s.qid), s.doc, *passage);
      JudgmentRecord rec = base_record(config_, state_->prompts, pass, "autonugget_assign", s.qid);
      rec.doc = s.doc;
      rec.labels = assignment.labels;
      rec.flags = assignment.flags;
      return {rec, ""};
    }, &stats, &errors);
  } else if (pass == "preferences") {
    std::map<std::string, std::vector<std::string>> docs_by_query;
    for (const auto &subject : pool) docs_by_query[subject.qid].push_back(subject.doc);
    struct PairSubject {
      std::string qid;
      std::string doc_a;
      std::string doc_b;
    };
    std::vector<PairSubject> todo;
    for (auto &[qid, docs] : docs_by_query) {
      std::sort(docs.begin(), docs.end());
      docs.erase(std::unique(docs.begin(), docs.end()), docs.end());
      if (docs.size() < 2) {
        errors.push_back("query " + qid + " has fewer than two pooled documents; skipped");
        stats.errors++;
        continue;
      }
      auto pairs =
          sample_pairs(docs, config_.preference_budget, config_.pair_seed ^ hash64(qid));
      for (const auto &[a, b] : pairs) {
        if (index.contains(pass, qid, pair_subject_key(a, b)))
          stats.skipped++;
        else
          todo.push_back({qid, a, b});
      }
    }
    run_chunked(config_, &store, todo.size(), [&](std::size_t i) -> JudgeOutcome {
      const PairSubject &s = todo[i];
      const std::string *text_a = nullptr;
      const std::string *text_b = nullptr;
      {
        auto it = passages.find(s.doc_a);
        if (it != passages.end()) text_a = &it->second;
        it = passages.find(s.doc_b);
        if (it != passages.end()) text_b = &it->second;
      }
      if (text_a == nullptr || text_b == nullptr)
        return {std::nullopt, "no passage text for pair (" + s.doc_a + ", " + s.doc_b +
                                  ") of qid " + s.qid};
      PreferenceOutcome outcome = judge_pair(ctx, s.qid, queries.at(s.qid), s.doc_a, *text_a,
                                             s.doc_b, *text_b);
      // canonicalize to the lexicographically smaller doc first
      JudgmentRecord rec = base_record(config_, state_->prompts, pass, "pairwise", s.qid);
      bool ordered = s.doc_a <= s.doc_b;
      rec.doc = ordered ? s.doc_a : s.doc_b;
      rec.doc_b = ordered ? s.doc_b : s.doc_a;
      switch (outcome.result) {
        case MockPairOutcome::tie:
          rec.preference = "tie";
          break;
        case MockPairOutcome::first:
          rec.preference = ordered ? "first" : "second";
          break;
        case MockPairOutcome::second:
          rec.preference = ordered ? "second" : "first";
          break;
      }
      rec.flags = outcome.flags;
      return {rec, ""};
    }, &stats, &errors);
  }

  std::vector<std::string> outputs{config_.store_path};
  if (!errors.empty()) {
    std::string log;
    for (const auto &line : errors) log += line + '\n';
    write_out(config_, "judge_errors.log", log);
    outputs.push_back(out_path(config_, "judge_errors.log"));
  }
  write_manifest(config_, state_->prompts, "judge " + method_str, outputs);
  return stats;
}

// the two nugget-set loaders live on Session so cmd_align can reuse them
void Session::ensure_exam_sets_loaded_(std::vector<std::string> *errors) {
  if (state_->exam_sets_loaded) return;
  state_->exam_sets_loaded = true;
  fs::path path = fs::path(config_.nuggets_dir) / "exam_nuggets.jsonl";
  if (!fs::exists(path)) return;
  for (const auto &line : split_lines(read_file(path.string()))) {
    if (trim(line).empty()) continue;
    try {
      ExamNuggetSet set = exam_set_from_json(line);
      state_->exam_sets.emplace(set.qid, std::move(set));
    } catch (const Error &e) {
      if (errors != nullptr) errors->push_back(e.what());
    }
  }
}

void Session::ensure_autonugget_sets_loaded_(std::vector<std::string> *errors) {
  if (state_->autonugget_sets_loaded) return;
  state_->autonugget_sets_loaded = true;
  fs::path path = fs::path(config_.nuggets_dir) / "autonuggets.jsonl";
  if (!fs::exists(path)) return;
  for (const auto &line : split_lines(read_file(path.string()))) {
    if (trim(line).empty()) continue;
    try {
      AutoNuggetSet set = autonugget_set_from_json(line);
      state_->autonugget_sets.emplace(set.qid, std::move(set));
    } catch (const Error &e) {
      if (errors != nullptr) errors->push_back(e.what());
    }
  }
}

// ---- analysis --------------------------------------------------------------

namespace {

std::vector<std::string> expand_pass_to_methods(const std::string &pass) {
  std::vector<std::string> out;
  for (const auto &name : all_method_names())
    if (storage_pass(*parse_method_id(name)) == pass) out.push_back(name);
  return out;
}

PreferenceComparator::PairMap preference_pairs(const JudgmentIndex &index) {
  PreferenceComparator::PairMap pairs;
  for (const auto *rec : index.for_method("preferences")) {
    PreferenceResult result = rec->preference == "first"    ? PreferenceResult::first
                              : rec->preference == "second" ? PreferenceResult::second
                                                            : PreferenceResult::tie;
    pairs[rec->qid][pair_subject_key(rec->doc, rec->doc_b)] = result;
  }
  return pairs;
}

}  // namespace

MethodScores Session::scores_for_method_(MethodId id, const JudgmentIndex &index) {
  MethodScores scores;
  const std::string pass = storage_pass(id);
  auto records = index.for_method(pass);
  if (records.empty())
    throw ConfigError("no judgments in store for method " + std::string(method_name(id)) +
                      " (pass " + pass + ")");
  if (pass == "binary" || pass == "umbrela") {
    for (const auto *rec : records) scores[rec->qid][rec->doc] = rec->number;
  } else if (pass == "exam_binary" || pass == "exam_graded") {
    ExamMode mode = id == MethodId::exam_binary      ? ExamMode::binary
                    : id == MethodId::exam_graded_max ? ExamMode::graded_max
                                                      : ExamMode::graded_mean;
    for (const auto *rec : records)
      scores[rec->qid][rec->doc] = exam_score(ints_from_labels(rec->labels), mode);
  } else if (pass == "nuggets") {
    ensure_autonugget_sets_loaded_(nullptr);
    auto [scope, strict] = nugget_variant(id);
    for (const auto *rec : records) {
      auto set = state_->autonugget_sets.find(rec->qid);
      if (set == state_->autonugget_sets.end()) continue;  // set file missing for this query
      NuggetAssignment assignment;
      assignment.qid = rec->qid;
      assignment.doc = rec->doc;
      assignment.labels = rec->labels;
      scores[rec->qid][rec->doc] = autonugget_score(assignment, set->second, scope, strict);
    }
  } else if (pass == "preferences") {
    std::map<std::string, std::vector<PreferenceOutcome>> outcomes;
    std::map<std::string, std::set<std::string>> docs;
    for (const auto *rec : records) {
      PreferenceOutcome outcome;
      outcome.qid = rec->qid;
      outcome.doc_a = rec->doc;
      outcome.doc_b = rec->doc_b;
      outcome.result = rec->preference == "first"    ? MockPairOutcome::first
                       : rec->preference == "second" ? MockPairOutcome::second
                                                     : MockPairOutcome::tie;
      outcomes[rec->qid].push_back(outcome);
      docs[rec->qid].insert(rec->doc);
      docs[rec->qid].insert(rec->doc_b);
    }
    for (const auto &[qid, list] : outcomes) {
      std::vector<std::string> universe(docs[qid].begin(), docs[qid].end());
      scores[qid] = borda_scores(universe, list);
    }
  }
  return scores;
}

std::vector<std::string> Session::resolve_methods_(const JudgmentIndex &index) const {
  if (!config_.methods.empty()) {
    for (const auto &name : config_.methods)
      if (!parse_method_id(name)) throw ConfigError("unknown method: " + name);
    return config_.methods;
  }
  std::vector<std::string> methods;
  std::set<std::string> passes;
  for (const auto &pass :
       {"binary", "umbrela", "exam_binary", "exam_graded", "nuggets", "preferences"})
    if (!index.for_method(pass).empty()) passes.insert(pass);
  for (const auto &pass : passes)
    for (const auto &name : expand_pass_to_methods(pass)) methods.push_back(name);
  return methods;
}

void Session::cmd_align() {
  const Qrels &qrels = qrels_();
  JudgmentStore store(config_.store_path);
  JudgmentIndex index(store.read_all());
  std::vector<std::string> methods = resolve_methods_(index);
  if (methods.empty())
    throw ConfigError("no judgments in store " + config_.store_path +
                      "; run the judge command first");

  AlignmentOptions options;
  options.preference_pair_cap = config_.alignment_pair_cap;
  options.seed = config_.alignment_seed;

  std::string flat = alignment_flat_header();
  nlohmann::json means;
  std::vector<std::string> outputs;
  for (const auto &name : methods) {
    MethodId id = *parse_method_id(name);
    std::unique_ptr<DocComparator> comparator;
    if (id == MethodId::preferences) {
      auto pairs = preference_pairs(index);
      if (pairs.empty())
        throw ConfigError("no judgments in store for method preferences (pass preferences)");
      comparator = std::make_unique<PreferenceComparator>(std::move(pairs));
    } else {
      comparator = std::make_unique<ScoreComparator>(scores_for_method_(id, index));
    }
    AlignmentReport report = alignment_report(*comparator, qrels, qrels.query_ids(), options);
    std::string file = "alignment_" + name + ".json";
    write_out(config_, file, alignment_report_json(report, name));
    outputs.push_back(out_path(config_, file));
    flat += alignment_flat_rows(report, name);
    means[name] = report.mean_agree();
  }
  write_out(config_, "alignment.csv", flat);
  write_out(config_, "alignment_means.json", means.dump(2));
  outputs.push_back(out_path(config_, "alignment.csv"));
  outputs.push_back(out_path(config_, "alignment_means.json"));
  write_manifest(config_, state_->prompts, "align", outputs);
}

std::vector<RunRanking> Session::load_runs_(std::vector<std::string> *failures,
                                            const Qrels *keep_queries) const {
  if (config_.runs_dir.empty()) throw ConfigError("paths.runs_dir is required for this command");
  if (!fs::is_directory(config_.runs_dir))
    throw ConfigError("runs directory does not exist: " + config_.runs_dir);
  std::vector<std::string> files;
  for (const auto &entry : fs::directory_iterator(config_.runs_dir))
    if (entry.is_regular_file()) files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  std::vector<RunRanking> runs;
  std::set<std::string> include(config_.run_include.begin(), config_.run_include.end());
  for (const auto &file : files) {
    try {
      RunRanking run = parse_run_file(file);
      if (run.queries.empty()) continue;
      if (!include.empty() && include.count(run.tag) == 0) continue;
      // runs often rank far more topics than were judged; keep only the
      // evaluated query set
      if (keep_queries != nullptr)
        std::erase_if(run.queries,
                      [&](const auto &entry) { return !keep_queries->entries.count(entry.first); });
      runs.push_back(std::move(run));
    } catch (const Error &e) {
      failures->push_back(file + ": " + e.what());
    }
  }
  if (runs.empty()) throw ConfigError("no parseable run files under " + config_.runs_dir);
  return runs;
}

std::vector<std::string> Session::cmd_rank_eval() {
  const Qrels &qrels = qrels_();
  std::vector<std::string> failures;
  std::vector<RunRanking> runs = load_runs_(&failures, &qrels);

  std::map<std::string, MethodScores> method_scores;
  // the human-qrels column is always present
  MethodScores human;
  for (const auto &[qid, docs] : qrels.entries)
    for (const auto &[doc, grade] : docs) human[qid][doc] = grade;
  method_scores["human"] = std::move(human);

  JudgmentStore store(config_.store_path);
  JudgmentIndex index(store.read_all());
  std::vector<std::string> methods = index.size() > 0 ? resolve_methods_(index)
                                                      : std::vector<std::string>{};
  for (const auto &name : methods)
    method_scores[name] = scores_for_method_(*parse_method_id(name), index);

  ScoreOptions options;
  options.ndcg_depth = config_.ndcg_depth;
  options.gain = config_.gain;
  options.persistence = config_.persistence;
  options.judged_only = config_.judged_only;
  SystemScoreTable table = score_all(runs, method_scores, qrels, options);
  CorrelationTable corr = correlate(table);

  // system scores: run, gold ndcg, one compatibility column per method
  std::string scores_csv = "run,ndcg10";
  for (const auto &method : table.methods) scores_csv += ",compat_" + method;
  scores_csv += '\n';
  for (const auto &tag : table.run_tags) {
    scores_csv += tag;
    scores_csv += ',';
    scores_csv += format_double(table.mean_ndcg.at(tag));
    for (const auto &method : table.methods) {
      scores_csv += ',';
      scores_csv += format_double(table.mean_compatibility.at(tag).at(method));
    }
    scores_csv += '\n';
  }
  write_out(config_, "system_scores.csv", scores_csv);
  write_out(config_, "correlation.txt", correlation_text(corr));
  write_out(config_, "correlation.csv", correlation_csv(corr));
  write_out(config_, "scatter.csv", scatter_csv(table));
  if (!table.flags.empty()) {
    std::string log;
    for (const auto &line : table.flags) log += line + '\n';
    write_out(config_, "rank_eval_flags.log", log);
  }
  // join alignment means with the correlation table when available
  fs::path means_path = fs::path(config_.out_dir) / "alignment_means.json";
  if (fs::exists(means_path)) {
    auto means_json = nlohmann::json::parse(read_file(means_path.string()));
    std::map<std::string, double> means;
    for (const auto &[method, value] : means_json.items()) means[method] = value.get<double>();
    write_out(config_, "alignment_vs_agreement.csv", alignment_vs_agreement_csv(corr, means));
  }
  if (!failures.empty()) {
    std::string log;
    for (const auto &line : failures) log += line + '\n';
    write_out(config_, "run_parse_failures.log", log);
  }
  write_manifest(config_, state_->prompts, "rank-eval",
                 {out_path(config_, "system_scores.csv"), out_path(config_, "correlation.txt"),
                  out_path(config_, "correlation.csv"), out_path(config_, "scatter.csv")});
  return failures;
}

void Session::cmd_ndcg() {
  const Qrels &qrels = qrels_();
  std::vector<std::string> failures;
  std::vector<RunRanking> runs = load_runs_(&failures, &qrels);
  std::string per_query = "run,qid,ndcg\n";
  std::string summary = "run,mean_ndcg\n";
  for (const auto &run : runs) {
    double sum = 0.0;
    for (const auto &qid : qrels.query_ids()) {
      std::vector<std::string> docs = run.docs(qid);
      if (config_.judged_only) {
        const auto &gold_docs = qrels.entries.at(qid);
        std::erase_if(docs, [&](const std::string &doc) { return gold_docs.count(doc) == 0; });
      }
      std::map<std::string, int> grades(qrels.entries.at(qid).begin(),
                                        qrels.entries.at(qid).end());
      double value =
          docs.empty() ? 0.0 : ndcg_at_k(docs, grades, config_.ndcg_depth, config_.gain);
      sum += value;
      per_query += run.tag + ',' + qid + ',' + format_double(value) + '\n';
    }
    summary +=
        run.tag + ',' +
        format_double(qrels.entries.empty() ? 0.0
                                            : sum / static_cast<double>(qrels.entries.size())) +
        '\n';
  }
  write_out(config_, "ndcg_per_query.csv", per_query);
  write_out(config_, "ndcg.csv", summary);
  write_manifest(config_, state_->prompts, "ndcg",
                 {out_path(config_, "ndcg.csv"), out_path(config_, "ndcg_per_query.csv")});
}

ReportStats Session::cmd_report() {
  const Qrels &qrels = qrels_();
  JudgmentStore store(config_.store_path);
  if (!store.exists())
    throw ConfigError("judgment store not found for replay: " + config_.store_path);
  JudgmentIndex index(store.read_all());
  std::vector<std::string> methods = resolve_methods_(index);
  if (methods.empty()) throw ConfigError("judgment store is empty: " + config_.store_path);

  AlignmentOptions options;
  options.preference_pair_cap = config_.alignment_pair_cap;
  options.seed = config_.alignment_seed;

  ReportStats stats;
  std::string flat = alignment_flat_header();
  nlohmann::json means;
  auto check = [&](bool ok, const std::string &what) {
    if (ok)
      stats.checks_passed++;
    else
      stats.violations.push_back(what);
  };
  for (const auto &name : methods) {
    MethodId id = *parse_method_id(name);
    std::unique_ptr<DocComparator> comparator;
    if (id == MethodId::preferences)
      comparator = std::make_unique<PreferenceComparator>(preference_pairs(index));
    else
      comparator = std::make_unique<ScoreComparator>(scores_for_method_(id, index));
    AlignmentReport report = alignment_report(*comparator, qrels, qrels.query_ids(), options);
    stats.methods_checked++;
    // fractions must sum to one in every present cell
    for (std::size_t t = 0; t < kComparisonTypes; t++) {
      for (const auto *cell : {&report.macro[t], &report.micro[t]}) {
        if (!cell->present) continue;
        double sum = cell->agree + cell->tie + cell->disagree;
        check(std::abs(sum - 1.0) <= 1e-9,
              name + "/" + comparison_name(static_cast<ComparisonType>(t)) +
                  ": fractions sum to " + format_double(sum));
      }
    }
    // per-query pair counts must match the qrels-derived category sizes
    for (const auto &[qid, tallies] : report.per_query) {
      CategoryPartition part = partition(qrels, qid);
      if (part.degenerate()) continue;
      const std::size_t sizes[kComparisonTypes] = {
          part.best.size() * part.unacceptable.size(),
          part.acceptable.size() * part.unacceptable.size(),
          part.best.size() * part.acceptable.size()};
      for (std::size_t t = 0; t < kComparisonTypes; t++) {
        std::size_t expected = sizes[t];
        if (comparator->is_preference())
          expected = std::min(expected, config_.alignment_pair_cap);
        check(tallies[t].pairs() + tallies[t].skipped == expected,
              name + "/" + comparison_name(static_cast<ComparisonType>(t)) + "/" + qid +
                  ": saw " + std::to_string(tallies[t].pairs() + tallies[t].skipped) +
                  " pairs, expected " + std::to_string(expected));
      }
    }
    std::string file = "alignment_" + name + ".json";
    write_out(config_, file, alignment_report_json(report, name));
    flat += alignment_flat_rows(report, name);
    means[name] = report.mean_agree();
  }
  write_out(config_, "alignment.csv", flat);
  write_out(config_, "alignment_means.json", means.dump(2));
  if (!config_.runs_dir.empty()) cmd_rank_eval();

  nlohmann::json consistency;
  consistency["methods_checked"] = stats.methods_checked;
  consistency["checks_passed"] = stats.checks_passed;
  consistency["violations"] = stats.violations;
  write_out(config_, "replay_consistency.json", consistency.dump(2));
  write_manifest(config_, state_->prompts, "report",
                 {out_path(config_, "alignment.csv"),
                  out_path(config_, "replay_consistency.json")});
  return stats;
}

}  // namespace relassay
