// relassay command line: judge / align / rank-eval / ndcg / report over the
// shared library's C interface.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "relassay.h"

namespace {

using nlohmann::json;

struct CommonFlags {
  std::string config_path;
  std::string queries, passages, qrels, runs_dir, pool;
  std::string out_dir, store, cache_dir, nuggets_dir, prompt_dir;
  std::string mode, base_url, model, api_key_env, gain, dq_source;
  std::vector<std::string> methods, run_include;
  double noise = 0.0, temperature = 0.0, persistence = 0.9;
  std::uint64_t mock_seed = 0, pair_seed = 0, alignment_seed = 0;
  std::size_t pair_cap = 0, budget = 0, k = 0;
  int concurrency = 0;
  bool judged_only = false;
};

void add_common_flags(CLI::App *cmd, CommonFlags *flags) {
  cmd->add_option("--config", flags->config_path, "JSON config file; flags override its values");
  cmd->add_option("--queries", flags->queries, "query file (qid<TAB>text)");
  cmd->add_option("--passages", flags->passages, "passage file (doc<TAB>text)");
  cmd->add_option("--qrels", flags->qrels, "TREC qrels file");
  cmd->add_option("--runs-dir", flags->runs_dir, "directory of TREC run files");
  cmd->add_option("--pool", flags->pool, "explicit subject pool file (qid doc per line)");
  cmd->add_option("--out", flags->out_dir, "output directory");
  cmd->add_option("--store", flags->store, "judgment store path");
  cmd->add_option("--cache-dir", flags->cache_dir, "completion cache directory");
  cmd->add_option("--nuggets-dir", flags->nuggets_dir, "nugget set directory");
  cmd->add_option("--prompt-dir", flags->prompt_dir, "prompt asset directory");
  cmd->add_option("--gateway", flags->mode, "gateway mode: mock or http");
  cmd->add_option("--base-url", flags->base_url, "chat-completions base URL");
  cmd->add_option("--model", flags->model, "model name");
  cmd->add_option("--api-key-env", flags->api_key_env, "env var holding the API key");
  cmd->add_option("--noise", flags->noise, "mock oracle noise rate in [0,1]");
  cmd->add_option("--mock-seed", flags->mock_seed, "mock oracle seed");
  cmd->add_option("--concurrency", flags->concurrency, "max in-flight gateway requests");
  cmd->add_option("--temperature", flags->temperature, "sampling temperature");
  cmd->add_option("--methods", flags->methods, "methods to analyze")->delimiter(',');
  cmd->add_option("--run-include", flags->run_include, "only these run tags")->delimiter(',');
  cmd->add_option("--pair-seed", flags->pair_seed, "preference pair sampling seed");
  cmd->add_option("--alignment-seed", flags->alignment_seed, "alignment pair-cap seed");
  cmd->add_option("--budget", flags->budget, "preference budget P (max P*n pairs per query)");
  cmd->add_option("--pair-cap", flags->pair_cap, "alignment pair cap per query (preferences)");
  cmd->add_option("--k", flags->k, "nDCG depth");
  cmd->add_option("--persistence", flags->persistence, "RBO persistence p");
  cmd->add_option("--gain", flags->gain, "nDCG gain: linear or exponential");
  cmd->add_flag("--judged-only", flags->judged_only, "drop gold-unjudged docs from runs");
  cmd->add_option("--dq-source", flags->dq_source,
                  "relevant-doc source for nugget generation: umbrela, binary, or qrels");
}

json load_config_file(const std::string &path) {
  if (path.empty()) return json::object();
  FILE *f = std::fopen(path.c_str(), "rb");
  if (f == nullptr) {
    std::fprintf(stderr, "error: cannot open config file %s\n", path.c_str());
    std::exit(1);
  }
  std::string text;
  char buf[4096];
  size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) text.append(buf, n);
  std::fclose(f);
  json parsed = json::parse(text, nullptr, false);
  if (parsed.is_discarded()) {
    std::fprintf(stderr, "error: config file %s is not valid JSON\n", path.c_str());
    std::exit(1);
  }
  return parsed;
}

// flags override the config file; only explicitly passed options are applied
json build_config(const CLI::App &cmd, const CommonFlags &flags) {
  json cfg = load_config_file(flags.config_path);
  auto passed = [&](const std::string &name) { return cmd.count(name) > 0; };
  auto set_path = [&](const std::string &flag, const char *key, const std::string &value) {
    if (passed(flag)) cfg["paths"][key] = value;
  };
  set_path("--queries", "queries", flags.queries);
  set_path("--passages", "passages", flags.passages);
  set_path("--qrels", "qrels", flags.qrels);
  set_path("--runs-dir", "runs_dir", flags.runs_dir);
  set_path("--pool", "pool", flags.pool);
  set_path("--out", "out_dir", flags.out_dir);
  set_path("--store", "store", flags.store);
  set_path("--cache-dir", "cache_dir", flags.cache_dir);
  set_path("--nuggets-dir", "nuggets_dir", flags.nuggets_dir);
  set_path("--prompt-dir", "prompt_dir", flags.prompt_dir);
  if (passed("--gateway")) cfg["gateway"]["mode"] = flags.mode;
  if (passed("--base-url")) cfg["gateway"]["base_url"] = flags.base_url;
  if (passed("--model")) cfg["gateway"]["model"] = flags.model;
  if (passed("--api-key-env")) cfg["gateway"]["api_key_env"] = flags.api_key_env;
  if (passed("--noise")) cfg["gateway"]["mock"]["noise"] = flags.noise;
  if (passed("--mock-seed")) cfg["gateway"]["mock"]["seed"] = flags.mock_seed;
  if (passed("--concurrency")) cfg["gateway"]["concurrency"] = flags.concurrency;
  if (passed("--temperature")) cfg["gateway"]["temperature"] = flags.temperature;
  if (passed("--methods")) cfg["methods"] = flags.methods;
  if (passed("--run-include")) cfg["run_include"] = flags.run_include;
  if (passed("--pair-seed")) cfg["seeds"]["pairs"] = flags.pair_seed;
  if (passed("--alignment-seed")) cfg["seeds"]["alignment"] = flags.alignment_seed;
  if (passed("--budget")) cfg["flags"]["preference_budget"] = flags.budget;
  if (passed("--pair-cap")) cfg["flags"]["pair_cap"] = flags.pair_cap;
  if (passed("--k")) cfg["flags"]["k"] = flags.k;
  if (passed("--persistence")) cfg["flags"]["persistence"] = flags.persistence;
  if (passed("--gain")) cfg["flags"]["gain"] = flags.gain;
  if (passed("--judged-only")) cfg["flags"]["judged_only"] = flags.judged_only;
  if (passed("--dq-source")) cfg["flags"]["dq_source"] = flags.dq_source;
  return cfg;
}

int status_to_exit(relassay_status status) {
  if (status == RELASSAY_OK) return 0;
  if (status == RELASSAY_ERR_PARTIAL) {
    std::fprintf(stderr, "partial: %s\n", relassay_last_error());
    return 2;
  }
  std::fprintf(stderr, "error: %s\n", relassay_last_error());
  return 1;
}

int with_session(const CLI::App &cmd, const CommonFlags &flags,
                 relassay_status (*fn)(relassay_session *)) {
  json cfg = build_config(cmd, flags);
  relassay_session *session = nullptr;
  relassay_status status = relassay_session_open(cfg.dump().c_str(), &session);
  if (status != RELASSAY_OK) return status_to_exit(status);
  status = fn(session);
  relassay_session_close(session);
  return status_to_exit(status);
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"relassay: LLM-based relevance assessment over TREC collections"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(relassay_version()));

  CommonFlags judge_flags, align_flags, rank_flags, ndcg_flags, report_flags;
  std::string judge_method;
  std::string prompts_dir;

  CLI::App *judge = app.add_subcommand("judge", "label subjects with one assessment method");
  judge->add_option("method", judge_method, "method id (binary, umbrela, exam_binary, "
                                            "exam_graded_max, exam_graded_mean, nuggets_*, "
                                            "preferences)")
      ->required();
  add_common_flags(judge, &judge_flags);

  CLI::App *align = app.add_subcommand("align", "alignment-with-human-labels reports");
  add_common_flags(align, &align_flags);

  CLI::App *rank = app.add_subcommand("rank-eval",
                                      "compatibility vs nDCG system ranking agreement");
  add_common_flags(rank, &rank_flags);

  CLI::App *ndcg = app.add_subcommand("ndcg", "gold nDCG table for the runs directory");
  add_common_flags(ndcg, &ndcg_flags);

  CLI::App *report = app.add_subcommand("report",
                                        "replay reports from an existing judgment store");
  add_common_flags(report, &report_flags);

  CLI::App *prompts = app.add_subcommand("init-prompts", "write default prompt assets");
  prompts->add_option("dir", prompts_dir, "target directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (judge->parsed()) {
    json cfg = build_config(*judge, judge_flags);
    relassay_session *session = nullptr;
    relassay_status status = relassay_session_open(cfg.dump().c_str(), &session);
    if (status != RELASSAY_OK) return status_to_exit(status);
    size_t written = 0, skipped = 0, errors = 0;
    status = relassay_cmd_judge(session, judge_method.c_str(), &written, &skipped, &errors);
    relassay_session_close(session);
    std::printf("judged %zu subjects (%zu already in store, %zu errors)\n", written, skipped,
                errors);
    return status_to_exit(status);
  }
  if (align->parsed()) return with_session(*align, align_flags, relassay_cmd_align);
  if (rank->parsed()) return with_session(*rank, rank_flags, relassay_cmd_rank_eval);
  if (ndcg->parsed()) return with_session(*ndcg, ndcg_flags, relassay_cmd_ndcg);
  if (report->parsed()) {
    json cfg = build_config(*report, report_flags);
    relassay_session *session = nullptr;
    relassay_status status = relassay_session_open(cfg.dump().c_str(), &session);
    if (status != RELASSAY_OK) return status_to_exit(status);
    size_t passed = 0, violations = 0;
    status = relassay_cmd_report(session, &passed, &violations);
    relassay_session_close(session);
    std::printf("replay consistency: %zu checks passed, %zu violations\n", passed, violations);
    return status_to_exit(status);
  }
  if (prompts->parsed())
    return status_to_exit(relassay_write_default_prompts(prompts_dir.c_str()));
  return 1;
}
