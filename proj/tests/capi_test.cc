// Exercises the shared library strictly through the public C header.
#include "relassay.h"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"

namespace {

std::string temp_dir(const std::string &name) {
  auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

void write(const std::string &path, const std::string &content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

}  // namespace

TEST_CASE("version string is populated") {
  CHECK(std::strlen(relassay_version()) > 0);
}

TEST_CASE("qrels parse, query, and error reporting") {
  const char *text = "q1 0 d1 2\nq1 0 d2 0\nq2 0 d9 3\n";
  relassay_qrels *qrels = nullptr;
  REQUIRE(relassay_qrels_parse_text(text, std::strlen(text), &qrels) == RELASSAY_OK);
  CHECK(relassay_qrels_query_count(qrels) == 2);
  CHECK(relassay_qrels_grade(qrels, "q1", "d1") == 2);
  CHECK(relassay_qrels_grade(qrels, "q1", "nope") == -1);
  relassay_qrels_free(qrels);

  const char *bad = "q1 0 d1\n";
  relassay_qrels *out = nullptr;
  CHECK(relassay_qrels_parse_text(bad, std::strlen(bad), &out) == RELASSAY_ERR_PARSE);
  CHECK(std::strlen(relassay_last_error()) > 0);
  CHECK(relassay_qrels_parse_file("/does/not/exist", &out) == RELASSAY_ERR_IO);
  CHECK(relassay_qrels_parse_text(nullptr, 0, &out) == RELASSAY_ERR_INVALID_ARGUMENT);
}

TEST_CASE("run parse and tag normalization") {
  const char *text = "7 Q0 a 1 1.0 tag\n7 Q0 b 2 2.0 tag\n";
  relassay_run *run = nullptr;
  REQUIRE(relassay_run_parse_text(text, std::strlen(text), &run) == RELASSAY_OK);
  CHECK(std::string(relassay_run_tag(run)) == "tag");
  CHECK(relassay_run_query_count(run) == 1);
  relassay_run_free(run);
}

TEST_CASE("metric kernels through the C surface") {
  const char *a[] = {"a", "b"};
  const char *b[] = {"b", "a"};
  double value = 0.0;
  REQUIRE(relassay_rbo(a, 2, b, 2, 0.9, 2, &value) == RELASSAY_OK);
  CHECK(value == (1.0 - 0.9) * 0.9);
  CHECK(relassay_rbo(a, 2, b, 2, 1.5, 2, &value) == RELASSAY_ERR_INVALID_ARGUMENT);

  double x[] = {1, 2, 3, 4};
  double y[] = {1, 3, 2, 4};
  REQUIRE(relassay_kendall_tau(x, y, 4, &value) == RELASSAY_OK);
  CHECK(value == doctest::Approx(4.0 / 6.0));
  double constant[] = {1, 1, 1, 1};
  CHECK(relassay_kendall_tau(constant, y, 4, &value) == RELASSAY_ERR_INVALID_ARGUMENT);

  const char *ranked[] = {"d1", "d2", "d3", "d4"};
  const char *scored[] = {"d1", "d2", "d3", "d4"};
  double scores[] = {3, 1, 1, 0};
  REQUIRE(relassay_compatibility(ranked, 4, scored, scores, 4, 0.9, &value) == RELASSAY_OK);
  CHECK(value == 1.0);
  double zeros[] = {0, 0, 0, 0};
  CHECK(relassay_compatibility(ranked, 4, scored, zeros, 4, 0.9, &value) ==
        RELASSAY_ERR_INVALID_ARGUMENT);

  const char *run_text = "q Q0 d1 1 9.0 t\nq Q0 d2 2 8.0 t\nq Q0 d3 3 7.0 t\n";
  const char *qrels_text = "q 0 d1 3\nq 0 d2 1\nq 0 d3 0\n";
  relassay_run *run = nullptr;
  relassay_qrels *qrels = nullptr;
  REQUIRE(relassay_run_parse_text(run_text, std::strlen(run_text), &run) == RELASSAY_OK);
  REQUIRE(relassay_qrels_parse_text(qrels_text, std::strlen(qrels_text), &qrels) == RELASSAY_OK);
  REQUIRE(relassay_ndcg_at_k(run, qrels, "q", 10, 0, &value) == RELASSAY_OK);
  CHECK(value == doctest::Approx(1.0));
  CHECK(relassay_ndcg_at_k(run, qrels, "missing", 10, 0, &value) ==
        RELASSAY_ERR_INVALID_ARGUMENT);
  relassay_run_free(run);
  relassay_qrels_free(qrels);
}

TEST_CASE("session lifecycle over the mock gateway") {
  std::string dir = temp_dir("relassay_capi_session");
  write(dir + "/qrels.txt", "q1 0 d1 2\nq1 0 d2 1\nq1 0 d3 0\nq2 0 d4 3\nq2 0 d5 0\n");
  write(dir + "/queries.tsv", "q1\tfirst question\nq2\tsecond question\n");
  write(dir + "/passages.tsv",
        "d1\ttext one\nd2\ttext two\nd3\ttext three\nd4\ttext four\nd5\ttext five\n");
  std::string config = std::string("{\"paths\": {\"qrels\": \"") + dir +
                       "/qrels.txt\", \"queries\": \"" + dir + "/queries.tsv\", " +
                       "\"passages\": \"" + dir + "/passages.tsv\", \"out_dir\": \"" + dir +
                       "/out\"}, \"gateway\": {\"mode\": \"mock\"}}";

  relassay_session *session = nullptr;
  REQUIRE(relassay_session_open(config.c_str(), &session) == RELASSAY_OK);
  size_t written = 0, skipped = 0, errors = 0;
  REQUIRE(relassay_cmd_judge(session, "umbrela", &written, &skipped, &errors) == RELASSAY_OK);
  CHECK(written == 5);
  CHECK(errors == 0);
  REQUIRE(relassay_cmd_align(session) == RELASSAY_OK);
  size_t passed = 0, violations = 0;
  REQUIRE(relassay_cmd_report(session, &passed, &violations) == RELASSAY_OK);
  CHECK(passed > 0);
  CHECK(violations == 0);
  CHECK(relassay_cmd_judge(session, "bogus", nullptr, nullptr, nullptr) ==
        RELASSAY_ERR_CONFIG);
  relassay_session_close(session);
  CHECK(std::filesystem::exists(dir + "/out/alignment_umbrela.json"));

  relassay_session *bad = nullptr;
  CHECK(relassay_session_open("{\"nonsense\": 1}", &bad) == RELASSAY_ERR_CONFIG);
  CHECK(relassay_session_open("not json", &bad) == RELASSAY_ERR_CONFIG);
  std::filesystem::remove_all(dir);
}

TEST_CASE("default prompt assets can be written anywhere") {
  std::string dir = temp_dir("relassay_capi_prompts");
  REQUIRE(relassay_write_default_prompts((dir + "/prompts").c_str()) == RELASSAY_OK);
  CHECK(std::filesystem::exists(dir + "/prompts/umbrela.txt"));
  CHECK(std::filesystem::exists(dir + "/prompts/pairwise.txt"));
  CHECK(std::filesystem::exists(dir + "/prompts/autonugget_assign.txt"));
  std::filesystem::remove_all(dir);
}
