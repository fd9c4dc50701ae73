#ifndef RELASSAY_CORPUS_IO_H_
#define RELASSAY_CORPUS_IO_H_

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace relassay {

// Human graded labels per (query, document); the gold standard.
struct Qrels {
  // qid -> doc -> grade, grades are non-negative integers
  std::map<std::string, std::map<std::string, int>> entries;

  // -1 when the pair is unjudged
  int grade(const std::string &qid, const std::string &doc) const;
  // grade with the TREC convention that unjudged means non-relevant
  int grade_or_zero(const std::string &qid, const std::string &doc) const;
  // highest grade present for a query, 0 if the query is unknown
  int max_grade(const std::string &qid) const;
  std::vector<std::string> query_ids() const;
};

Qrels parse_qrels(std::string_view text);
Qrels parse_qrels_file(const std::string &path);
std::string serialize_qrels(const Qrels &qrels);

struct RunEntry {
  std::string doc_id;
  int rank = 0;
  double score = 0.0;
};

// One system's ranked document lists, normalized at parse time:
// descending score, ties broken by doc-id descending.
struct RunRanking {
  std::string tag;
  std::map<std::string, std::vector<RunEntry>> queries;

  std::vector<std::string> docs(const std::string &qid) const;
};

RunRanking parse_run(std::string_view text);
RunRanking parse_run_file(const std::string &path);
std::string serialize_run(const RunRanking &run);

// query-id -> query text
using QuerySet = std::map<std::string, std::string>;
QuerySet parse_queries(std::string_view text);
QuerySet parse_queries_file(const std::string &path);

// doc-id -> passage text
using PassageMap = std::unordered_map<std::string, std::string>;
PassageMap parse_passages(std::string_view text);
PassageMap parse_passages_file(const std::string &path);

enum class PayloadKind { binary, grade, score, preference, labels };

// One assessment output for a (query, document) or (query, document pair).
// Immutable once written to a store.
struct JudgmentRecord {
  std::string method;
  std::string qid;
  std::string doc;    // subject doc, or first of the pair
  std::string doc_b;  // empty unless the subject is a pair
  PayloadKind kind = PayloadKind::binary;
  double number = 0.0;              // binary / grade / score payloads
  std::string preference;           // "first" | "second" | "tie"
  std::vector<std::string> labels;  // per-nugget label list
  std::vector<std::string> flags;   // per-record anomalies (e.g. nugget errors)
  std::string model;
  std::string prompt_hash;
  std::string ts;

  bool is_pair() const { return !doc_b.empty(); }
  // canonical subject key used for resume/dedup
  std::string subject_key() const;
};

// Declared payload kind per stored method id; throws on unknown ids.
PayloadKind payload_kind_for_method(const std::string &method);

std::string record_to_json(const JudgmentRecord &rec);
JudgmentRecord record_from_json(std::string_view line);

// Append-only line store; one JSON record per line. Single writer,
// concurrent readers of completed files are safe.
class JudgmentStore {
 public:
  explicit JudgmentStore(std::string path) : path_(std::move(path)) {}

  // Validates payload kinds before any write; returns the count written.
  std::size_t append(const std::vector<JudgmentRecord> &records);
  std::vector<JudgmentRecord> read_all() const;
  bool exists() const;
  const std::string &path() const { return path_; }

 private:
  std::string path_;
};

// An index over store content: (method, qid, subject) -> record.
// Duplicate keys keep the first record seen, matching append-only intent.
class JudgmentIndex {
 public:
  JudgmentIndex() = default;
  explicit JudgmentIndex(const std::vector<JudgmentRecord> &records);

  bool contains(const std::string &method, const std::string &qid,
                const std::string &subject_key) const;
  const JudgmentRecord *find(const std::string &method, const std::string &qid,
                             const std::string &subject_key) const;
  std::vector<const JudgmentRecord *> for_method(const std::string &method) const;
  std::size_t size() const { return order_.size(); }

 private:
  std::unordered_map<std::string, JudgmentRecord> by_key_;
  std::vector<std::string> order_;
};

std::string pair_subject_key(const std::string &doc_a, const std::string &doc_b);

}  // namespace relassay

#endif  // RELASSAY_CORPUS_IO_H_
