#include "corpus_io.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "util.h"
#include "json.hpp"

namespace relassay {

namespace {

[[noreturn]] void parse_fail(const char *what, std::size_t line_no, const std::string &line) {
  throw ParseError(std::string(what) + " at line " + std::to_string(line_no) + ": " + line);
}

}  // namespace

int Qrels::grade(const std::string &qid, const std::string &doc) const {
  auto q = entries.find(qid);
  if (q == entries.end()) return -1;
  auto d = q->second.find(doc);
  if (d == q->second.end()) return -1;
  return d->second;
}

int Qrels::grade_or_zero(const std::string &qid, const std::string &doc) const {
  int g = grade(qid, doc);
  return g < 0 ? 0 : g;
}

int Qrels::max_grade(const std::string &qid) const {
  auto q = entries.find(qid);
  if (q == entries.end()) return 0;
  int best = 0;
  for (const auto &[doc, g] : q->second) best = std::max(best, g);
  return best;
}

std::vector<std::string> Qrels::query_ids() const {
  std::vector<std::string> ids;
  ids.reserve(entries.size());
  for (const auto &[qid, docs] : entries) ids.push_back(qid);
  return ids;
}

Qrels parse_qrels(std::string_view text) {
  Qrels qrels;
  std::size_t line_no = 0;
  for (const auto &line : split_lines(text)) {
    line_no++;
    if (trim(line).empty()) continue;
    auto fields = split_whitespace(line);
    if (fields.size() != 4) parse_fail("qrels line must have 4 columns", line_no, line);
    long grade = 0;
    if (!parse_long(fields[3], &grade)) parse_fail("qrels grade must be an integer", line_no, line);
    if (grade < 0) parse_fail("qrels grade must be non-negative", line_no, line);
    auto &docs = qrels.entries[fields[0]];
    auto [it, inserted] = docs.emplace(fields[2], static_cast<int>(grade));
    (void)it;
    if (!inserted) parse_fail("duplicate (query, doc) pair", line_no, line);
  }
  return qrels;
}

Qrels parse_qrels_file(const std::string &path) { return parse_qrels(read_file(path)); }

std::string serialize_qrels(const Qrels &qrels) {
  std::ostringstream out;
  for (const auto &[qid, docs] : qrels.entries)
    for (const auto &[doc, grade] : docs)
      out << qid << " 0 " << doc << ' ' << grade << '\n';
  return out.str();
}

RunRanking parse_run(std::string_view text) {
  RunRanking run;
  std::size_t line_no = 0;
  std::map<std::string, std::set<std::string>> seen;
  for (const auto &line : split_lines(text)) {
    line_no++;
    if (trim(line).empty()) continue;
    auto fields = split_whitespace(line);
    if (fields.size() != 6) parse_fail("run line must have 6 columns", line_no, line);
    long rank = 0;
    if (!parse_long(fields[3], &rank) || rank < 1)
      parse_fail("run rank must be a positive integer", line_no, line);
    double score = 0.0;
    if (!parse_double(fields[4], &score)) parse_fail("run score must be a number", line_no, line);
    if (run.tag.empty())
      run.tag = fields[5];
    else if (run.tag != fields[5])
      parse_fail("inconsistent run tag", line_no, line);
    if (!seen[fields[0]].insert(fields[2]).second)
      parse_fail("duplicate doc within query", line_no, line);
    run.queries[fields[0]].push_back({fields[2], static_cast<int>(rank), score});
  }
  // The submitted rank column is not trusted; normalize to the TREC rule.
  for (auto &[qid, entries] : run.queries) {
    std::stable_sort(entries.begin(), entries.end(), [](const RunEntry &a, const RunEntry &b) {
      if (a.score != b.score) return a.score > b.score;
      return a.doc_id > b.doc_id;
    });
    int rank = 1;
    for (auto &entry : entries) entry.rank = rank++;
  }
  return run;
}

RunRanking parse_run_file(const std::string &path) { return parse_run(read_file(path)); }

std::string serialize_run(const RunRanking &run) {
  std::ostringstream out;
  for (const auto &[qid, entries] : run.queries)
    for (const auto &entry : entries)
      out << qid << " Q0 " << entry.doc_id << ' ' << entry.rank << ' '
          << format_double(entry.score) << ' ' << run.tag << '\n';
  return out.str();
}

std::vector<std::string> RunRanking::docs(const std::string &qid) const {
  std::vector<std::string> out;
  auto it = queries.find(qid);
  if (it == queries.end()) return out;
  out.reserve(it->second.size());
  for (const auto &entry : it->second) out.push_back(entry.doc_id);
  return out;
}

namespace {

std::map<std::string, std::string> parse_tsv(std::string_view text, const char *what) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  for (const auto &line : split_lines(text)) {
    line_no++;
    if (trim(line).empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw ParseError(std::string(what) + " line must be id<TAB>text at line " +
                       std::to_string(line_no));
    std::string id = trim(line.substr(0, tab));
    std::string value = trim(line.substr(tab + 1));
    if (id.empty() || value.empty())
      throw ParseError(std::string(what) + " line has empty id or text at line " +
                       std::to_string(line_no));
    out[id] = value;
  }
  return out;
}

}  // namespace

QuerySet parse_queries(std::string_view text) { return parse_tsv(text, "query"); }

QuerySet parse_queries_file(const std::string &path) { return parse_queries(read_file(path)); }

PassageMap parse_passages(std::string_view text) {
  PassageMap map;
  for (auto &[id, body] : parse_tsv(text, "passage")) map.emplace(id, body);
  return map;
}

PassageMap parse_passages_file(const std::string &path) { return parse_passages(read_file(path)); }

PayloadKind payload_kind_for_method(const std::string &method) {
  if (method == "binary") return PayloadKind::binary;
  if (method == "umbrela" || method == "human") return PayloadKind::grade;
  if (method == "exam_binary" || method == "exam_graded" || method == "nuggets")
    return PayloadKind::labels;
  if (method == "preferences") return PayloadKind::preference;
  throw InvalidInput("unknown stored method id: " + method);
}

std::string pair_subject_key(const std::string &doc_a, const std::string &doc_b) {
  return doc_a <= doc_b ? doc_a + "\x1f" + doc_b : doc_b + "\x1f" + doc_a;
}

std::string JudgmentRecord::subject_key() const {
  return is_pair() ? pair_subject_key(doc, doc_b) : doc;
}

std::string record_to_json(const JudgmentRecord &rec) {
  nlohmann::json j;
  j["method"] = rec.method;
  j["qid"] = rec.qid;
  if (rec.is_pair()) {
    j["doc_a"] = rec.doc;
    j["doc_b"] = rec.doc_b;
  } else {
    j["doc"] = rec.doc;
  }
  switch (rec.kind) {
    case PayloadKind::binary:
    case PayloadKind::grade:
      j["value"] = static_cast<long>(rec.number);
      break;
    case PayloadKind::score:
      j["value"] = rec.number;
      break;
    case PayloadKind::preference:
      j["value"] = rec.preference;
      break;
    case PayloadKind::labels:
      j["value"] = rec.labels;
      break;
  }
  if (!rec.flags.empty()) j["flags"] = rec.flags;
  j["model"] = rec.model;
  j["prompt_hash"] = rec.prompt_hash;
  j["ts"] = rec.ts;
  return j.dump();
}

JudgmentRecord record_from_json(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(std::string("bad judgment record: ") + e.what());
  }
  JudgmentRecord rec;
  try {
    rec.method = j.at("method").get<std::string>();
    rec.qid = j.at("qid").get<std::string>();
    if (j.contains("doc")) {
      rec.doc = j.at("doc").get<std::string>();
    } else {
      rec.doc = j.at("doc_a").get<std::string>();
      rec.doc_b = j.at("doc_b").get<std::string>();
    }
    rec.kind = payload_kind_for_method(rec.method);
    const auto &value = j.at("value");
    switch (rec.kind) {
      case PayloadKind::binary:
      case PayloadKind::grade:
      case PayloadKind::score:
        rec.number = value.get<double>();
        break;
      case PayloadKind::preference:
        rec.preference = value.get<std::string>();
        break;
      case PayloadKind::labels:
        rec.labels = value.get<std::vector<std::string>>();
        break;
    }
    if (j.contains("flags")) rec.flags = j.at("flags").get<std::vector<std::string>>();
    rec.model = j.value("model", "");
    rec.prompt_hash = j.value("prompt_hash", "");
    rec.ts = j.value("ts", "");
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(std::string("bad judgment record: ") + e.what());
  }
  return rec;
}

namespace {

void validate_record(const JudgmentRecord &rec) {
  PayloadKind declared = payload_kind_for_method(rec.method);
  if (declared != rec.kind)
    throw InvalidInput("payload kind does not match method " + rec.method);
  if (rec.kind == PayloadKind::binary && rec.number != 0.0 && rec.number != 1.0)
    throw InvalidInput("binary payload must be 0 or 1");
  if (rec.kind == PayloadKind::preference && rec.preference != "first" &&
      rec.preference != "second" && rec.preference != "tie")
    throw InvalidInput("preference payload must be first/second/tie");
  if (rec.kind == PayloadKind::preference && !rec.is_pair())
    throw InvalidInput("preference record requires a doc pair");
}

}  // namespace

std::size_t JudgmentStore::append(const std::vector<JudgmentRecord> &records) {
  for (const auto &rec : records) validate_record(rec);
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot open judgment store for append: " + path_);
  for (const auto &rec : records) {
    out << record_to_json(rec) << '\n';
    if (!out) throw IoError("write failure on judgment store: " + path_);
  }
  out.flush();
  if (!out) throw IoError("flush failure on judgment store: " + path_);
  return records.size();
}

std::vector<JudgmentRecord> JudgmentStore::read_all() const {
  std::vector<JudgmentRecord> records;
  std::ifstream in(path_, std::ios::binary);
  if (!in) return records;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    records.push_back(record_from_json(line));
  }
  return records;
}

bool JudgmentStore::exists() const {
  std::ifstream in(path_);
  return in.good();
}

namespace {

std::string index_key(const std::string &method, const std::string &qid,
                      const std::string &subject_key) {
  return method + "\x1e" + qid + "\x1e" + subject_key;
}

}  // namespace

JudgmentIndex::JudgmentIndex(const std::vector<JudgmentRecord> &records) {
  for (const auto &rec : records) {
    std::string key = index_key(rec.method, rec.qid, rec.subject_key());
    if (by_key_.emplace(key, rec).second) order_.push_back(key);
  }
}

bool JudgmentIndex::contains(const std::string &method, const std::string &qid,
                             const std::string &subject_key) const {
  return by_key_.count(index_key(method, qid, subject_key)) > 0;
}

const JudgmentRecord *JudgmentIndex::find(const std::string &method, const std::string &qid,
                                          const std::string &subject_key) const {
  auto it = by_key_.find(index_key(method, qid, subject_key));
  return it == by_key_.end() ? nullptr : &it->second;
}

std::vector<const JudgmentRecord *> JudgmentIndex::for_method(const std::string &method) const {
  std::vector<const JudgmentRecord *> out;
  for (const auto &key : order_) {
    const auto &rec = by_key_.at(key);
    if (rec.method == method) out.push_back(&rec);
  }
  return out;
}

}  // namespace relassay
