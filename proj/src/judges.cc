#include "judges.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <filesystem>
#include <set>
#include <sstream>

#include "util.h"
#include "json.hpp"

namespace relassay {

namespace {

struct MethodEntry {
  MethodId id;
  const char *name;
  const char *pass;
};

constexpr std::array<MethodEntry, 12> kMethods = {{
    {MethodId::binary, "binary", "binary"},
    {MethodId::umbrela, "umbrela", "umbrela"},
    {MethodId::exam_binary, "exam_binary", "exam_binary"},
    {MethodId::exam_graded_max, "exam_graded_max", "exam_graded"},
    {MethodId::exam_graded_mean, "exam_graded_mean", "exam_graded"},
    {MethodId::nuggets_A, "nuggets_A", "nuggets"},
    {MethodId::nuggets_A_strict, "nuggets_A_strict", "nuggets"},
    {MethodId::nuggets_V, "nuggets_V", "nuggets"},
    {MethodId::nuggets_V_strict, "nuggets_V_strict", "nuggets"},
    {MethodId::nuggets_W, "nuggets_W", "nuggets"},
    {MethodId::nuggets_W_strict, "nuggets_W_strict", "nuggets"},
    {MethodId::preferences, "preferences", "preferences"},
}};

}  // namespace

const char *method_name(MethodId id) {
  for (const auto &entry : kMethods)
    if (entry.id == id) return entry.name;
  return "unknown";
}

std::optional<MethodId> parse_method_id(const std::string &name) {
  for (const auto &entry : kMethods)
    if (name == entry.name) return entry.id;
  return std::nullopt;
}

std::vector<std::string> all_method_names() {
  std::vector<std::string> names;
  for (const auto &entry : kMethods) names.emplace_back(entry.name);
  return names;
}

std::string storage_pass(MethodId id) {
  for (const auto &entry : kMethods)
    if (entry.id == id) return entry.pass;
  throw InvalidInput("unknown method id");
}

// ---- prompts ---------------------------------------------------------------

namespace {

struct DefaultPrompt {
  const char *stage;
  const char *system;
  const char *user;
};

const DefaultPrompt kDefaultPrompts[] = {
    {"binary",
     "You are a TREC assessor judging whether passages are relevant to search queries.",
     "Act as a TREC assessor. Decide whether the passage wholly or partially satisfies the "
     "information need behind the query. Judge relevance only; style and length do not "
     "matter.\n\nQuery: {query}\nPassage: {passage}\n\nAnswer with a single digit: 1 if the "
     "passage is relevant, 0 if it is not."},
    {"umbrela", "",
     "Given a query and a passage, you must provide a score on an integer scale of 0 to 3 "
     "with the following meanings:\n\n0 = represent that the passage has nothing to do with "
     "the query,\n1 = represents that the passage seems related to the query but does not "
     "answer it,\n2 = represents that the passage has some answer for the query, but the "
     "answer may be a bit unclear, or hidden amongst extraneous information and\n3 = "
     "represents that the passage is dedicated to the query and contains the exact "
     "answer.\n\nImportant Instruction: Assign category 1 if the passage is somewhat related "
     "to the topic but not completely, category 2 if passage presents something very "
     "important related to the entire topic but also has some extra information and category "
     "3 if the passage only and entirely refers to the topic. If none of the above satisfies "
     "give it category 0.\n\nQuery: {query}\nPassage: {passage}\n\nSplit this problem into "
     "steps:\nConsider the underlying intent of the search.\nMeasure how well the content "
     "matches a likely intent of the query (M).\nMeasure how trustworthy the passage is "
     "(T).\nConsider the aspects above and the relative importance of each, and decide on a "
     "final score (O). Final score must be an integer value only.\nDo not provide any code "
     "in result. Provide each score in the format of: ##final score: score without providing "
     "any reasoning."},
    {"exam_generate", "",
     "Generate {count} concise and insightful questions that together provide complete "
     "coverage of the information need behind the query below. Each question must be "
     "answerable by a passage that fully addresses the query. Keep every question short and "
     "self-contained.\n\nQuery: {query}\n\nWrite exactly {count} questions, one per line, "
     "numbered 1 to {count}."},
    {"exam_binary", "",
     "Decide whether the passage contains an answer to the question.\n\nQuestion: "
     "{nugget}\nPassage: {passage}\n\nAnswer with a single digit: 1 if the passage answers "
     "the question, 0 if it does not."},
    {"exam_graded", "",
     "Grade how well the passage answers the question, on a scale from 1 to 5:\n1 = the "
     "passage does not address the question at all\n2 = the passage touches the topic of the "
     "question but gives no usable answer\n3 = the passage partially answers the question\n4 "
     "= the passage answers the question with minor omissions\n5 = the passage fully and "
     "directly answers the question\n\nQuestion: {nugget}\nPassage: {passage}\n\nAnswer with "
     "a single integer between 1 and 5."},
    {"autonugget_create", "",
     "You are building a list of atomic nuggets of information that a complete answer to the "
     "query must cover. Update the nugget list below using the new passage: add nuggets for "
     "important facts the passage contributes, and merge nuggets capturing similar concepts. "
     "Nuggets must be neither too broad nor overly specific; keep each one a short "
     "standalone statement. Do not exceed {limit} nuggets in total.\n\nQuery: "
     "{query}\n\nCurrent nuggets (may be empty):\n{nuggets}\n\nNew "
     "passage:\n{passage}\n\nWrite the full updated nugget list, one nugget per line, "
     "without numbering or commentary."},
    {"autonugget_merge", "",
     "The nugget list below has grown too long. Merge nuggets capturing similar concepts and "
     "remove the least important ones until at most {limit} remain. Keep each nugget a short "
     "standalone statement.\n\nQuery: {query}\n\nNuggets:\n{nuggets}\n\nWrite the reduced "
     "nugget list, one nugget per line, without numbering or commentary."},
    {"autonugget_importance", "",
     "Classify the importance of each nugget for answering the query. A nugget is vital if "
     "it is essential for a good response, and okay if it is useful but not critical for "
     "completeness.\n\nQuery: {query}\n\nNuggets:\n{nuggets}\n\nFor each nugget, in order, "
     "write exactly one word per line: vital or okay."},
    {"autonugget_assign", "",
     "Decide how well the passage supports each nugget. Use exactly one of these labels per "
     "nugget: support (the passage fully conveys the nugget), partial_support (the passage "
     "conveys part of the nugget), not_support (the passage does not convey the "
     "nugget).\n\nQuery: {query}\n\nPassage:\n{passage}\n\nNuggets:\n{nuggets}\n\nFor each "
     "nugget, in order, write exactly one label per line: support, partial_support, or "
     "not_support."},
    {"pairwise", "",
     "You are judging search results. Read the query and the two passages, then decide which "
     "passage is more relevant to the query. Relevance means how well the passage satisfies "
     "the information need behind the query. If you had to keep exactly one passage as the "
     "answer shown to a user, pick the one you would keep.\n\nQuery: {query}\n\nPassage "
     "A:\n{passage_a}\n\nPassage B:\n{passage_b}\n\nWhich passage is more relevant to the "
     "query? Answer with a single letter: A or B."},
};

// On disk a prompt file may carry a system section separated from the user
// template by a line containing only three dashes.
std::pair<std::string, std::string> split_prompt_file(const std::string &text) {
  auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); i++) {
    if (trim(lines[i]) == "---") {
      std::string system, user;
      for (std::size_t j = 0; j < i; j++) {
        system += lines[j];
        if (j + 1 < i) system += '\n';
      }
      for (std::size_t j = i + 1; j < lines.size(); j++) {
        user += lines[j];
        if (j + 1 < lines.size()) user += '\n';
      }
      return {trim(system), trim(user)};
    }
  }
  return {"", trim(text)};
}

std::string prompt_file_text(const DefaultPrompt &p) {
  std::string out;
  if (p.system[0] != '\0') {
    out += p.system;
    out += "\n---\n";
  }
  out += p.user;
  out += '\n';
  return out;
}

}  // namespace

PromptLibrary PromptLibrary::builtin() {
  PromptLibrary lib;
  for (const auto &p : kDefaultPrompts)
    lib.prompts_[p.stage] = {p.system, p.user, sha256_hex(prompt_file_text(p))};
  return lib;
}

PromptLibrary PromptLibrary::from_dir(const std::string &dir) {
  PromptLibrary lib = builtin();
  for (auto &[stage, prompt] : lib.prompts_) {
    std::filesystem::path path = std::filesystem::path(dir) / (stage + ".txt");
    if (!std::filesystem::exists(path)) continue;
    std::string text = read_file(path.string());
    auto [system, user] = split_prompt_file(text);
    prompt = {system, user, sha256_hex(text)};
  }
  return lib;
}

void PromptLibrary::write_defaults(const std::string &dir) {
  std::filesystem::create_directories(dir);
  for (const auto &p : kDefaultPrompts) {
    std::filesystem::path path = std::filesystem::path(dir) / (std::string(p.stage) + ".txt");
    write_file(path.string(), prompt_file_text(p));
  }
}

const std::string &PromptLibrary::system_prompt(const std::string &stage) const {
  auto it = prompts_.find(stage);
  if (it == prompts_.end()) throw ConfigError("unknown prompt stage: " + stage);
  return it->second.system;
}

const std::string &PromptLibrary::user_template(const std::string &stage) const {
  auto it = prompts_.find(stage);
  if (it == prompts_.end()) throw ConfigError("unknown prompt stage: " + stage);
  return it->second.user;
}

const std::string &PromptLibrary::hash(const std::string &stage) const {
  auto it = prompts_.find(stage);
  if (it == prompts_.end()) throw ConfigError("unknown prompt stage: " + stage);
  return it->second.hash;
}

std::vector<std::string> PromptLibrary::stages() const {
  std::vector<std::string> out;
  for (const auto &[stage, prompt] : prompts_) out.push_back(stage);
  return out;
}

std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string> &values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      auto close = tmpl.find('}', i);
      if (close != std::string_view::npos) {
        std::string key(tmpl.substr(i + 1, close - i - 1));
        auto it = values.find(key);
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

// ---- completion parsing ------------------------------------------------

std::optional<int> parse_last_int_in_range(std::string_view text, int lo, int hi) {
  std::optional<int> found;
  std::size_t i = 0;
  auto alnum = [&](std::size_t pos) {
    return pos < text.size() && std::isalnum(static_cast<unsigned char>(text[pos]));
  };
  while (i < text.size()) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
      i++;
      continue;
    }
    std::size_t start = i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) i++;
    bool standalone = true;
    if (start > 0 && (alnum(start - 1) || text[start - 1] == '.')) standalone = false;
    if (alnum(i)) standalone = false;
    // a trailing ".<digit>" marks a decimal fraction, not an integer
    if (i < text.size() && text[i] == '.' && alnum(i + 1)) standalone = false;
    if (!standalone) continue;
    long value = 0;
    if (!parse_long(text.substr(start, i - start), &value)) continue;
    if (value >= lo && value <= hi) found = static_cast<int>(value);
  }
  return found;
}

std::optional<char> parse_verdict_letter(std::string_view text) {
  std::optional<char> found;
  auto alnum = [&](std::size_t pos) {
    return pos < text.size() && std::isalnum(static_cast<unsigned char>(text[pos]));
  };
  for (std::size_t i = 0; i < text.size(); i++) {
    if (text[i] != 'A' && text[i] != 'B') continue;
    if (i > 0 && alnum(i - 1)) continue;
    if (alnum(i + 1)) continue;
    found = text[i];
  }
  if (!found) {
    std::string whole = lowercase(trim(text));
    if (whole == "a") found = 'A';
    if (whole == "b") found = 'B';
  }
  return found;
}

std::vector<std::string> parse_list_lines(std::string_view text) {
  std::vector<std::string> items;
  for (const auto &raw : split_lines(text)) {
    std::string line = trim(raw);
    if (line.empty()) continue;
    // strip "12." / "12)" / "-" / "*" list markers
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) i++;
    if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')'))
      line = trim(line.substr(i + 1));
    else if (!line.empty() && (line[0] == '-' || line[0] == '*'))
      line = trim(line.substr(1));
    if (!line.empty()) items.push_back(line);
  }
  return items;
}

std::optional<std::vector<std::string>> parse_label_lines(std::string_view text,
                                                          const std::vector<std::string> &allowed,
                                                          std::size_t expected) {
  std::vector<std::string> labels;
  for (const auto &item : parse_list_lines(text)) {
    std::string normalized = lowercase(item);
    while (!normalized.empty() &&
           (normalized.back() == '.' || normalized.back() == ',' || normalized.back() == ':'))
      normalized.pop_back();
    std::replace(normalized.begin(), normalized.end(), ' ', '_');
    if (std::find(allowed.begin(), allowed.end(), normalized) != allowed.end())
      labels.push_back(normalized);
  }
  if (labels.size() != expected) return std::nullopt;
  return labels;
}

// ---- pointwise methods -----------------------------------------------------

namespace {

constexpr const char *kRepromptSuffix =
    "\n\nYour previous reply could not be parsed. Answer in the exact required format only.";

CompletionRequest build_request(const JudgeContext &ctx, const std::string &stage,
                                const std::map<std::string, std::string> &values,
                                SubjectInfo subject) {
  CompletionRequest req;
  req.model = ctx.model;
  req.system_prompt = ctx.prompts->system_prompt(stage);
  req.user_prompt = render_template(ctx.prompts->user_template(stage), values);
  req.temperature = ctx.temperature;
  req.max_tokens = ctx.max_tokens;
  req.subject = std::move(subject);
  return req;
}

// one reprompt with an explicit format reminder, then gives up
template <typename Parse>
auto complete_and_parse(const JudgeContext &ctx, CompletionRequest req, Parse parse)
    -> decltype(parse(std::string())) {
  auto parsed = parse(ctx.gateway->complete(req));
  if (parsed) return parsed;
  req.user_prompt += kRepromptSuffix;
  return parse(ctx.gateway->complete(req));
}

}  // namespace

int judge_binary(const JudgeContext &ctx, const std::string &qid, const std::string &query,
                 const std::string &doc, const std::string &passage) {
  if (query.empty() || passage.empty()) throw InvalidInput("judge_binary requires non-empty texts");
  auto req = build_request(ctx, "binary", {{"query", query}, {"passage", passage}},
                           {"binary", qid, doc, "", 0});
  auto verdict =
      complete_and_parse(ctx, req, [](const std::string &text) {
        return parse_last_int_in_range(text, 0, 1);
      });
  if (!verdict) throw JudgeError("no binary verdict for qid=" + qid + " doc=" + doc);
  return *verdict;
}

int judge_graded(const JudgeContext &ctx, const std::string &qid, const std::string &query,
                 const std::string &doc, const std::string &passage) {
  if (query.empty() || passage.empty()) throw InvalidInput("judge_graded requires non-empty texts");
  auto req = build_request(ctx, "umbrela", {{"query", query}, {"passage", passage}},
                           {"graded", qid, doc, "", 0});
  auto verdict =
      complete_and_parse(ctx, req, [](const std::string &text) {
        return parse_last_int_in_range(text, 0, 3);
      });
  if (!verdict) throw JudgeError("no graded verdict for qid=" + qid + " doc=" + doc);
  return *verdict;
}

// ---- exam -------------------------------------------------------------------

ExamNuggetSet exam_generate(const JudgeContext &ctx, const std::string &qid,
                            const std::string &query) {
  if (query.empty()) throw InvalidInput("exam_generate requires a non-empty query");
  auto req = build_request(
      ctx, "exam_generate",
      {{"query", query}, {"count", std::to_string(kExamNuggetCount)}},
      {"exam_generate", qid, "", "", static_cast<int>(kExamNuggetCount)});
  auto parse = [](const std::string &text) -> std::optional<std::vector<std::string>> {
    auto lines = parse_list_lines(text);
    if (lines.size() != kExamNuggetCount) return std::nullopt;
    return lines;
  };
  auto nuggets = complete_and_parse(ctx, req, parse);
  if (!nuggets)
    throw JudgeError("could not obtain " + std::to_string(kExamNuggetCount) +
                     " nugget questions for qid=" + qid);
  return {qid, *nuggets};
}

ExamJudgments exam_judge(const JudgeContext &ctx, const ExamNuggetSet &set, bool graded,
                         const std::string &qid, const std::string &doc,
                         const std::string &passage) {
  if (set.nuggets.size() != kExamNuggetCount)
    throw InvalidInput("exam_judge requires a finalized set of " +
                       std::to_string(kExamNuggetCount) + " nuggets");
  const char *stage = graded ? "exam_graded" : "exam_binary";
  const int lo = graded ? 1 : 0;
  const int hi = graded ? 5 : 1;
  ExamJudgments out;
  out.values.reserve(set.nuggets.size());
  for (std::size_t i = 0; i < set.nuggets.size(); i++) {
    auto req = build_request(ctx, stage, {{"nugget", set.nuggets[i]}, {"passage", passage}},
                             {stage, qid, doc, "", 1});
    std::optional<int> value;
    try {
      value = complete_and_parse(ctx, req, [&](const std::string &text) {
        return parse_last_int_in_range(text, lo, hi);
      });
    } catch (const Error &) {
      value = std::nullopt;
    }
    if (!value) {
      out.values.push_back(lo);
      out.flags.push_back("nugget_error:" + std::to_string(i));
    } else {
      out.values.push_back(*value);
    }
  }
  return out;
}

double exam_score(const std::vector<int> &values, ExamMode mode) {
  if (values.empty()) throw InvalidInput("exam_score requires at least one per-nugget value");
  if (mode == ExamMode::graded_max) return static_cast<double>(*std::max_element(values.begin(), values.end()));
  double sum = 0.0;
  for (int v : values) sum += static_cast<double>(v);
  return sum / static_cast<double>(values.size());
}

// ---- autonuggets ------------------------------------------------------------

namespace {

std::string join_lines(const std::vector<std::string> &items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); i++) {
    out += items[i];
    if (i + 1 < items.size()) out += '\n';
  }
  return out;
}

}  // namespace

AutoNuggetSet autonugget_generate(
    const JudgeContext &ctx, const std::string &qid, const std::string &query,
    const std::vector<std::pair<std::string, std::string>> &relevant_docs) {
  if (relevant_docs.empty())
    throw InvalidInput("autonugget_generate requires at least one relevant document");
  std::vector<std::string> nuggets;
  const std::string limit = std::to_string(kAutoNuggetHardCap);
  for (const auto &[doc, passage] : relevant_docs) {
    auto req = build_request(ctx, "autonugget_create",
                             {{"query", query},
                              {"passage", passage},
                              {"nuggets", join_lines(nuggets)},
                              {"limit", limit}},
                             {"nugget_create", qid, doc, "", static_cast<int>(nuggets.size())});
    auto parse = [](const std::string &text) -> std::optional<std::vector<std::string>> {
      auto lines = parse_list_lines(text);
      if (lines.empty()) return std::nullopt;
      return lines;
    };
    auto updated = complete_and_parse(ctx, req, parse);
    if (!updated) continue;  // keep the list from previous passes
    nuggets = *updated;
    if (nuggets.size() > kAutoNuggetHardCap) {
      auto merge_req = build_request(
          ctx, "autonugget_merge",
          {{"query", query}, {"nuggets", join_lines(nuggets)}, {"limit", limit}},
          {"nugget_create", qid, doc, "merge", static_cast<int>(nuggets.size())});
      auto merged = complete_and_parse(ctx, merge_req, parse);
      if (merged && merged->size() <= kAutoNuggetHardCap)
        nuggets = *merged;
      else
        nuggets.resize(kAutoNuggetHardCap);
    }
  }
  if (nuggets.empty()) throw JudgeError("nugget generation produced nothing for qid=" + qid);

  auto importance_req = build_request(
      ctx, "autonugget_importance", {{"query", query}, {"nuggets", join_lines(nuggets)}},
      {"nugget_importance", qid, "", "", static_cast<int>(nuggets.size())});
  auto importance = complete_and_parse(
      ctx, importance_req, [&](const std::string &text) {
        return parse_label_lines(text, {"vital", "okay"}, nuggets.size());
      });
  if (!importance) throw JudgeError("could not obtain nugget importance for qid=" + qid);

  AutoNuggetSet set;
  set.qid = qid;
  for (std::size_t i = 0; i < nuggets.size(); i++)
    set.nuggets.push_back({nuggets[i], (*importance)[i]});
  std::stable_sort(set.nuggets.begin(), set.nuggets.end(),
                   [](const AutoNugget &a, const AutoNugget &b) {
                     return a.importance == "vital" && b.importance != "vital";
                   });
  if (set.nuggets.size() > kAutoNuggetFinalCap) set.nuggets.resize(kAutoNuggetFinalCap);
  for (const auto &[doc, passage] : relevant_docs) set.source_docs.push_back(doc);
  return set;
}

NuggetAssignment autonugget_assign(const JudgeContext &ctx, const AutoNuggetSet &set,
                                   const std::string &qid, const std::string &query,
                                   const std::string &doc, const std::string &passage) {
  if (set.nuggets.empty()) throw InvalidInput("autonugget_assign requires a non-empty nugget set");
  std::vector<std::string> texts;
  for (const auto &nugget : set.nuggets) texts.push_back(nugget.text);
  auto req = build_request(ctx, "autonugget_assign",
                           {{"query", query}, {"passage", passage}, {"nuggets", join_lines(texts)}},
                           {"nugget_assign", qid, doc, "", static_cast<int>(texts.size())});
  NuggetAssignment assignment;
  assignment.qid = qid;
  assignment.doc = doc;
  std::optional<std::vector<std::string>> labels;
  try {
    labels = complete_and_parse(ctx, req, [&](const std::string &text) {
      return parse_label_lines(text, {"support", "partial_support", "not_support"},
                               texts.size());
    });
  } catch (const Error &) {
    labels = std::nullopt;
  }
  if (labels) {
    assignment.labels = *labels;
  } else {
    // minimum value per nugget, flagged, so one bad completion cannot void the doc
    assignment.labels.assign(texts.size(), "not_support");
    assignment.flags.push_back("assign_error");
  }
  return assignment;
}

double autonugget_score(const NuggetAssignment &assignment, const AutoNuggetSet &set,
                        NuggetScope scope, bool strict, bool *degenerate) {
  if (assignment.labels.size() != set.nuggets.size())
    throw InvalidInput("assignment does not cover the nugget set");
  if (degenerate != nullptr) *degenerate = false;
  double numerator = 0.0;
  double denominator = 0.0;
  for (std::size_t i = 0; i < set.nuggets.size(); i++) {
    const std::string &label = assignment.labels[i];
    const bool vital = set.nuggets[i].importance == "vital";
    if (strict && label == "partial_support") continue;  // omitted from both sums
    double value = label == "support" ? 1.0 : label == "partial_support" ? 0.5 : 0.0;
    double weight;
    switch (scope) {
      case NuggetScope::all:
        weight = 1.0;
        break;
      case NuggetScope::vital:
        weight = vital ? 1.0 : 0.0;
        break;
      case NuggetScope::weighted:
        weight = vital ? 1.0 : 0.5;
        break;
      default:
        weight = 0.0;
    }
    numerator += weight * value;
    denominator += weight;
  }
  if (denominator == 0.0) {
    if (degenerate != nullptr) *degenerate = true;
    return 0.0;
  }
  return numerator / denominator;
}

std::pair<NuggetScope, bool> nugget_variant(MethodId id) {
  switch (id) {
    case MethodId::nuggets_A:
      return {NuggetScope::all, false};
    case MethodId::nuggets_A_strict:
      return {NuggetScope::all, true};
    case MethodId::nuggets_V:
      return {NuggetScope::vital, false};
    case MethodId::nuggets_V_strict:
      return {NuggetScope::vital, true};
    case MethodId::nuggets_W:
      return {NuggetScope::weighted, false};
    case MethodId::nuggets_W_strict:
      return {NuggetScope::weighted, true};
    default:
      throw InvalidInput("not a nuggets method id");
  }
}

// ---- preferences -----------------------------------------------------------

PreferenceOutcome judge_pair(const JudgeContext &ctx, const std::string &qid,
                             const std::string &query, const std::string &doc_a,
                             const std::string &passage_a, const std::string &doc_b,
                             const std::string &passage_b) {
  if (doc_a == doc_b) throw InvalidInput("judge_pair requires two distinct documents");
  PreferenceOutcome outcome;
  outcome.qid = qid;
  outcome.doc_a = doc_a;
  outcome.doc_b = doc_b;

  auto ask = [&](const std::string &first_doc, const std::string &first_text,
                 const std::string &second_doc,
                 const std::string &second_text) -> std::optional<std::string> {
    auto req = build_request(
        ctx, "pairwise",
        {{"query", query}, {"passage_a", first_text}, {"passage_b", second_text}},
        {"pair", qid, first_doc, second_doc, 0});
    std::optional<char> letter;
    try {
      letter = complete_and_parse(ctx, req, [](const std::string &text) {
        return parse_verdict_letter(text);
      });
    } catch (const Error &) {
      letter = std::nullopt;
    }
    if (!letter) return std::nullopt;
    return *letter == 'A' ? first_doc : second_doc;
  };

  auto winner_forward = ask(doc_a, passage_a, doc_b, passage_b);
  auto winner_reversed = ask(doc_b, passage_b, doc_a, passage_a);
  if (!winner_forward || !winner_reversed) {
    outcome.result = MockPairOutcome::tie;
    outcome.flags.push_back("unparseable_verdict");
    return outcome;
  }
  if (*winner_forward == *winner_reversed)
    outcome.result = *winner_forward == doc_a ? MockPairOutcome::first : MockPairOutcome::second;
  else
    outcome.result = MockPairOutcome::tie;  // positions disagreed
  return outcome;
}

std::vector<std::pair<std::string, std::string>> sample_pairs(std::vector<std::string> docs,
                                                              std::size_t budget_per_doc,
                                                              std::uint64_t seed) {
  if (docs.size() < 2) throw InvalidInput("pair sampling requires at least two documents");
  std::sort(docs.begin(), docs.end());
  docs.erase(std::unique(docs.begin(), docs.end()), docs.end());
  const std::size_t n = docs.size();
  const std::size_t all_pairs = n * (n - 1) / 2;
  const std::size_t budget = std::min(budget_per_doc * n, all_pairs);
  Rng rng(seed);
  rng.shuffle(&docs);

  std::set<std::pair<std::size_t, std::size_t>> chosen;
  std::vector<std::pair<std::string, std::string>> out;
  auto push = [&](std::size_t i, std::size_t j) {
    if (i == j) return;
    auto key = std::minmax(i, j);
    if (!chosen.insert(key).second) return;
    out.emplace_back(docs[key.first], docs[key.second]);
  };
  // a ring over the shuffled order covers every doc with n pairs
  for (std::size_t i = 0; i < n && out.size() < budget; i++) push(i, (i + 1) % n);
  if (budget == all_pairs) {
    for (std::size_t i = 0; i < n; i++)
      for (std::size_t j = i + 1; j < n; j++) push(i, j);
  } else {
    while (out.size() < budget)
      push(static_cast<std::size_t>(rng.below(n)), static_cast<std::size_t>(rng.below(n)));
  }
  return out;
}

std::map<std::string, double> borda_scores(const std::vector<std::string> &docs,
                                           const std::vector<PreferenceOutcome> &outcomes) {
  std::map<std::string, double> scores;
  for (const auto &doc : docs) scores[doc] = 0.0;
  for (const auto &outcome : outcomes) {
    if (outcome.result == MockPairOutcome::first)
      scores[outcome.doc_a] += 1.0;
    else if (outcome.result == MockPairOutcome::second)
      scores[outcome.doc_b] += 1.0;
  }
  return scores;
}

std::map<std::string, double> preference_scores(
    const JudgeContext &ctx, const std::string &qid, const std::string &query,
    const std::vector<std::pair<std::string, std::string>> &docs_with_texts,
    std::size_t budget_per_doc, std::uint64_t seed) {
  std::map<std::string, std::string> texts;
  std::vector<std::string> docs;
  for (const auto &[doc, text] : docs_with_texts) {
    if (texts.emplace(doc, text).second) docs.push_back(doc);
  }
  auto pairs = sample_pairs(docs, budget_per_doc, seed);
  std::vector<PreferenceOutcome> outcomes;
  outcomes.reserve(pairs.size());
  for (const auto &[a, b] : pairs) {
    try {
      outcomes.push_back(judge_pair(ctx, qid, query, a, texts.at(a), b, texts.at(b)));
    } catch (const Error &) {
      // the pair drops out; remaining pairs still count
    }
  }
  return borda_scores(docs, outcomes);
}

// ---- nugget set persistence ---------------------------------------------

std::string exam_set_to_json(const ExamNuggetSet &set) {
  nlohmann::json j;
  j["qid"] = set.qid;
  j["nuggets"] = set.nuggets;
  return j.dump();
}

ExamNuggetSet exam_set_from_json(std::string_view line) {
  try {
    auto j = nlohmann::json::parse(line);
    ExamNuggetSet set;
    set.qid = j.at("qid").get<std::string>();
    set.nuggets = j.at("nuggets").get<std::vector<std::string>>();
    return set;
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(std::string("bad exam nugget record: ") + e.what());
  }
}

std::string autonugget_set_to_json(const AutoNuggetSet &set) {
  nlohmann::json j;
  j["qid"] = set.qid;
  j["nuggets"] = nlohmann::json::array();
  for (const auto &nugget : set.nuggets)
    j["nuggets"].push_back({{"text", nugget.text}, {"importance", nugget.importance}});
  j["source_docs"] = set.source_docs;
  return j.dump();
}

AutoNuggetSet autonugget_set_from_json(std::string_view line) {
  try {
    auto j = nlohmann::json::parse(line);
    AutoNuggetSet set;
    set.qid = j.at("qid").get<std::string>();
    for (const auto &item : j.at("nuggets"))
      set.nuggets.push_back(
          {item.at("text").get<std::string>(), item.at("importance").get<std::string>()});
    set.source_docs = j.value("source_docs", std::vector<std::string>{});
    return set;
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(std::string("bad autonugget record: ") + e.what());
  }
}

}  // namespace relassay
