#ifndef RELASSAY_JUDGES_H_
#define RELASSAY_JUDGES_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gateway.h"

namespace relassay {

// Analysis-level method ids. The six nuggets_* ids share one underlying
// assignment pass and differ only in aggregation; the two exam_graded_* ids
// share the graded per-nugget pass.
enum class MethodId {
  binary,
  umbrela,
  exam_binary,
  exam_graded_max,
  exam_graded_mean,
  nuggets_A,
  nuggets_A_strict,
  nuggets_V,
  nuggets_V_strict,
  nuggets_W,
  nuggets_W_strict,
  preferences,
};

const char *method_name(MethodId id);
std::optional<MethodId> parse_method_id(const std::string &name);
std::vector<std::string> all_method_names();
// The stored judging pass backing a method id: binary, umbrela, exam_binary,
// exam_graded, nuggets, or preferences.
std::string storage_pass(MethodId id);

// Prompt templates, editable on disk; missing files fall back to the
// built-in defaults so the library works without an asset directory.
class PromptLibrary {
 public:
  static PromptLibrary builtin();
  static PromptLibrary from_dir(const std::string &dir);
  // writes the built-in texts as one file per stage
  static void write_defaults(const std::string &dir);

  const std::string &system_prompt(const std::string &stage) const;
  const std::string &user_template(const std::string &stage) const;
  const std::string &hash(const std::string &stage) const;  // sha256 of the asset text
  std::vector<std::string> stages() const;

 private:
  struct Prompt {
    std::string system;
    std::string user;
    std::string hash;
  };
  std::map<std::string, Prompt> prompts_;
};

std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string> &values);

struct JudgeContext {
  Gateway *gateway = nullptr;
  const PromptLibrary *prompts = nullptr;
  std::string model;
  double temperature = 0.0;
  int max_tokens = 2048;
};

// ---- completion parsing -----------------------------------------------

// last standalone integer within [lo, hi] in the completion text
std::optional<int> parse_last_int_in_range(std::string_view text, int lo, int hi);
// last standalone uppercase A/B verdict; a bare one-letter reply also counts
std::optional<char> parse_verdict_letter(std::string_view text);
// non-empty lines with list numbering stripped
std::vector<std::string> parse_list_lines(std::string_view text);
// lines normalized to the allowed label set, in order; nullopt unless the
// count matches `expected` exactly
std::optional<std::vector<std::string>> parse_label_lines(std::string_view text,
                                                          const std::vector<std::string> &allowed,
                                                          std::size_t expected);

// ---- pointwise methods -------------------------------------------------

// 0/1 verdict; one reprompt on unparseable output, then JudgeError
int judge_binary(const JudgeContext &ctx, const std::string &qid, const std::string &query,
                 const std::string &doc, const std::string &passage);

// graded 0..3 verdict, same reprompt contract
int judge_graded(const JudgeContext &ctx, const std::string &qid, const std::string &query,
                 const std::string &doc, const std::string &passage);

// ---- document-agnostic nuggets (query-only generation) ------------------

constexpr std::size_t kExamNuggetCount = 10;

struct ExamNuggetSet {
  std::string qid;
  std::vector<std::string> nuggets;  // exactly kExamNuggetCount
};

ExamNuggetSet exam_generate(const JudgeContext &ctx, const std::string &qid,
                            const std::string &query);

enum class ExamMode { binary, graded_max, graded_mean };

// Per-nugget judgments for one document: 0/1 in binary mode, 1..5 otherwise.
// Judged against the nugget questions alone, per the document-agnostic
// design. A nugget whose completion stays unparseable takes the minimum
// value and is flagged.
struct ExamJudgments {
  std::vector<int> values;
  std::vector<std::string> flags;
};
ExamJudgments exam_judge(const JudgeContext &ctx, const ExamNuggetSet &set, bool graded,
                         const std::string &qid, const std::string &doc,
                         const std::string &passage);

double exam_score(const std::vector<int> &values, ExamMode mode);

// ---- document-dependent nuggets ------------------------------------------

constexpr std::size_t kAutoNuggetHardCap = 30;
constexpr std::size_t kAutoNuggetFinalCap = 20;

struct AutoNugget {
  std::string text;
  std::string importance;  // "vital" | "okay"
};

struct AutoNuggetSet {
  std::string qid;
  std::vector<AutoNugget> nuggets;  // sorted vital-first, at most kAutoNuggetFinalCap
  std::vector<std::string> source_docs;
};

// Iterates over the relevant documents, growing and merging the nugget list,
// then tags importance, sorts, and cuts to the final cap.
AutoNuggetSet autonugget_generate(const JudgeContext &ctx, const std::string &qid,
                                  const std::string &query,
                                  const std::vector<std::pair<std::string, std::string>> &relevant_docs);

struct NuggetAssignment {
  std::string qid;
  std::string doc;
  std::vector<std::string> labels;  // support | partial_support | not_support, one per nugget
  std::vector<std::string> flags;
};

NuggetAssignment autonugget_assign(const JudgeContext &ctx, const AutoNuggetSet &set,
                                   const std::string &qid, const std::string &query,
                                   const std::string &doc, const std::string &passage);

enum class NuggetScope { all, vital, weighted };

// Table-style aggregation over one document's labels. Lenient scoring maps
// support/partial/not to 1/0.5/0; strict scoring drops partially supported
// nuggets from numerator and denominator. An empty denominator yields 0 and
// sets *degenerate.
double autonugget_score(const NuggetAssignment &assignment, const AutoNuggetSet &set,
                        NuggetScope scope, bool strict, bool *degenerate = nullptr);

// maps a nuggets_* method id onto (scope, strict)
std::pair<NuggetScope, bool> nugget_variant(MethodId id);

// ---- pairwise preferences -------------------------------------------------

struct PreferenceOutcome {
  std::string qid;
  std::string doc_a;
  std::string doc_b;
  MockPairOutcome result = MockPairOutcome::tie;  // relative to (doc_a, doc_b)
  std::vector<std::string> flags;
};

// Two completions with passage order swapped; a document wins only when both
// orders agree, anything else is a tie.
PreferenceOutcome judge_pair(const JudgeContext &ctx, const std::string &qid,
                             const std::string &query, const std::string &doc_a,
                             const std::string &passage_a, const std::string &doc_b,
                             const std::string &passage_b);

// Seeded sample of unordered pairs: every doc appears in at least one pair
// and the total stays within budget_per_doc * n (never more than all pairs).
std::vector<std::pair<std::string, std::string>> sample_pairs(std::vector<std::string> docs,
                                                              std::size_t budget_per_doc,
                                                              std::uint64_t seed);

// per-doc count of pairings won, ignoring ties
std::map<std::string, double> borda_scores(const std::vector<std::string> &docs,
                                           const std::vector<PreferenceOutcome> &outcomes);

// Samples pairs within the budget, judges each, and aggregates Borda scores.
// Judgment failures surface as flagged ties and never abort the query.
std::map<std::string, double> preference_scores(
    const JudgeContext &ctx, const std::string &qid, const std::string &query,
    const std::vector<std::pair<std::string, std::string>> &docs_with_texts,
    std::size_t budget_per_doc, std::uint64_t seed);

// nugget set persistence (one JSON object per line, keyed by query id)
std::string exam_set_to_json(const ExamNuggetSet &set);
ExamNuggetSet exam_set_from_json(std::string_view line);
std::string autonugget_set_to_json(const AutoNuggetSet &set);
AutoNuggetSet autonugget_set_from_json(std::string_view line);

}  // namespace relassay

#endif  // RELASSAY_JUDGES_H_
