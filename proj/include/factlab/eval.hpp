#pragma once

// Evaluation harness: dataset loaders, classification and report-quality
// metrics, the three-run judge, ablations and the rewriting ladder.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "factlab/llm.hpp"
#include "factlab/model.hpp"
#include "factlab/orchestrator.hpp"
#include "factlab/serialize.hpp"

namespace factlab {

class PromptLibrary;

// ---- datasets --------------------------------------------------------------

struct DatasetRecord {
  std::string id;
  std::string text;
  std::string gold_label;
  LabelScheme scheme = LabelScheme::binary;
  std::optional<std::string> source;
  std::optional<std::string> date;

  Claim to_claim() const;
  bool operator==(const DatasetRecord&) const = default;
};

enum class DatasetFormat { fakenewsnet, liar, covid, generic_jsonl };
std::string_view to_string(DatasetFormat f);
std::optional<DatasetFormat> dataset_format_from_string(std::string_view s);

Json to_json(const DatasetRecord& r);

// Throws IoError, ParseError (naming the row) for unknown labels or missing
// columns, DuplicateIdError for repeated ids.
std::vector<DatasetRecord> load_dataset(const std::string& path, DatasetFormat format);
std::vector<DatasetRecord> parse_dataset(std::string_view data, DatasetFormat format,
                                         const std::string& source_name = "");

// Seeded Fisher-Yates shuffle, first `limit` records kept, file order
// restored. limit == 0 or >= size keeps everything.
std::vector<DatasetRecord> subsample(const std::vector<DatasetRecord>& records, std::size_t limit,
                                     std::uint64_t seed);

// ---- classification metrics ------------------------------------------------

inline constexpr const char* kUnverified = "unverified";

struct ClassScores {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;  // gold count
};

struct MetricScores {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t n = 0;
  std::size_t unverified = 0;
  std::vector<ClassScores> per_class;
};

// 2PR/(P+R), 0 when P+R == 0. Works on fractions or percentages alike.
double f1_score(double precision, double recall);

// Binary: positive class "fake". Six-level: macro precision and recall over
// the classes present in gold or predictions, F1 from those means.
// Predictions may be "unverified", which is always wrong. Throws
// ValidationError for a length mismatch, empty input or an out-of-scheme
// label.
MetricScores classification_metrics(const std::vector<std::string>& pred, const std::vector<std::string>& gold,
                                    LabelScheme scheme);

Json to_json(const MetricScores& m);

// ---- report quality ---------------------------------------------------------

// Mean of values in {1.0, 0.5, 0.0}; empty -> 0. Throws ValidationError.
double relevance_score(const std::vector<double>& labels);
// Mean of values in {1.0, 0.0, -1.0} clamped below at 0; empty -> 0.
double consistency_score(const std::vector<double>& labels);
// The same mean without the clamp, reported as a diagnostic.
double consistency_mean(const std::vector<double>& labels);
// min(1, 0.2 * relevant_count).
double diversity_score(std::size_t relevant_count);

struct ReportQuality {
  double relevance = 0.0;
  double consistency = 0.0;
  double diversity = 0.0;
  double consistency_unclamped = 0.0;
};

Json to_json(const ReportQuality& q);

// Component-wise mean of the per-run triples derived from judge payloads.
ReportQuality average_judgments(const std::vector<JudgePayload>& runs);

inline constexpr unsigned kJudgeRuns = 3;

// Three judge_scores calls with one identical prompt, averaged. Any failed
// run throws EvaluationError; nothing partial is returned.
ReportQuality judge_report(const Report& report, LlmClient& llm, const PromptLibrary& prompts);

// ---- batch runs -------------------------------------------------------------

// Fresh LLM client for one task key.
using LlmFactory = std::function<std::shared_ptr<LlmClient>(const std::string& task_key)>;

struct TaskResult {
  std::string id;
  std::string gold;
  std::string predicted;  // "unverified" when the run failed
  std::optional<VerificationOutcome> outcome;
  std::optional<std::string> error;
  std::vector<Json> trace;
};

struct BatchOptions {
  unsigned jobs = 1;
  bool capture_trace = true;
  std::string key_prefix;  // prepended as "<prefix>/" to each task key
};

struct BatchResult {
  std::vector<TaskResult> tasks;  // input order
  MetricScores metrics;
};

// Verifies every record. Failures become unverified predictions; the batch
// itself only throws for a mixed-scheme dataset.
BatchResult run_batch(const std::vector<DatasetRecord>& records, const AgentConfig& cfg, const LlmFactory& llm,
                      const Toolset& tools, const PromptLibrary& prompts, std::shared_ptr<const Clock> clock,
                      const BatchOptions& opts = {});

// ---- ablation ----------------------------------------------------------------

struct AblationVariant {
  std::string name;
  AgentConfig config;
};

// "Full Agent", "w/o Web Search", "w/o Credibility Assessment",
// "w/o Numerical Verification", "LLM Only", derived from `base`.
std::vector<AblationVariant> canonical_ablation(const AgentConfig& base);

struct AblationRow {
  std::string name;
  MetricScores metrics;
  std::size_t tool_calls = 0;
  // Trace records naming a tool the variant disabled; must be zero.
  std::size_t disabled_tool_records = 0;
  BatchResult batch;
};

// Task keys are "<variant name>/<record id>".
std::vector<AblationRow> run_ablation(const std::vector<AblationVariant>& variants,
                                      const std::vector<DatasetRecord>& records, const LlmFactory& llm,
                                      const Toolset& tools, const PromptLibrary& prompts,
                                      std::shared_ptr<const Clock> clock, unsigned jobs = 1);

std::string ablation_csv(const std::vector<AblationRow>& rows);
Json ablation_json(const std::vector<AblationRow>& rows);

// ---- robustness ---------------------------------------------------------------

enum class PerturbationLevel { L0_original, L1_paraphrase, L2_restructure, L3_whitewash };
inline constexpr PerturbationLevel kAllLevels[] = {PerturbationLevel::L0_original, PerturbationLevel::L1_paraphrase,
                                                  PerturbationLevel::L2_restructure,
                                                  PerturbationLevel::L3_whitewash};
std::string_view to_string(PerturbationLevel l);
// Accepts "L1" or "L1_paraphrase".
std::optional<PerturbationLevel> level_from_string(std::string_view s);

class Rewriter {
 public:
  virtual ~Rewriter() = default;
  virtual std::string rewrite(const std::string& text, PerturbationLevel level) = 0;
};

// {"L1": {"original text": "rewrite", ...}, "L2": {...}}. A miss throws
// EvaluationError.
class FixtureRewriter final : public Rewriter {
 public:
  static FixtureRewriter from_json(const Json& j);
  static FixtureRewriter load(const std::string& path);
  std::string rewrite(const std::string& text, PerturbationLevel level) override;

 private:
  std::map<PerturbationLevel, std::map<std::string, std::string>> table_;
};

class LlmRewriter final : public Rewriter {
 public:
  LlmRewriter(LlmClient& llm, const PromptLibrary& prompts) : llm_(llm), prompts_(prompts) {}
  std::string rewrite(const std::string& text, PerturbationLevel level) override;

 private:
  LlmClient& llm_;
  const PromptLibrary& prompts_;
};

// L0 returns the text unchanged. Above L0 the rewrite must differ from the
// input token-wise; an echo or a rewriter failure throws EvaluationError.
std::string perturb(const std::string& text, PerturbationLevel level, Rewriter& rewriter);

// Same ids and gold labels, rewritten text.
std::vector<DatasetRecord> perturb_dataset(const std::vector<DatasetRecord>& records, PerturbationLevel level,
                                           Rewriter& rewriter);

// baseline - perturbed in percentage points, rounded to one decimal. Throws
// ValidationError for inputs outside [0, 100].
double accuracy_drop(double baseline_acc, double perturbed_acc);

struct RobustnessRow {
  PerturbationLevel level = PerturbationLevel::L0_original;
  MetricScores metrics;
  double drop = 0.0;  // vs L0, percentage points
  BatchResult batch;
};

// Task keys are "<level>/<record id>".
std::vector<RobustnessRow> run_robustness(const std::vector<DatasetRecord>& records,
                                          const std::vector<PerturbationLevel>& levels, Rewriter& rewriter,
                                          const AgentConfig& cfg, const LlmFactory& llm, const Toolset& tools,
                                          const PromptLibrary& prompts, std::shared_ptr<const Clock> clock,
                                          unsigned jobs = 1);

std::string robustness_csv(const std::vector<RobustnessRow>& rows);
Json robustness_json(const std::vector<RobustnessRow>& rows);

// Predictions table for batch runs.
std::string batch_csv(const BatchResult& b);
Json batch_json(const BatchResult& b);

}  // namespace factlab
