#pragma once

// Domain types shared by every factlab module, plus the per-task evidence log
// ("working memory") and its lexical retrieval.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace factlab {

enum class Tool { web_search, credibility_assessment, numeric_verification };
enum class LabelScheme { binary, six_level };
enum class CredibilityTier { high, medium, low, unknown };
enum class Stance { supporting, irrelevant, contradicting };
enum class RelevanceLabel { highly_relevant, slightly_relevant, irrelevant };
enum class CallOutcome { ok, empty, error };
enum class BinaryLabel { real, fake, unverified };
enum class SixLevelLabel { pants_fire, false_, barely_true, half_true, mostly_true, true_ };
enum class Certainty { high, medium, low };
enum class ConflictResolution { retain_a, retain_b, retain_both_flag_uncertainty };

inline constexpr std::array<Tool, 3> kAllTools = {Tool::web_search, Tool::credibility_assessment,
                                                  Tool::numeric_verification};
inline constexpr std::array<SixLevelLabel, 6> kSixLevels = {
    SixLevelLabel::pants_fire,  SixLevelLabel::false_,      SixLevelLabel::barely_true,
    SixLevelLabel::half_true,   SixLevelLabel::mostly_true, SixLevelLabel::true_};

std::string_view to_string(Tool t);
std::string_view to_string(LabelScheme s);
std::string_view to_string(CredibilityTier t);
std::string_view to_string(Stance s);
std::string_view to_string(RelevanceLabel r);
std::string_view to_string(CallOutcome o);
std::string_view to_string(BinaryLabel l);
std::string_view to_string(SixLevelLabel l);
std::string_view to_string(Certainty c);
std::string_view to_string(ConflictResolution r);

// Strict inverse of to_string; unknown names yield nullopt.
std::optional<Tool> tool_from_string(std::string_view s);
std::optional<LabelScheme> scheme_from_string(std::string_view s);
std::optional<CredibilityTier> tier_from_string(std::string_view s);
std::optional<Stance> stance_from_string(std::string_view s);
std::optional<RelevanceLabel> relevance_from_string(std::string_view s);
std::optional<BinaryLabel> binary_label_from_string(std::string_view s);
std::optional<SixLevelLabel> six_level_from_string(std::string_view s);
std::optional<Certainty> certainty_from_string(std::string_view s);

// +1, 0, -1
double stance_value(Stance s);
// 1.0, 0.5, 0.0
double relevance_value(RelevanceLabel r);

struct Claim {
  std::string id;
  std::string text;
  std::optional<std::string> topic_hint;
  LabelScheme label_scheme = LabelScheme::binary;

  // Throws ValidationError when the text is blank or the id is empty.
  void validate() const;
};

// Throws DuplicateIdError naming the first repeated id.
void validate_unique_ids(const std::vector<Claim>& batch);

struct PlanStep {
  std::string sub_claim;
  Tool tool = Tool::web_search;
  std::string rationale;
  std::size_t sequence_index = 0;
  // Key terms chosen by the planner; only meaningful for web_search steps.
  std::optional<std::string> search_terms;

  bool operator==(const PlanStep&) const = default;
};

struct Plan {
  std::vector<PlanStep> steps;
  std::uint32_t revision = 0;
  // Set for the zero-step plan used when no tools are enabled.
  bool direct_synthesis = false;
  // Planner adjustments: dropped steps, inserted steps, fallbacks.
  std::vector<std::string> notes;

  void reindex();
  // Throws ValidationError on non-contiguous sequence indices, or an empty
  // step list on a plan that is not a direct-synthesis marker.
  void validate() const;

  bool operator==(const Plan&) const = default;
};

// Scoring constants. The relevance, consistency and diversity constants are
// fixed; only the tier mapping, thresholds and certainty minimum vary.
struct ScoreConfig {
  static constexpr double kDiversityIncrement = 0.2;
  static constexpr std::array<double, 3> kRelevanceValues = {1.0, 0.5, 0.0};
  static constexpr std::array<double, 3> kConsistencyValues = {1.0, 0.0, -1.0};

  std::map<CredibilityTier, double> tier_scores = {{CredibilityTier::high, 1.0},
                                                   {CredibilityTier::medium, 0.6},
                                                   {CredibilityTier::low, 0.2},
                                                   {CredibilityTier::unknown, 0.4}};
  double binary_threshold = 0.0;
  std::array<double, 5> six_level_bin_edges = {-0.6, -0.2, 0.0, 0.2, 0.6};
  std::size_t certainty_evidence_min = 2;

  double tier_score(CredibilityTier t) const;
  // Throws ValidationError: tier scores outside (0,1] or not strictly ordered
  // high > medium > low, or bin edges not strictly ascending inside (-1,1).
  void validate() const;
};

// Arithmetic check attached to evidence produced by the numeric tool.
// Rationals are carried as decimal strings with an exactness flag.
struct NumericRecord {
  std::string kind;
  std::string expression;
  std::string computed;
  bool computed_exact = true;
  std::string asserted;
  bool asserted_exact = true;
  double tolerance = 0.0;
  std::optional<bool> holds;  // absent when the check is ill-defined
  std::string explanation;

  bool operator==(const NumericRecord&) const = default;
};

struct Evidence {
  std::string id;
  std::string sub_claim;
  std::string content;
  std::optional<std::string> source_url;
  std::optional<std::string> source_domain;
  std::optional<std::string> publication_date;
  std::optional<std::string> search_terms;
  CredibilityTier credibility_tier = CredibilityTier::unknown;
  double credibility_score = 0.4;
  Stance stance = Stance::irrelevant;
  RelevanceLabel relevance_label = RelevanceLabel::irrelevant;
  Tool origin_tool = Tool::web_search;
  bool retained = true;
  std::optional<NumericRecord> numeric;

  bool operator==(const Evidence&) const = default;
};

struct CredibilityAssessment {
  std::string evidence_id;
  std::string domain;
  CredibilityTier tier = CredibilityTier::unknown;
  double score = 0.0;

  bool operator==(const CredibilityAssessment&) const = default;
};

struct ToolCallRecord {
  std::size_t step_index = 0;
  Tool tool = Tool::web_search;
  std::string input_summary;
  CallOutcome outcome = CallOutcome::ok;
  // Evidence produced by this call. Each log entry is listed by exactly one
  // record.
  std::vector<std::string> evidence_ids;
  std::int64_t wall_time_ms = 0;
  std::string observation;
  // Credibility calls annotate existing evidence instead of producing it.
  std::vector<CredibilityAssessment> assessments;

  bool operator==(const ToolCallRecord&) const = default;
};

class EvidenceLog {
 public:
  EvidenceLog() = default;
  explicit EvidenceLog(std::string task_id) : task_id_(std::move(task_id)) {}

  const std::string& task_id() const { return task_id_; }
  const std::vector<Evidence>& entries() const { return entries_; }
  const std::vector<ToolCallRecord>& tool_trace() const { return trace_; }
  std::size_t size() const { return entries_.size(); }

  // Throws DuplicateIdError when the id is already present.
  void append(Evidence e);
  void record(ToolCallRecord r);

  const Evidence* find(std::string_view id) const;
  bool contains(std::string_view id) const { return find(id) != nullptr; }

  // The only in-place mutations: the synthesis `retained` flag and the one
  // time credibility annotation of an entry still marked unknown.
  void set_retained(std::string_view id, bool retained);
  void set_credibility(std::string_view id, CredibilityTier tier, double score,
                       std::optional<std::string> domain);

  // Next free id of the form "E<n>".
  std::string next_evidence_id() const;

  bool operator==(const EvidenceLog&) const = default;

 private:
  Evidence& at(std::string_view id);

  std::string task_id_;
  std::vector<Evidence> entries_;
  std::vector<ToolCallRecord> trace_;
};

EvidenceLog append_evidence(EvidenceLog log, Evidence e);

// Up to k entries ranked by token-set Jaccard similarity between the query
// and content + sub_claim, earlier entries first on ties. Throws
// ValidationError when k == 0.
std::vector<Evidence> retrieve_relevant(const EvidenceLog& log, std::string_view query,
                                        std::size_t k);

struct Verdict {
  LabelScheme scheme = LabelScheme::binary;
  std::optional<BinaryLabel> binary_label;
  std::optional<SixLevelLabel> six_level_label;
  double support_score = 0.0;
  Certainty certainty = Certainty::low;

  // Printable label regardless of scheme.
  std::string label() const;
  bool operator==(const Verdict&) const = default;
};

struct ConflictPair {
  std::string evidence_a;
  std::string evidence_b;
  std::string sub_claim;
  ConflictResolution resolution = ConflictResolution::retain_both_flag_uncertainty;

  bool operator==(const ConflictPair&) const = default;
};

struct ReasoningStep {
  std::vector<std::string> evidence_ids;
  std::string sub_claim;
  Stance stance = Stance::irrelevant;
  RelevanceLabel relevance = RelevanceLabel::irrelevant;
  CredibilityTier credibility_tier = CredibilityTier::unknown;
  double credibility_score = 0.0;
  double weight = 0.0;
  std::string excerpt;
  std::string inference;
  std::optional<NumericRecord> numeric;

  bool operator==(const ReasoningStep&) const = default;
};

struct Citation {
  std::string evidence_id;
  std::string source_url;
  std::optional<std::string> publication_date;

  bool operator==(const Citation&) const = default;
};

struct Report {
  Claim claim;
  Verdict verdict;
  std::string summary;
  std::vector<ReasoningStep> reasoning_chain;
  std::vector<Citation> citations;
  std::vector<std::string> limitations;
  std::vector<ConflictPair> conflicts;
  std::vector<Plan> plan_history;
  bool model_knowledge_only = false;
};

}  // namespace factlab
