#pragma once

// Evidence integration: conflict resolution by credibility, weighted support,
// verdict mapping and report assembly.

#include <optional>
#include <string>
#include <vector>

#include "factlab/llm.hpp"
#include "factlab/model.hpp"

namespace factlab {

class PromptLibrary;

// credibility_score × relevance value.
double evidence_weight(const Evidence& e);

// Within each sub-claim, the best-credentialed supporting item is weighed
// against the best-credentialed contradicting item. The strictly higher side
// wins and every item of the losing side is paired with the winner and
// dropped (retained=false). On a tie the two tops are both kept and flagged,
// and every other item is compared with the opposing top: equal credibility
// is another flagged tie, lower credibility drops it. Items with zero
// relevance or irrelevant stance never take part. In each pair, evidence_a is
// the supporting item.
std::vector<ConflictPair> resolve_conflicts(EvidenceLog& log);

struct SupportSummary {
  double support = 0.0;        // in [-1, 1], rounded to 1e-9
  double total_weight = 0.0;
  std::size_t retained_count = 0;  // retained items with a stance and non-zero weight
};

SupportSummary summarize_support(const EvidenceLog& log);
double aggregate_support(const EvidenceLog& log);

// `zero_weight` marks a run with nothing to weigh: binary yields unverified,
// certainty is low either way.
Verdict map_verdict(double support, LabelScheme scheme, const ScoreConfig& sc, std::size_t retained_count,
                    bool tie_flagged = false, bool zero_weight = false);

struct RenderContext {
  // Limitations gathered while executing, in order.
  std::vector<std::string> notes;
  // Set to the budget when the tool-call budget cut the plan short.
  std::optional<std::size_t> budget_exhausted;
  bool model_knowledge_only = false;
  // Summary supplied by the caller (LLM-only judgment); skips the narrative call.
  std::optional<std::string> summary_override;
};

// The chain and citations are assembled from the log alone; the narrative
// model call only supplies prose. `llm` may be null, and a failing narrative
// call falls back to template text.
Report render(const Claim& claim, const Verdict& verdict, const EvidenceLog& log,
              const std::vector<ConflictPair>& conflicts, const std::vector<Plan>& plans, LlmClient* llm,
              const PromptLibrary& prompts, const RenderContext& ctx);

struct Synthesis {
  Report report;
  std::vector<ConflictPair> conflicts;
  SupportSummary support;
};

// resolve_conflicts, summarize_support, map_verdict and render in sequence.
Synthesis synthesize(const Claim& claim, EvidenceLog& log, const std::vector<Plan>& plans, const ScoreConfig& sc,
                     LlmClient* llm, const PromptLibrary& prompts, const RenderContext& ctx);

}  // namespace factlab
