#pragma once

// The verification agent: plan, then a ReAct loop (act, observe, reflect)
// under a tool-call budget, then synthesis.

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "factlab/clock.hpp"
#include "factlab/credibility.hpp"
#include "factlab/llm.hpp"
#include "factlab/model.hpp"
#include "factlab/numeric.hpp"
#include "factlab/search.hpp"
#include "factlab/serialize.hpp"

namespace factlab {

class PromptLibrary;

struct AgentConfig {
  std::set<Tool> enabled_tools = {kAllTools.begin(), kAllTools.end()};
  std::size_t max_tool_calls = 8;
  unsigned max_search_reformulations = 3;
  ScoreConfig score_config;
  std::size_t max_results = 5;
  std::size_t content_cap = kDefaultContentCap;
  std::size_t memory_k = 3;  // entries shown to the reflection prompt
  double numeric_tolerance = kDefaultRelativeTolerance;

  bool enabled(Tool t) const { return enabled_tools.count(t) != 0; }
  // Throws ValidationError.
  void validate() const;
};

enum class Termination { plan_complete, budget_exhausted, unrecoverable_error };
std::string_view to_string(Termination t);

struct Toolset {
  std::shared_ptr<SearchProvider> search;
  std::shared_ptr<const ReliabilityDataset> reliability;
};

// Everything one task needs besides the claim and config. The LLM client is
// per task; search provider and dataset may be shared across tasks.
struct AgentContext {
  LlmClient& llm;
  const PromptLibrary& prompts;
  Toolset tools;
  std::shared_ptr<const Clock> clock;
  TraceSink trace;  // may be empty
};

// Stage 1. Steps naming disabled tools are dropped; a numeric step is added
// when the claim states numbers and the tool is enabled; a credibility step
// follows the last search when credibility is enabled. No enabled tools gives
// a zero-step direct-synthesis plan without any model call. Model failures
// propagate.
Plan plan(const Claim& claim, const AgentConfig& cfg, LlmClient& llm, const PromptLibrary& prompts);

struct ExecutionResult {
  EvidenceLog log;
  std::vector<Plan> plans;          // every revision, in order
  std::vector<std::string> notes;   // limitations observed while executing
  Termination terminated_by = Termination::plan_complete;
  std::optional<std::string> failure;
};

// Stage 2. Tool errors are recorded and the loop goes on; a model failure in
// reflection ends the run with the partial log.
ExecutionResult execute(const Claim& claim, const Plan& initial, const AgentConfig& cfg, AgentContext& ctx);

struct VerificationOutcome {
  Report report;
  EvidenceLog log;
  Termination terminated_by = Termination::plan_complete;
};

// All three stages. Always returns a report; degraded runs carry an
// unverified (or lowest-certainty) verdict and explain why.
VerificationOutcome verify(const Claim& claim, const AgentConfig& cfg, AgentContext& ctx);

}  // namespace factlab
