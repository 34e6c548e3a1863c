#pragma once

// Run configuration: a small TOML document plus command-line overrides, and
// the factories that turn it into providers.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "factlab/credibility.hpp"
#include "factlab/eval.hpp"
#include "factlab/llm.hpp"
#include "factlab/orchestrator.hpp"
#include "factlab/prompts.hpp"
#include "factlab/search.hpp"

namespace factlab {

// ---- TOML subset -------------------------------------------------------------
//
// Tables ([name]), bare keys, and values that are strings (basic and
// literal), integers, floats, booleans or single-line arrays of those.

using TomlScalar = std::variant<std::string, std::int64_t, double, bool>;
struct TomlValue {
  std::variant<std::string, std::int64_t, double, bool, std::vector<TomlScalar>> v;
  std::size_t line = 0;
};
// "table.key" -> value; top-level keys have no prefix.
using TomlDocument = std::map<std::string, TomlValue>;

// Throws ParseError naming the line.
TomlDocument parse_toml(std::string_view data);

// ---- run configuration -------------------------------------------------------

enum class LlmProviderKind { scripted, http };
enum class SearchProviderKind { fixture, http, recording };
enum class RewriterKind { fixture, llm };

struct RunConfig {
  LlmProviderKind llm_provider = LlmProviderKind::scripted;
  std::string llm_script;
  HttpChatOptions llm_http;  // api_key filled from the environment only
  RetryPolicy llm_retry;

  SearchProviderKind search_provider = SearchProviderKind::fixture;
  std::string search_fixture;
  HttpSearchOptions search_http;  // api_key filled from the environment only
  std::string record_to;          // fixture file written by the recording provider

  std::string reliability_dataset;
  std::string prompt_dir;  // empty: bundled templates

  AgentConfig agent;

  std::string dataset;
  DatasetFormat dataset_format = DatasetFormat::generic_jsonl;

  RewriterKind rewriter = RewriterKind::fixture;
  std::string rewrite_fixture;
  std::vector<PerturbationLevel> levels = {PerturbationLevel::L1_paraphrase, PerturbationLevel::L2_restructure,
                                           PerturbationLevel::L3_whitewash};

  std::string judge_script;

  std::string out;
  std::string trace;
  std::uint64_t seed = 42;
  std::size_t limit = 0;
  unsigned jobs = 1;
  bool frozen_clock = false;

  // Throws ConfigError: missing script/fixture/dataset paths for the selected
  // providers, missing reliability dataset with credibility enabled, invalid
  // agent settings.
  void validate() const;
};

// Relative paths resolve against `base_dir`. Unknown keys are errors.
RunConfig config_from_toml(const TomlDocument& doc, const std::string& base_dir);
RunConfig load_config(const std::string& path);

// Comma-separated tool names removed from cfg.enabled_tools. Throws
// ConfigError for an unknown tool name.
void disable_tools(AgentConfig& cfg, std::string_view list);

// Throws ConfigError when the variable is unset or empty. The value is never
// echoed.
std::string require_env(const char* name);

// ---- factories ---------------------------------------------------------------

std::shared_ptr<const Clock> make_clock(const RunConfig& rc);

// For http providers the API key is read here, eagerly.
LlmFactory make_llm_factory(const RunConfig& rc, std::shared_ptr<const Clock> clock);
LlmFactory make_llm_factory_from_script(const std::string& script_path, std::shared_ptr<const Clock> clock,
                                        RetryPolicy retry = {});

struct SearchSetup {
  std::shared_ptr<SearchProvider> provider;
  std::shared_ptr<RecordingSearchProvider> recorder;  // set for the recording provider
};
SearchSetup make_search(const RunConfig& rc);

// Empty when credibility assessment is disabled.
std::shared_ptr<const ReliabilityDataset> make_reliability(const RunConfig& rc);

PromptLibrary prompts_for(const RunConfig& rc);

}  // namespace factlab
