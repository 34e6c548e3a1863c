#pragma once

// Chat-completion gateway with schema-validated structured outputs.
//
// Every call site names the schema it expects; raw model text is parsed
// strictly (unknown fields rejected, enums and ranges checked) and control
// flow only ever branches on the parsed payload. Transport failures are
// retried with exponential backoff; a parse failure earns one repair
// reprompt carrying the validation error, then fails hard.

#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "factlab/clock.hpp"
#include "factlab/model.hpp"
#include "factlab/serialize.hpp"

namespace factlab {

enum class Schema {
  plan,
  stance_and_relevance,
  query_reformulation,
  numeric_extraction,
  synthesis_narrative,
  judge_scores,
  free_text,
  reflection,
  model_judgment,
};

std::string_view to_string(Schema s);
std::optional<Schema> schema_from_string(std::string_view s);

struct ChatRequest {
  std::string system_prompt;
  std::string user_prompt;
  Schema expected_schema = Schema::free_text;
  double temperature = 0.0;
  int max_output_tokens = 1024;
};

// ---- payloads -------------------------------------------------------------

struct PlannedStep {
  std::string sub_claim;
  Tool tool = Tool::web_search;
  std::string rationale;
  std::optional<std::string> search_terms;
  bool operator==(const PlannedStep&) const = default;
};

struct PlanPayload {
  std::vector<PlannedStep> steps;
  bool operator==(const PlanPayload&) const = default;
};

struct StancePayload {
  Stance stance = Stance::irrelevant;
  RelevanceLabel relevance = RelevanceLabel::irrelevant;
  std::optional<std::string> rationale;
  bool operator==(const StancePayload&) const = default;
};

struct ReformulationPayload {
  std::string terms;
  bool operator==(const ReformulationPayload&) const = default;
};

struct NumericLiteral {
  std::string literal;
  std::optional<std::string> unit;
  bool operator==(const NumericLiteral&) const = default;
};

// Candidate structure proposed by the model; grounded and typed by the
// numeric tool before use.
struct NumericCandidate {
  std::string kind;  // relation | percentage_of | sum | difference | ratio
  std::vector<NumericLiteral> operands;
  std::optional<NumericLiteral> asserted;
  std::optional<std::string> relation_op;  // = < > <= >=
  // Code-point range [begin, end) into the analysed text.
  std::optional<std::pair<std::size_t, std::size_t>> span;
  bool exact = false;
  bool operator==(const NumericCandidate&) const = default;
};

struct NumericExtractionPayload {
  std::vector<NumericCandidate> claims;
  bool operator==(const NumericExtractionPayload&) const = default;
};

struct StepInference {
  std::string evidence_id;
  std::string text;
  bool operator==(const StepInference&) const = default;
};

struct NarrativePayload {
  std::string summary;
  std::vector<StepInference> inferences;
  bool operator==(const NarrativePayload&) const = default;
};

struct JudgedEvidence {
  std::string evidence_id;
  double relevance = 0.0;    // 1.0 | 0.5 | 0.0
  double consistency = 0.0;  // 1.0 | 0.0 | -1.0
  bool operator==(const JudgedEvidence&) const = default;
};

struct JudgePayload {
  std::vector<JudgedEvidence> evidence;
  std::size_t relevant_count = 0;
  bool operator==(const JudgePayload&) const = default;
};

enum class ReflectDecision { continue_, replan, stop };
std::string_view to_string(ReflectDecision d);

struct ReflectionPayload {
  ReflectDecision decision = ReflectDecision::continue_;
  std::vector<PlannedStep> new_steps;
  std::optional<std::string> reason;
  bool operator==(const ReflectionPayload&) const = default;
};

struct ModelJudgmentPayload {
  double support = 0.0;  // in [-1, 1]
  std::string rationale;
  bool operator==(const ModelJudgmentPayload&) const = default;
};

struct FreeTextPayload {
  std::string text;
  bool operator==(const FreeTextPayload&) const = default;
};

using Payload = std::variant<PlanPayload, StancePayload, ReformulationPayload,
                             NumericExtractionPayload, NarrativePayload, JudgePayload,
                             FreeTextPayload, ReflectionPayload, ModelJudgmentPayload>;

struct ParseFailure {
  std::string message;  // first violation found
};

using ParseResult = std::variant<Payload, ParseFailure>;

// Never throws. Tolerates a surrounding ```json fence.
ParseResult parse_structured(std::string_view raw, Schema schema);

Schema schema_of(const Payload& p);
Json payload_to_json(const Payload& p);
// Text that parse_structured accepts back as the same payload.
std::string serialize_payload(const Payload& p);

// ---- backends -------------------------------------------------------------

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string provider_id() const = 0;
  // Raw model text. Throws TransportError on network/provider failure.
  virtual std::string send(const ChatRequest& req) = 0;
};

struct ScriptEntry {
  enum class Kind { response, transport_error };
  Kind kind = Kind::response;
  std::string text;

  static ScriptEntry respond(std::string t) { return {Kind::response, std::move(t)}; }
  static ScriptEntry fail(std::string msg) { return {Kind::transport_error, std::move(msg)}; }
  static ScriptEntry respond(const Payload& p) { return respond(serialize_payload(p)); }
};

// Canned responses played back in order. A sequential script serves every
// request from one queue; a keyed script keeps one queue per schema. Running
// past the end is an error, never a repeat.
class ScriptedBackend final : public ChatBackend {
 public:
  explicit ScriptedBackend(std::vector<ScriptEntry> script);
  explicit ScriptedBackend(std::map<Schema, std::vector<ScriptEntry>> keyed);

  std::string provider_id() const override { return "scripted"; }
  std::string send(const ChatRequest& req) override;

  std::vector<ChatRequest> requests() const;
  std::size_t consumed() const;

 private:
  mutable std::mutex mu_;
  std::map<Schema, std::vector<ScriptEntry>> queues_;
  std::map<Schema, std::size_t> cursors_;
  bool sequential_ = true;
  std::size_t consumed_ = 0;
  std::vector<ChatRequest> requests_;
};

// Parses one script: an array (sequential) or an object keyed by schema name.
std::shared_ptr<ScriptedBackend> scripted_backend_from_json(const Json& j);

// Script file for multi-task runs. Either a single script shared (fresh
// cursor) by every task, or {"tasks": {key: script}, "default": script}.
class ScriptBook {
 public:
  static ScriptBook from_json(const Json& j);
  static ScriptBook load(const std::string& path);

  // Fresh backend for one task. A key "variant/id" falls back to "id", then
  // to the default script. Throws ConfigError when no script applies.
  std::shared_ptr<ScriptedBackend> backend_for(const std::string& task_key) const;

 private:
  std::map<std::string, Json> tasks_;
  std::optional<Json> default_;
};

struct HttpChatOptions {
  std::string base_url;  // e.g. https://api.openai.com/v1
  std::string model;
  std::string api_key;
  int timeout_seconds = 60;
};

// OpenAI-compatible chat-completions adapter.
class HttpChatBackend final : public ChatBackend {
 public:
  explicit HttpChatBackend(HttpChatOptions opts);
  std::string provider_id() const override { return "http:" + opts_.model; }
  std::string send(const ChatRequest& req) override;

 private:
  HttpChatOptions opts_;
};

inline constexpr const char* kLlmKeyEnv = "FACTLAB_LLM_API_KEY";

// ---- client ---------------------------------------------------------------

struct RetryPolicy {
  unsigned retries = 2;
  std::chrono::milliseconds backoff{200};
};

struct ChatResponse {
  std::string raw_text;
  ParseResult parsed;
  std::string provider_id;
  std::int64_t latency_ms = 0;
  unsigned repairs = 0;
  unsigned transport_retries = 0;
};

class LlmClient {
 public:
  LlmClient(std::shared_ptr<ChatBackend> backend, RetryPolicy policy = {},
            std::shared_ptr<const Clock> clock = nullptr, Sleeper sleeper = nullptr);

  // Throws ValidationError on empty prompts, TransportError once retries are
  // exhausted, LlmError when the repair reprompt also fails to parse.
  ChatResponse complete(const ChatRequest& req);

  template <typename P>
  P complete_as(const ChatRequest& req) {
    auto resp = complete(req);
    return std::get<P>(std::get<Payload>(resp.parsed));
  }

  unsigned total_repairs() const { return repairs_; }
  ChatBackend& backend() { return *backend_; }

 private:
  std::string send_with_retries(const ChatRequest& req, unsigned& retries_used);

  std::shared_ptr<ChatBackend> backend_;
  RetryPolicy policy_;
  std::shared_ptr<const Clock> clock_;
  Sleeper sleeper_;
  unsigned repairs_ = 0;
};

}  // namespace factlab
