#pragma once

// JSON forms of the domain types. Objects keep declaration order so the
// documents read top-down; absent optionals serialize as null.

#include <functional>
#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "factlab/model.hpp"

namespace factlab {

using Json = nlohmann::ordered_json;

Json to_json(const Claim& c);
Json to_json(const PlanStep& s);
Json to_json(const Plan& p);
Json to_json(const NumericRecord& n);
Json to_json(const Evidence& e);
Json to_json(const CredibilityAssessment& a);
Json to_json(const ToolCallRecord& r);
Json to_json(const Verdict& v);
Json to_json(const ConflictPair& c);
Json to_json(const ReasoningStep& s);
Json to_json(const Citation& c);
Json to_json(const Report& r);

// Inverse readers; throw ParseError naming the offending field.
Claim claim_from_json(const Json& j);
Plan plan_from_json(const Json& j);
Evidence evidence_from_json(const Json& j);
ToolCallRecord tool_call_from_json(const Json& j);
Report report_from_json(const Json& j);

// Pretty-printed report document, newline terminated.
std::string report_to_string(const Report& r);

// Trace lines carry a `kind` tag: "evidence" or "tool_call". Live traces also
// hold "run" and "plan" lines, which log_from_jsonl skips.
Json trace_line(const Evidence& e);
Json trace_line(const ToolCallRecord& r);

// Whole-log JSONL: each record's evidence lines precede the record itself,
// in execution order.
std::string log_to_jsonl(const EvidenceLog& log);
// Rebuilds a log from log_to_jsonl output (task id taken from the argument).
EvidenceLog log_from_jsonl(const std::string& data, std::string task_id);

// Receives trace lines as they are produced during a run.
using TraceSink = std::function<void(const Json&)>;

// Fixed section order: Verdict, Reasoning, Citations, Limitations, Plan history.
std::string render_text(const Report& r);

}  // namespace factlab
