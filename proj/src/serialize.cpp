#include "factlab/serialize.hpp"

#include <iomanip>
#include <sstream>

#include "factlab/errors.hpp"
#include "factlab/text.hpp"

namespace factlab {

namespace {

template <typename T>
Json opt(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

const Json& field(const Json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) {
    throw ParseError(std::string("missing field '") + name + "'");
  }
  return j.at(name);
}

std::string get_string(const Json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_string()) throw ParseError(std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

std::optional<std::string> get_opt_string(const Json& j, const char* name) {
  if (!j.contains(name) || j.at(name).is_null()) return std::nullopt;
  return get_string(j, name);
}

double get_number(const Json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_number()) throw ParseError(std::string("field '") + name + "' must be a number");
  return v.get<double>();
}

bool get_bool(const Json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_boolean()) throw ParseError(std::string("field '") + name + "' must be a boolean");
  return v.get<bool>();
}

template <typename E>
E get_enum(const Json& j, const char* name, std::optional<E> (*from)(std::string_view)) {
  auto s = get_string(j, name);
  auto v = from(s);
  if (!v) throw ParseError(std::string("field '") + name + "' has invalid value '" + s + "'");
  return *v;
}

std::vector<std::string> get_strings(const Json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_array()) throw ParseError(std::string("field '") + name + "' must be an array");
  std::vector<std::string> out;
  for (const auto& x : v) {
    if (!x.is_string()) throw ParseError(std::string("field '") + name + "' must hold strings");
    out.push_back(x.get<std::string>());
  }
  return out;
}

std::optional<ConflictResolution> resolution_from_string(std::string_view s) {
  for (auto r : {ConflictResolution::retain_a, ConflictResolution::retain_b,
                 ConflictResolution::retain_both_flag_uncertainty}) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

std::optional<CallOutcome> outcome_from_string(std::string_view s) {
  for (auto o : {CallOutcome::ok, CallOutcome::empty, CallOutcome::error}) {
    if (to_string(o) == s) return o;
  }
  return std::nullopt;
}

NumericRecord numeric_from_json(const Json& j) {
  NumericRecord n;
  n.kind = get_string(j, "kind");
  n.expression = get_string(j, "expression");
  const auto& computed = field(j, "computed");
  n.computed = get_string(computed, "value");
  n.computed_exact = get_bool(computed, "exact");
  const auto& asserted = field(j, "asserted");
  n.asserted = get_string(asserted, "value");
  n.asserted_exact = get_bool(asserted, "exact");
  n.tolerance = get_number(j, "tolerance_used");
  if (!field(j, "holds").is_null()) n.holds = get_bool(j, "holds");
  n.explanation = get_string(j, "explanation");
  return n;
}

std::optional<NumericRecord> opt_numeric(const Json& j, const char* name) {
  if (!j.contains(name) || j.at(name).is_null()) return std::nullopt;
  return numeric_from_json(j.at(name));
}

std::string fixed2(double v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(2) << v;
  return ss.str();
}

}  // namespace

Json to_json(const Claim& c) {
  Json j;
  j["id"] = c.id;
  j["text"] = c.text;
  j["topic_hint"] = opt(c.topic_hint);
  j["label_scheme"] = to_string(c.label_scheme);
  return j;
}

Json to_json(const PlanStep& s) {
  Json j;
  j["sequence_index"] = s.sequence_index;
  j["sub_claim"] = s.sub_claim;
  j["tool"] = to_string(s.tool);
  j["rationale"] = s.rationale;
  j["search_terms"] = opt(s.search_terms);
  return j;
}

Json to_json(const Plan& p) {
  Json j;
  j["revision"] = p.revision;
  j["direct_synthesis"] = p.direct_synthesis;
  j["steps"] = Json::array();
  for (const auto& s : p.steps) j["steps"].push_back(to_json(s));
  j["notes"] = p.notes;
  return j;
}

Json to_json(const NumericRecord& n) {
  Json j;
  j["kind"] = n.kind;
  j["expression"] = n.expression;
  j["computed"] = {{"value", n.computed}, {"exact", n.computed_exact}};
  j["asserted"] = {{"value", n.asserted}, {"exact", n.asserted_exact}};
  j["tolerance_used"] = n.tolerance;
  j["holds"] = opt(n.holds);
  j["explanation"] = n.explanation;
  return j;
}

Json to_json(const Evidence& e) {
  Json j;
  j["id"] = e.id;
  j["sub_claim"] = e.sub_claim;
  j["content"] = e.content;
  j["source_url"] = opt(e.source_url);
  j["source_domain"] = opt(e.source_domain);
  j["publication_date"] = opt(e.publication_date);
  j["search_terms"] = opt(e.search_terms);
  j["credibility_tier"] = to_string(e.credibility_tier);
  j["credibility_score"] = e.credibility_score;
  j["stance"] = to_string(e.stance);
  j["relevance_label"] = to_string(e.relevance_label);
  j["origin_tool"] = to_string(e.origin_tool);
  j["retained"] = e.retained;
  j["numeric"] = e.numeric ? to_json(*e.numeric) : Json(nullptr);
  return j;
}

Json to_json(const CredibilityAssessment& a) {
  Json j;
  j["evidence_id"] = a.evidence_id;
  j["domain"] = a.domain;
  j["tier"] = to_string(a.tier);
  j["score"] = a.score;
  return j;
}

Json to_json(const ToolCallRecord& r) {
  Json j;
  j["step_index"] = r.step_index;
  j["tool"] = to_string(r.tool);
  j["input_summary"] = r.input_summary;
  j["outcome"] = to_string(r.outcome);
  j["evidence_ids"] = r.evidence_ids;
  j["wall_time_ms"] = r.wall_time_ms;
  j["observation"] = r.observation;
  j["assessments"] = Json::array();
  for (const auto& a : r.assessments) j["assessments"].push_back(to_json(a));
  return j;
}

Json to_json(const Verdict& v) {
  Json j;
  j["scheme"] = to_string(v.scheme);
  j["binary_label"] = v.binary_label ? Json(to_string(*v.binary_label)) : Json(nullptr);
  j["six_level_label"] = v.six_level_label ? Json(to_string(*v.six_level_label)) : Json(nullptr);
  j["support_score"] = v.support_score;
  j["certainty"] = to_string(v.certainty);
  return j;
}

Json to_json(const ConflictPair& c) {
  Json j;
  j["evidence_a"] = c.evidence_a;
  j["evidence_b"] = c.evidence_b;
  j["sub_claim"] = c.sub_claim;
  j["resolution"] = to_string(c.resolution);
  return j;
}

Json to_json(const ReasoningStep& s) {
  Json j;
  j["evidence_ids"] = s.evidence_ids;
  j["sub_claim"] = s.sub_claim;
  j["stance"] = to_string(s.stance);
  j["relevance"] = to_string(s.relevance);
  j["credibility_tier"] = to_string(s.credibility_tier);
  j["credibility_score"] = s.credibility_score;
  j["weight"] = s.weight;
  j["excerpt"] = s.excerpt;
  j["inference"] = s.inference;
  j["numeric"] = s.numeric ? to_json(*s.numeric) : Json(nullptr);
  return j;
}

Json to_json(const Citation& c) {
  Json j;
  j["evidence_id"] = c.evidence_id;
  j["source_url"] = c.source_url;
  j["publication_date"] = opt(c.publication_date);
  return j;
}

Json to_json(const Report& r) {
  Json j;
  j["claim"] = to_json(r.claim);
  j["verdict"] = to_json(r.verdict);
  j["model_knowledge_only"] = r.model_knowledge_only;
  j["summary"] = r.summary;
  j["reasoning_chain"] = Json::array();
  for (const auto& s : r.reasoning_chain) j["reasoning_chain"].push_back(to_json(s));
  j["citations"] = Json::array();
  for (const auto& c : r.citations) j["citations"].push_back(to_json(c));
  j["limitations"] = r.limitations;
  j["conflicts"] = Json::array();
  for (const auto& c : r.conflicts) j["conflicts"].push_back(to_json(c));
  j["plan_history"] = Json::array();
  for (const auto& p : r.plan_history) j["plan_history"].push_back(to_json(p));
  return j;
}

Claim claim_from_json(const Json& j) {
  Claim c;
  c.id = get_string(j, "id");
  c.text = get_string(j, "text");
  c.topic_hint = get_opt_string(j, "topic_hint");
  c.label_scheme = get_enum(j, "label_scheme", scheme_from_string);
  return c;
}

Plan plan_from_json(const Json& j) {
  Plan p;
  p.revision = static_cast<std::uint32_t>(get_number(j, "revision"));
  p.direct_synthesis = get_bool(j, "direct_synthesis");
  for (const auto& s : field(j, "steps")) {
    PlanStep step;
    step.sequence_index = static_cast<std::size_t>(get_number(s, "sequence_index"));
    step.sub_claim = get_string(s, "sub_claim");
    step.tool = get_enum(s, "tool", tool_from_string);
    step.rationale = get_string(s, "rationale");
    step.search_terms = get_opt_string(s, "search_terms");
    p.steps.push_back(std::move(step));
  }
  p.notes = get_strings(j, "notes");
  return p;
}

Evidence evidence_from_json(const Json& j) {
  Evidence e;
  e.id = get_string(j, "id");
  e.sub_claim = get_string(j, "sub_claim");
  e.content = get_string(j, "content");
  e.source_url = get_opt_string(j, "source_url");
  e.source_domain = get_opt_string(j, "source_domain");
  e.publication_date = get_opt_string(j, "publication_date");
  e.search_terms = get_opt_string(j, "search_terms");
  e.credibility_tier = get_enum(j, "credibility_tier", tier_from_string);
  e.credibility_score = get_number(j, "credibility_score");
  e.stance = get_enum(j, "stance", stance_from_string);
  e.relevance_label = get_enum(j, "relevance_label", relevance_from_string);
  e.origin_tool = get_enum(j, "origin_tool", tool_from_string);
  e.retained = get_bool(j, "retained");
  e.numeric = opt_numeric(j, "numeric");
  return e;
}

ToolCallRecord tool_call_from_json(const Json& j) {
  ToolCallRecord r;
  r.step_index = static_cast<std::size_t>(get_number(j, "step_index"));
  r.tool = get_enum(j, "tool", tool_from_string);
  r.input_summary = get_string(j, "input_summary");
  r.outcome = get_enum(j, "outcome", outcome_from_string);
  r.evidence_ids = get_strings(j, "evidence_ids");
  r.wall_time_ms = static_cast<std::int64_t>(get_number(j, "wall_time_ms"));
  r.observation = get_string(j, "observation");
  for (const auto& a : field(j, "assessments")) {
    CredibilityAssessment ca;
    ca.evidence_id = get_string(a, "evidence_id");
    ca.domain = get_string(a, "domain");
    ca.tier = get_enum(a, "tier", tier_from_string);
    ca.score = get_number(a, "score");
    r.assessments.push_back(std::move(ca));
  }
  return r;
}

Report report_from_json(const Json& j) {
  Report r;
  r.claim = claim_from_json(field(j, "claim"));
  const auto& v = field(j, "verdict");
  r.verdict.scheme = get_enum(v, "scheme", scheme_from_string);
  if (!field(v, "binary_label").is_null()) {
    r.verdict.binary_label = get_enum(v, "binary_label", binary_label_from_string);
  }
  if (!field(v, "six_level_label").is_null()) {
    r.verdict.six_level_label = get_enum(v, "six_level_label", six_level_from_string);
  }
  r.verdict.support_score = get_number(v, "support_score");
  r.verdict.certainty = get_enum(v, "certainty", certainty_from_string);
  r.model_knowledge_only = get_bool(j, "model_knowledge_only");
  r.summary = get_string(j, "summary");
  for (const auto& s : field(j, "reasoning_chain")) {
    ReasoningStep step;
    step.evidence_ids = get_strings(s, "evidence_ids");
    step.sub_claim = get_string(s, "sub_claim");
    step.stance = get_enum(s, "stance", stance_from_string);
    step.relevance = get_enum(s, "relevance", relevance_from_string);
    step.credibility_tier = get_enum(s, "credibility_tier", tier_from_string);
    step.credibility_score = get_number(s, "credibility_score");
    step.weight = get_number(s, "weight");
    step.excerpt = get_string(s, "excerpt");
    step.inference = get_string(s, "inference");
    step.numeric = opt_numeric(s, "numeric");
    r.reasoning_chain.push_back(std::move(step));
  }
  for (const auto& c : field(j, "citations")) {
    r.citations.push_back({get_string(c, "evidence_id"), get_string(c, "source_url"),
                           get_opt_string(c, "publication_date")});
  }
  r.limitations = get_strings(j, "limitations");
  for (const auto& c : field(j, "conflicts")) {
    r.conflicts.push_back({get_string(c, "evidence_a"), get_string(c, "evidence_b"),
                           get_string(c, "sub_claim"),
                           get_enum(c, "resolution", resolution_from_string)});
  }
  for (const auto& p : field(j, "plan_history")) r.plan_history.push_back(plan_from_json(p));
  return r;
}

std::string report_to_string(const Report& r) { return to_json(r).dump(2) + "\n"; }

Json trace_line(const Evidence& e) {
  Json j;
  j["kind"] = "evidence";
  j.update(to_json(e));
  return j;
}

Json trace_line(const ToolCallRecord& r) {
  Json j;
  j["kind"] = "tool_call";
  j.update(to_json(r));
  return j;
}

std::string log_to_jsonl(const EvidenceLog& log) {
  std::string out;
  for (const auto& rec : log.tool_trace()) {
    for (const auto& id : rec.evidence_ids) {
      out += trace_line(*log.find(id)).dump();
      out += '\n';
    }
    out += trace_line(rec).dump();
    out += '\n';
  }
  return out;
}

EvidenceLog log_from_jsonl(const std::string& data, std::string task_id) {
  EvidenceLog log(std::move(task_id));
  std::size_t lineno = 0;
  for (const auto& line : text::split(data, '\n')) {
    ++lineno;
    if (text::is_blank(line)) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError("trace line " + std::to_string(lineno) + ": " + ex.what());
    }
    auto kind = get_string(j, "kind");
    if (kind == "evidence") {
      log.append(evidence_from_json(j));
    } else if (kind == "tool_call") {
      auto rec = tool_call_from_json(j);
      // Live traces print evidence before it is assessed; replay the annotation.
      for (const auto& a : rec.assessments) {
        const Evidence* e = log.find(a.evidence_id);
        if (e != nullptr && e->credibility_tier == CredibilityTier::unknown && a.tier != CredibilityTier::unknown) {
          log.set_credibility(a.evidence_id, a.tier, a.score, a.domain);
        }
      }
      log.record(std::move(rec));
    } else if (kind == "run" || kind == "plan") {
      continue;  // run metadata, not part of the log
    } else {
      throw ParseError("trace line " + std::to_string(lineno) + ": unknown kind '" + kind + "'");
    }
  }
  return log;
}

std::string render_text(const Report& r) {
  std::ostringstream out;
  out << "Claim [" << r.claim.id << "]: " << r.claim.text << "\n\n";
  out << "== Verdict ==\n";
  out << "  label:     " << r.verdict.label() << " (" << to_string(r.verdict.scheme) << ")\n";
  out << "  support:   " << fixed2(r.verdict.support_score) << "\n";
  out << "  certainty: " << to_string(r.verdict.certainty) << "\n";
  if (r.model_knowledge_only) out << "  basis:     model knowledge only\n";
  if (!r.summary.empty()) out << "  summary:   " << r.summary << "\n";

  out << "\n== Reasoning ==\n";
  if (r.reasoning_chain.empty()) out << "  (no retained evidence)\n";
  for (std::size_t i = 0; i < r.reasoning_chain.size(); ++i) {
    const auto& s = r.reasoning_chain[i];
    out << "  " << (i + 1) << ". [" << text::join(s.evidence_ids, ",") << "] " << to_string(s.stance)
        << ", " << to_string(s.credibility_tier) << " credibility, weight " << fixed2(s.weight) << "\n";
    out << "     " << s.inference << "\n";
  }

  out << "\n== Citations ==\n";
  if (r.citations.empty()) out << "  (none)\n";
  for (const auto& c : r.citations) {
    out << "  [" << c.evidence_id << "] " << c.source_url;
    if (c.publication_date) out << " (" << *c.publication_date << ")";
    out << "\n";
  }

  out << "\n== Limitations ==\n";
  if (r.limitations.empty()) out << "  (none)\n";
  for (const auto& l : r.limitations) out << "  - " << l << "\n";

  out << "\n== Plan history ==\n";
  for (const auto& p : r.plan_history) {
    out << "  revision " << p.revision << (p.direct_synthesis ? " (direct synthesis)" : "") << "\n";
    for (const auto& s : p.steps) {
      out << "    " << s.sequence_index << ". " << to_string(s.tool) << ": " << s.sub_claim << "\n";
    }
    for (const auto& n : p.notes) out << "    note: " << n << "\n";
  }
  return out.str();
}

}  // namespace factlab
