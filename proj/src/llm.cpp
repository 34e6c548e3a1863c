#include "factlab/llm.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "factlab/errors.hpp"
#include "factlab/text.hpp"

namespace factlab {

namespace {

constexpr std::array<std::pair<Schema, std::string_view>, 9> kSchemaNames = {{
    {Schema::plan, "plan"},
    {Schema::stance_and_relevance, "stance_and_relevance"},
    {Schema::query_reformulation, "query_reformulation"},
    {Schema::numeric_extraction, "numeric_extraction"},
    {Schema::synthesis_narrative, "synthesis_narrative"},
    {Schema::judge_scores, "judge_scores"},
    {Schema::free_text, "free_text"},
    {Schema::reflection, "reflection"},
    {Schema::model_judgment, "model_judgment"},
}};

const std::set<std::string, std::less<>> kNumericKinds = {"relation", "percentage_of", "sum",
                                                          "difference", "ratio"};

// First validation violation; converted to ParseFailure at the boundary.
struct Violation {
  std::string message;
};

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Violation{path.empty() ? what : path + ": " + what};
}

// Strict view over one JSON object: rejects keys outside `allowed`.
class Obj {
 public:
  Obj(const Json& j, std::string path, std::initializer_list<std::string_view> allowed)
      : j_(j), path_(std::move(path)) {
    if (!j.is_object()) fail(path_, "expected an object");
    for (const auto& [key, _] : j.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        fail(path_, "unknown field '" + key + "'");
      }
    }
  }

  std::string sub(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  bool has(std::string_view key) const {
    auto it = j_.find(std::string(key));
    return it != j_.end() && !it->is_null();
  }

  const Json& at(std::string_view key) const {
    if (!has(key)) fail(sub(key), "required field missing");
    return j_.at(std::string(key));
  }

  std::string str(std::string_view key, bool non_empty = false) const {
    const auto& v = at(key);
    if (!v.is_string()) fail(sub(key), "expected a string");
    auto s = v.get<std::string>();
    if (non_empty && text::is_blank(s)) fail(sub(key), "must not be empty");
    return s;
  }

  std::optional<std::string> opt_str(std::string_view key) const {
    if (!has(key)) return std::nullopt;
    return str(key);
  }

  double num(std::string_view key) const {
    const auto& v = at(key);
    if (!v.is_number()) fail(sub(key), "expected a number");
    double d = v.get<double>();
    if (!std::isfinite(d)) fail(sub(key), "number is not finite");
    return d;
  }

  const Json& arr(std::string_view key) const {
    const auto& v = at(key);
    if (!v.is_array()) fail(sub(key), "expected an array");
    return v;
  }

  template <typename E>
  E enumerated(std::string_view key, std::optional<E> (*from)(std::string_view),
               std::string_view expected) const {
    auto s = str(key);
    auto v = from(s);
    if (!v) {
      fail(sub(key), "invalid enum value '" + s + "' (expected one of " + std::string(expected) + ")");
    }
    return *v;
  }

 private:
  const Json& j_;
  std::string path_;
};

std::string idx(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

PlannedStep read_step(const Json& j, const std::string& path) {
  Obj o(j, path, {"sub_claim", "tool", "rationale", "search_terms"});
  PlannedStep s;
  s.sub_claim = o.str("sub_claim", true);
  s.tool = o.enumerated("tool", tool_from_string,
                        "web_search|credibility_assessment|numeric_verification");
  s.rationale = o.has("rationale") ? o.str("rationale") : std::string();
  s.search_terms = o.opt_str("search_terms");
  if (s.search_terms && text::is_blank(*s.search_terms)) s.search_terms.reset();
  return s;
}

std::vector<PlannedStep> read_steps(const Json& arr, const std::string& path) {
  std::vector<PlannedStep> out;
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(read_step(arr[i], idx(path, i)));
  return out;
}

NumericLiteral read_literal(const Json& j, const std::string& path) {
  NumericLiteral lit;
  if (j.is_string()) {
    lit.literal = j.get<std::string>();
  } else {
    Obj o(j, path, {"literal", "unit"});
    lit.literal = o.str("literal", true);
    lit.unit = o.opt_str("unit");
  }
  if (text::is_blank(lit.literal)) fail(path, "empty numeric literal");
  return lit;
}

std::optional<std::string> read_relation_op(const std::string& s, const std::string& path) {
  if (s == "=" || s == "==") return "=";
  if (s == "<" || s == ">" || s == "<=" || s == ">=") return s;
  if (s == "≤") return "<=";
  if (s == "≥") return ">=";
  fail(path, "invalid enum value '" + s + "' (expected one of =|<|>|<=|>=)");
}

Payload parse_payload(const Json& j, Schema schema) {
  switch (schema) {
    case Schema::plan: {
      Obj o(j, "", {"steps"});
      return PlanPayload{read_steps(o.arr("steps"), "steps")};
    }
    case Schema::stance_and_relevance: {
      Obj o(j, "", {"stance", "relevance", "rationale"});
      StancePayload p;
      p.stance = o.enumerated("stance", stance_from_string, "supporting|irrelevant|contradicting");
      p.relevance = o.enumerated("relevance", relevance_from_string,
                                 "highly_relevant|slightly_relevant|irrelevant");
      p.rationale = o.opt_str("rationale");
      return p;
    }
    case Schema::query_reformulation: {
      Obj o(j, "", {"terms"});
      return ReformulationPayload{text::trim(o.str("terms", true))};
    }
    case Schema::numeric_extraction: {
      Obj o(j, "", {"claims"});
      NumericExtractionPayload p;
      const auto& claims = o.arr("claims");
      for (std::size_t i = 0; i < claims.size(); ++i) {
        auto path = idx("claims", i);
        Obj c(claims[i], path, {"kind", "operands", "asserted", "relation_op", "span", "exact"});
        NumericCandidate cand;
        cand.kind = c.str("kind");
        if (!kNumericKinds.count(cand.kind)) {
          fail(c.sub("kind"), "invalid enum value '" + cand.kind +
                                  "' (expected one of relation|percentage_of|sum|difference|ratio)");
        }
        const auto& ops = c.arr("operands");
        for (std::size_t k = 0; k < ops.size(); ++k) {
          cand.operands.push_back(read_literal(ops[k], idx(c.sub("operands"), k)));
        }
        if (c.has("asserted")) cand.asserted = read_literal(c.at("asserted"), c.sub("asserted"));
        if (c.has("relation_op")) cand.relation_op = read_relation_op(c.str("relation_op"), c.sub("relation_op"));
        if (c.has("span")) {
          const auto& sp = c.arr("span");
          if (sp.size() != 2 || !sp[0].is_number_unsigned() || !sp[1].is_number_unsigned()) {
            fail(c.sub("span"), "expected [begin, end] non-negative integers");
          }
          auto b = sp[0].get<std::size_t>(), e = sp[1].get<std::size_t>();
          if (b > e) fail(c.sub("span"), "out of range: begin exceeds end");
          cand.span = std::make_pair(b, e);
        }
        if (c.has("exact")) {
          if (!c.at("exact").is_boolean()) fail(c.sub("exact"), "expected a boolean");
          cand.exact = c.at("exact").get<bool>();
        }
        p.claims.push_back(std::move(cand));
      }
      return p;
    }
    case Schema::synthesis_narrative: {
      Obj o(j, "", {"summary", "inferences"});
      NarrativePayload p;
      p.summary = o.str("summary");
      if (o.has("inferences")) {
        const auto& arr = o.arr("inferences");
        for (std::size_t i = 0; i < arr.size(); ++i) {
          Obj s(arr[i], idx("inferences", i), {"evidence_id", "text"});
          p.inferences.push_back({s.str("evidence_id", true), s.str("text")});
        }
      }
      return p;
    }
    case Schema::judge_scores: {
      Obj o(j, "", {"evidence", "relevant_count"});
      JudgePayload p;
      const auto& arr = o.arr("evidence");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        Obj e(arr[i], idx("evidence", i), {"evidence_id", "relevance", "consistency"});
        JudgedEvidence je;
        je.evidence_id = e.str("evidence_id", true);
        je.relevance = e.num("relevance");
        je.consistency = e.num("consistency");
        const auto& rv = ScoreConfig::kRelevanceValues;
        if (std::find(rv.begin(), rv.end(), je.relevance) == rv.end()) {
          fail(e.sub("relevance"), "value " + Json(je.relevance).dump() +
                                       " out of range (expected one of 1.0, 0.5, 0.0)");
        }
        const auto& cv = ScoreConfig::kConsistencyValues;
        if (std::find(cv.begin(), cv.end(), je.consistency) == cv.end()) {
          fail(e.sub("consistency"), "value " + Json(je.consistency).dump() +
                                         " out of range (expected one of 1.0, 0.0, -1.0)");
        }
        p.evidence.push_back(std::move(je));
      }
      const auto& rc = o.at("relevant_count");
      if (!rc.is_number_integer() || rc.get<long long>() < 0) {
        fail("relevant_count", "out of range: expected a non-negative integer");
      }
      p.relevant_count = rc.get<std::size_t>();
      return p;
    }
    case Schema::reflection: {
      Obj o(j, "", {"decision", "new_steps", "reason"});
      ReflectionPayload p;
      auto d = o.str("decision");
      if (d == "continue") p.decision = ReflectDecision::continue_;
      else if (d == "replan") p.decision = ReflectDecision::replan;
      else if (d == "stop") p.decision = ReflectDecision::stop;
      else fail("decision", "invalid enum value '" + d + "' (expected one of continue|replan|stop)");
      if (o.has("new_steps")) p.new_steps = read_steps(o.arr("new_steps"), "new_steps");
      if (p.decision == ReflectDecision::replan && p.new_steps.empty()) {
        fail("new_steps", "replan requires at least one new step");
      }
      p.reason = o.opt_str("reason");
      return p;
    }
    case Schema::model_judgment: {
      Obj o(j, "", {"support", "rationale"});
      ModelJudgmentPayload p;
      p.support = o.num("support");
      if (p.support < -1.0 || p.support > 1.0) {
        fail("support", "value " + Json(p.support).dump() + " out of range [-1, 1]");
      }
      p.rationale = o.has("rationale") ? o.str("rationale") : std::string();
      return p;
    }
    case Schema::free_text:
      break;
  }
  fail("", "unsupported schema");
}

std::string strip_fence(std::string_view raw) {
  std::string s = text::trim(raw);
  if (s.rfind("```", 0) == 0) {
    auto nl = s.find('\n');
    s = nl == std::string::npos ? std::string() : s.substr(nl + 1);
    auto end = s.rfind("```");
    if (end != std::string::npos) s = s.substr(0, end);
    s = text::trim(s);
  }
  return s;
}

Json literal_json(const NumericLiteral& l) {
  Json j;
  j["literal"] = l.literal;
  j["unit"] = l.unit ? Json(*l.unit) : Json(nullptr);
  return j;
}

Json step_json(const PlannedStep& s) {
  Json j;
  j["sub_claim"] = s.sub_claim;
  j["tool"] = to_string(s.tool);
  j["rationale"] = s.rationale;
  j["search_terms"] = s.search_terms ? Json(*s.search_terms) : Json(nullptr);
  return j;
}

ScriptEntry entry_from_json(const Json& j) {
  if (j.is_string()) return ScriptEntry::respond(j.get<std::string>());
  if (j.is_object() && j.size() == 1) {
    if (j.contains("json")) return ScriptEntry::respond(j.at("json").dump());
    if (j.contains("text") && j.at("text").is_string()) {
      return ScriptEntry::respond(j.at("text").get<std::string>());
    }
    if (j.contains("transport_error") && j.at("transport_error").is_string()) {
      return ScriptEntry::fail(j.at("transport_error").get<std::string>());
    }
  }
  throw ParseError("script entry must be a string, {\"json\": ...}, {\"text\": ...} or "
                   "{\"transport_error\": ...}: " + j.dump());
}

std::vector<ScriptEntry> entries_from_json(const Json& j) {
  if (!j.is_array()) throw ParseError("script queue must be an array");
  std::vector<ScriptEntry> out;
  for (const auto& e : j) out.push_back(entry_from_json(e));
  return out;
}

}  // namespace

std::string_view to_string(Schema s) {
  for (const auto& [v, n] : kSchemaNames) {
    if (v == s) return n;
  }
  return "?";
}

std::optional<Schema> schema_from_string(std::string_view s) {
  for (const auto& [v, n] : kSchemaNames) {
    if (n == s) return v;
  }
  return std::nullopt;
}

std::string_view to_string(ReflectDecision d) {
  switch (d) {
    case ReflectDecision::continue_: return "continue";
    case ReflectDecision::replan: return "replan";
    case ReflectDecision::stop: return "stop";
  }
  return "?";
}

ParseResult parse_structured(std::string_view raw, Schema schema) {
  if (schema == Schema::free_text) {
    auto t = text::trim(raw);
    if (t.empty()) return ParseFailure{"empty response"};
    return Payload{FreeTextPayload{t}};
  }
  auto body = strip_fence(raw);
  Json j;
  try {
    j = Json::parse(body);
  } catch (const nlohmann::json::exception& ex) {
    return ParseFailure{std::string("invalid JSON: ") + ex.what()};
  }
  try {
    return parse_payload(j, schema);
  } catch (const Violation& v) {
    return ParseFailure{v.message};
  } catch (const nlohmann::json::exception& ex) {
    return ParseFailure{std::string("invalid value: ") + ex.what()};
  }
}

Schema schema_of(const Payload& p) {
  return std::visit(
      [](const auto& v) -> Schema {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PlanPayload>) return Schema::plan;
        else if constexpr (std::is_same_v<T, StancePayload>) return Schema::stance_and_relevance;
        else if constexpr (std::is_same_v<T, ReformulationPayload>) return Schema::query_reformulation;
        else if constexpr (std::is_same_v<T, NumericExtractionPayload>) return Schema::numeric_extraction;
        else if constexpr (std::is_same_v<T, NarrativePayload>) return Schema::synthesis_narrative;
        else if constexpr (std::is_same_v<T, JudgePayload>) return Schema::judge_scores;
        else if constexpr (std::is_same_v<T, ReflectionPayload>) return Schema::reflection;
        else if constexpr (std::is_same_v<T, ModelJudgmentPayload>) return Schema::model_judgment;
        else return Schema::free_text;
      },
      p);
}

Json payload_to_json(const Payload& p) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        Json j;
        if constexpr (std::is_same_v<T, PlanPayload>) {
          j["steps"] = Json::array();
          for (const auto& s : v.steps) j["steps"].push_back(step_json(s));
        } else if constexpr (std::is_same_v<T, StancePayload>) {
          j["stance"] = to_string(v.stance);
          j["relevance"] = to_string(v.relevance);
          if (v.rationale) j["rationale"] = *v.rationale;
        } else if constexpr (std::is_same_v<T, ReformulationPayload>) {
          j["terms"] = v.terms;
        } else if constexpr (std::is_same_v<T, NumericExtractionPayload>) {
          j["claims"] = Json::array();
          for (const auto& c : v.claims) {
            Json cj;
            cj["kind"] = c.kind;
            cj["operands"] = Json::array();
            for (const auto& o : c.operands) cj["operands"].push_back(literal_json(o));
            cj["asserted"] = c.asserted ? literal_json(*c.asserted) : Json(nullptr);
            cj["relation_op"] = c.relation_op ? Json(*c.relation_op) : Json(nullptr);
            cj["span"] = c.span ? Json::array({c.span->first, c.span->second}) : Json(nullptr);
            cj["exact"] = c.exact;
            j["claims"].push_back(std::move(cj));
          }
        } else if constexpr (std::is_same_v<T, NarrativePayload>) {
          j["summary"] = v.summary;
          j["inferences"] = Json::array();
          for (const auto& s : v.inferences) {
            j["inferences"].push_back({{"evidence_id", s.evidence_id}, {"text", s.text}});
          }
        } else if constexpr (std::is_same_v<T, JudgePayload>) {
          j["evidence"] = Json::array();
          for (const auto& e : v.evidence) {
            j["evidence"].push_back(
                {{"evidence_id", e.evidence_id}, {"relevance", e.relevance}, {"consistency", e.consistency}});
          }
          j["relevant_count"] = v.relevant_count;
        } else if constexpr (std::is_same_v<T, ReflectionPayload>) {
          j["decision"] = to_string(v.decision);
          j["new_steps"] = Json::array();
          for (const auto& s : v.new_steps) j["new_steps"].push_back(step_json(s));
          if (v.reason) j["reason"] = *v.reason;
        } else if constexpr (std::is_same_v<T, ModelJudgmentPayload>) {
          j["support"] = v.support;
          j["rationale"] = v.rationale;
        } else {
          j = v.text;
        }
        return j;
      },
      p);
}

std::string serialize_payload(const Payload& p) {
  if (const auto* ft = std::get_if<FreeTextPayload>(&p)) return ft->text;
  return payload_to_json(p).dump();
}

// ---- scripted backend -----------------------------------------------------

ScriptedBackend::ScriptedBackend(std::vector<ScriptEntry> script) {
  if (script.empty()) throw ValidationError("scripted backend requires a non-empty script");
  queues_[Schema::free_text] = std::move(script);
  sequential_ = true;
}

ScriptedBackend::ScriptedBackend(std::map<Schema, std::vector<ScriptEntry>> keyed) {
  bool any = std::any_of(keyed.begin(), keyed.end(), [](const auto& kv) { return !kv.second.empty(); });
  if (!any) throw ValidationError("scripted backend requires a non-empty script");
  queues_ = std::move(keyed);
  sequential_ = false;
}

std::string ScriptedBackend::send(const ChatRequest& req) {
  std::lock_guard lock(mu_);
  requests_.push_back(req);
  Schema key = sequential_ ? Schema::free_text : req.expected_schema;
  auto& queue = queues_[key];
  auto& cursor = cursors_[key];
  if (cursor >= queue.size()) {
    if (sequential_) {
      throw ScriptExhaustedError("scripted backend exhausted after " + std::to_string(consumed_) +
                                 " responses");
    }
    throw ScriptExhaustedError("scripted backend has no response left for schema '" +
                               std::string(to_string(key)) + "'");
  }
  const auto& entry = queue[cursor++];
  ++consumed_;
  if (entry.kind == ScriptEntry::Kind::transport_error) throw TransportError(entry.text);
  return entry.text;
}

std::vector<ChatRequest> ScriptedBackend::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

std::size_t ScriptedBackend::consumed() const {
  std::lock_guard lock(mu_);
  return consumed_;
}

std::shared_ptr<ScriptedBackend> scripted_backend_from_json(const Json& j) {
  if (j.is_array()) return std::make_shared<ScriptedBackend>(entries_from_json(j));
  if (!j.is_object()) throw ParseError("script must be an array or an object keyed by schema");
  std::map<Schema, std::vector<ScriptEntry>> keyed;
  for (const auto& [name, queue] : j.items()) {
    auto schema = schema_from_string(name);
    if (!schema) throw ParseError("script key '" + name + "' is not a schema name");
    keyed[*schema] = entries_from_json(queue);
  }
  return std::make_shared<ScriptedBackend>(std::move(keyed));
}

ScriptBook ScriptBook::from_json(const Json& j) {
  ScriptBook book;
  if (j.is_object() && j.contains("tasks")) {
    for (const auto& [key, value] : j.items()) {
      if (key != "tasks" && key != "default") throw ParseError("unknown script book field '" + key + "'");
    }
    if (!j.at("tasks").is_object()) throw ParseError("script book 'tasks' must be an object");
    for (const auto& [key, script] : j.at("tasks").items()) {
      scripted_backend_from_json(script);
      book.tasks_[key] = script;
    }
    if (j.contains("default")) {
      scripted_backend_from_json(j.at("default"));
      book.default_ = j.at("default");
    }
  } else {
    scripted_backend_from_json(j);
    book.default_ = j;
  }
  return book;
}

ScriptBook ScriptBook::load(const std::string& path) {
  auto data = text::read_file(path);
  try {
    return from_json(Json::parse(data));
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(path + ": " + ex.what());
  } catch (const ParseError& ex) {
    throw ParseError(path + ": " + ex.what());
  }
}

std::shared_ptr<ScriptedBackend> ScriptBook::backend_for(const std::string& task_key) const {
  auto it = tasks_.find(task_key);
  if (it == tasks_.end()) {
    auto slash = task_key.rfind('/');
    if (slash != std::string::npos) it = tasks_.find(task_key.substr(slash + 1));
  }
  if (it != tasks_.end()) return scripted_backend_from_json(it->second);
  if (default_) return scripted_backend_from_json(*default_);
  throw ConfigError("no script for task '" + task_key + "'");
}

// ---- client ---------------------------------------------------------------

LlmClient::LlmClient(std::shared_ptr<ChatBackend> backend, RetryPolicy policy,
                     std::shared_ptr<const Clock> clock, Sleeper sleeper)
    : backend_(std::move(backend)),
      policy_(policy),
      clock_(clock ? std::move(clock) : std::make_shared<SteadyClock>()),
      sleeper_(sleeper ? std::move(sleeper) : real_sleeper()) {
  if (!backend_) throw ValidationError("LlmClient requires a backend");
}

std::string LlmClient::send_with_retries(const ChatRequest& req, unsigned& retries_used) {
  for (unsigned attempt = 0;; ++attempt) {
    try {
      return backend_->send(req);
    } catch (const TransportError& ex) {
      if (attempt >= policy_.retries) {
        throw TransportError("transport failed after " + std::to_string(attempt + 1) +
                             " attempts: " + ex.what());
      }
      ++retries_used;
      sleeper_(policy_.backoff * (1LL << attempt));
    }
  }
}

ChatResponse LlmClient::complete(const ChatRequest& req) {
  if (text::is_blank(req.system_prompt) || text::is_blank(req.user_prompt)) {
    throw ValidationError("chat request prompts must be non-empty");
  }
  ChatResponse resp;
  resp.provider_id = backend_->provider_id();
  auto start = clock_->now_ms();
  resp.raw_text = send_with_retries(req, resp.transport_retries);
  resp.parsed = parse_structured(resp.raw_text, req.expected_schema);
  if (const auto* failure = std::get_if<ParseFailure>(&resp.parsed)) {
    ChatRequest repair = req;
    repair.user_prompt += "\n\nYour previous reply could not be accepted: " + failure->message +
                          "\nReply again with only the requested JSON document.";
    ++resp.repairs;
    ++repairs_;
    resp.raw_text = send_with_retries(repair, resp.transport_retries);
    resp.parsed = parse_structured(resp.raw_text, req.expected_schema);
    if (const auto* again = std::get_if<ParseFailure>(&resp.parsed)) {
      throw LlmError("response for schema '" + std::string(to_string(req.expected_schema)) +
                     "' still invalid after repair: " + again->message);
    }
  }
  resp.latency_ms = clock_->now_ms() - start;
  return resp;
}

}  // namespace factlab
