#include "factlab/orchestrator.hpp"

#include <algorithm>

#include "factlab/errors.hpp"
#include "factlab/prompts.hpp"
#include "factlab/synthesis.hpp"
#include "factlab/text.hpp"

namespace factlab {

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::plan_complete: return "plan_complete";
    case Termination::budget_exhausted: return "budget_exhausted";
    case Termination::unrecoverable_error: return "unrecoverable_error";
  }
  return "?";
}

void AgentConfig::validate() const {
  if (max_tool_calls == 0) throw ValidationError("max_tool_calls must be at least 1");
  if (max_results == 0) throw ValidationError("max_results must be at least 1");
  if (content_cap == 0) throw ValidationError("content_cap must be at least 1");
  if (memory_k == 0) throw ValidationError("memory_k must be at least 1");
  if (!(numeric_tolerance >= 0.0)) throw ValidationError("numeric_tolerance must be >= 0");
  score_config.validate();
}

namespace {

std::string tool_list(const AgentConfig& cfg) {
  std::vector<std::string> names;
  for (auto t : kAllTools) {
    if (cfg.enabled(t)) names.emplace_back(to_string(t));
  }
  return text::join(names, ", ");
}

// Applies the enabled-tools filter and fills in defaults. Returns the kept
// steps; dropped ones leave a note.
std::vector<PlanStep> admit_steps(const std::vector<PlannedStep>& proposed, const Claim& claim,
                                  const AgentConfig& cfg, std::vector<std::string>& notes) {
  std::vector<PlanStep> out;
  for (std::size_t i = 0; i < proposed.size(); ++i) {
    const auto& p = proposed[i];
    if (!cfg.enabled(p.tool)) {
      notes.push_back("dropped proposed step " + std::to_string(i) + ": tool " + std::string(to_string(p.tool)) +
                      " is disabled");
      continue;
    }
    PlanStep s;
    s.sub_claim = text::is_blank(p.sub_claim) ? claim.text : text::collapse_whitespace(p.sub_claim);
    s.tool = p.tool;
    s.rationale = p.rationale;
    if (p.tool == Tool::web_search) {
      s.search_terms = p.search_terms && !text::is_blank(*p.search_terms) ? text::collapse_whitespace(*p.search_terms)
                                                                          : s.sub_claim;
    }
    out.push_back(std::move(s));
  }
  return out;
}

PlanStep numeric_step(const Claim& claim) {
  PlanStep s;
  s.sub_claim = claim.text;
  s.tool = Tool::numeric_verification;
  s.rationale = "the claim states numbers whose relationship can be checked arithmetically";
  return s;
}

PlanStep credibility_step(const Claim& claim) {
  PlanStep s;
  s.sub_claim = claim.text;
  s.tool = Tool::credibility_assessment;
  s.rationale = "rate the sources found by the searches";
  return s;
}

bool has_tool(const std::vector<PlanStep>& steps, Tool t) {
  return std::any_of(steps.begin(), steps.end(), [t](const PlanStep& s) { return s.tool == t; });
}

// Credibility must come after the last search to have anything to rate.
void ensure_credibility_after_search(std::vector<PlanStep>& steps, const Claim& claim, const AgentConfig& cfg,
                                     std::vector<std::string>& notes) {
  if (!cfg.enabled(Tool::credibility_assessment)) return;
  std::size_t last_search = steps.size();
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (steps[i].tool == Tool::web_search) last_search = i;
  }
  if (last_search == steps.size()) return;
  for (std::size_t i = last_search + 1; i < steps.size(); ++i) {
    if (steps[i].tool == Tool::credibility_assessment) return;
  }
  steps.insert(steps.begin() + static_cast<std::ptrdiff_t>(last_search + 1), credibility_step(claim));
  notes.push_back("added a credibility_assessment step after the last web_search step");
}

std::string describe_steps(const std::vector<PlanStep>& steps, std::size_t from) {
  if (from >= steps.size()) return "(none)";
  std::string out;
  for (std::size_t i = from; i < steps.size(); ++i) {
    out += std::to_string(steps[i].sequence_index) + ". " + std::string(to_string(steps[i].tool)) + ": " +
           steps[i].sub_claim + "\n";
  }
  return out;
}

Json plan_line(const Plan& p) {
  Json j;
  j["kind"] = "plan";
  Json body = to_json(p);
  for (auto& [k, v] : body.items()) j[k] = v;
  return j;
}

class Runner {
 public:
  Runner(const Claim& claim, const AgentConfig& cfg, AgentContext& ctx)
      : claim_(claim), cfg_(cfg), ctx_(ctx), clock_(ctx.clock ? ctx.clock : std::make_shared<SteadyClock>()) {
    res_.log = EvidenceLog(claim.id);
  }

  ExecutionResult run(const Plan& initial) {
    Plan current = initial;
    res_.plans.push_back(current);
    emit(plan_line(current));

    std::size_t idx = 0;
    while (idx < current.steps.size()) {
      if (calls_ >= cfg_.max_tool_calls) {
        res_.terminated_by = Termination::budget_exhausted;
        break;
      }
      const PlanStep step = current.steps[idx];
      std::string observation = run_step(step);
      if (budget_hit_) {
        res_.terminated_by = Termination::budget_exhausted;
        break;
      }
      if (calls_ >= cfg_.max_tool_calls) {
        // No budget left for anything reflection could ask for.
        if (idx + 1 < current.steps.size()) res_.terminated_by = Termination::budget_exhausted;
        break;
      }

      ReflectionPayload decision;
      try {
        decision = reflect(current, idx, observation);
      } catch (const Error& ex) {
        res_.terminated_by = Termination::unrecoverable_error;
        res_.failure = std::string("reflection failed: ") + ex.what();
        break;
      }
      auto why = decision.reason ? ": " + *decision.reason : std::string();
      if (decision.decision == ReflectDecision::stop) {
        res_.plans.back().notes.push_back("stopped after step " + std::to_string(idx) + why);
        break;
      }
      if (decision.decision == ReflectDecision::replan) {
        Plan next;
        next.revision = current.revision + 1;
        next.steps.assign(current.steps.begin(), current.steps.begin() + static_cast<std::ptrdiff_t>(idx + 1));
        auto fresh = admit_steps(decision.new_steps, claim_, cfg_, next.notes);
        next.steps.insert(next.steps.end(), fresh.begin(), fresh.end());
        next.notes.insert(next.notes.begin(), "replanned after step " + std::to_string(idx) + why);
        next.reindex();
        next.validate();
        current = std::move(next);
        res_.plans.push_back(current);
        emit(plan_line(current));
      }
      ++idx;
    }
    return std::move(res_);
  }

 private:
  void emit(const Json& line) {
    if (ctx_.trace) ctx_.trace(line);
  }

  void record(ToolCallRecord r) {
    for (const auto& id : r.evidence_ids) emit(trace_line(*res_.log.find(id)));
    emit(trace_line(r));
    res_.log.record(std::move(r));
  }

  void note(std::string n) { res_.notes.push_back(std::move(n)); }

  std::string run_step(const PlanStep& step) {
    switch (step.tool) {
      case Tool::web_search: return run_search(step);
      case Tool::credibility_assessment: return run_credibility(step);
      case Tool::numeric_verification: return run_numeric(step);
    }
    return {};
  }

  std::string run_search(const PlanStep& step) {
    std::string terms = step.search_terms.value_or(step.sub_claim);
    std::vector<std::string> used;
    std::string observation;
    for (unsigned attempt = 0;; ++attempt) {
      if (calls_ >= cfg_.max_tool_calls) {
        budget_hit_ = true;
        return observation;
      }
      ++calls_;
      ToolCallRecord rec;
      rec.step_index = step.sequence_index;
      rec.tool = Tool::web_search;
      rec.input_summary = "search: " + terms;
      auto t0 = clock_->now_ms();

      std::vector<SearchResult> results;
      try {
        if (!ctx_.tools.search) throw ConfigError("no search provider configured");
        results = ctx_.tools.search->search(SearchQuery{terms, attempt, cfg_.max_results});
      } catch (const Error& ex) {
        rec.outcome = CallOutcome::error;
        rec.observation = std::string("search failed: ") + ex.what();
        rec.wall_time_ms = clock_->now_ms() - t0;
        note("Search for \"" + terms + "\" failed: " + ex.what());
        record(rec);
        return rec.observation;
      }

      if (!results.empty()) {
        IngestContext ic{claim_.text, step.sub_claim, terms, cfg_.content_cap};
        auto ing = ingest(results, ic, res_.log, ctx_.llm, ctx_.prompts, cfg_.score_config);
        for (auto& n : ing.notes) note(n);
        rec.evidence_ids = ing.evidence_ids;
      }
      rec.wall_time_ms = clock_->now_ms() - t0;
      if (!rec.evidence_ids.empty()) {
        std::size_t sup = 0, con = 0;
        for (const auto& id : rec.evidence_ids) {
          auto s = res_.log.find(id)->stance;
          sup += s == Stance::supporting;
          con += s == Stance::contradicting;
        }
        rec.outcome = CallOutcome::ok;
        rec.observation = std::to_string(rec.evidence_ids.size()) + " results for \"" + terms + "\": " +
                          std::to_string(sup) + " supporting, " + std::to_string(con) + " contradicting";
        observation = rec.observation;
        record(rec);
        return observation;
      }

      rec.outcome = CallOutcome::empty;
      rec.observation = "no usable results for \"" + terms + "\"";
      observation = rec.observation;
      record(rec);
      if (attempt >= cfg_.max_search_reformulations) return observation;
      if (calls_ >= cfg_.max_tool_calls) {
        budget_hit_ = true;
        return observation;
      }
      used.push_back(terms);
      auto ref = reformulate(step.search_terms.value_or(step.sub_claim), step.sub_claim, attempt + 1, used,
                             ctx_.llm, ctx_.prompts);
      if (ref.fallback) note("Search reformulation fell back to deterministic terms (" + ref.note + ").");
      terms = ref.terms;
    }
  }

  std::string run_credibility(const PlanStep& step) {
    ++calls_;
    ToolCallRecord rec;
    rec.step_index = step.sequence_index;
    rec.tool = Tool::credibility_assessment;
    auto t0 = clock_->now_ms();

    std::vector<std::string> pending;
    for (const auto& e : res_.log.entries()) {
      if (e.source_url && !assessed_.count(e.id)) pending.push_back(e.id);
    }
    rec.input_summary = "assess " + std::to_string(pending.size()) + " sources";

    if (!ctx_.tools.reliability) {
      rec.outcome = CallOutcome::error;
      rec.observation = "no reliability dataset configured";
      note("Source credibility could not be assessed: no reliability dataset configured.");
    } else if (pending.empty()) {
      rec.outcome = CallOutcome::empty;
      rec.observation = "no unassessed sources in memory";
    } else {
      std::size_t matched = 0;
      for (const auto& id : pending) {
        const Evidence& e = *res_.log.find(id);
        assessed_.insert(id);
        CredibilityResult cr;
        try {
          cr = assess(*e.source_url, *ctx_.tools.reliability, cfg_.score_config);
        } catch (const ValidationError& ex) {
          note("Source of " + id + " could not be assessed: " + ex.what());
          continue;
        }
        if (cr.tier != CredibilityTier::unknown) {
          res_.log.set_credibility(id, cr.tier, cr.score, cr.domain);
          ++matched;
        }
        rec.assessments.push_back({id, cr.domain, cr.tier, cr.score});
      }
      rec.outcome = CallOutcome::ok;
      rec.observation = "assessed " + std::to_string(rec.assessments.size()) + " sources, " +
                        std::to_string(matched) + " found in the reliability dataset";
    }
    rec.wall_time_ms = clock_->now_ms() - t0;
    auto obs = rec.observation;
    record(std::move(rec));
    return obs;
  }

  std::string run_numeric(const PlanStep& step) {
    ++calls_;
    ToolCallRecord rec;
    rec.step_index = step.sequence_index;
    rec.tool = Tool::numeric_verification;
    rec.input_summary = "numeric check: " + claim_.text;
    auto t0 = clock_->now_ms();

    auto ex = extract_claims(claim_.text, ctx_.llm, ctx_.prompts);
    if (ex.degraded) {
      rec.outcome = CallOutcome::error;
      rec.observation = ex.degradation_note;
      note("Numerical verification was unavailable (" + ex.degradation_note + ").");
    } else {
      std::size_t holds = 0, fails = 0, undefined = 0;
      for (const auto& c : ex.claims) {
        auto v = evaluate(c, c.asserts_exactness ? 0.0 : cfg_.numeric_tolerance);
        Evidence e;
        e.id = res_.log.next_evidence_id();
        e.sub_claim = step.sub_claim;
        e.content = v.explanation;
        e.credibility_tier = CredibilityTier::high;
        e.credibility_score = cfg_.score_config.tier_score(CredibilityTier::high);
        e.origin_tool = Tool::numeric_verification;
        e.relevance_label = RelevanceLabel::highly_relevant;
        if (!v.holds) {
          e.stance = Stance::irrelevant;
          ++undefined;
        } else if (*v.holds) {
          e.stance = Stance::supporting;
          ++holds;
        } else {
          e.stance = Stance::contradicting;
          ++fails;
        }
        e.numeric = to_record(v);
        rec.evidence_ids.push_back(e.id);
        res_.log.append(std::move(e));
      }
      rec.outcome = ex.claims.empty() ? CallOutcome::empty : CallOutcome::ok;
      rec.observation = std::to_string(ex.claims.size()) + " numeric claims checked: " + std::to_string(holds) +
                        " hold, " + std::to_string(fails) + " fail, " + std::to_string(undefined) + " ill-defined";
      if (!ex.dropped.empty()) {
        rec.observation += "; " + std::to_string(ex.dropped.size()) + " candidates rejected (" +
                           text::join(ex.dropped, "; ") + ")";
      }
    }
    rec.wall_time_ms = clock_->now_ms() - t0;
    auto obs = rec.observation;
    record(std::move(rec));
    return obs;
  }

  ReflectionPayload reflect(const Plan& current, std::size_t idx, const std::string& observation) {
    std::string memory;
    for (const auto& e : retrieve_relevant(res_.log, claim_.text + " " + current.steps[idx].sub_claim, cfg_.memory_k)) {
      memory += e.id + " [" + std::string(to_string(e.stance)) + ", " + std::string(to_string(e.credibility_tier)) +
                "] " + text::truncate_at_word(e.content, 200) + "\n";
    }
    if (memory.empty()) memory = "(empty)";
    auto req = ctx_.prompts.render("reflect",
                                   {{"tools", tool_list(cfg_)},
                                    {"claim", claim_.text},
                                    {"remaining", describe_steps(current.steps, idx + 1)},
                                    {"observation", observation.empty() ? "(none)" : observation},
                                    {"memory", memory}},
                                   Schema::reflection);
    return ctx_.llm.complete_as<ReflectionPayload>(req);
  }

  const Claim& claim_;
  const AgentConfig& cfg_;
  AgentContext& ctx_;
  std::shared_ptr<const Clock> clock_;
  ExecutionResult res_;
  std::size_t calls_ = 0;
  bool budget_hit_ = false;
  std::set<std::string> assessed_;
};

Verdict degraded_verdict(const Claim& claim, const AgentConfig& cfg) {
  return map_verdict(0.0, claim.label_scheme, cfg.score_config, 0, false, true);
}

}  // namespace

Plan plan(const Claim& claim, const AgentConfig& cfg, LlmClient& llm, const PromptLibrary& prompts) {
  claim.validate();
  cfg.validate();
  Plan p;
  if (cfg.enabled_tools.empty()) {
    p.direct_synthesis = true;
    p.notes.push_back("no tools enabled; the verdict comes from model knowledge alone");
    return p;
  }

  bool numeric = has_numeric_assertion(claim.text);
  auto req = prompts.render("plan",
                            {{"tools", tool_list(cfg)},
                             {"claim", claim.text},
                             {"numeric_hint", numeric ? "yes" : "no"}},
                            Schema::plan);
  auto payload = llm.complete_as<PlanPayload>(req);
  p.steps = admit_steps(payload.steps, claim, cfg, p.notes);

  if (p.steps.empty()) {
    p.notes.push_back("planner proposed no usable steps; using the default plan");
    if (cfg.enabled(Tool::web_search)) {
      PlanStep s;
      s.sub_claim = claim.text;
      s.tool = Tool::web_search;
      s.rationale = "look for reporting on the claim";
      s.search_terms = claim.text;
      p.steps.push_back(std::move(s));
    }
    if (cfg.enabled(Tool::credibility_assessment) && cfg.enabled(Tool::web_search)) {
      p.steps.push_back(credibility_step(claim));
    }
  }
  if (numeric && cfg.enabled(Tool::numeric_verification) && !has_tool(p.steps, Tool::numeric_verification)) {
    p.steps.push_back(numeric_step(claim));
    p.notes.push_back("added a numeric_verification step for the numbers stated in the claim");
  }
  ensure_credibility_after_search(p.steps, claim, cfg, p.notes);
  if (p.steps.empty()) {
    // Only tools with nothing to act on remain (e.g. credibility alone).
    p.steps.push_back(cfg.enabled(Tool::credibility_assessment) ? credibility_step(claim) : numeric_step(claim));
    p.notes.push_back("no step applies to this claim; running " + std::string(to_string(p.steps[0].tool)) +
                      " alone");
  }
  p.reindex();
  p.validate();
  return p;
}

ExecutionResult execute(const Claim& claim, const Plan& initial, const AgentConfig& cfg, AgentContext& ctx) {
  initial.validate();
  for (const auto& s : initial.steps) {
    if (!cfg.enabled(s.tool)) {
      throw ValidationError("plan step " + std::to_string(s.sequence_index) + " uses disabled tool " +
                            std::string(to_string(s.tool)));
    }
  }
  Runner runner(claim, cfg, ctx);
  return runner.run(initial);
}

VerificationOutcome verify(const Claim& claim, const AgentConfig& cfg, AgentContext& ctx) {
  claim.validate();
  cfg.validate();
  if (ctx.trace) {
    Json head;
    head["kind"] = "run";
    head["task_id"] = claim.id;
    head["prompt_version"] = ctx.prompts.version();
    Json tools = Json::array();
    for (auto t : kAllTools) {
      if (cfg.enabled(t)) tools.push_back(std::string(to_string(t)));
    }
    head["enabled_tools"] = tools;
    head["max_tool_calls"] = cfg.max_tool_calls;
    ctx.trace(head);
  }

  VerificationOutcome out;
  Plan initial;
  try {
    initial = plan(claim, cfg, ctx.llm, ctx.prompts);
  } catch (const Error& ex) {
    out.log = EvidenceLog(claim.id);
    out.terminated_by = Termination::unrecoverable_error;
    RenderContext rc;
    rc.notes.push_back(std::string("Planning failed, so no evidence was gathered: ") + ex.what());
    out.report = render(claim, degraded_verdict(claim, cfg), out.log, {}, {}, nullptr, ctx.prompts, rc);
    return out;
  }

  if (initial.direct_synthesis) {
    RenderContext rc;
    rc.model_knowledge_only = true;
    std::vector<Plan> plans{initial};
    if (ctx.trace) ctx.trace(plan_line(initial));
    out.log = EvidenceLog(claim.id);
    try {
      auto req = ctx.prompts.render("model_judgment", {{"claim", claim.text}}, Schema::model_judgment);
      auto j = ctx.llm.complete_as<ModelJudgmentPayload>(req);
      auto v = map_verdict(j.support, claim.label_scheme, cfg.score_config, 0);
      rc.summary_override = text::collapse_whitespace(j.rationale);
      out.report = render(claim, v, out.log, {}, plans, nullptr, ctx.prompts, rc);
      out.terminated_by = Termination::plan_complete;
    } catch (const Error& ex) {
      rc.notes.push_back(std::string("The model judgment failed: ") + ex.what());
      out.report = render(claim, degraded_verdict(claim, cfg), out.log, {}, plans, nullptr, ctx.prompts, rc);
      out.terminated_by = Termination::unrecoverable_error;
    }
    return out;
  }

  auto ex = execute(claim, initial, cfg, ctx);
  RenderContext rc;
  rc.notes = ex.notes;
  if (ex.terminated_by == Termination::budget_exhausted) rc.budget_exhausted = cfg.max_tool_calls;

  if (ex.terminated_by == Termination::unrecoverable_error) {
    rc.notes.push_back("Verification stopped early after a model failure (" + ex.failure.value_or("unknown") +
                       "); the verdict is withheld.");
    auto conflicts = resolve_conflicts(ex.log);
    out.report = render(claim, degraded_verdict(claim, cfg), ex.log, conflicts, ex.plans, nullptr, ctx.prompts, rc);
  } else {
    auto syn = synthesize(claim, ex.log, ex.plans, cfg.score_config, &ctx.llm, ctx.prompts, rc);
    out.report = std::move(syn.report);
  }
  out.log = std::move(ex.log);
  out.terminated_by = ex.terminated_by;
  return out;
}

}  // namespace factlab
