#include "factlab/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "factlab/errors.hpp"
#include "factlab/prompts.hpp"
#include "factlab/text.hpp"

namespace factlab {

namespace {

constexpr std::size_t kExcerptCap = 280;

std::string fmt_signed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.2f", v);
  return buf;
}

bool takes_part(const Evidence& e) {
  return e.retained && e.stance != Stance::irrelevant && relevance_value(e.relevance_label) > 0.0;
}

std::string source_of(const Evidence& e) {
  if (e.source_domain) return *e.source_domain;
  if (e.source_url) return *e.source_url;
  return std::string(to_string(e.origin_tool));
}

std::string template_inference(const Evidence& e) {
  std::string verb = e.stance == Stance::supporting ? "supports" : "contradicts";
  std::string s = e.id + " (" + source_of(e) + ", " + std::string(to_string(e.credibility_tier)) +
                  " credibility) " + verb + " the sub-claim \"" + e.sub_claim + "\"";
  if (e.numeric) s += ": " + e.numeric->explanation;
  return s + ".";
}

std::string template_summary(const Verdict& v, std::size_t n) {
  return "The claim is assessed as " + v.label() + " (support " + fmt_signed(v.support_score) + ", " +
         std::string(to_string(v.certainty)) + " certainty) on " + std::to_string(n) +
         (n == 1 ? " retained evidence item." : " retained evidence items.");
}

}  // namespace

double evidence_weight(const Evidence& e) { return e.credibility_score * relevance_value(e.relevance_label); }

std::vector<ConflictPair> resolve_conflicts(EvidenceLog& log) {
  // sub_claim -> (supporting, contradicting), log order preserved.
  std::map<std::string, std::pair<std::vector<const Evidence*>, std::vector<const Evidence*>>> groups;
  std::vector<std::string> order;
  for (const auto& e : log.entries()) {
    if (!takes_part(e)) continue;
    auto [it, fresh] = groups.try_emplace(e.sub_claim);
    if (fresh) order.push_back(e.sub_claim);
    (e.stance == Stance::supporting ? it->second.first : it->second.second).push_back(&e);
  }

  auto by_score = [](const Evidence* a, const Evidence* b) { return a->credibility_score > b->credibility_score; };

  std::vector<ConflictPair> pairs;
  std::vector<std::string> drop;
  for (const auto& sub : order) {
    auto& [sup, con] = groups[sub];
    if (sup.empty() || con.empty()) continue;
    std::stable_sort(sup.begin(), sup.end(), by_score);
    std::stable_sort(con.begin(), con.end(), by_score);
    const Evidence* s_top = sup.front();
    const Evidence* c_top = con.front();

    auto pair = [&](const Evidence* s, const Evidence* c, ConflictResolution r) {
      pairs.push_back({s->id, c->id, sub, r});
      if (r == ConflictResolution::retain_a) drop.push_back(c->id);
      if (r == ConflictResolution::retain_b) drop.push_back(s->id);
    };

    if (s_top->credibility_score > c_top->credibility_score) {
      for (auto* c : con) pair(s_top, c, ConflictResolution::retain_a);
    } else if (c_top->credibility_score > s_top->credibility_score) {
      for (auto* s : sup) pair(s, c_top, ConflictResolution::retain_b);
    } else {
      pair(s_top, c_top, ConflictResolution::retain_both_flag_uncertainty);
      for (std::size_t i = 1; i < sup.size(); ++i) {
        pair(sup[i], c_top,
             sup[i]->credibility_score == c_top->credibility_score ? ConflictResolution::retain_both_flag_uncertainty
                                                                    : ConflictResolution::retain_b);
      }
      for (std::size_t i = 1; i < con.size(); ++i) {
        pair(s_top, con[i],
             con[i]->credibility_score == s_top->credibility_score ? ConflictResolution::retain_both_flag_uncertainty
                                                                    : ConflictResolution::retain_a);
      }
    }
  }
  // Pointers into the log stay valid until here; flags change last.
  for (const auto& id : drop) log.set_retained(id, false);
  return pairs;
}

SupportSummary summarize_support(const EvidenceLog& log) {
  SupportSummary s;
  double num = 0.0;
  for (const auto& e : log.entries()) {
    if (!e.retained) continue;
    double w = evidence_weight(e);
    num += stance_value(e.stance) * w;
    s.total_weight += w;
    if (e.stance != Stance::irrelevant && w > 0.0) ++s.retained_count;
  }
  if (s.total_weight > 0.0) {
    double v = num / s.total_weight;
    // Rounded so float noise cannot move a score across a bin edge.
    v = std::round(v * 1e9) / 1e9;
    s.support = std::clamp(v, -1.0, 1.0);
  }
  return s;
}

double aggregate_support(const EvidenceLog& log) { return summarize_support(log).support; }

Verdict map_verdict(double support, LabelScheme scheme, const ScoreConfig& sc, std::size_t retained_count,
                    bool tie_flagged, bool zero_weight) {
  if (!(support >= -1.0 && support <= 1.0)) throw ValidationError("support score must lie in [-1, 1]");
  Verdict v;
  v.scheme = scheme;
  v.support_score = zero_weight ? 0.0 : support;
  if (scheme == LabelScheme::binary) {
    if (zero_weight || v.support_score == sc.binary_threshold) {
      v.binary_label = BinaryLabel::unverified;
    } else {
      v.binary_label = v.support_score > sc.binary_threshold ? BinaryLabel::real : BinaryLabel::fake;
    }
  } else {
    std::size_t bin = 0;
    while (bin < sc.six_level_bin_edges.size() && v.support_score > sc.six_level_bin_edges[bin]) ++bin;
    v.six_level_label = kSixLevels[bin];
  }
  if (zero_weight || retained_count < sc.certainty_evidence_min) {
    v.certainty = Certainty::low;
  } else if (std::abs(v.support_score) >= 0.5 && !tie_flagged) {
    v.certainty = Certainty::high;
  } else {
    v.certainty = Certainty::medium;
  }
  return v;
}

Report render(const Claim& claim, const Verdict& verdict, const EvidenceLog& log,
              const std::vector<ConflictPair>& conflicts, const std::vector<Plan>& plans, LlmClient* llm,
              const PromptLibrary& prompts, const RenderContext& ctx) {
  Report r;
  r.claim = claim;
  r.verdict = verdict;
  r.conflicts = conflicts;
  r.plan_history = plans;
  r.model_knowledge_only = ctx.model_knowledge_only;

  std::vector<const Evidence*> chain;
  for (const auto& e : log.entries()) {
    if (e.retained && e.stance != Stance::irrelevant) chain.push_back(&e);
    if (e.retained && e.source_url) r.citations.push_back({e.id, *e.source_url, e.publication_date});
  }

  std::map<std::string, std::string> inferences;
  std::string summary;
  if (ctx.summary_override) {
    summary = *ctx.summary_override;
  } else if (llm != nullptr && !chain.empty()) {
    std::string listing;
    for (const auto* e : chain) {
      listing += e->id + " [" + std::string(to_string(e->stance)) + ", " +
                 std::string(to_string(e->credibility_tier)) + " credibility, " + source_of(*e) + "] " +
                 e->sub_claim + ": " + text::truncate_at_word(e->content, kExcerptCap) + "\n";
    }
    try {
      auto req = prompts.render("narrative",
                                {{"claim", claim.text},
                                 {"verdict", verdict.label() + " (support " + fmt_signed(verdict.support_score) +
                                                 ", " + std::string(to_string(verdict.certainty)) + " certainty)"},
                                 {"evidence", listing}},
                                Schema::synthesis_narrative);
      auto p = llm->complete_as<NarrativePayload>(req);
      summary = text::collapse_whitespace(p.summary);
      for (const auto& inf : p.inferences) {
        auto t = text::collapse_whitespace(inf.text);
        if (!t.empty()) inferences.emplace(inf.evidence_id, t);
      }
    } catch (const Error& ex) {
      r.limitations.push_back(std::string("Narrative generation failed; template text is used instead: ") +
                              ex.what());
    }
  }
  if (summary.empty()) summary = template_summary(verdict, chain.size());
  r.summary = summary;

  for (const auto* e : chain) {
    ReasoningStep s;
    s.evidence_ids = {e->id};
    s.sub_claim = e->sub_claim;
    s.stance = e->stance;
    s.relevance = e->relevance_label;
    s.credibility_tier = e->credibility_tier;
    s.credibility_score = e->credibility_score;
    s.weight = evidence_weight(*e);
    s.excerpt = text::truncate_at_word(e->content, kExcerptCap);
    auto it = inferences.find(e->id);
    s.inference = it != inferences.end() ? it->second : template_inference(*e);
    s.numeric = e->numeric;
    r.reasoning_chain.push_back(std::move(s));
  }

  for (const auto& n : ctx.notes) r.limitations.push_back(n);
  if (ctx.budget_exhausted) {
    r.limitations.push_back("The tool-call budget of " + std::to_string(*ctx.budget_exhausted) +
                            " was exhausted before the plan completed; remaining steps were not executed.");
  }
  for (const auto& c : conflicts) {
    if (c.resolution != ConflictResolution::retain_both_flag_uncertainty) continue;
    r.limitations.push_back("Evidence " + c.evidence_a + " and " + c.evidence_b + " take opposite stances on \"" +
                            c.sub_claim + "\" with equal credibility; the conflict is unresolved.");
  }
  std::vector<std::string> unknown;
  for (const auto* e : chain) {
    if (e->credibility_tier == CredibilityTier::unknown) unknown.push_back(e->id);
  }
  if (!unknown.empty()) {
    r.limitations.push_back("The verdict relies on evidence from sources of unknown credibility: " +
                            text::join(unknown, ", ") + ".");
  }
  if (ctx.model_knowledge_only) {
    r.limitations.push_back("No tools were used; the verdict rests on the model's own knowledge only.");
  }
  if (verdict.certainty != Certainty::high && r.limitations.empty()) {
    if (verdict.certainty == Certainty::low) {
      r.limitations.push_back("Too little weighted evidence was retained for a confident verdict.");
    } else {
      r.limitations.push_back("The retained evidence is only moderately conclusive (support " +
                              fmt_signed(verdict.support_score) + ").");
    }
  }
  return r;
}

Synthesis synthesize(const Claim& claim, EvidenceLog& log, const std::vector<Plan>& plans, const ScoreConfig& sc,
                     LlmClient* llm, const PromptLibrary& prompts, const RenderContext& ctx) {
  Synthesis out;
  out.conflicts = resolve_conflicts(log);
  out.support = summarize_support(log);
  bool tie = std::any_of(out.conflicts.begin(), out.conflicts.end(), [](const ConflictPair& c) {
    return c.resolution == ConflictResolution::retain_both_flag_uncertainty;
  });
  auto verdict = map_verdict(out.support.support, claim.label_scheme, sc, out.support.retained_count, tie,
                             out.support.total_weight == 0.0);
  out.report = render(claim, verdict, log, out.conflicts, plans, llm, prompts, ctx);
  return out;
}

}  // namespace factlab
