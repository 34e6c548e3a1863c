#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "factlab/errors.hpp"
#include "factlab/prompts.hpp"
#include "factlab/synthesis.hpp"
#include "support.hpp"

using namespace factlab;
using namespace factlab::testing;

namespace {

Evidence item(const std::string& id, Stance s, double cred, RelevanceLabel rel = RelevanceLabel::highly_relevant,
              const std::string& sub = "sub", CredibilityTier tier = CredibilityTier::high) {
  Evidence e;
  e.id = id;
  e.sub_claim = sub;
  e.content = "content of " + id;
  e.stance = s;
  e.relevance_label = rel;
  e.credibility_score = cred;
  e.credibility_tier = tier;
  e.source_url = "https://src" + id + ".org/page";
  e.source_domain = "src" + id + ".org";
  e.search_terms = "terms";
  return e;
}

EvidenceLog log_of(std::vector<Evidence> items) {
  EvidenceLog log("t");
  for (auto& e : items) log.append(e);
  return log;
}

Claim the_claim(LabelScheme s = LabelScheme::binary) { return {"c", "The claim.", std::nullopt, s}; }

// ---- oracles ---------------------------------------------------------------

bool participates(const Evidence& e) {
  return e.stance != Stance::irrelevant && e.relevance_label != RelevanceLabel::irrelevant;
}

double oracle_support(const EvidenceLog& log) {
  double num = 0, den = 0;
  for (const auto& e : log.entries()) {
    if (!e.retained) continue;
    double w = e.credibility_score * relevance_value(e.relevance_label);
    num += stance_value(e.stance) * w;
    den += w;
  }
  return den > 0 ? num / den : 0.0;
}

// Retained flags the documented top-vs-top rule produces.
std::map<std::string, bool> oracle_retention(const EvidenceLog& log) {
  std::map<std::string, bool> keep;
  std::map<std::string, std::vector<const Evidence*>> by_sub;
  for (const auto& e : log.entries()) {
    keep[e.id] = e.retained;
    if (participates(e) && e.retained) by_sub[e.sub_claim].push_back(&e);
  }
  for (auto& [sub, items] : by_sub) {
    double top_sup = -1, top_con = -1;
    for (auto* e : items) {
      if (e->stance == Stance::supporting) top_sup = std::max(top_sup, e->credibility_score);
      else top_con = std::max(top_con, e->credibility_score);
    }
    if (top_sup < 0 || top_con < 0) continue;
    for (auto* e : items) {
      bool sup = e->stance == Stance::supporting;
      if (top_sup > top_con) {
        if (!sup) keep[e->id] = false;
      } else if (top_con > top_sup) {
        if (sup) keep[e->id] = false;
      } else if (e->credibility_score < top_sup) {
        keep[e->id] = false;
      }
    }
  }
  return keep;
}

}  // namespace

TEST(Weight, CredibilityTimesRelevance) {
  EXPECT_DOUBLE_EQ(evidence_weight(item("E1", Stance::supporting, 0.6, RelevanceLabel::slightly_relevant)), 0.3);
  EXPECT_DOUBLE_EQ(evidence_weight(item("E1", Stance::supporting, 0.6, RelevanceLabel::irrelevant)), 0.0);
}

TEST(Conflicts, HigherCredibilityRetained) {
  auto log = log_of({item("E1", Stance::supporting, 0.6), item("E2", Stance::contradicting, 1.0)});
  auto pairs = resolve_conflicts(log);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].evidence_a, "E1");
  EXPECT_EQ(pairs[0].evidence_b, "E2");
  EXPECT_EQ(pairs[0].resolution, ConflictResolution::retain_b);
  EXPECT_FALSE(log.find("E1")->retained);
  EXPECT_TRUE(log.find("E2")->retained);
}

TEST(Conflicts, TieKeepsBothAndFlags) {
  auto log = log_of({item("E1", Stance::supporting, 1.0), item("E2", Stance::contradicting, 1.0)});
  auto pairs = resolve_conflicts(log);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].resolution, ConflictResolution::retain_both_flag_uncertainty);
  EXPECT_TRUE(log.find("E1")->retained);
  EXPECT_TRUE(log.find("E2")->retained);
}

TEST(Conflicts, NoOppositionNoPairs) {
  auto log = log_of({item("E1", Stance::supporting, 1.0), item("E2", Stance::supporting, 0.2),
                     item("E3", Stance::contradicting, 1.0, RelevanceLabel::highly_relevant, "other")});
  EXPECT_TRUE(resolve_conflicts(log).empty());
  for (const auto& e : log.entries()) EXPECT_TRUE(e.retained);
}

TEST(Support, HandComputedCases) {
  EXPECT_DOUBLE_EQ(aggregate_support(log_of({item("E1", Stance::supporting, 1.0)})), 1.0);
  EXPECT_DOUBLE_EQ(aggregate_support(log_of({item("E1", Stance::supporting, 1.0),
                                             item("E2", Stance::contradicting, 1.0, RelevanceLabel::highly_relevant,
                                                  "b")})),
                   0.0);
  auto log = log_of({item("E1", Stance::supporting, 1.0),
                     item("E2", Stance::contradicting, 0.2, RelevanceLabel::slightly_relevant, "b"),
                     item("E3", Stance::supporting, 0.6, RelevanceLabel::slightly_relevant, "c")});
  auto s = summarize_support(log);
  EXPECT_NEAR(s.support, 1.2 / 1.4, 1e-9);
  EXPECT_NEAR(s.total_weight, 1.4, 1e-12);
  EXPECT_EQ(s.retained_count, 3u);
  auto empty = summarize_support(EvidenceLog("t"));
  EXPECT_EQ(empty.support, 0.0);
  EXPECT_EQ(empty.retained_count, 0u);
}

TEST(MapVerdict, BinaryAndCertainty) {
  ScoreConfig sc;
  auto v = map_verdict(1.0, LabelScheme::binary, sc, 3);
  EXPECT_EQ(v.binary_label, BinaryLabel::real);
  EXPECT_EQ(v.certainty, Certainty::high);
  EXPECT_EQ(map_verdict(0.0, LabelScheme::binary, sc, 3).binary_label, BinaryLabel::unverified);
  EXPECT_EQ(map_verdict(-0.3, LabelScheme::binary, sc, 3).binary_label, BinaryLabel::fake);
  EXPECT_EQ(map_verdict(-0.3, LabelScheme::binary, sc, 3).certainty, Certainty::medium);
  EXPECT_EQ(map_verdict(1.0, LabelScheme::binary, sc, 1).certainty, Certainty::low);
  EXPECT_EQ(map_verdict(1.0, LabelScheme::binary, sc, 3, true).certainty, Certainty::medium);
  auto zero = map_verdict(0.7, LabelScheme::binary, sc, 0, false, true);
  EXPECT_EQ(zero.binary_label, BinaryLabel::unverified);
  EXPECT_EQ(zero.certainty, Certainty::low);
  EXPECT_THROW(map_verdict(1.5, LabelScheme::binary, sc, 1), ValidationError);
}

TEST(MapVerdict, SixLevelBins) {
  ScoreConfig sc;
  auto label = [&](double s) { return *map_verdict(s, LabelScheme::six_level, sc, 3).six_level_label; };
  EXPECT_EQ(label(0.1), SixLevelLabel::half_true);
  EXPECT_EQ(label(-1.0), SixLevelLabel::pants_fire);
  EXPECT_EQ(label(-0.6), SixLevelLabel::pants_fire);
  EXPECT_EQ(label(-0.59), SixLevelLabel::false_);
  EXPECT_EQ(label(0.0), SixLevelLabel::barely_true);
  EXPECT_EQ(label(0.2), SixLevelLabel::half_true);
  EXPECT_EQ(label(0.21), SixLevelLabel::mostly_true);
  EXPECT_EQ(label(1.0), SixLevelLabel::true_);
}

TEST(Render, OneStepAndCitationPerRetainedItem) {
  auto log = log_of({item("E1", Stance::supporting, 1.0), item("E2", Stance::supporting, 0.6, RelevanceLabel::highly_relevant, "b"),
                     item("E3", Stance::contradicting, 0.2, RelevanceLabel::slightly_relevant, "c")});
  auto syn = synthesize(the_claim(), log, {}, ScoreConfig{}, nullptr, PromptLibrary::bundled(), {});
  EXPECT_EQ(syn.report.reasoning_chain.size(), 3u);
  EXPECT_EQ(syn.report.citations.size(), 3u);
  EXPECT_NE(syn.report.summary.find("real"), std::string::npos);
}

TEST(Render, TieAddsUncertaintyLimitation) {
  auto log = log_of({item("E1", Stance::supporting, 1.0), item("E2", Stance::contradicting, 1.0)});
  auto syn = synthesize(the_claim(), log, {}, ScoreConfig{}, nullptr, PromptLibrary::bundled(), {});
  bool found = false;
  for (const auto& l : syn.report.limitations) found |= l.find("conflict is unresolved") != std::string::npos;
  EXPECT_TRUE(found);
  EXPECT_NE(syn.report.verdict.certainty, Certainty::high);
}

TEST(Render, BudgetNoteAndNarrativeFallback) {
  auto log = log_of({item("E1", Stance::supporting, 1.0)});
  auto llm = client(seq({fail(), fail(), fail()}));
  RenderContext ctx;
  ctx.budget_exhausted = 3;
  auto syn = synthesize(the_claim(), log, {}, ScoreConfig{}, llm.get(), PromptLibrary::bundled(), ctx);
  std::string all;
  for (const auto& l : syn.report.limitations) all += l + "\n";
  EXPECT_NE(all.find("budget of 3"), std::string::npos) << all;
  EXPECT_NE(all.find("Narrative generation failed"), std::string::npos) << all;
  EXPECT_FALSE(syn.report.summary.empty());
}

TEST(Render, NarrativeSuppliesProse) {
  auto log = log_of({item("E1", Stance::supporting, 1.0)});
  auto llm = client(seq({reply(NarrativePayload{"Model summary.", {{"E1", "E1 backs it."}}})}));
  auto syn = synthesize(the_claim(), log, {}, ScoreConfig{}, llm.get(), PromptLibrary::bundled(), {});
  EXPECT_EQ(syn.report.summary, "Model summary.");
  EXPECT_EQ(syn.report.reasoning_chain[0].inference, "E1 backs it.");
}

// ---- properties ----------------------------------------------------------------

namespace {

struct LogGen {
  std::mt19937_64 rng;
  explicit LogGen(std::uint64_t seed) : rng(seed) {}
  EvidenceLog make(const ScoreConfig& sc) {
    static const CredibilityTier tiers[] = {CredibilityTier::high, CredibilityTier::medium, CredibilityTier::low,
                                            CredibilityTier::unknown};
    static const Stance stances[] = {Stance::supporting, Stance::irrelevant, Stance::contradicting};
    static const RelevanceLabel rels[] = {RelevanceLabel::highly_relevant, RelevanceLabel::slightly_relevant,
                                          RelevanceLabel::irrelevant};
    EvidenceLog log("t");
    int n = rng() % 12;
    for (int i = 0; i < n; ++i) {
      auto tier = tiers[rng() % 4];
      auto e = item("E" + std::to_string(i + 1), stances[rng() % 3], sc.tier_score(tier), rels[rng() % 3],
                    "sub" + std::to_string(rng() % 3), tier);
      log.append(e);
    }
    return log;
  }
};

}  // namespace

TEST(SynthesisProperty, SupportBoundedAndMatchesOracle) {
  LogGen gen(1);
  ScoreConfig sc;
  for (int n = 0; n < 1000; ++n) {
    auto log = gen.make(sc);
    auto before = summarize_support(log);
    ASSERT_GE(before.support, -1.0);
    ASSERT_LE(before.support, 1.0);
    ASSERT_NEAR(before.support, oracle_support(log), 1e-9);
    resolve_conflicts(log);
    auto after = summarize_support(log);
    ASSERT_GE(after.support, -1.0);
    ASSERT_LE(after.support, 1.0);
    ASSERT_NEAR(after.support, oracle_support(log), 1e-9);
  }
}

TEST(SynthesisProperty, RaisingSupportingCredibilityNeverLowersSupport) {
  LogGen gen(2);
  ScoreConfig sc;
  std::uniform_real_distribution<double> bump(0.0, 1.0);
  int checked = 0;
  for (int n = 0; n < 1000; ++n) {
    auto log = gen.make(sc);
    std::vector<std::string> sup;
    for (const auto& e : log.entries()) {
      if (e.stance == Stance::supporting && e.relevance_label != RelevanceLabel::irrelevant) sup.push_back(e.id);
    }
    if (sup.empty()) continue;
    auto target = sup[gen.rng() % sup.size()];
    EvidenceLog raised("t");
    for (auto e : log.entries()) {
      if (e.id == target) e.credibility_score = e.credibility_score + (1.0 - e.credibility_score) * bump(gen.rng);
      raised.append(e);
    }
    ASSERT_GE(aggregate_support(raised), aggregate_support(log) - 1e-12);
    ++checked;
  }
  EXPECT_GT(checked, 300);
}

TEST(SynthesisProperty, CommonTierScalingKeepsLabels) {
  LogGen gen(3);
  ScoreConfig sc;
  std::uniform_real_distribution<double> factor(0.05, 1.0);
  for (int n = 0; n < 1000; ++n) {
    auto log = gen.make(sc);
    double c = factor(gen.rng);
    ScoreConfig scaled = sc;
    for (auto& [t, s] : scaled.tier_scores) s *= c;
    scaled.validate();
    EvidenceLog log2("t");
    for (auto e : log.entries()) {
      e.credibility_score = scaled.tier_score(e.credibility_tier);
      log2.append(e);
    }
    for (auto scheme : {LabelScheme::binary, LabelScheme::six_level}) {
      EvidenceLog a = log, b = log2;
      auto sa = synthesize(the_claim(scheme), a, {}, sc, nullptr, PromptLibrary::bundled(), {});
      auto sb = synthesize(the_claim(scheme), b, {}, scaled, nullptr, PromptLibrary::bundled(), {});
      ASSERT_EQ(sa.report.verdict.label(), sb.report.verdict.label()) << "factor " << c;
      ASSERT_EQ(sa.report.verdict.certainty, sb.report.verdict.certainty);
    }
  }
}

TEST(SynthesisProperty, ConflictResolutionRules) {
  LogGen gen(4);
  ScoreConfig sc;
  for (int n = 0; n < 1000; ++n) {
    auto log = gen.make(sc);
    auto expected = oracle_retention(log);
    auto pairs = resolve_conflicts(log);
    std::set<std::string> in_pairs;
    for (const auto& p : pairs) {
      const auto* a = log.find(p.evidence_a);
      const auto* b = log.find(p.evidence_b);
      ASSERT_TRUE(a && b);
      ASSERT_EQ(a->stance, Stance::supporting);
      ASSERT_EQ(b->stance, Stance::contradicting);
      ASSERT_EQ(a->sub_claim, b->sub_claim);
      ASSERT_TRUE(participates(*a) && participates(*b));
      // Never both dropped; the strictly higher side is the one kept.
      ASSERT_TRUE(a->retained || b->retained);
      if (a->credibility_score > b->credibility_score) {
        ASSERT_EQ(p.resolution, ConflictResolution::retain_a);
        ASSERT_FALSE(b->retained);
      } else if (a->credibility_score < b->credibility_score) {
        ASSERT_EQ(p.resolution, ConflictResolution::retain_b);
        ASSERT_FALSE(a->retained);
      } else {
        ASSERT_EQ(p.resolution, ConflictResolution::retain_both_flag_uncertainty);
      }
      in_pairs.insert(p.evidence_a);
      in_pairs.insert(p.evidence_b);
    }
    for (const auto& e : log.entries()) {
      ASSERT_EQ(e.retained, expected[e.id]) << e.id;
      if (!in_pairs.count(e.id)) {
        ASSERT_TRUE(e.retained) << "non-conflicted " << e.id << " dropped";
      }
    }
  }
}

TEST(SynthesisProperty, CitationClosure) {
  LogGen gen(5);
  ScoreConfig sc;
  for (int n = 0; n < 300; ++n) {
    auto log = gen.make(sc);
    auto syn = synthesize(the_claim(), log, {}, sc, nullptr, PromptLibrary::bundled(), {});
    std::set<std::string> retained;
    for (const auto& e : log.entries()) {
      if (e.retained) retained.insert(e.id);
    }
    for (const auto& step : syn.report.reasoning_chain) {
      for (const auto& id : step.evidence_ids) ASSERT_TRUE(retained.count(id)) << id;
    }
    for (const auto& c : syn.report.citations) ASSERT_TRUE(retained.count(c.evidence_id));
  }
}
