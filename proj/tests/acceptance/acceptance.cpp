// Acceptance run: one line per criterion, nonzero exit if any fails.

#include <array>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <gmpxx.h>

#include "factlab/config.hpp"
#include "factlab/credibility.hpp"
#include "factlab/errors.hpp"
#include "factlab/eval.hpp"
#include "factlab/numeric.hpp"
#include "factlab/orchestrator.hpp"
#include "factlab/prompts.hpp"
#include "factlab/serialize.hpp"
#include "factlab/synthesis.hpp"
#include "factlab/text.hpp"
#include "support.hpp"

using namespace factlab;
using namespace factlab::testing;

namespace {

// Pinned tolerances and limits.
constexpr double kF1Tolerance = 0.05;
constexpr double kOracleTolerance = 1e-12;
constexpr double kSupportTolerance = 1e-9;  // support is rounded to 1e-9
constexpr double kLimitF1Seconds = 1.0;
constexpr double kLimitMetricSeconds = 5.0;
constexpr double kLimitGoldenSeconds = 2.0;
constexpr double kLimitNumericSeconds = 10.0;

struct Result {
  bool pass = true;
  std::string detail;
};

// Collects the first failure; later checks still run so the detail is useful.
struct Checker {
  Result r;
  void expect(bool ok, const std::string& what) {
    if (!ok && r.pass) {
      r.pass = false;
      r.detail = what;
    }
  }
};

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- 1 -------------------------------------------------------------------------

Result f1_table() {
  // (precision, recall, printed F1), all eighteen comparison rows.
  const double rows[18][3] = {{71.8, 73.1, 72.4}, {75.2, 73.9, 74.5}, {82.1, 80.3, 81.2}, {84.2, 83.1, 83.6},
                              {85.3, 84.1, 84.7}, {90.1, 88.5, 89.3}, {28.3, 27.2, 27.7}, {33.1, 31.7, 32.4},
                              {58.1, 56.5, 57.3}, {57.9, 58.1, 58.0}, {61.2, 62.7, 61.9}, {64.3, 64.1, 64.2},
                              {60.4, 61.3, 60.8}, {63.4, 64.2, 63.8}, {77.8, 76.9, 77.3}, {78.8, 80.4, 79.6},
                              {84.5, 83.2, 83.8}, {87.1, 85.4, 86.2}};
  Checker c;
  int ok = 0;
  for (const auto& row : rows) {
    double f1 = f1_score(row[0], row[1]);
    bool within = std::abs(f1 - row[2]) <= kF1Tolerance;
    ok += within;
    c.expect(within, "P=" + fmt(row[0], 1) + " R=" + fmt(row[1], 1) + " gives " + fmt(f1) + ", printed " +
                         fmt(row[2], 1));
  }
  if (c.r.pass) c.r.detail = std::to_string(ok) + "/18 rows within " + fmt(kF1Tolerance, 2);
  return c.r;
}

// ---- 2 -------------------------------------------------------------------------

Result metric_constants() {
  Checker c;
  c.expect(relevance_score({1.0}) == 1.0 && relevance_score({0.5}) == 0.5 && relevance_score({0.0}) == 0.0,
           "relevance label values");
  c.expect(consistency_mean({1.0}) == 1.0 && consistency_mean({0.0}) == 0.0 && consistency_mean({-1.0}) == -1.0,
           "consistency label values");
  c.expect(relevance_score({1.0, 0.5, 0.0, 0.5}) == 0.5, "relevance mean");
  c.expect(consistency_score({1, 1, 0, -1}) == 0.25 && consistency_score({-1, -1}) == 0.0, "consistency clamp");
  const double diversity[] = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
  for (std::size_t k = 0; k <= 10; ++k) c.expect(diversity_score(k) == diversity[k], "diversity " + std::to_string(k));
  bool threw = false;
  try {
    relevance_score({0.7});
  } catch (const ValidationError&) {
    threw = true;
  }
  c.expect(threw, "out-of-set relevance accepted");

  std::mt19937_64 rng(2001);
  const double rel[] = {1.0, 0.5, 0.0};
  const double con[] = {1.0, 0.0, -1.0};
  int cases = 0;
  for (int n = 0; n < 1000; ++n) {
    std::size_t len = rng() % 30;
    std::vector<double> r, s;
    long long r_halves = 0, s_sum = 0;
    for (std::size_t i = 0; i < len; ++i) {
      auto a = rng() % 3, b = rng() % 3;
      r.push_back(rel[a]);
      s.push_back(con[b]);
      r_halves += 2 - static_cast<long long>(a);  // 1.0 -> 2 halves, 0.5 -> 1, 0 -> 0
      s_sum += 1 - static_cast<long long>(b);
    }
    double r_exp = len ? static_cast<double>(r_halves) / (2.0 * static_cast<double>(len)) : 0.0;
    double s_exp = len ? std::max(0.0, static_cast<double>(s_sum) / static_cast<double>(len)) : 0.0;
    std::size_t k = rng() % 40;
    double d_exp = k >= 5 ? 1.0 : static_cast<double>(k) / 5.0;
    c.expect(std::abs(relevance_score(r) - r_exp) <= kOracleTolerance, "relevance oracle case " + std::to_string(n));
    c.expect(std::abs(consistency_score(s) - s_exp) <= kOracleTolerance,
             "consistency oracle case " + std::to_string(n));
    c.expect(std::abs(diversity_score(k) - d_exp) <= kOracleTolerance, "diversity oracle case " + std::to_string(n));
    ++cases;
  }
  if (c.r.pass) c.r.detail = "label rules exact; " + std::to_string(cases) + " oracle cases per score";
  return c.r;
}

// ---- 3 -------------------------------------------------------------------------

Result drop_accounting() {
  Checker c;
  double a = accuracy_drop(89.7, 85.3), b = accuracy_drop(85.1, 65.7);
  c.expect(fmt(a, 1) == "4.4" && a == 4.4, "89.7 -> 85.3 gives " + fmt(a, 6));
  c.expect(fmt(b, 1) == "19.4" && b == 19.4, "85.1 -> 65.7 gives " + fmt(b, 6));
  if (c.r.pass) c.r.detail = "drops 4.4 and 19.4";
  return c.r;
}

// ---- 4 -------------------------------------------------------------------------

struct GoldenRun {
  std::string report;
  std::string trace;
};

GoldenRun run_golden() {
  auto rc = load_config(fixture_path("golden/golden.toml"));
  rc.validate();
  auto clock = make_clock(rc);
  auto llm = make_llm_factory(rc, clock)("golden-a");
  auto prompts = prompts_for(rc);
  Toolset tools{make_search(rc).provider, make_reliability(rc)};
  Claim claim{"golden-a", slurp(fixture_path("golden/claim.txt")), std::nullopt, LabelScheme::binary};
  GoldenRun g;
  AgentContext ctx{*llm, prompts, tools, clock, [&g](const Json& line) { g.trace += line.dump() + "\n"; }};
  auto out = verify(claim, rc.agent, ctx);
  g.report = report_to_string(out.report);
  return g;
}

Result golden_determinism() {
  Checker c;
  auto expected_report = slurp(fixture_path("golden/expected_report.json"));
  auto expected_trace = slurp(fixture_path("golden/expected_trace.jsonl"));
  auto a = run_golden();
  auto b = run_golden();
  c.expect(a.report == b.report && a.trace == b.trace, "two runs differ");
  c.expect(a.report == expected_report, "report differs from the frozen file");
  c.expect(a.trace == expected_trace, "trace differs from the frozen file");
  if (c.r.pass) {
    c.r.detail = "2 runs byte-identical to frozen report (" + std::to_string(a.report.size()) + " B) and trace (" +
                 std::to_string(a.trace.size()) + " B)";
  }
  return c.r;
}

// ---- 5 and 10 share the scripted ten-claim set -----------------------------------

struct ScriptedSet {
  RunConfig rc = load_config(fixture_path("ablation/ablation.toml"));
  std::shared_ptr<const Clock> clock = make_clock(rc);
  LlmFactory llm = make_llm_factory(rc, clock);
  Toolset tools{make_search(rc).provider, make_reliability(rc)};
  PromptLibrary prompts = prompts_for(rc);
  std::vector<DatasetRecord> records = load_dataset(rc.dataset, rc.dataset_format);
};

Result ablation_soundness() {
  Checker c;
  ScriptedSet s;
  auto variants = canonical_ablation(s.rc.agent);
  auto rows = run_ablation(variants, s.records, s.llm, s.tools, s.prompts, s.clock);
  c.expect(rows.size() == 5, "expected 5 rows, got " + std::to_string(rows.size()));
  c.expect(s.records.size() == 10, "fixture should hold 10 records");
  std::size_t traces = 0, records_checked = 0;
  for (std::size_t i = 0; i < rows.size() && i < variants.size(); ++i) {
    const auto& cfg = variants[i].config;
    c.expect(rows[i].name == variants[i].name, "row order");
    c.expect(rows[i].disabled_tool_records == 0, rows[i].name + " reports disabled-tool records");
    c.expect(rows[i].batch.tasks.size() == s.records.size(), rows[i].name + " skipped records");
    for (const auto& task : rows[i].batch.tasks) {
      ++traces;
      for (const auto& line : task.trace) {
        if (line.value("kind", "") != "tool_call") continue;
        ++records_checked;
        auto t = tool_from_string(line.value("tool", ""));
        c.expect(t && cfg.enabled(*t), rows[i].name + "/" + task.id + " trace names " + line.value("tool", "?"));
      }
    }
  }
  auto again = run_ablation(variants, s.records, s.llm, s.tools, s.prompts, s.clock);
  c.expect(ablation_csv(rows) == ablation_csv(again), "ablation table not deterministic");
  if (c.r.pass) {
    c.r.detail = "5 rows; " + std::to_string(traces) + " traces, " + std::to_string(records_checked) +
                 " tool records, none for a disabled tool";
  }
  return c.r;
}

// ---- 6 -------------------------------------------------------------------------

std::string random_int(std::mt19937_64& rng, int max_digits) {
  int n = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_digits));
  std::string s(1, static_cast<char>('1' + rng() % 9));
  for (int i = 1; i < n; ++i) s += static_cast<char>('0' + rng() % 10);
  if (rng() % 4 == 0) s.insert(0, "-");
  return s;
}

Quantity quantity(const std::string& literal, std::optional<std::string> unit = std::nullopt) {
  auto v = parse_number_literal(literal);
  if (!v) throw ValidationError("unparseable literal " + literal);
  return {*v, std::move(unit), literal};
}

Quantity quantity(const mpq_class& v) {
  Quantity q;
  q.value = Rational(boost::multiprecision::cpp_int(v.get_num().get_str()),
                     boost::multiprecision::cpp_int(v.get_den().get_str()));
  q.literal = v.get_str();
  return q;
}

NumericClaim numeric(NumericKind k, std::vector<Quantity> ops, Quantity asserted) {
  NumericClaim c;
  c.kind = k;
  c.operands = std::move(ops);
  c.asserted = std::move(asserted);
  return c;
}

Result numeric_exactness() {
  Checker c;
  std::mt19937_64 rng(6006);
  int matched = 0;
  for (int n = 0; n < 10000; ++n) {
    bool is_sum = rng() % 2 == 0;
    int arity = 2 + static_cast<int>(rng() % 3);
    std::vector<std::string> ops;
    for (int i = 0; i < arity; ++i) ops.push_back(random_int(rng, 40));
    mpz_class oracle(ops[0]);
    for (int i = 1; i < arity; ++i) {
      if (is_sum) oracle += mpz_class(ops[i]);
      else oracle -= mpz_class(ops[i]);
    }
    mpz_class asserted_z = oracle;
    if (rng() % 2) asserted_z += static_cast<unsigned long>(1 + rng() % 5);
    std::vector<Quantity> qs;
    for (const auto& o : ops) qs.push_back(quantity(o));
    auto v = evaluate(numeric(is_sum ? NumericKind::sum : NumericKind::difference, qs, quantity(asserted_z.get_str())),
                      0.0);
    bool ok = v.holds && *v.holds == (asserted_z == oracle) && to_decimal(v.computed_value).value == oracle.get_str();
    matched += ok;
    c.expect(ok, "integer case " + std::to_string(n) + " disagrees with GMP");
  }

  int invariant = 0;
  mpq_class tol(kDefaultRelativeTolerance);  // exact value of the double
  for (int n = 0; n < 1000; ++n) {
    long rate = 1 + static_cast<long>(rng() % 100);
    long base = 1 + static_cast<long>(rng() % 1000000);
    mpq_class exact(rate * base, 100);
    exact.canonicalize();
    mpq_class asserted = exact * mpq_class(10000 + static_cast<long>(rng() % 201) - 100, 10000);
    asserted.canonicalize();
    mpq_class k(1 + static_cast<long>(rng() % 100000), 1 + static_cast<long>(rng() % 100000));
    k.canonicalize();
    auto pct = quantity(std::to_string(rate) + "%", "%");
    auto a = evaluate(numeric(NumericKind::percentage_of, {pct, quantity(mpq_class(base))}, quantity(asserted)));
    mpq_class base_k = base * k, asserted_k = asserted * k;
    base_k.canonicalize();
    asserted_k.canonicalize();
    auto b = evaluate(numeric(NumericKind::percentage_of, {pct, quantity(base_k)}, quantity(asserted_k)));
    bool oracle = abs(exact - asserted) <= tol * abs(exact);
    bool ok = a.holds && b.holds && *a.holds == *b.holds && *a.holds == oracle;
    invariant += ok;
    c.expect(ok, "scale case " + std::to_string(n) + ": " + std::to_string(rate) + "% of " + std::to_string(base));
  }
  if (c.r.pass) {
    c.r.detail = std::to_string(matched) + "/10000 exact GMP matches; " + std::to_string(invariant) +
                 "/1000 scale-invariant percentage claims";
  }
  return c.r;
}

// ---- 7 -------------------------------------------------------------------------

Result credibility_lookup() {
  Checker c;
  auto ds = load_reliability_dataset(data_path("reliability_sample.csv"));
  ScoreConfig sc;
  auto exact = assess("https://www.cdc.gov/measles/index.html", ds, sc);
  c.expect(exact.tier == CredibilityTier::high && exact.matched_domain == std::string("cdc.gov"), "exact match");
  auto suffix = assess("https://blog.nytimes.com/2020/x", ds, sc);
  c.expect(suffix.tier == CredibilityTier::medium && suffix.matched_domain == std::string("nytimes.com"),
           "suffix match");
  auto boundary = assess("https://notcdc.gov/a", ds, sc);
  c.expect(boundary.tier == CredibilityTier::unknown && !boundary.matched_domain, "notcdc.gov matched cdc.gov");
  auto unknown = assess("https://some-unlisted-site.example/a", ds, sc);
  c.expect(unknown.tier == CredibilityTier::unknown && unknown.score == sc.tier_score(CredibilityTier::unknown),
           "unknown default");

  std::mt19937 rng(7007);
  const CredibilityTier tiers[] = {CredibilityTier::high, CredibilityTier::medium, CredibilityTier::low};
  int rounds = 0;
  while (rounds < 500) {
    std::uniform_real_distribution<double> u(0.01, 1.0);
    std::array<double, 3> s{u(rng), u(rng), u(rng)};
    std::sort(s.begin(), s.end());
    if (s[0] == s[1] || s[1] == s[2]) continue;
    ReliabilityDataset d;
    int n = 3 + static_cast<int>(rng() % 30);
    std::vector<CredibilityTier> assigned;
    for (int i = 0; i < n; ++i) {
      auto t = i < 3 ? tiers[i] : tiers[rng() % 3];
      assigned.push_back(t);
      d.entries["d" + std::to_string(i) + ".net"] = {t, std::nullopt};
    }
    ScoreConfig cfg;
    cfg.tier_scores = {{CredibilityTier::high, s[2]},
                       {CredibilityTier::medium, s[1]},
                       {CredibilityTier::low, s[0]},
                       {CredibilityTier::unknown, u(rng)}};
    cfg.validate();
    std::vector<CredibilityResult> got;
    for (int i = 0; i < n; ++i) got.push_back(assess("http://sub.d" + std::to_string(i) + ".net/", d, cfg));
    for (int i = 0; i < n; ++i) {
      c.expect(got[i].tier == assigned[i], "tier lookup in random dataset");
      for (int j = 0; j < n; ++j) {
        if (static_cast<int>(assigned[i]) < static_cast<int>(assigned[j])) {
          c.expect(got[i].score > got[j].score, "higher tier did not score higher");
        }
      }
    }
    ++rounds;
  }
  if (c.r.pass) c.r.detail = "4 lookup cases; tier order preserved over " + std::to_string(rounds) + " datasets";
  return c.r;
}

// ---- 8 -------------------------------------------------------------------------

Evidence random_item(std::mt19937_64& rng, int i, const ScoreConfig& sc) {
  static const CredibilityTier tiers[] = {CredibilityTier::high, CredibilityTier::medium, CredibilityTier::low,
                                          CredibilityTier::unknown};
  static const Stance stances[] = {Stance::supporting, Stance::irrelevant, Stance::contradicting};
  static const RelevanceLabel rels[] = {RelevanceLabel::highly_relevant, RelevanceLabel::slightly_relevant,
                                        RelevanceLabel::irrelevant};
  Evidence e;
  e.id = "E" + std::to_string(i + 1);
  e.sub_claim = "s" + std::to_string(rng() % 3);
  e.content = "c";
  e.credibility_tier = tiers[rng() % 4];
  e.credibility_score = sc.tier_score(e.credibility_tier);
  e.stance = stances[rng() % 3];
  e.relevance_label = rels[rng() % 3];
  e.source_url = "https://s" + std::to_string(i) + ".org/";
  return e;
}

EvidenceLog random_log(std::mt19937_64& rng, const ScoreConfig& sc) {
  EvidenceLog log("acc");
  int n = static_cast<int>(rng() % 12);
  for (int i = 0; i < n; ++i) log.append(random_item(rng, i, sc));
  return log;
}

double brute_support(const EvidenceLog& log) {
  double num = 0, den = 0;
  for (const auto& e : log.entries()) {
    if (!e.retained) continue;
    double w = e.credibility_score * relevance_value(e.relevance_label);
    num += stance_value(e.stance) * w;
    den += w;
  }
  return den > 0 ? num / den : 0.0;
}

Result synthesis_properties() {
  Checker c;
  std::mt19937_64 rng(8008);
  ScoreConfig sc;
  const Claim claim{"acc", "A claim.", std::nullopt, LabelScheme::binary};
  auto prompts = PromptLibrary::bundled();
  int bounded = 0, monotone = 0, scaled = 0, conflicts = 0;
  for (int n = 0; n < 1000; ++n) {
    auto log = random_log(rng, sc);

    // Bounds and the brute-force mean, before and after conflict resolution.
    auto s0 = aggregate_support(log);
    c.expect(s0 >= -1.0 && s0 <= 1.0 && std::abs(s0 - brute_support(log)) <= kSupportTolerance, "support bound");
    EvidenceLog resolved = log;
    auto pairs = resolve_conflicts(resolved);
    auto s1 = aggregate_support(resolved);
    c.expect(s1 >= -1.0 && s1 <= 1.0 && std::abs(s1 - brute_support(resolved)) <= kSupportTolerance,
             "support bound after resolution");
    ++bounded;

    // Conflict rule: the strictly higher-credibility member is kept, ties keep both.
    std::set<std::string> paired;
    for (const auto& p : pairs) {
      const auto* a = resolved.find(p.evidence_a);
      const auto* b = resolved.find(p.evidence_b);
      c.expect(a && b, "pair names unknown evidence");
      if (!a || !b) continue;
      paired.insert(a->id);
      paired.insert(b->id);
      c.expect(a->retained || b->retained, "both members of a pair dropped");
      if (a->credibility_score > b->credibility_score) {
        c.expect(p.resolution == ConflictResolution::retain_a && a->retained && !b->retained, "higher a not kept");
      } else if (b->credibility_score > a->credibility_score) {
        c.expect(p.resolution == ConflictResolution::retain_b && b->retained && !a->retained, "higher b not kept");
      } else {
        c.expect(p.resolution == ConflictResolution::retain_both_flag_uncertainty, "tie not flagged");
      }
    }
    for (const auto& e : resolved.entries()) {
      if (!paired.count(e.id)) c.expect(e.retained, "non-conflicted item dropped");
    }
    ++conflicts;

    // Monotonicity: raise one supporting item's credibility.
    std::vector<std::size_t> sup;
    for (std::size_t i = 0; i < log.entries().size(); ++i) {
      if (log.entries()[i].stance == Stance::supporting) sup.push_back(i);
    }
    if (!sup.empty()) {
      auto target = sup[rng() % sup.size()];
      EvidenceLog raised("acc");
      for (std::size_t i = 0; i < log.entries().size(); ++i) {
        auto e = log.entries()[i];
        if (i == target) e.credibility_score += (1.0 - e.credibility_score) * std::uniform_real_distribution<>(0, 1)(rng);
        raised.append(e);
      }
      c.expect(aggregate_support(raised) >= s0, "raising supporting credibility lowered support");
      ++monotone;
    }

    // Common scaling of tier scores leaves the labels unchanged.
    double k = std::uniform_real_distribution<>(0.05, 1.0)(rng);
    ScoreConfig sk = sc;
    for (auto& [t, v] : sk.tier_scores) v *= k;
    EvidenceLog a = log, b("acc");
    for (auto e : log.entries()) {
      e.credibility_score = sk.tier_score(e.credibility_tier);
      b.append(e);
    }
    for (auto scheme : {LabelScheme::binary, LabelScheme::six_level}) {
      Claim cl = claim;
      cl.label_scheme = scheme;
      EvidenceLog a2 = a, b2 = b;
      auto va = synthesize(cl, a2, {}, sc, nullptr, prompts, {}).report.verdict;
      auto vb = synthesize(cl, b2, {}, sk, nullptr, prompts, {}).report.verdict;
      c.expect(va.label() == vb.label(), "scaling by " + fmt(k) + " changed the label");
    }
    ++scaled;
  }
  if (c.r.pass) {
    c.r.detail = std::to_string(bounded) + " logs bounded, " + std::to_string(monotone) + " monotone, " +
                 std::to_string(scaled) + " scale-invariant, " + std::to_string(conflicts) + " conflict checks";
  }
  return c.r;
}

// ---- 9 -------------------------------------------------------------------------

JudgePayload judged(std::vector<double> rel, std::vector<double> con, std::size_t relevant) {
  JudgePayload p;
  for (std::size_t i = 0; i < rel.size(); ++i) p.evidence.push_back({"E" + std::to_string(i + 1), rel[i], con[i]});
  p.relevant_count = relevant;
  return p;
}

Result judge_protocol() {
  Checker c;
  Report report;
  report.claim = {"j", "A claim to judge.", std::nullopt, LabelScheme::binary};
  report.verdict.binary_label = BinaryLabel::fake;
  report.summary = "Summary.";
  auto prompts = PromptLibrary::bundled();

  auto backend = seq({reply(judged({1, 1, 0.5, 0.5, 0}, {1, 1, 1, 1, 0}, 3)),
                      reply(judged({1, 1, 1, 0.5, 0}, {1, 1, 1, 1, 0}, 3)),
                      reply(judged({1, 1, 1, 1, 0}, {1, 1, 1, 1, 0}, 3))});
  auto llm = client(backend);
  auto q = judge_report(report, *llm, prompts);
  c.expect(q.relevance == 0.7 && q.consistency == 0.8 && q.diversity == 0.6,
           "got (" + fmt(q.relevance, 17) + ", " + fmt(q.consistency, 17) + ", " + fmt(q.diversity, 17) + ")");
  auto reqs = backend->requests();
  c.expect(reqs.size() == 3, "expected 3 judge calls");
  for (const auto& r : reqs) c.expect(r.user_prompt == reqs[0].user_prompt, "judge prompts differ");

  for (int failing = 0; failing < 3; ++failing) {
    std::vector<ScriptEntry> script;
    auto ok = reply(judged({1}, {1}, 1));
    for (int i = 0; i < 3; ++i) {
      if (i == failing) {
        for (int k = 0; k < 3; ++k) script.push_back(fail());
      } else {
        script.push_back(ok);
      }
    }
    auto l = client(seq(script));
    bool refused = false;
    try {
      judge_report(report, *l, prompts);
    } catch (const EvaluationError&) {
      refused = true;
    }
    c.expect(refused, "partial result returned when run " + std::to_string(failing + 1) + " failed");
  }
  if (c.r.pass) c.r.detail = "(0.7, 0.8, 0.6) exact; failure in any of 3 runs refused";
  return c.r;
}

// ---- 10 ------------------------------------------------------------------------

Result robustness_harness() {
  Checker c;
  ScriptedSet s;
  auto rw = FixtureRewriter::load(s.rc.rewrite_fixture);
  std::size_t rewrites = 0;
  for (const auto& r : s.records) {
    c.expect(perturb(r.text, PerturbationLevel::L0_original, rw) == r.text, "L0 changed " + r.id);
  }
  for (auto level : {PerturbationLevel::L1_paraphrase, PerturbationLevel::L2_restructure,
                     PerturbationLevel::L3_whitewash}) {
    auto out = perturb_dataset(s.records, level, rw);
    c.expect(out.size() == s.records.size(), "record count changed");
    for (std::size_t i = 0; i < out.size() && i < s.records.size(); ++i) {
      c.expect(out[i].id == s.records[i].id && out[i].gold_label == s.records[i].gold_label,
               "label not carried over for " + out[i].id);
      c.expect(text::tokenize(out[i].text) != text::tokenize(s.records[i].text),
               std::string(to_string(level)) + " rewrite of " + out[i].id + " equals the input token-wise");
      ++rewrites;
    }
  }
  auto a = run_robustness(s.records, s.rc.levels, rw, s.rc.agent, s.llm, s.tools, s.prompts, s.clock);
  auto b = run_robustness(s.records, s.rc.levels, rw, s.rc.agent, s.llm, s.tools, s.prompts, s.clock);
  c.expect(a.size() == 4, "expected L0 plus 3 levels");
  c.expect(robustness_json(a).dump() == robustness_json(b).dump(), "robustness table not deterministic");
  bool same_batches = a.size() == b.size();
  for (std::size_t i = 0; same_batches && i < a.size(); ++i) {
    same_batches = batch_json(a[i].batch).dump() == batch_json(b[i].batch).dump();
    for (std::size_t t = 0; same_batches && t < a[i].batch.tasks.size(); ++t) {
      same_batches = a[i].batch.tasks[t].trace == b[i].batch.tasks[t].trace;
    }
  }
  c.expect(same_batches, "perturbed batch runs differ between repeats");
  if (c.r.pass) {
    std::string drops;
    for (const auto& row : a) drops += " " + std::string(to_string(row.level)) + "=" + fmt(row.drop, 1);
    c.r.detail = "L0 identity; " + std::to_string(rewrites) + " rewrites keep labels; deterministic; drops" + drops;
  }
  return c.r;
}

struct Criterion {
  int number;
  const char* name;
  double limit_seconds;  // 0: no runtime bound
  std::function<Result()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "f1-table-arithmetic", kLimitF1Seconds, f1_table},
      {2, "report-metric-constants", kLimitMetricSeconds, metric_constants},
      {3, "accuracy-drop-accounting", 0, drop_accounting},
      {4, "golden-determinism", kLimitGoldenSeconds, golden_determinism},
      {5, "ablation-soundness", 0, ablation_soundness},
      {6, "numeric-exactness", kLimitNumericSeconds, numeric_exactness},
      {7, "credibility-lookup", 0, credibility_lookup},
      {8, "synthesis-properties", 0, synthesis_properties},
      {9, "judge-protocol", 0, judge_protocol},
      {10, "robustness-harness", 0, robustness_harness},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Result r;
    auto t0 = std::chrono::steady_clock::now();
    try {
      r = c.run();
    } catch (const std::exception& ex) {
      r = {false, std::string("exception: ") + ex.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (r.pass && c.limit_seconds > 0 && secs >= c.limit_seconds) {
      r = {false, "took " + fmt(secs, 3) + " s, limit " + fmt(c.limit_seconds, 1) + " s"};
    }
    failed += !r.pass;
    std::printf("[%s] %2d %-26s %s (%.3f s)\n", r.pass ? "PASS" : "FAIL", c.number, c.name, r.detail.c_str(), secs);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
