#include "factlab/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>
#include <thread>

#include "factlab/errors.hpp"
#include "factlab/prompts.hpp"
#include "factlab/text.hpp"

namespace factlab {

// ---- datasets --------------------------------------------------------------

Claim DatasetRecord::to_claim() const {
  Claim c;
  c.id = id;
  c.text = text;
  c.label_scheme = scheme;
  return c;
}

std::string_view to_string(DatasetFormat f) {
  switch (f) {
    case DatasetFormat::fakenewsnet: return "fakenewsnet";
    case DatasetFormat::liar: return "liar";
    case DatasetFormat::covid: return "covid";
    case DatasetFormat::generic_jsonl: return "generic_jsonl";
  }
  return "?";
}

std::optional<DatasetFormat> dataset_format_from_string(std::string_view s) {
  for (auto f : {DatasetFormat::fakenewsnet, DatasetFormat::liar, DatasetFormat::covid, DatasetFormat::generic_jsonl}) {
    if (s == to_string(f)) return f;
  }
  if (s == "jsonl") return DatasetFormat::generic_jsonl;
  return std::nullopt;
}

Json to_json(const DatasetRecord& r) {
  Json j;
  j["id"] = r.id;
  j["text"] = r.text;
  j["label"] = r.gold_label;
  j["scheme"] = std::string(to_string(r.scheme));
  j["source"] = r.source ? Json(*r.source) : Json(nullptr);
  j["date"] = r.date ? Json(*r.date) : Json(nullptr);
  return j;
}

namespace {

std::string row_ref(const std::string& source_name, std::size_t line) {
  return (source_name.empty() ? std::string("line ") : source_name + ":") + std::to_string(line);
}

std::optional<std::string> binary_label(std::string_view raw) {
  auto l = text::to_lower(text::trim(raw));
  if (l == "real" || l == "fake") return l;
  return std::nullopt;
}

// LIAR spells the labels with hyphens; underscores are accepted too.
std::optional<std::string> six_level_label(std::string_view raw) {
  auto l = text::to_lower(text::trim(raw));
  std::replace(l.begin(), l.end(), '-', '_');
  if (auto v = six_level_from_string(l)) return std::string(to_string(*v));
  return std::nullopt;
}

std::optional<std::size_t> column(const std::vector<std::string>& header, std::initializer_list<const char*> names) {
  for (const char* n : names) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (text::to_lower(text::trim(header[i])) == n) return i;
    }
  }
  return std::nullopt;
}

std::vector<DatasetRecord> parse_jsonl(std::string_view data, const std::string& src) {
  std::vector<DatasetRecord> out;
  std::size_t lineno = 0;
  for (const auto& line : text::split(data, '\n')) {
    ++lineno;
    if (text::is_blank(line)) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(row_ref(src, lineno) + ": " + ex.what());
    }
    auto str = [&](const char* key, bool required) -> std::optional<std::string> {
      auto it = j.find(key);
      if (it == j.end() || it->is_null()) {
        if (required) throw ParseError(row_ref(src, lineno) + ": missing field '" + key + "'");
        return std::nullopt;
      }
      if (it->is_number_integer() && std::string_view(key) == "id") return std::to_string(it->get<long long>());
      if (!it->is_string()) throw ParseError(row_ref(src, lineno) + ": field '" + key + "' must be a string");
      return it->get<std::string>();
    };
    DatasetRecord r;
    r.id = *str("id", true);
    r.text = *str("text", true);
    auto label = *str("label", true);
    auto scheme = str("scheme", false);
    if (scheme) {
      auto s = scheme_from_string(*scheme);
      if (!s) throw ParseError(row_ref(src, lineno) + ": unknown scheme '" + *scheme + "'");
      r.scheme = *s;
    } else {
      r.scheme = binary_label(label) ? LabelScheme::binary : LabelScheme::six_level;
    }
    auto mapped = r.scheme == LabelScheme::binary ? binary_label(label) : six_level_label(label);
    if (!mapped) throw ParseError(row_ref(src, lineno) + ": unknown label '" + label + "'");
    r.gold_label = *mapped;
    r.source = str("source", false);
    r.date = str("date", false);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<DatasetRecord> parse_liar(std::string_view data, const std::string& src) {
  // Tab separated without quoting: id, label, statement, subject, speaker, ...
  std::vector<DatasetRecord> out;
  std::size_t lineno = 0;
  for (auto line : text::split(data, '\n')) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::is_blank(line)) continue;
    auto f = text::split(line, '\t');
    if (f.size() < 3) throw ParseError(row_ref(src, lineno) + ": expected at least 3 tab-separated columns");
    auto label = six_level_label(f[1]);
    if (!label) throw ParseError(row_ref(src, lineno) + ": unknown label '" + f[1] + "'");
    DatasetRecord r;
    r.id = text::trim(f[0]);
    r.text = text::trim(f[2]);
    r.gold_label = *label;
    r.scheme = LabelScheme::six_level;
    if (f.size() > 4 && !text::is_blank(f[4])) r.source = text::trim(f[4]);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<DatasetRecord> parse_binary_csv(std::string_view data, const std::string& src, bool fakenewsnet) {
  auto rows = text::parse_csv(data);
  if (rows.empty()) return {};
  const auto& header = rows[0].fields;
  auto id_col = column(header, {"id"});
  auto text_col = fakenewsnet ? column(header, {"title", "text"}) : column(header, {"tweet", "text"});
  auto label_col = column(header, {"label"});
  auto src_col = column(header, {"news_url", "url", "source"});
  if (!text_col) throw ParseError(row_ref(src, rows[0].line) + ": no text column in header");

  std::optional<std::string> file_label;
  if (!label_col) {
    auto lower = text::to_lower(src);
    auto slash = lower.find_last_of('/');
    auto base = slash == std::string::npos ? lower : lower.substr(slash + 1);
    if (fakenewsnet && base.find("fake") != std::string::npos) file_label = "fake";
    if (fakenewsnet && base.find("real") != std::string::npos) file_label = "real";
    if (!file_label) throw ParseError(row_ref(src, rows[0].line) + ": no label column and no label in file name");
  }

  std::vector<DatasetRecord> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i].fields;
    auto ref = row_ref(src, rows[i].line);
    auto get = [&](std::size_t c) -> std::string {
      if (c >= f.size()) throw ParseError(ref + ": row has " + std::to_string(f.size()) + " columns");
      return f[c];
    };
    DatasetRecord r;
    r.id = id_col ? text::trim(get(*id_col)) : "row" + std::to_string(rows[i].line);
    r.text = text::trim(get(*text_col));
    if (label_col) {
      auto raw = get(*label_col);
      auto l = binary_label(raw);
      if (!l) throw ParseError(ref + ": unknown label '" + raw + "'");
      r.gold_label = *l;
    } else {
      r.gold_label = *file_label;
    }
    r.scheme = LabelScheme::binary;
    if (src_col && *src_col < f.size() && !text::is_blank(f[*src_col])) r.source = text::trim(f[*src_col]);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

std::vector<DatasetRecord> parse_dataset(std::string_view data, DatasetFormat format, const std::string& source_name) {
  std::vector<DatasetRecord> out;
  switch (format) {
    case DatasetFormat::generic_jsonl: out = parse_jsonl(data, source_name); break;
    case DatasetFormat::liar: out = parse_liar(data, source_name); break;
    case DatasetFormat::fakenewsnet: out = parse_binary_csv(data, source_name, true); break;
    case DatasetFormat::covid: out = parse_binary_csv(data, source_name, false); break;
  }
  std::set<std::string> ids;
  for (const auto& r : out) {
    if (r.id.empty()) throw ParseError("record with empty id in " + source_name);
    if (text::is_blank(r.text)) throw ParseError("record '" + r.id + "' has empty text");
    if (!ids.insert(r.id).second) throw DuplicateIdError("duplicate record id '" + r.id + "'");
    if (r.scheme != out.front().scheme) {
      throw ParseError("record '" + r.id + "' mixes label schemes within one dataset");
    }
  }
  return out;
}

std::vector<DatasetRecord> load_dataset(const std::string& path, DatasetFormat format) {
  return parse_dataset(text::read_file(path), format, path);
}

std::vector<DatasetRecord> subsample(const std::vector<DatasetRecord>& records, std::size_t limit,
                                     std::uint64_t seed) {
  if (limit == 0 || limit >= records.size()) return records;
  std::vector<std::size_t> idx(records.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  // Explicit Fisher-Yates: std::shuffle's output differs between standard
  // libraries.
  for (std::size_t i = idx.size() - 1; i > 0; --i) {
    std::swap(idx[i], idx[rng() % (i + 1)]);
  }
  idx.resize(limit);
  std::sort(idx.begin(), idx.end());
  std::vector<DatasetRecord> out;
  out.reserve(limit);
  for (auto i : idx) out.push_back(records[i]);
  return out;
}

// ---- classification metrics ------------------------------------------------

double f1_score(double precision, double recall) {
  double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

namespace {

double ratio(std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); }

std::vector<std::string> scheme_labels(LabelScheme scheme) {
  if (scheme == LabelScheme::binary) return {"real", "fake"};
  std::vector<std::string> out;
  for (auto l : kSixLevels) out.emplace_back(to_string(l));
  return out;
}

ClassScores class_scores(const std::string& label, const std::vector<std::string>& pred,
                         const std::vector<std::string>& gold) {
  std::size_t tp = 0, pred_n = 0, gold_n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    bool p = pred[i] == label, g = gold[i] == label;
    tp += p && g;
    pred_n += p;
    gold_n += g;
  }
  ClassScores c;
  c.label = label;
  c.precision = ratio(tp, pred_n);
  c.recall = ratio(tp, gold_n);
  c.f1 = f1_score(c.precision, c.recall);
  c.support = gold_n;
  return c;
}

}  // namespace

MetricScores classification_metrics(const std::vector<std::string>& pred, const std::vector<std::string>& gold,
                                    LabelScheme scheme) {
  if (pred.size() != gold.size()) {
    throw ValidationError("prediction count " + std::to_string(pred.size()) + " differs from gold count " +
                          std::to_string(gold.size()));
  }
  if (pred.empty()) throw ValidationError("no predictions to score");
  auto labels = scheme_labels(scheme);
  auto legal = [&](const std::string& l) { return std::find(labels.begin(), labels.end(), l) != labels.end(); };
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (!legal(gold[i])) throw ValidationError("gold label '" + gold[i] + "' is not in the label scheme");
    if (pred[i] != kUnverified && !legal(pred[i])) {
      throw ValidationError("predicted label '" + pred[i] + "' is not in the label scheme");
    }
  }

  MetricScores m;
  m.n = pred.size();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    correct += pred[i] == gold[i];
    m.unverified += pred[i] == kUnverified;
  }
  m.accuracy = ratio(correct, m.n);

  std::set<std::string> present(gold.begin(), gold.end());
  for (const auto& p : pred) {
    if (p != kUnverified) present.insert(p);
  }
  for (const auto& l : labels) {
    if (present.count(l)) m.per_class.push_back(class_scores(l, pred, gold));
  }

  if (scheme == LabelScheme::binary) {
    auto fake = class_scores("fake", pred, gold);
    m.precision = fake.precision;
    m.recall = fake.recall;
    m.f1 = fake.f1;
  } else {
    double p = 0.0, r = 0.0;
    for (const auto& c : m.per_class) {
      p += c.precision;
      r += c.recall;
    }
    m.precision = p / static_cast<double>(m.per_class.size());
    m.recall = r / static_cast<double>(m.per_class.size());
    m.f1 = f1_score(m.precision, m.recall);
  }
  return m;
}

Json to_json(const MetricScores& m) {
  Json j;
  j["accuracy"] = m.accuracy;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1"] = m.f1;
  j["n"] = m.n;
  j["unverified"] = m.unverified;
  Json pc = Json::array();
  for (const auto& c : m.per_class) {
    pc.push_back({{"label", c.label},
                  {"precision", c.precision},
                  {"recall", c.recall},
                  {"f1", c.f1},
                  {"support", c.support}});
  }
  j["per_class"] = pc;
  return j;
}

// ---- report quality ---------------------------------------------------------

namespace {

// Exact fraction over small integers, so means of label values come out as
// the correctly rounded double.
struct Fraction {
  long long num = 0;
  long long den = 1;

  static Fraction of(long long n, long long d) {
    if (d == 0) return {0, 1};
    auto g = std::gcd(n < 0 ? -n : n, d);
    return {n / g, d / g};
  }
  Fraction operator+(const Fraction& o) const { return of(num * o.den + o.num * den, den * o.den); }
  Fraction div(long long k) const { return of(num, den * k); }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

// Sum of labels in units of 0.5.
long long half_units(const std::vector<double>& labels, std::initializer_list<double> allowed, const char* what) {
  long long sum = 0;
  for (double l : labels) {
    if (std::find(allowed.begin(), allowed.end(), l) == allowed.end()) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%g", l);
      throw ValidationError(std::string(what) + " value " + buf + " is not an allowed label");
    }
    sum += static_cast<long long>(l * 2.0);
  }
  return sum;
}

Fraction relevance_fraction(const std::vector<double>& labels) {
  auto s = half_units(labels, {1.0, 0.5, 0.0}, "relevance");
  return Fraction::of(s, 2 * static_cast<long long>(labels.size()));
}

Fraction consistency_fraction(const std::vector<double>& labels) {
  auto s = half_units(labels, {1.0, 0.0, -1.0}, "consistency");
  return Fraction::of(s, 2 * static_cast<long long>(labels.size()));
}

Fraction clamp0(Fraction f) { return f.num < 0 ? Fraction{0, 1} : f; }

constexpr long long kDiversityCap = 5;  // 5 * 0.2 = 1.0

Fraction diversity_fraction(std::size_t count) {
  auto k = std::min<long long>(static_cast<long long>(count), kDiversityCap);
  return Fraction::of(k, kDiversityCap);
}

}  // namespace

double relevance_score(const std::vector<double>& labels) { return relevance_fraction(labels).value(); }
double consistency_score(const std::vector<double>& labels) { return clamp0(consistency_fraction(labels)).value(); }
double consistency_mean(const std::vector<double>& labels) { return consistency_fraction(labels).value(); }
double diversity_score(std::size_t relevant_count) { return diversity_fraction(relevant_count).value(); }

Json to_json(const ReportQuality& q) {
  Json j;
  j["relevance"] = q.relevance;
  j["consistency"] = q.consistency;
  j["diversity"] = q.diversity;
  j["consistency_unclamped"] = q.consistency_unclamped;
  return j;
}

ReportQuality average_judgments(const std::vector<JudgePayload>& runs) {
  if (runs.empty()) throw ValidationError("no judge runs to average");
  Fraction rel, con, raw, div;
  for (const auto& run : runs) {
    std::vector<double> r, c;
    for (const auto& e : run.evidence) {
      r.push_back(e.relevance);
      c.push_back(e.consistency);
    }
    rel = rel + relevance_fraction(r);
    auto cf = consistency_fraction(c);
    con = con + clamp0(cf);
    raw = raw + cf;
    div = div + diversity_fraction(run.relevant_count);
  }
  auto n = static_cast<long long>(runs.size());
  return {rel.div(n).value(), con.div(n).value(), div.div(n).value(), raw.div(n).value()};
}

ReportQuality judge_report(const Report& report, LlmClient& llm, const PromptLibrary& prompts) {
  auto req = prompts.render("judge", {{"claim", report.claim.text}, {"report", render_text(report)}},
                            Schema::judge_scores);
  std::vector<JudgePayload> runs;
  for (unsigned i = 0; i < kJudgeRuns; ++i) {
    try {
      runs.push_back(llm.complete_as<JudgePayload>(req));
    } catch (const Error& ex) {
      throw EvaluationError("judge run " + std::to_string(i + 1) + " of " + std::to_string(kJudgeRuns) +
                            " failed: " + ex.what());
    }
  }
  try {
    return average_judgments(runs);
  } catch (const ValidationError& ex) {
    throw EvaluationError(std::string("judge output unusable: ") + ex.what());
  }
}

// ---- batch runs -------------------------------------------------------------

namespace {

TaskResult run_task(const DatasetRecord& rec, const AgentConfig& cfg, const LlmFactory& factory,
                    const Toolset& tools, const PromptLibrary& prompts, const std::shared_ptr<const Clock>& clock,
                    const BatchOptions& opts) {
  TaskResult t;
  t.id = rec.id;
  t.gold = rec.gold_label;
  t.predicted = kUnverified;
  try {
    auto key = opts.key_prefix.empty() ? rec.id : opts.key_prefix + "/" + rec.id;
    auto llm = factory(key);
    TraceSink sink;
    if (opts.capture_trace) sink = [&t](const Json& line) { t.trace.push_back(line); };
    AgentContext ctx{*llm, prompts, tools, clock, sink};
    auto out = verify(rec.to_claim(), cfg, ctx);
    if (out.terminated_by != Termination::unrecoverable_error) t.predicted = out.report.verdict.label();
    t.outcome = std::move(out);
  } catch (const std::exception& ex) {
    t.error = ex.what();
  }
  return t;
}

}  // namespace

BatchResult run_batch(const std::vector<DatasetRecord>& records, const AgentConfig& cfg, const LlmFactory& llm,
                      const Toolset& tools, const PromptLibrary& prompts, std::shared_ptr<const Clock> clock,
                      const BatchOptions& opts) {
  if (records.empty()) throw ValidationError("batch has no records");
  for (const auto& r : records) {
    if (r.scheme != records.front().scheme) throw ValidationError("batch mixes label schemes");
  }
  BatchResult b;
  b.tasks.resize(records.size());
  unsigned jobs = std::max(1u, std::min<unsigned>(opts.jobs, static_cast<unsigned>(records.size())));
  if (jobs == 1) {
    for (std::size_t i = 0; i < records.size(); ++i) {
      b.tasks[i] = run_task(records[i], cfg, llm, tools, prompts, clock, opts);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < jobs; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < records.size(); i = next++) {
          b.tasks[i] = run_task(records[i], cfg, llm, tools, prompts, clock, opts);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  std::vector<std::string> pred, gold;
  for (const auto& t : b.tasks) {
    pred.push_back(t.predicted);
    gold.push_back(t.gold);
  }
  b.metrics = classification_metrics(pred, gold, records.front().scheme);
  return b;
}

namespace {

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string batch_csv(const BatchResult& b) {
  std::string out = "id,gold,predicted,support,certainty,terminated_by,error\n";
  for (const auto& t : b.tasks) {
    std::string support, certainty, term;
    if (t.outcome) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4f", t.outcome->report.verdict.support_score);
      support = buf;
      certainty = std::string(to_string(t.outcome->report.verdict.certainty));
      term = std::string(to_string(t.outcome->terminated_by));
    }
    out += csv_field(t.id) + "," + t.gold + "," + t.predicted + "," + support + "," + certainty + "," + term + "," +
           csv_field(t.error.value_or("")) + "\n";
  }
  return out;
}

Json batch_json(const BatchResult& b) {
  Json j;
  j["metrics"] = to_json(b.metrics);
  Json tasks = Json::array();
  for (const auto& t : b.tasks) {
    Json tj;
    tj["id"] = t.id;
    tj["gold"] = t.gold;
    tj["predicted"] = t.predicted;
    tj["terminated_by"] = t.outcome ? Json(std::string(to_string(t.outcome->terminated_by))) : Json(nullptr);
    tj["error"] = t.error ? Json(*t.error) : Json(nullptr);
    tj["report"] = t.outcome ? to_json(t.outcome->report) : Json(nullptr);
    tasks.push_back(std::move(tj));
  }
  j["tasks"] = tasks;
  return j;
}

// ---- ablation ----------------------------------------------------------------

std::vector<AblationVariant> canonical_ablation(const AgentConfig& base) {
  auto without = [&](Tool t) {
    AgentConfig c = base;
    c.enabled_tools = {kAllTools.begin(), kAllTools.end()};
    c.enabled_tools.erase(t);
    return c;
  };
  AgentConfig full = base;
  full.enabled_tools = {kAllTools.begin(), kAllTools.end()};
  AgentConfig none = base;
  none.enabled_tools.clear();
  return {{"Full Agent", full},
          {"w/o Web Search", without(Tool::web_search)},
          {"w/o Credibility Assessment", without(Tool::credibility_assessment)},
          {"w/o Numerical Verification", without(Tool::numeric_verification)},
          {"LLM Only", none}};
}

std::vector<AblationRow> run_ablation(const std::vector<AblationVariant>& variants,
                                      const std::vector<DatasetRecord>& records, const LlmFactory& llm,
                                      const Toolset& tools, const PromptLibrary& prompts,
                                      std::shared_ptr<const Clock> clock, unsigned jobs) {
  std::vector<AblationRow> rows;
  for (const auto& v : variants) {
    BatchOptions opts;
    opts.jobs = jobs;
    opts.key_prefix = v.name;
    AblationRow row;
    row.name = v.name;
    row.batch = run_batch(records, v.config, llm, tools, prompts, clock, opts);
    row.metrics = row.batch.metrics;
    for (const auto& t : row.batch.tasks) {
      for (const auto& line : t.trace) {
        if (line.value("kind", "") != "tool_call") continue;
        ++row.tool_calls;
        auto tool = tool_from_string(line.value("tool", ""));
        if (!tool || !v.config.enabled(*tool)) ++row.disabled_tool_records;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "config,accuracy,precision,recall,f1,n,unverified,tool_calls,disabled_tool_records\n";
  for (const auto& r : rows) {
    out += csv_field(r.name) + "," + pct(r.metrics.accuracy) + "," + pct(r.metrics.precision) + "," +
           pct(r.metrics.recall) + "," + pct(r.metrics.f1) + "," + std::to_string(r.metrics.n) + "," +
           std::to_string(r.metrics.unverified) + "," + std::to_string(r.tool_calls) + "," +
           std::to_string(r.disabled_tool_records) + "\n";
  }
  return out;
}

Json ablation_json(const std::vector<AblationRow>& rows) {
  Json arr = Json::array();
  for (const auto& r : rows) {
    Json j;
    j["config"] = r.name;
    j["metrics"] = to_json(r.metrics);
    j["tool_calls"] = r.tool_calls;
    j["disabled_tool_records"] = r.disabled_tool_records;
    Json preds = Json::array();
    for (const auto& t : r.batch.tasks) preds.push_back({{"id", t.id}, {"gold", t.gold}, {"predicted", t.predicted}});
    j["predictions"] = preds;
    arr.push_back(std::move(j));
  }
  return arr;
}

// ---- robustness ---------------------------------------------------------------

std::string_view to_string(PerturbationLevel l) {
  switch (l) {
    case PerturbationLevel::L0_original: return "L0_original";
    case PerturbationLevel::L1_paraphrase: return "L1_paraphrase";
    case PerturbationLevel::L2_restructure: return "L2_restructure";
    case PerturbationLevel::L3_whitewash: return "L3_whitewash";
  }
  return "?";
}

std::optional<PerturbationLevel> level_from_string(std::string_view s) {
  for (auto l : kAllLevels) {
    auto name = to_string(l);
    if (s == name || s == name.substr(0, 2)) return l;
  }
  return std::nullopt;
}

FixtureRewriter FixtureRewriter::from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("rewrite fixture must be an object keyed by level");
  FixtureRewriter fr;
  for (const auto& [key, table] : j.items()) {
    auto level = level_from_string(key);
    if (!level) throw ParseError("rewrite fixture: unknown level '" + key + "'");
    if (!table.is_object()) throw ParseError("rewrite fixture: level '" + key + "' must map text to rewrites");
    for (const auto& [orig, rewritten] : table.items()) {
      if (!rewritten.is_string()) throw ParseError("rewrite fixture: rewrites must be strings");
      fr.table_[*level][orig] = rewritten.get<std::string>();
    }
  }
  return fr;
}

FixtureRewriter FixtureRewriter::load(const std::string& path) {
  try {
    return from_json(Json::parse(text::read_file(path)));
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(path + ": " + ex.what());
  }
}

std::string FixtureRewriter::rewrite(const std::string& text, PerturbationLevel level) {
  auto lt = table_.find(level);
  if (lt != table_.end()) {
    auto it = lt->second.find(text);
    if (it != lt->second.end()) return it->second;
  }
  throw EvaluationError("no " + std::string(to_string(level)) + " rewrite for \"" + text + "\"");
}

std::string LlmRewriter::rewrite(const std::string& text, PerturbationLevel level) {
  std::string instruction;
  switch (level) {
    case PerturbationLevel::L0_original: return text;
    case PerturbationLevel::L1_paraphrase: instruction = "Paraphrase the claim using different words."; break;
    case PerturbationLevel::L2_restructure:
      instruction = "Restructure the claim: change the sentence structure and the order of information.";
      break;
    case PerturbationLevel::L3_whitewash:
      instruction =
          "Rewrite the claim in a calm, authoritative register so that it reads as credible reporting, "
          "the way a skilled writer would disguise a questionable statement.";
      break;
  }
  auto req = prompts_.render("rewrite", {{"instruction", instruction}, {"text", text}}, Schema::free_text);
  return text::trim(llm_.complete_as<FreeTextPayload>(req).text);
}

std::string perturb(const std::string& text, PerturbationLevel level, Rewriter& rewriter) {
  if (level == PerturbationLevel::L0_original) return text;
  std::string out;
  try {
    out = text::trim(rewriter.rewrite(text, level));
  } catch (const EvaluationError&) {
    throw;
  } catch (const Error& ex) {
    throw EvaluationError(std::string("rewriter failed: ") + ex.what());
  }
  if (out.empty()) throw EvaluationError("rewriter returned an empty rewrite");
  if (text::tokenize(out) == text::tokenize(text)) {
    throw EvaluationError(std::string(to_string(level)) + " rewrite is token-identical to its input: \"" + text +
                          "\"");
  }
  return out;
}

std::vector<DatasetRecord> perturb_dataset(const std::vector<DatasetRecord>& records, PerturbationLevel level,
                                           Rewriter& rewriter) {
  std::vector<DatasetRecord> out = records;
  for (auto& r : out) r.text = perturb(r.text, level, rewriter);
  return out;
}

double accuracy_drop(double baseline_acc, double perturbed_acc) {
  auto in_range = [](double v) { return v >= 0.0 && v <= 100.0; };
  if (!in_range(baseline_acc) || !in_range(perturbed_acc)) {
    throw ValidationError("accuracies must be percentages in [0, 100]");
  }
  return std::round((baseline_acc - perturbed_acc) * 10.0) / 10.0;
}

std::vector<RobustnessRow> run_robustness(const std::vector<DatasetRecord>& records,
                                          const std::vector<PerturbationLevel>& levels, Rewriter& rewriter,
                                          const AgentConfig& cfg, const LlmFactory& llm, const Toolset& tools,
                                          const PromptLibrary& prompts, std::shared_ptr<const Clock> clock,
                                          unsigned jobs) {
  std::vector<PerturbationLevel> order = levels;
  // Drops are measured against the unmodified claims, so L0 always runs first.
  order.erase(std::remove(order.begin(), order.end(), PerturbationLevel::L0_original), order.end());
  order.insert(order.begin(), PerturbationLevel::L0_original);

  std::vector<RobustnessRow> rows;
  for (auto level : order) {
    auto data = perturb_dataset(records, level, rewriter);
    BatchOptions opts;
    opts.jobs = jobs;
    opts.key_prefix = std::string(to_string(level));
    RobustnessRow row;
    row.level = level;
    row.batch = run_batch(data, cfg, llm, tools, prompts, clock, opts);
    row.metrics = row.batch.metrics;
    row.drop = rows.empty() ? 0.0
                            : accuracy_drop(100.0 * rows.front().metrics.accuracy, 100.0 * row.metrics.accuracy);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string robustness_csv(const std::vector<RobustnessRow>& rows) {
  std::string out = "level,accuracy,precision,recall,f1,n,unverified,drop\n";
  for (const auto& r : rows) {
    char drop[32];
    std::snprintf(drop, sizeof drop, "%.1f", r.drop);
    out += std::string(to_string(r.level)) + "," + pct(r.metrics.accuracy) + "," + pct(r.metrics.precision) + "," +
           pct(r.metrics.recall) + "," + pct(r.metrics.f1) + "," + std::to_string(r.metrics.n) + "," +
           std::to_string(r.metrics.unverified) + "," + drop + "\n";
  }
  return out;
}

Json robustness_json(const std::vector<RobustnessRow>& rows) {
  Json arr = Json::array();
  for (const auto& r : rows) {
    Json j;
    j["level"] = std::string(to_string(r.level));
    j["metrics"] = to_json(r.metrics);
    j["drop"] = r.drop;
    Json preds = Json::array();
    for (const auto& t : r.batch.tasks) preds.push_back({{"id", t.id}, {"gold", t.gold}, {"predicted", t.predicted}});
    j["predictions"] = preds;
    arr.push_back(std::move(j));
  }
  return arr;
}

}  // namespace factlab
