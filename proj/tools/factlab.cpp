// factlab command-line interface.
//
// Exit codes: 0 whenever a command completes (any verdict, including
// unverified), 1 for infrastructure failures (config, I/O, providers), 2 for
// usage errors.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "factlab/config.hpp"
#include "factlab/errors.hpp"
#include "factlab/eval.hpp"
#include "factlab/orchestrator.hpp"
#include "factlab/prompts.hpp"
#include "factlab/serialize.hpp"
#include "factlab/text.hpp"

using namespace factlab;

namespace {

struct GlobalOptions {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::string> trace;
  std::optional<std::size_t> limit;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
  bool frozen_clock = false;
  std::string disable_tools;
  // Provider overrides shared by several subcommands.
  std::optional<std::string> script;
  std::optional<std::string> fixture;
  std::optional<std::string> reliability;
  std::optional<std::string> dataset;
  std::optional<std::string> format;
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw IoError("failed writing " + path);
}

RunConfig build_config(const GlobalOptions& g) {
  RunConfig rc = g.config.empty() ? RunConfig{} : load_config(g.config);
  if (g.out) rc.out = *g.out;
  if (g.trace) rc.trace = *g.trace;
  if (g.limit) rc.limit = *g.limit;
  if (g.seed) rc.seed = *g.seed;
  if (g.jobs) rc.jobs = *g.jobs;
  if (g.frozen_clock) rc.frozen_clock = true;
  if (g.script) {
    rc.llm_provider = LlmProviderKind::scripted;
    rc.llm_script = *g.script;
  }
  if (g.fixture) {
    rc.search_provider = SearchProviderKind::fixture;
    rc.search_fixture = *g.fixture;
  }
  if (g.reliability) rc.reliability_dataset = *g.reliability;
  if (g.dataset) rc.dataset = *g.dataset;
  if (g.format) {
    auto f = dataset_format_from_string(*g.format);
    if (!f) throw ConfigError("unknown dataset format '" + *g.format + "'");
    rc.dataset_format = *f;
  }
  if (!g.disable_tools.empty()) disable_tools(rc.agent, g.disable_tools);
  return rc;
}

std::vector<DatasetRecord> load_records(const RunConfig& rc) {
  if (rc.dataset.empty()) throw ConfigError("no dataset given (dataset.path or --dataset)");
  return subsample(load_dataset(rc.dataset, rc.dataset_format), rc.limit, rc.seed);
}

std::string dump_lines(const std::vector<Json>& lines) {
  std::string out;
  for (const auto& l : lines) out += l.dump() + "\n";
  return out;
}

// Writes <out>.csv and <out>.json, or prints the CSV when no --out is given.
void emit_table(const RunConfig& rc, const std::string& csv, const Json& json) {
  if (rc.out.empty()) {
    std::cout << csv;
    return;
  }
  write_file(rc.out + ".csv", csv);
  write_file(rc.out + ".json", json.dump(2) + "\n");
  std::cout << csv;
}

void write_batch_traces(const RunConfig& rc, const BatchResult& b) {
  if (rc.trace.empty()) return;
  std::string all;
  for (const auto& t : b.tasks) all += dump_lines(t.trace);
  write_file(rc.trace, all);
}

// ---- commands -----------------------------------------------------------------

struct VerifyOptions {
  std::string claim;
  std::string id = "claim";
  std::string scheme = "binary";
  bool json = false;
};

int cmd_verify(const GlobalOptions& g, const VerifyOptions& v) {
  auto rc = build_config(g);
  rc.validate();
  auto clock = make_clock(rc);
  auto llm_factory = make_llm_factory(rc, clock);
  auto search = make_search(rc);
  auto prompts = prompts_for(rc);
  Toolset tools{search.provider, make_reliability(rc)};

  Claim claim;
  claim.id = v.id;
  claim.text = v.claim;
  auto scheme = scheme_from_string(v.scheme);
  if (!scheme) throw ConfigError("unknown label scheme '" + v.scheme + "'");
  claim.label_scheme = *scheme;
  claim.validate();

  std::ofstream trace;
  TraceSink sink;
  if (!rc.trace.empty()) {
    trace.open(rc.trace, std::ios::binary);
    if (!trace) throw IoError("cannot open " + rc.trace + " for writing");
    sink = [&trace](const Json& line) {
      trace << line.dump() << '\n';
      trace.flush();
    };
  }

  auto llm = llm_factory(claim.id);
  AgentContext ctx{*llm, prompts, tools, clock, sink};
  auto outcome = verify(claim, rc.agent, ctx);
  if (trace.is_open() && !trace) throw IoError("failed writing " + rc.trace);

  if (!rc.out.empty()) write_file(rc.out, report_to_string(outcome.report));
  if (search.recorder && !rc.record_to.empty()) search.recorder->save(rc.record_to);
  if (v.json) {
    std::cout << report_to_string(outcome.report);
  } else {
    std::cout << render_text(outcome.report);
    std::cout << "\nterminated_by: " << to_string(outcome.terminated_by) << "\n";
  }
  return 0;
}

int cmd_batch(const GlobalOptions& g) {
  auto rc = build_config(g);
  rc.validate();
  auto clock = make_clock(rc);
  auto llm = make_llm_factory(rc, clock);
  auto search = make_search(rc);
  auto prompts = prompts_for(rc);
  Toolset tools{search.provider, make_reliability(rc)};
  auto records = load_records(rc);

  BatchOptions opts;
  opts.jobs = rc.jobs;
  auto b = run_batch(records, rc.agent, llm, tools, prompts, clock, opts);
  write_batch_traces(rc, b);
  if (search.recorder && !rc.record_to.empty()) search.recorder->save(rc.record_to);
  emit_table(rc, batch_csv(b), batch_json(b));
  const auto& m = b.metrics;
  std::cerr << "n=" << m.n << " accuracy=" << m.accuracy << " precision=" << m.precision << " recall=" << m.recall
            << " f1=" << m.f1 << " unverified=" << m.unverified << "\n";
  return 0;
}

int cmd_ablate(const GlobalOptions& g) {
  auto rc = build_config(g);
  // Every tool runs in at least one variant, so validate as a full agent.
  rc.agent.enabled_tools = {kAllTools.begin(), kAllTools.end()};
  rc.validate();
  auto clock = make_clock(rc);
  auto llm = make_llm_factory(rc, clock);
  auto search = make_search(rc);
  auto prompts = prompts_for(rc);
  Toolset tools{search.provider, make_reliability(rc)};
  auto records = load_records(rc);

  auto rows = run_ablation(canonical_ablation(rc.agent), records, llm, tools, prompts, clock, rc.jobs);
  if (!rc.trace.empty()) {
    std::string all;
    for (const auto& r : rows) {
      for (const auto& t : r.batch.tasks) all += dump_lines(t.trace);
    }
    write_file(rc.trace, all);
  }
  emit_table(rc, ablation_csv(rows), ablation_json(rows));
  return 0;
}

struct PerturbOptions {
  std::string level;
  std::optional<std::string> rewriter;
  std::optional<std::string> rewrite_fixture;
  bool evaluate = false;
};

std::unique_ptr<Rewriter> make_rewriter(const RunConfig& rc, std::shared_ptr<LlmClient>& llm_holder,
                                        const PromptLibrary& prompts, const LlmFactory* factory) {
  if (rc.rewriter == RewriterKind::fixture) {
    if (rc.rewrite_fixture.empty()) throw ConfigError("the fixture rewriter needs perturb.fixture");
    return std::make_unique<FixtureRewriter>(FixtureRewriter::load(rc.rewrite_fixture));
  }
  if (factory == nullptr) throw ConfigError("the llm rewriter needs an LLM provider");
  llm_holder = (*factory)("rewriter");
  return std::make_unique<LlmRewriter>(*llm_holder, prompts);
}

int cmd_perturb(const GlobalOptions& g, const PerturbOptions& p) {
  auto rc = build_config(g);
  if (p.rewriter) {
    if (*p.rewriter == "fixture") rc.rewriter = RewriterKind::fixture;
    else if (*p.rewriter == "llm") rc.rewriter = RewriterKind::llm;
    else throw ConfigError("unknown rewriter '" + *p.rewriter + "'");
  }
  if (p.rewrite_fixture) rc.rewrite_fixture = *p.rewrite_fixture;
  auto prompts = prompts_for(rc);
  auto records = load_records(rc);
  auto clock = make_clock(rc);

  std::optional<LlmFactory> factory;
  if (p.evaluate || rc.rewriter == RewriterKind::llm) {
    if (p.evaluate) rc.validate();
    factory = make_llm_factory(rc, clock);
  }
  std::shared_ptr<LlmClient> rewriter_llm;
  auto rewriter = make_rewriter(rc, rewriter_llm, prompts, factory ? &*factory : nullptr);

  if (!p.evaluate) {
    auto level = level_from_string(p.level);
    if (!level) throw ConfigError("unknown level '" + p.level + "' (expected L0..L3)");
    std::string jsonl;
    for (const auto& r : perturb_dataset(records, *level, *rewriter)) jsonl += to_json(r).dump() + "\n";
    if (rc.out.empty()) std::cout << jsonl;
    else write_file(rc.out, jsonl);
    return 0;
  }

  std::vector<PerturbationLevel> levels = rc.levels;
  if (!p.level.empty()) {
    auto level = level_from_string(p.level);
    if (!level) throw ConfigError("unknown level '" + p.level + "' (expected L0..L3)");
    levels = {*level};
  }
  auto search = make_search(rc);
  Toolset tools{search.provider, make_reliability(rc)};
  auto rows = run_robustness(records, levels, *rewriter, rc.agent, *factory, tools, prompts, clock, rc.jobs);
  if (!rc.trace.empty()) {
    std::string all;
    for (const auto& r : rows) {
      for (const auto& t : r.batch.tasks) all += dump_lines(t.trace);
    }
    write_file(rc.trace, all);
  }
  emit_table(rc, robustness_csv(rows), robustness_json(rows));
  return 0;
}

struct ScoreOptions {
  std::string report;
  std::string judge = "scripted";
  std::optional<std::string> judge_script;
};

int cmd_score_report(const GlobalOptions& g, const ScoreOptions& s) {
  auto rc = build_config(g);
  if (s.judge_script) rc.judge_script = *s.judge_script;
  auto clock = make_clock(rc);
  LlmFactory factory;
  if (s.judge == "scripted") {
    auto script = !rc.judge_script.empty() ? rc.judge_script : rc.llm_script;
    if (script.empty()) throw ConfigError("the scripted judge needs --script or judge.script");
    factory = make_llm_factory_from_script(script, clock, rc.llm_retry);
  } else if (s.judge == "http") {
    rc.llm_provider = LlmProviderKind::http;
    if (rc.llm_http.base_url.empty() || rc.llm_http.model.empty()) {
      throw ConfigError("the http judge needs llm.base_url and llm.model");
    }
    factory = make_llm_factory(rc, clock);
  } else {
    throw ConfigError("unknown judge '" + s.judge + "'");
  }
  auto prompts = prompts_for(rc);

  Json doc;
  try {
    doc = Json::parse(text::read_file(s.report));
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(s.report + ": " + ex.what());
  }
  auto report = report_from_json(doc);
  auto llm = factory(report.claim.id);
  auto q = judge_report(report, *llm, prompts);

  char line[128];
  std::snprintf(line, sizeof line, "relevance=%.4f consistency=%.4f diversity=%.4f\n", q.relevance, q.consistency,
                q.diversity);
  std::cout << line;
  if (!rc.out.empty()) {
    auto j = to_json(q);
    j["claim_id"] = report.claim.id;
    write_file(rc.out, j.dump(2) + "\n");
  }
  return 0;
}

struct RecordOptions {
  std::optional<std::string> claim;
  std::optional<std::string> record_to;
};

int cmd_record_fixtures(const GlobalOptions& g, const RecordOptions& r) {
  auto rc = build_config(g);
  rc.search_provider = SearchProviderKind::recording;
  if (r.record_to) rc.record_to = *r.record_to;
  rc.validate();
  auto clock = make_clock(rc);
  auto llm = make_llm_factory(rc, clock);
  auto search = make_search(rc);
  auto prompts = prompts_for(rc);
  Toolset tools{search.provider, make_reliability(rc)};

  std::vector<DatasetRecord> records;
  if (r.claim) {
    DatasetRecord d;
    d.id = "claim";
    d.text = *r.claim;
    d.gold_label = "real";
    records.push_back(d);
  } else {
    records = load_records(rc);
  }
  BatchOptions opts;
  opts.jobs = rc.jobs;
  auto b = run_batch(records, rc.agent, llm, tools, prompts, clock, opts);
  write_batch_traces(rc, b);
  if (!search.recorder) throw ConfigError("web_search is disabled; nothing to record");
  search.recorder->save(rc.record_to);
  std::cout << "recorded " << search.recorder->recorded().size() << " queries to " << rc.record_to << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"factlab: claim verification agent and evaluation harness"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config, "TOML run configuration");
  app.add_option("--out", g.out, "output path (reports, tables as <out>.csv/.json)");
  app.add_option("--trace", g.trace, "trace JSON-lines output path");
  app.add_option("--limit", g.limit, "evaluate a seeded random subset of N records");
  app.add_option("--seed", g.seed, "seed for --limit subsampling (default 42)");
  app.add_option("--jobs", g.jobs, "parallel tasks for batch commands");
  app.add_flag("--frozen-clock", g.frozen_clock, "report zero latencies for byte-stable output");
  app.add_option("--disable-tools", g.disable_tools, "comma-separated tools to disable");
  app.add_option("--script", g.script, "scripted LLM responses (selects the scripted provider)");
  app.add_option("--fixture", g.fixture, "search fixture file (selects the fixture provider)");
  app.add_option("--reliability", g.reliability, "source reliability CSV");
  app.add_option("--dataset", g.dataset, "dataset file");
  app.add_option("--format", g.format, "dataset format: generic_jsonl, liar, fakenewsnet, covid");

  VerifyOptions vo;
  auto* verify_cmd = app.add_subcommand("verify", "verify one claim");
  verify_cmd->add_option("--claim", vo.claim, "claim text")->required();
  verify_cmd->add_option("--id", vo.id, "claim id");
  verify_cmd->add_option("--scheme", vo.scheme, "binary or six_level");
  verify_cmd->add_flag("--json", vo.json, "print the report JSON instead of text");

  auto* batch_cmd = app.add_subcommand("batch", "verify every record of a dataset and score predictions");
  auto* ablate_cmd = app.add_subcommand("ablate", "run the five tool-ablation configurations");

  PerturbOptions po;
  auto* perturb_cmd = app.add_subcommand("perturb", "rewrite claims along the robustness ladder");
  perturb_cmd->add_option("--level", po.level, "L0..L3");
  perturb_cmd->add_option("--rewriter", po.rewriter, "fixture or llm");
  perturb_cmd->add_option("--rewrite-fixture", po.rewrite_fixture, "rewrite fixture file");
  perturb_cmd->add_flag("--evaluate", po.evaluate, "run the batch at L0 and each level and report accuracy drops");

  ScoreOptions so;
  auto* score_cmd = app.add_subcommand("score-report", "judge a report's relevance, consistency and diversity");
  score_cmd->add_option("report", so.report, "report JSON")->required();
  score_cmd->add_option("--judge", so.judge, "scripted or http");
  score_cmd->add_option("--judge-script", so.judge_script, "scripted judge responses");

  RecordOptions ro;
  auto* record_cmd = app.add_subcommand("record-fixtures", "run live search and save the responses as a fixture");
  record_cmd->add_option("--claim", ro.claim, "single claim instead of a dataset");
  record_cmd->add_option("--record-to", ro.record_to, "fixture file to write");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*verify_cmd) return cmd_verify(g, vo);
    if (*batch_cmd) return cmd_batch(g);
    if (*ablate_cmd) return cmd_ablate(g);
    if (*perturb_cmd) return cmd_perturb(g, po);
    if (*score_cmd) return cmd_score_report(g, so);
    if (*record_cmd) return cmd_record_fixtures(g, ro);
  } catch (const Error& ex) {
    std::cerr << "factlab: " << ex.what() << "\n";
    return 1;
  } catch (const std::exception& ex) {
    std::cerr << "factlab: unexpected failure: " << ex.what() << "\n";
    return 1;
  }
  return 2;
}
