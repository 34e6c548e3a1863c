#include "factlab/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <set>

#include "factlab/errors.hpp"
#include "factlab/prompts.hpp"
#include "factlab/text.hpp"

namespace factlab {

// ---- TOML subset -------------------------------------------------------------

namespace {

class LineParser {
 public:
  LineParser(std::string_view s, std::size_t line) : s_(s), line_(line) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("config line " + std::to_string(line_) + ": " + msg);
  }

  void skip_ws() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t')) ++i_;
  }
  bool at_end_or_comment() {
    skip_ws();
    return i_ >= s_.size() || s_[i_] == '#';
  }
  char peek() const { return i_ < s_.size() ? s_[i_] : '\0'; }

  std::string bare_key() {
    auto start = i_;
    while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_' || s_[i_] == '-')) {
      ++i_;
    }
    if (start == i_) fail("expected a key");
    return std::string(s_.substr(start, i_ - start));
  }

  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++i_;
  }

  TomlScalar scalar() {
    skip_ws();
    char c = peek();
    if (c == '"') return basic_string();
    if (c == '\'') return literal_string();
    if (s_.substr(i_, 4) == "true") {
      i_ += 4;
      return true;
    }
    if (s_.substr(i_, 5) == "false") {
      i_ += 5;
      return false;
    }
    return number();
  }

  TomlValue value() {
    skip_ws();
    TomlValue v;
    v.line = line_;
    if (peek() == '[') {
      ++i_;
      std::vector<TomlScalar> items;
      while (true) {
        skip_ws();
        if (peek() == ']') {
          ++i_;
          break;
        }
        items.push_back(scalar());
        skip_ws();
        if (peek() == ',') {
          ++i_;
        } else if (peek() != ']') {
          fail("expected ',' or ']' in array");
        }
      }
      v.v = std::move(items);
    } else {
      std::visit([&](auto&& x) { v.v = x; }, scalar());
    }
    return v;
  }

 private:
  void unicode_escape(std::string& out, std::size_t digits) {
    if (i_ + digits > s_.size()) fail("truncated unicode escape");
    std::uint32_t cp = 0;
    for (std::size_t k = 0; k < digits; ++k) {
      char h = s_[i_++];
      cp <<= 4;
      if (h >= '0' && h <= '9') cp |= static_cast<std::uint32_t>(h - '0');
      else if (h >= 'a' && h <= 'f') cp |= static_cast<std::uint32_t>(h - 'a' + 10);
      else if (h >= 'A' && h <= 'F') cp |= static_cast<std::uint32_t>(h - 'A' + 10);
      else fail("bad hex digit in unicode escape");
    }
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) fail("unicode escape is not a scalar value");
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }

  std::string basic_string() {
    ++i_;
    std::string out;
    while (true) {
      if (i_ >= s_.size()) fail("unterminated string");
      char c = s_[i_++];
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (i_ >= s_.size()) fail("unterminated escape");
      char e = s_[i_++];
      switch (e) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case 'b': out += '\b'; break;
        case 'f': out += '\f'; break;
        case 'u': unicode_escape(out, 4); break;
        case 'U': unicode_escape(out, 8); break;
        default: fail(std::string("unsupported escape \\") + e);
      }
    }
  }

  std::string literal_string() {
    ++i_;
    auto end = s_.find('\'', i_);
    if (end == std::string_view::npos) fail("unterminated string");
    std::string out(s_.substr(i_, end - i_));
    i_ = end + 1;
    return out;
  }

  TomlScalar number() {
    auto start = i_;
    while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '.' || s_[i_] == '+' ||
                              s_[i_] == '-' || s_[i_] == '_')) {
      ++i_;
    }
    std::string tok;
    for (char c : s_.substr(start, i_ - start)) {
      if (c != '_') tok += c;
    }
    if (tok.empty()) fail("expected a value");
    bool is_float = tok.find_first_of(".eE") != std::string::npos;
    if (!is_float) {
      std::int64_t v = 0;
      const char* b = tok.data() + (tok[0] == '+' ? 1 : 0);
      auto [p, ec] = std::from_chars(b, tok.data() + tok.size(), v);
      if (ec != std::errc() || p != tok.data() + tok.size()) fail("invalid value '" + tok + "'");
      return v;
    }
    char* end = nullptr;
    double d = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) fail("invalid value '" + tok + "'");
    return d;
  }

  std::string_view s_;
  std::size_t line_;
  std::size_t i_ = 0;
};

}  // namespace

TomlDocument parse_toml(std::string_view data) {
  TomlDocument doc;
  std::string table;
  std::size_t lineno = 0;
  for (auto raw : text::split(data, '\n')) {
    ++lineno;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    LineParser p(raw, lineno);
    if (p.at_end_or_comment()) continue;
    if (p.peek() == '[') {
      p.expect('[');
      p.skip_ws();
      table = p.bare_key();
      p.expect(']');
      if (!p.at_end_or_comment()) p.fail("unexpected text after table header");
      continue;
    }
    auto key = p.bare_key();
    p.expect('=');
    auto v = p.value();
    if (!p.at_end_or_comment()) p.fail("unexpected text after value");
    auto full = table.empty() ? key : table + "." + key;
    if (doc.count(full)) p.fail("duplicate key '" + full + "'");
    doc.emplace(full, std::move(v));
  }
  return doc;
}

// ---- run configuration -------------------------------------------------------

namespace {

class Reader {
 public:
  Reader(const TomlDocument& doc, std::string base) : doc_(doc), base_(std::move(base)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    auto it = doc_.find(key);
    auto where = it != doc_.end() ? " (line " + std::to_string(it->second.line) + ")" : std::string();
    throw ConfigError("config key '" + key + "'" + where + ": " + msg);
  }

  const TomlValue* get(const std::string& key) {
    auto it = doc_.find(key);
    if (it == doc_.end()) return nullptr;
    used_.insert(key);
    return &it->second;
  }

  void str(const std::string& key, std::string& out) {
    if (auto* v = get(key)) {
      if (auto* s = std::get_if<std::string>(&v->v)) out = *s;
      else fail(key, "expected a string");
    }
  }

  void path(const std::string& key, std::string& out) {
    std::string s;
    str(key, s);
    if (s.empty()) return;
    std::filesystem::path p(s);
    out = p.is_absolute() ? s : (std::filesystem::path(base_) / p).lexically_normal().string();
  }

  template <typename T>
  void integer(const std::string& key, T& out, std::int64_t min = 0) {
    if (auto* v = get(key)) {
      auto* i = std::get_if<std::int64_t>(&v->v);
      if (!i) fail(key, "expected an integer");
      if (*i < min) fail(key, "must be at least " + std::to_string(min));
      out = static_cast<T>(*i);
    }
  }

  void real(const std::string& key, double& out) {
    if (auto* v = get(key)) {
      if (auto* d = std::get_if<double>(&v->v)) out = *d;
      else if (auto* i = std::get_if<std::int64_t>(&v->v)) out = static_cast<double>(*i);
      else fail(key, "expected a number");
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (auto* v = get(key)) {
      if (auto* b = std::get_if<bool>(&v->v)) out = *b;
      else fail(key, "expected true or false");
    }
  }

  std::optional<std::vector<TomlScalar>> array(const std::string& key) {
    if (auto* v = get(key)) {
      if (auto* a = std::get_if<std::vector<TomlScalar>>(&v->v)) return *a;
      fail(key, "expected an array");
    }
    return std::nullopt;
  }

  void reject_unused() const {
    for (const auto& [key, v] : doc_) {
      if (!used_.count(key)) {
        throw ConfigError("unknown config key '" + key + "' (line " + std::to_string(v.line) + ")");
      }
    }
  }

 private:
  const TomlDocument& doc_;
  std::string base_;
  std::set<std::string> used_;
};

template <typename E, typename F>
E parse_enum(Reader& r, const std::string& key, E current, F from_string) {
  std::string s;
  r.str(key, s);
  if (s.empty()) return current;
  auto v = from_string(s);
  if (!v) r.fail(key, "unknown value '" + s + "'");
  return *v;
}

std::optional<LlmProviderKind> llm_kind(std::string_view s) {
  if (s == "scripted") return LlmProviderKind::scripted;
  if (s == "http") return LlmProviderKind::http;
  return std::nullopt;
}

std::optional<SearchProviderKind> search_kind(std::string_view s) {
  if (s == "fixture") return SearchProviderKind::fixture;
  if (s == "http") return SearchProviderKind::http;
  if (s == "recording") return SearchProviderKind::recording;
  return std::nullopt;
}

std::optional<RewriterKind> rewriter_kind(std::string_view s) {
  if (s == "fixture") return RewriterKind::fixture;
  if (s == "llm") return RewriterKind::llm;
  return std::nullopt;
}

bool file_exists(const std::string& p) {
  std::error_code ec;
  return std::filesystem::is_regular_file(p, ec);
}

}  // namespace

RunConfig config_from_toml(const TomlDocument& doc, const std::string& base_dir) {
  RunConfig rc;
  Reader r(doc, base_dir);

  rc.llm_provider = parse_enum(r, "llm.provider", rc.llm_provider, llm_kind);
  r.path("llm.script", rc.llm_script);
  r.str("llm.base_url", rc.llm_http.base_url);
  r.str("llm.model", rc.llm_http.model);
  r.integer("llm.timeout_seconds", rc.llm_http.timeout_seconds, 1);
  r.integer("llm.retries", rc.llm_retry.retries);
  std::int64_t backoff = rc.llm_retry.backoff.count();
  r.integer("llm.backoff_ms", backoff);
  rc.llm_retry.backoff = std::chrono::milliseconds(backoff);

  rc.search_provider = parse_enum(r, "search.provider", rc.search_provider, search_kind);
  r.path("search.fixture", rc.search_fixture);
  r.str("search.url", rc.search_http.url);
  r.path("search.record_to", rc.record_to);
  r.integer("search.timeout_seconds", rc.search_http.timeout_seconds, 1);
  r.integer("search.max_results", rc.agent.max_results, 1);
  r.integer("search.content_cap", rc.agent.content_cap, 1);

  r.path("credibility.dataset", rc.reliability_dataset);

  if (auto tools = r.array("agent.enabled_tools")) {
    rc.agent.enabled_tools.clear();
    for (const auto& t : *tools) {
      auto* s = std::get_if<std::string>(&t);
      auto tool = s ? tool_from_string(*s) : std::nullopt;
      if (!tool) r.fail("agent.enabled_tools", "unknown tool");
      rc.agent.enabled_tools.insert(*tool);
    }
  }
  r.integer("agent.max_tool_calls", rc.agent.max_tool_calls, 1);
  r.integer("agent.max_search_reformulations", rc.agent.max_search_reformulations);
  r.integer("agent.memory_k", rc.agent.memory_k, 1);
  r.real("agent.numeric_tolerance", rc.agent.numeric_tolerance);

  auto& sc = rc.agent.score_config;
  r.real("score.tier_high", sc.tier_scores[CredibilityTier::high]);
  r.real("score.tier_medium", sc.tier_scores[CredibilityTier::medium]);
  r.real("score.tier_low", sc.tier_scores[CredibilityTier::low]);
  r.real("score.tier_unknown", sc.tier_scores[CredibilityTier::unknown]);
  r.real("score.binary_threshold", sc.binary_threshold);
  r.integer("score.certainty_evidence_min", sc.certainty_evidence_min);
  if (auto edges = r.array("score.six_level_bin_edges")) {
    if (edges->size() != sc.six_level_bin_edges.size()) r.fail("score.six_level_bin_edges", "expected 5 numbers");
    for (std::size_t i = 0; i < edges->size(); ++i) {
      const auto& e = (*edges)[i];
      if (auto* d = std::get_if<double>(&e)) sc.six_level_bin_edges[i] = *d;
      else if (auto* n = std::get_if<std::int64_t>(&e)) sc.six_level_bin_edges[i] = static_cast<double>(*n);
      else r.fail("score.six_level_bin_edges", "expected numbers");
    }
  }

  r.path("dataset.path", rc.dataset);
  rc.dataset_format = parse_enum(r, "dataset.format", rc.dataset_format, dataset_format_from_string);

  rc.rewriter = parse_enum(r, "perturb.rewriter", rc.rewriter, rewriter_kind);
  r.path("perturb.fixture", rc.rewrite_fixture);
  if (auto levels = r.array("perturb.levels")) {
    rc.levels.clear();
    for (const auto& l : *levels) {
      auto* s = std::get_if<std::string>(&l);
      auto lv = s ? level_from_string(*s) : std::nullopt;
      if (!lv) r.fail("perturb.levels", "unknown level");
      rc.levels.push_back(*lv);
    }
  }

  r.path("judge.script", rc.judge_script);

  r.path("run.prompts", rc.prompt_dir);
  r.path("run.out", rc.out);
  r.path("run.trace", rc.trace);
  r.integer("run.seed", rc.seed);
  r.integer("run.limit", rc.limit);
  r.integer("run.jobs", rc.jobs, 1);
  r.boolean("run.frozen_clock", rc.frozen_clock);

  r.reject_unused();
  return rc;
}

RunConfig load_config(const std::string& path) {
  auto data = text::read_file(path);
  TomlDocument doc;
  try {
    doc = parse_toml(data);
  } catch (const ParseError& ex) {
    throw ConfigError(path + ": " + ex.what());
  }
  auto base = std::filesystem::path(path).parent_path().string();
  return config_from_toml(doc, base.empty() ? "." : base);
}

void RunConfig::validate() const {
  try {
    agent.validate();
  } catch (const ValidationError& ex) {
    throw ConfigError(ex.what());
  }
  if (jobs == 0) throw ConfigError("jobs must be at least 1");
  if (llm_provider == LlmProviderKind::scripted && llm_script.empty()) {
    throw ConfigError("the scripted LLM provider needs llm.script");
  }
  if (llm_provider == LlmProviderKind::http && (llm_http.base_url.empty() || llm_http.model.empty())) {
    throw ConfigError("the http LLM provider needs llm.base_url and llm.model");
  }
  if (llm_provider == LlmProviderKind::http) require_env(kLlmKeyEnv);
  if (agent.enabled(Tool::web_search)) {
    if (search_provider == SearchProviderKind::fixture && search_fixture.empty()) {
      throw ConfigError("the fixture search provider needs search.fixture");
    }
    if (search_provider != SearchProviderKind::fixture && search_http.url.empty()) {
      throw ConfigError("the http search provider needs search.url");
    }
    if (search_provider == SearchProviderKind::recording && record_to.empty()) {
      throw ConfigError("the recording search provider needs search.record_to");
    }
    if (search_provider != SearchProviderKind::fixture) require_env(kSearchKeyEnv);
  }
  if (agent.enabled(Tool::credibility_assessment)) {
    if (reliability_dataset.empty()) {
      throw ConfigError("credibility_assessment is enabled but credibility.dataset is not set");
    }
    if (!file_exists(reliability_dataset)) {
      throw ConfigError("reliability dataset not found: " + reliability_dataset);
    }
  }
}

void disable_tools(AgentConfig& cfg, std::string_view list) {
  for (const auto& name : text::split(list, ',')) {
    auto n = text::trim(name);
    if (n.empty()) continue;
    auto t = tool_from_string(n);
    if (!t) throw ConfigError("unknown tool '" + n + "'");
    cfg.enabled_tools.erase(*t);
  }
}

std::string require_env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') throw ConfigError(std::string("environment variable ") + name + " is not set");
  return v;
}

// ---- factories ---------------------------------------------------------------

std::shared_ptr<const Clock> make_clock(const RunConfig& rc) {
  if (rc.frozen_clock) return std::make_shared<FrozenClock>();
  return std::make_shared<SteadyClock>();
}

LlmFactory make_llm_factory_from_script(const std::string& script_path, std::shared_ptr<const Clock> clock,
                                        RetryPolicy retry) {
  auto book = std::make_shared<ScriptBook>(ScriptBook::load(script_path));
  // Scripted transport errors should not cost wall time.
  Sleeper no_sleep = [](std::chrono::milliseconds) {};
  return [book, clock, no_sleep, retry](const std::string& key) {
    return std::make_shared<LlmClient>(book->backend_for(key), retry, clock, no_sleep);
  };
}

LlmFactory make_llm_factory(const RunConfig& rc, std::shared_ptr<const Clock> clock) {
  if (rc.llm_provider == LlmProviderKind::scripted) {
    return make_llm_factory_from_script(rc.llm_script, clock, rc.llm_retry);
  }
  HttpChatOptions opts = rc.llm_http;
  opts.api_key = require_env(kLlmKeyEnv);
  auto backend = std::make_shared<HttpChatBackend>(opts);
  auto retry = rc.llm_retry;
  return [backend, retry, clock](const std::string&) {
    return std::make_shared<LlmClient>(backend, retry, clock, real_sleeper());
  };
}

SearchSetup make_search(const RunConfig& rc) {
  SearchSetup s;
  if (!rc.agent.enabled(Tool::web_search)) return s;
  if (rc.search_provider == SearchProviderKind::fixture) {
    s.provider = std::make_shared<FixtureSearchProvider>(FixtureSearchProvider::load(rc.search_fixture));
    return s;
  }
  HttpSearchOptions opts = rc.search_http;
  opts.api_key = require_env(kSearchKeyEnv);
  auto http = std::make_shared<HttpSearchProvider>(opts);
  if (rc.search_provider == SearchProviderKind::recording) {
    s.recorder = std::make_shared<RecordingSearchProvider>(http);
    s.provider = s.recorder;
  } else {
    s.provider = http;
  }
  return s;
}

std::shared_ptr<const ReliabilityDataset> make_reliability(const RunConfig& rc) {
  if (!rc.agent.enabled(Tool::credibility_assessment)) return nullptr;
  return std::make_shared<const ReliabilityDataset>(load_reliability_dataset(rc.reliability_dataset));
}

PromptLibrary prompts_for(const RunConfig& rc) {
  if (rc.prompt_dir.empty()) return PromptLibrary::bundled();
  return PromptLibrary::load(rc.prompt_dir);
}

}  // namespace factlab
