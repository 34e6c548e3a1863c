#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "factlab/config.hpp"
#include "factlab/errors.hpp"
#include "support.hpp"

using namespace factlab;
using namespace factlab::testing;
namespace fs = std::filesystem;

namespace {

// Scoped env var, restored on exit.
struct EnvGuard {
  std::string name;
  std::optional<std::string> saved;
  EnvGuard(const char* n, const char* value) : name(n) {
    if (const char* v = std::getenv(n)) saved = v;
    if (value) setenv(n, value, 1);
    else unsetenv(n);
  }
  ~EnvGuard() {
    if (saved) setenv(name.c_str(), saved->c_str(), 1);
    else unsetenv(name.c_str());
  }
};

struct TempDir {
  fs::path path = fs::temp_directory_path() / ("factlab_cfg_" + std::to_string(::getpid()) + "_" + std::to_string(rand()));
  TempDir() { fs::create_directories(path); }
  ~TempDir() { fs::remove_all(path); }
  std::string write(const std::string& name, const std::string& body) const {
    auto p = path / name;
    std::ofstream(p) << body;
    return p.string();
  }
};

template <class T>
const T& as(const TomlDocument& d, const std::string& key) {
  return std::get<T>(d.at(key).v);
}

}  // namespace

TEST(Toml, ParsesSubset) {
  auto d = parse_toml(
      "# comment\n"
      "top = 1\n"
      "[llm]\n"
      "provider = \"scripted\"  # trailing\n"
      "path = 'C:\\raw\\path'\n"
      "esc = \"a\\tb\\\"c\\u00e9\"\n"
      "[agent]\n"
      "max_tool_calls = 8\n"
      "tolerance = 5e-3\n"
      "neg = -2\n"
      "on = true\n"
      "enabled_tools = [\"web_search\", \"numeric_verification\",]\n"
      "edges = [ -0.6, -0.2, 0, 0.2, 0.6 ]\n");
  EXPECT_EQ(as<std::int64_t>(d, "top"), 1);
  EXPECT_EQ(as<std::string>(d, "llm.provider"), "scripted");
  EXPECT_EQ(as<std::string>(d, "llm.path"), "C:\\raw\\path");
  EXPECT_EQ(as<std::string>(d, "llm.esc"), "a\tb\"c\xc3\xa9");
  EXPECT_EQ(as<std::int64_t>(d, "agent.max_tool_calls"), 8);
  EXPECT_DOUBLE_EQ(as<double>(d, "agent.tolerance"), 0.005);
  EXPECT_EQ(as<std::int64_t>(d, "agent.neg"), -2);
  EXPECT_TRUE(as<bool>(d, "agent.on"));
  EXPECT_EQ(as<std::vector<TomlScalar>>(d, "agent.enabled_tools").size(), 2u);
  EXPECT_EQ(as<std::vector<TomlScalar>>(d, "agent.edges").size(), 5u);
  EXPECT_EQ(d.at("agent.max_tool_calls").line, 8u);
}

TEST(Toml, ErrorsNameTheLine) {
  const char* bad[] = {"a = \n", "[x\n", "a = \"open\n", "a = 1\na = 2\n", "a = [1, 2\n", "= 3\n", "a = yes\n"};
  for (const char* doc : bad) {
    EXPECT_THROW(parse_toml(doc), ParseError) << doc;
  }
  try {
    parse_toml("a = 1\nb = 2\nc = @\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Config, LoadsAndResolvesRelativePaths) {
  auto rc = load_config(fixture_path("golden/golden.toml"));
  EXPECT_EQ(rc.llm_provider, LlmProviderKind::scripted);
  EXPECT_TRUE(fs::path(rc.llm_script).is_absolute() || rc.llm_script.find("golden") != std::string::npos);
  EXPECT_TRUE(fs::exists(rc.llm_script));
  EXPECT_TRUE(fs::exists(rc.search_fixture));
  EXPECT_TRUE(fs::exists(rc.reliability_dataset));
  EXPECT_TRUE(rc.frozen_clock);
  EXPECT_EQ(rc.agent.max_tool_calls, 8u);
  EXPECT_NO_THROW(rc.validate());
}

TEST(Config, UnknownKeyRejected) {
  EXPECT_THROW(config_from_toml(parse_toml("[agent]\nmax_tool_call = 3\n"), "."), ConfigError);
  EXPECT_THROW(config_from_toml(parse_toml("[bogus]\nx = 1\n"), "."), ConfigError);
  // Keys never live in config files.
  EXPECT_THROW(config_from_toml(parse_toml("[llm]\napi_key = \"sk-test\"\n"), "."), ConfigError);
}

TEST(Config, TypedValuesChecked) {
  EXPECT_THROW(config_from_toml(parse_toml("[agent]\nmax_tool_calls = \"8\"\n"), "."), ConfigError);
  EXPECT_THROW(config_from_toml(parse_toml("[agent]\nmax_tool_calls = 0\n"), "."), ConfigError);
  EXPECT_THROW(config_from_toml(parse_toml("[agent]\nenabled_tools = [\"web_search\", \"telepathy\"]\n"), "."),
               ConfigError);
  EXPECT_THROW(config_from_toml(parse_toml("[llm]\nprovider = \"carrier_pigeon\"\n"), "."), ConfigError);
  auto rc = config_from_toml(parse_toml("[agent]\nenabled_tools = []\n"), ".");
  EXPECT_TRUE(rc.agent.enabled_tools.empty());
}

TEST(Config, MissingReliabilityDataset) {
  TempDir t;
  auto script = t.write("s.json", "[]");
  auto fixture = t.write("f.json", "{}");
  auto cfg = t.write("c.toml", "[llm]\nscript = \"s.json\"\n[search]\nfixture = \"f.json\"\n"
                               "[credibility]\ndataset = \"missing.csv\"\n");
  auto rc = load_config(cfg);
  try {
    rc.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("missing.csv"), std::string::npos);
  }
  // Without credibility the dataset is not needed.
  disable_tools(rc.agent, "credibility_assessment");
  EXPECT_NO_THROW(rc.validate());
  (void)script;
  (void)fixture;
}

TEST(Config, HttpProviderNeedsKeyInEnvironment) {
  auto doc = parse_toml("[llm]\nprovider = \"http\"\nbase_url = \"http://127.0.0.1:9/v1\"\nmodel = \"m\"\n"
                        "[agent]\nenabled_tools = []\n");
  auto rc = config_from_toml(doc, ".");
  {
    EnvGuard g(kLlmKeyEnv, nullptr);
    try {
      rc.validate();
      FAIL();
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(kLlmKeyEnv), std::string::npos);
    }
    EXPECT_THROW(make_llm_factory(rc, frozen()), ConfigError);
  }
  {
    EnvGuard g(kLlmKeyEnv, "");
    EXPECT_THROW(rc.validate(), ConfigError);
  }
  {
    EnvGuard g(kLlmKeyEnv, "sk-very-secret-value");
    EXPECT_NO_THROW(rc.validate());
    EXPECT_NO_THROW(make_llm_factory(rc, frozen()));
  }
}

TEST(Config, HttpSearchNeedsKeyInEnvironment) {
  TempDir t;
  t.write("s.json", "[]");
  auto rc = load_config(t.write("c.toml", "[llm]\nscript = \"s.json\"\n[search]\nprovider = \"http\"\n"
                                          "url = \"http://127.0.0.1:9/search\"\n"
                                          "[agent]\nenabled_tools = [\"web_search\"]\n"));
  {
    EnvGuard g(kSearchKeyEnv, nullptr);
    EXPECT_THROW(rc.validate(), ConfigError);
    EXPECT_THROW(make_search(rc), ConfigError);
  }
  {
    EnvGuard g(kSearchKeyEnv, "search-secret-123");
    EXPECT_NO_THROW(rc.validate());
    EXPECT_TRUE(make_search(rc).provider);
  }
  // Search disabled: no key needed.
  EnvGuard g(kSearchKeyEnv, nullptr);
  disable_tools(rc.agent, "web_search");
  EXPECT_NO_THROW(rc.validate());
}

TEST(Config, RequireEnvNeverEchoesValue) {
  EnvGuard g("FACTLAB_TEST_VAR", "hunter2-secret");
  EXPECT_EQ(require_env("FACTLAB_TEST_VAR"), "hunter2-secret");
  EnvGuard g2("FACTLAB_TEST_VAR", nullptr);
  try {
    require_env("FACTLAB_TEST_VAR");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).find("hunter2"), std::string::npos);
  }
}

TEST(Config, DisableTools) {
  AgentConfig cfg;
  disable_tools(cfg, "web_search, numeric_verification");
  EXPECT_EQ(cfg.enabled_tools, std::set<Tool>{Tool::credibility_assessment});
  disable_tools(cfg, "");
  EXPECT_EQ(cfg.enabled_tools.size(), 1u);
  EXPECT_THROW(disable_tools(cfg, "web_search,numerical_magic"), ConfigError);
}

TEST(Config, ScriptedProviderNeedsScript) {
  auto rc = config_from_toml(parse_toml("[agent]\nenabled_tools = []\n"), ".");
  EXPECT_THROW(rc.validate(), ConfigError);
}
