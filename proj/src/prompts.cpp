#include "factlab/prompts.hpp"

#include <filesystem>

#include "factlab/errors.hpp"
#include "factlab/text.hpp"

namespace factlab {

namespace {

const char* const kTemplateNames[] = {"plan",      "stance",         "reformulate", "numeric_extraction",
                                      "reflect",   "narrative",      "model_judgment", "judge",
                                      "rewrite"};

std::string substitute(const std::string& tmpl, const std::map<std::string, std::string>& vars,
                       const std::string& name) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    auto open = tmpl.find("{{", pos);
    if (open == std::string::npos) {
      out += tmpl.substr(pos);
      break;
    }
    auto close = tmpl.find("}}", open + 2);
    if (close == std::string::npos) throw ValidationError("unterminated placeholder in template " + name);
    out += tmpl.substr(pos, open - pos);
    auto key = text::trim(tmpl.substr(open + 2, close - open - 2));
    auto it = vars.find(key);
    if (it == vars.end()) throw ValidationError("template " + name + " needs a value for {{" + key + "}}");
    out += it->second;
    pos = close + 2;
  }
  return out;
}

}  // namespace

PromptLibrary PromptLibrary::load(const std::string& dir) {
  namespace fs = std::filesystem;
  PromptLibrary lib;
  lib.version_ = text::trim(text::read_file((fs::path(dir) / "VERSION").string()));
  if (lib.version_.empty()) throw ParseError(dir + "/VERSION is empty");
  for (const char* name : kTemplateNames) {
    auto path = (fs::path(dir) / (std::string(name) + ".txt")).string();
    auto body = text::read_file(path);
    auto sys = body.find("[system]\n");
    auto usr = body.find("[user]\n");
    if (sys == std::string::npos || usr == std::string::npos || usr < sys) {
      throw ParseError(path + ": expected [system] then [user] sections");
    }
    Template t;
    t.system = text::trim(body.substr(sys + 9, usr - sys - 9));
    t.user = text::trim(body.substr(usr + 7));
    lib.templates_[name] = std::move(t);
  }
  return lib;
}

const PromptLibrary& PromptLibrary::bundled() {
  static const PromptLibrary lib = load(FACTLAB_PROMPT_DIR);
  return lib;
}

ChatRequest PromptLibrary::render(const std::string& name, const std::map<std::string, std::string>& vars,
                                  Schema schema) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw ValidationError("unknown prompt template '" + name + "'");
  ChatRequest req;
  req.system_prompt = substitute(it->second.system, vars, name);
  req.user_prompt = substitute(it->second.user, vars, name);
  req.expected_schema = schema;
  req.temperature = 0.0;
  return req;
}

}  // namespace factlab
