#pragma once

// Versioned prompt templates loaded from a directory of text files.
//
// Each template file holds a "[system]" section and a "[user]" section;
// {{name}} placeholders are substituted at render time. The directory's
// VERSION file names the template set so traces can cite it.

#include <map>
#include <string>

#include "factlab/llm.hpp"

namespace factlab {

class PromptLibrary {
 public:
  // Throws IoError / ParseError when a template is missing or malformed.
  static PromptLibrary load(const std::string& dir);
  // Templates shipped with the repository.
  static const PromptLibrary& bundled();

  const std::string& version() const { return version_; }

  // Throws ValidationError for an unknown template or an unbound placeholder.
  ChatRequest render(const std::string& name, const std::map<std::string, std::string>& vars,
                     Schema schema) const;

 private:
  struct Template {
    std::string system;
    std::string user;
  };
  std::string version_;
  std::map<std::string, Template> templates_;
};

}  // namespace factlab
