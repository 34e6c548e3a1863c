#pragma once

// Internal helpers for the cpp-httplib based adapters.

#include <string>

#include "factlab/errors.hpp"

namespace factlab::detail {

struct BaseUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // always starts with '/', no trailing '/'
};

inline BaseUrl split_base_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("base URL must be absolute: " + url);
  auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw ConfigError("unsupported URL scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  BaseUrl b;
  if (path_start == std::string::npos) {
    b.origin = url;
    b.path = "";
  } else {
    b.origin = url.substr(0, path_start);
    b.path = url.substr(path_start);
  }
  while (!b.path.empty() && b.path.back() == '/') b.path.pop_back();
  if (b.origin.size() <= scheme_end + 3) throw ConfigError("base URL has no host: " + url);
  return b;
}

}  // namespace factlab::detail
