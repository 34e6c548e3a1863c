#include <httplib.h>

#include "factlab/errors.hpp"
#include "factlab/search.hpp"
#include "http_util.hpp"

namespace factlab {

HttpSearchProvider::HttpSearchProvider(HttpSearchOptions opts, Sleeper sleeper)
    : opts_(std::move(opts)), sleeper_(sleeper ? std::move(sleeper) : real_sleeper()) {
  detail::split_base_url(opts_.url);
}

std::vector<SearchResult> HttpSearchProvider::search(const SearchQuery& q) {
  if (q.terms.empty()) throw ValidationError("search terms must not be empty");
  if (q.max_results == 0) throw ValidationError("max_results must be positive");
  for (unsigned attempt = 0;; ++attempt) {
    try {
      return search_once(q);
    } catch (const TransportError&) {
      if (attempt >= opts_.retry.retries) throw;
      sleeper_(opts_.retry.backoff * (1u << attempt));
    }
  }
}

std::vector<SearchResult> HttpSearchProvider::search_once(const SearchQuery& q) {
  auto base = detail::split_base_url(opts_.url);
  httplib::Client cli(base.origin);
  cli.set_connection_timeout(opts_.timeout_seconds, 0);
  cli.set_read_timeout(opts_.timeout_seconds, 0);

  Json body;
  body["query"] = q.terms;
  body["max_results"] = q.max_results;
  body["include_raw_content"] = true;

  httplib::Headers headers;
  if (!opts_.api_key.empty()) headers.emplace("Authorization", "Bearer " + opts_.api_key);

  auto res = cli.Post(base.path.empty() ? "/" : base.path, headers, body.dump(), "application/json");
  if (!res) throw TransportError("search request failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw TransportError("search endpoint returned HTTP " + std::to_string(res->status));
  }

  std::vector<SearchResult> out;
  try {
    auto j = Json::parse(res->body);
    for (const auto& item : j.at("results")) {
      SearchResult r;
      r.url = item.at("url").get<std::string>();
      r.title = item.value("title", "");
      if (item.contains("content") && item["content"].is_string()) {
        r.snippet = item["content"].get<std::string>();
      } else if (item.contains("snippet") && item["snippet"].is_string()) {
        r.snippet = item["snippet"].get<std::string>();
      }
      for (const char* key : {"published_date", "published"}) {
        if (item.contains(key) && item[key].is_string()) {
          r.published = item[key].get<std::string>();
          break;
        }
      }
      if (item.contains("raw_content") && item["raw_content"].is_string()) {
        r.raw_content = item["raw_content"].get<std::string>();
      }
      // Results with relative or broken URLs cannot be cited; drop them.
      try {
        out.push_back(search_result_from_json(to_json(r)));
      } catch (const ParseError&) {
        continue;
      }
      if (out.size() == q.max_results) break;
    }
  } catch (const nlohmann::json::exception& ex) {
    throw TransportError(std::string("malformed search response: ") + ex.what());
  }
  return out;
}

}  // namespace factlab
