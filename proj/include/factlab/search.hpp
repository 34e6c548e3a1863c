#pragma once

// Web search tool: provider abstraction, page content extraction and
// provenance-stamped ingestion into the evidence log.

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "factlab/clock.hpp"
#include "factlab/llm.hpp"
#include "factlab/model.hpp"
#include "factlab/serialize.hpp"

namespace factlab {

class PromptLibrary;

struct SearchQuery {
  std::string terms;
  unsigned attempt = 0;
  std::size_t max_results = 5;
};

struct SearchResult {
  std::string url;
  std::string title;
  std::string snippet;
  std::optional<std::string> published;
  std::optional<std::string> raw_content;

  bool operator==(const SearchResult&) const = default;
};

Json to_json(const SearchResult& r);
// Throws ParseError for missing fields or a URL that is not absolute.
SearchResult search_result_from_json(const Json& j);

class SearchProvider {
 public:
  virtual ~SearchProvider() = default;
  virtual std::string provider_id() const = 0;
  // At most q.max_results results. Throws TransportError for network
  // failures that survived retries.
  virtual std::vector<SearchResult> search(const SearchQuery& q) = 0;
};

// Canned results keyed by the exact query string. A missing key is an empty
// result list, not an error.
class FixtureSearchProvider final : public SearchProvider {
 public:
  FixtureSearchProvider() = default;
  explicit FixtureSearchProvider(std::map<std::string, std::vector<SearchResult>> fixtures);

  static FixtureSearchProvider from_json(const Json& j);
  static FixtureSearchProvider load(const std::string& path);

  std::string provider_id() const override { return "fixture"; }
  std::vector<SearchResult> search(const SearchQuery& q) override;

  const std::map<std::string, std::vector<SearchResult>>& fixtures() const { return fixtures_; }

 private:
  std::map<std::string, std::vector<SearchResult>> fixtures_;
};

Json fixtures_to_json(const std::map<std::string, std::vector<SearchResult>>& fixtures);

struct HttpSearchOptions {
  std::string url;
  std::string api_key;
  int timeout_seconds = 30;
  RetryPolicy retry;
};

inline constexpr const char* kSearchKeyEnv = "FACTLAB_SEARCH_API_KEY";

// Generic JSON search API: POST {"query", "max_results", "include_raw_content"}
// answered by {"results": [{"url", "title", "content", "published_date",
// "raw_content"}]}.
class HttpSearchProvider final : public SearchProvider {
 public:
  explicit HttpSearchProvider(HttpSearchOptions opts, Sleeper sleeper = nullptr);
  std::string provider_id() const override { return "http"; }
  std::vector<SearchResult> search(const SearchQuery& q) override;

 private:
  std::vector<SearchResult> search_once(const SearchQuery& q);

  HttpSearchOptions opts_;
  Sleeper sleeper_;
};

// Forwards to another provider and captures every response into the fixture
// format, so a live run can be replayed offline.
class RecordingSearchProvider final : public SearchProvider {
 public:
  explicit RecordingSearchProvider(std::shared_ptr<SearchProvider> inner);
  std::string provider_id() const override { return "recording:" + inner_->provider_id(); }
  std::vector<SearchResult> search(const SearchQuery& q) override;

  std::map<std::string, std::vector<SearchResult>> recorded() const;
  void save(const std::string& path) const;

 private:
  std::shared_ptr<SearchProvider> inner_;
  mutable std::mutex mu_;
  std::map<std::string, std::vector<SearchResult>> recorded_;
};

inline constexpr std::size_t kDefaultContentCap = 4000;

// Markup-free, whitespace-normalized text capped at `cap` bytes on a word
// boundary; falls back to the snippet. Throws ValidationError when neither
// raw content nor snippet carries text.
std::string extract_content(const SearchResult& r, std::size_t cap = kDefaultContentCap);

// ISO-8601 calendar date (YYYY-MM-DD) or nullopt when the input cannot be
// read unambiguously.
std::optional<std::string> normalize_date(std::string_view raw);

struct IngestResult {
  std::vector<std::string> evidence_ids;
  std::vector<std::string> notes;
};

struct IngestContext {
  std::string claim_text;
  std::string sub_claim;
  std::string terms;
  std::size_t content_cap = kDefaultContentCap;
};

// One Evidence per usable result, labelled by one stance_and_relevance call
// each. A failed stance call stores the evidence as irrelevant and adds a
// note. Throws ValidationError when `results` is empty.
IngestResult ingest(const std::vector<SearchResult>& results, const IngestContext& ctx, EvidenceLog& log,
                    LlmClient& llm, const PromptLibrary& prompts, const ScoreConfig& sc);

struct Reformulation {
  std::string terms;
  bool fallback = false;
  std::string note;
};

// New key words for a step whose search came back empty. The model's answer
// is used only if it differs from every term string in `used`; otherwise, or
// when the model fails, deterministic fallback terms are produced.
Reformulation reformulate(const std::string& original_terms, const std::string& sub_claim, unsigned attempt,
                          const std::vector<std::string>& used, LlmClient& llm, const PromptLibrary& prompts);

// Original terms plus sub-claim keywords not present in any used terms.
std::string fallback_terms(const std::string& original_terms, const std::string& sub_claim, unsigned attempt,
                           const std::vector<std::string>& used);

}  // namespace factlab
