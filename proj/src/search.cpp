#include "factlab/search.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>

#include "factlab/credibility.hpp"
#include "factlab/errors.hpp"
#include "factlab/prompts.hpp"
#include "factlab/text.hpp"

namespace factlab {

namespace {

std::optional<std::string> opt_string(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ParseError(std::string("search result field '") + key + "' must be a string");
  return it->get<std::string>();
}

std::string req_string(const Json& j, const char* key) {
  auto v = opt_string(j, key);
  if (!v) throw ParseError(std::string("search result missing '") + key + "'");
  return *v;
}

}  // namespace

Json to_json(const SearchResult& r) {
  Json j;
  j["url"] = r.url;
  j["title"] = r.title;
  j["snippet"] = r.snippet;
  j["published"] = r.published ? Json(*r.published) : Json(nullptr);
  j["raw_content"] = r.raw_content ? Json(*r.raw_content) : Json(nullptr);
  return j;
}

SearchResult search_result_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("search result must be an object");
  SearchResult r;
  r.url = req_string(j, "url");
  try {
    normalize_domain(r.url);
  } catch (const ValidationError& ex) {
    throw ParseError("search result url: " + std::string(ex.what()));
  }
  r.title = opt_string(j, "title").value_or("");
  r.snippet = opt_string(j, "snippet").value_or("");
  r.published = opt_string(j, "published");
  r.raw_content = opt_string(j, "raw_content");
  return r;
}

// ---- fixture provider -----------------------------------------------------

FixtureSearchProvider::FixtureSearchProvider(std::map<std::string, std::vector<SearchResult>> fixtures)
    : fixtures_(std::move(fixtures)) {}

FixtureSearchProvider FixtureSearchProvider::from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("search fixture must map query strings to result lists");
  std::map<std::string, std::vector<SearchResult>> fx;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_array()) throw ParseError("fixture entry '" + it.key() + "' must be an array");
    auto& list = fx[it.key()];
    for (const auto& r : it.value()) {
      try {
        list.push_back(search_result_from_json(r));
      } catch (const ParseError& ex) {
        throw ParseError("fixture entry '" + it.key() + "': " + ex.what());
      }
    }
  }
  return FixtureSearchProvider(std::move(fx));
}

FixtureSearchProvider FixtureSearchProvider::load(const std::string& path) {
  auto data = text::read_file(path);
  Json j;
  try {
    j = Json::parse(data);
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(path + ": " + ex.what());
  }
  return from_json(j);
}

std::vector<SearchResult> FixtureSearchProvider::search(const SearchQuery& q) {
  if (text::is_blank(q.terms)) throw ValidationError("search terms must not be empty");
  if (q.max_results == 0) throw ValidationError("max_results must be positive");
  auto it = fixtures_.find(q.terms);
  if (it == fixtures_.end()) return {};
  auto n = std::min(q.max_results, it->second.size());
  return {it->second.begin(), it->second.begin() + static_cast<std::ptrdiff_t>(n)};
}

Json fixtures_to_json(const std::map<std::string, std::vector<SearchResult>>& fixtures) {
  Json j = Json::object();
  for (const auto& [query, results] : fixtures) {
    Json arr = Json::array();
    for (const auto& r : results) arr.push_back(to_json(r));
    j[query] = std::move(arr);
  }
  return j;
}

// ---- recording provider ---------------------------------------------------

RecordingSearchProvider::RecordingSearchProvider(std::shared_ptr<SearchProvider> inner)
    : inner_(std::move(inner)) {
  if (!inner_) throw ValidationError("recording provider needs an inner provider");
}

std::vector<SearchResult> RecordingSearchProvider::search(const SearchQuery& q) {
  auto results = inner_->search(q);
  std::lock_guard lock(mu_);
  recorded_[q.terms] = results;
  return results;
}

std::map<std::string, std::vector<SearchResult>> RecordingSearchProvider::recorded() const {
  std::lock_guard lock(mu_);
  return recorded_;
}

void RecordingSearchProvider::save(const std::string& path) const {
  auto doc = fixtures_to_json(recorded()).dump(2);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write fixture file " + path);
  out << doc << '\n';
  if (!out) throw IoError("failed writing fixture file " + path);
}

// ---- content ---------------------------------------------------------------

std::string extract_content(const SearchResult& r, std::size_t cap) {
  if (cap == 0) throw ValidationError("content cap must be positive");
  std::string body;
  if (r.raw_content) body = text::strip_markup(*r.raw_content);
  if (body.empty()) body = text::strip_markup(r.snippet);
  if (body.empty()) throw ValidationError("search result " + r.url + " has no content");
  return text::truncate_at_word(body, cap);
}

namespace {

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

std::optional<std::string> make_date(int y, int m, int d) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (y < 1000 || y > 9999 || m < 1 || m > 12 || d < 1) return std::nullopt;
  int max = kDays[m - 1] + (m == 2 && is_leap(y) ? 1 : 0);
  if (d > max) return std::nullopt;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
  return std::string(buf);
}

std::optional<int> read_int(std::string_view s, std::size_t& i, std::size_t min_digits, std::size_t max_digits) {
  std::size_t start = i;
  int v = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])) && i - start < max_digits) {
    v = v * 10 + (s[i] - '0');
    ++i;
  }
  if (i - start < min_digits) return std::nullopt;
  if (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
  return v;
}

int month_from_name(std::string_view word) {
  static constexpr const char* kMonths[] = {"january", "february", "march",     "april",   "may",      "june",
                                            "july",    "august",   "september", "october", "november", "december"};
  auto w = text::to_lower(word);
  if (!w.empty() && w.back() == '.') w.pop_back();
  if (w.size() < 3) return 0;
  for (int m = 0; m < 12; ++m) {
    std::string_view full = kMonths[m];
    if (w == full || (w.size() == 3 && full.substr(0, 3) == w) || (w == "sept" && m == 8)) return m + 1;
  }
  return 0;
}

}  // namespace

std::optional<std::string> normalize_date(std::string_view raw) {
  auto s = text::trim(raw);
  if (s.empty()) return std::nullopt;

  // Numeric forms: YYYY-MM-DD or YYYY/MM/DD, optionally followed by a time.
  if (std::isdigit(static_cast<unsigned char>(s[0]))) {
    std::size_t i = 0;
    auto y = read_int(s, i, 4, 4);
    if (y && i < s.size() && (s[i] == '-' || s[i] == '/')) {
      char sep = s[i++];
      auto m = read_int(s, i, 1, 2);
      if (!m || i >= s.size() || s[i] != sep) return std::nullopt;
      ++i;
      auto d = read_int(s, i, 1, 2);
      if (!d) return std::nullopt;
      if (i < s.size() && s[i] != 'T' && s[i] != 't' && s[i] != ' ') return std::nullopt;
      return make_date(*y, *m, *d);
    }
  }

  // Word forms: "[Tue, ]15 Nov 1994[ ...]", "Nov 15, 1994", "November 15 1994".
  auto words = text::split(s, ' ');
  std::vector<std::string> w;
  for (auto& x : words) {
    auto t = text::trim(x);
    while (!t.empty() && t.back() == ',') t.pop_back();
    if (!t.empty()) w.push_back(t);
  }
  if (!w.empty() && w[0].size() >= 3 && std::isalpha(static_cast<unsigned char>(w[0][0])) &&
      month_from_name(w[0]) == 0) {
    w.erase(w.begin());  // weekday
  }
  if (w.size() < 3) return std::nullopt;
  auto num = [](const std::string& x, std::size_t lo, std::size_t hi) -> std::optional<int> {
    std::size_t i = 0;
    auto v = read_int(x, i, lo, hi);
    if (!v || i != x.size()) return std::nullopt;
    return v;
  };
  if (int m = month_from_name(w[1]); m != 0) {
    auto d = num(w[0], 1, 2);
    auto y = num(w[2], 4, 4);
    if (d && y) return make_date(*y, m, *d);
  }
  if (int m = month_from_name(w[0]); m != 0) {
    auto d = num(w[1], 1, 2);
    auto y = num(w[2], 4, 4);
    if (d && y) return make_date(*y, m, *d);
  }
  return std::nullopt;
}

// ---- ingestion -------------------------------------------------------------

IngestResult ingest(const std::vector<SearchResult>& results, const IngestContext& ctx, EvidenceLog& log,
                    LlmClient& llm, const PromptLibrary& prompts, const ScoreConfig& sc) {
  if (results.empty()) throw ValidationError("ingest needs at least one search result");
  if (text::is_blank(ctx.terms)) throw ValidationError("ingest needs the search terms used");

  IngestResult out;
  for (const auto& r : results) {
    std::string content;
    try {
      content = extract_content(r, ctx.content_cap);
    } catch (const ValidationError&) {
      out.notes.push_back("Search result " + r.url + " had no usable content and was skipped.");
      continue;
    }

    Evidence e;
    e.id = log.next_evidence_id();
    e.sub_claim = ctx.sub_claim;
    e.content = content;
    e.source_url = r.url;
    try {
      e.source_domain = normalize_domain(r.url);
    } catch (const ValidationError&) {
      e.source_domain = std::nullopt;
    }
    if (r.published) e.publication_date = normalize_date(*r.published);
    e.search_terms = ctx.terms;
    e.credibility_tier = CredibilityTier::unknown;
    e.credibility_score = sc.tier_score(CredibilityTier::unknown);
    e.origin_tool = Tool::web_search;

    try {
      auto req = prompts.render("stance",
                                {{"claim", ctx.claim_text},
                                 {"sub_claim", ctx.sub_claim},
                                 {"source", r.url},
                                 {"content", content}},
                                Schema::stance_and_relevance);
      auto p = llm.complete_as<StancePayload>(req);
      e.stance = p.stance;
      e.relevance_label = p.relevance;
    } catch (const Error& ex) {
      // Kept in the log for provenance but cannot move the verdict.
      e.stance = Stance::irrelevant;
      e.relevance_label = RelevanceLabel::irrelevant;
      out.notes.push_back("Stance labelling failed for " + e.id + " (" + r.url +
                          "); stored as irrelevant: " + ex.what());
    }
    out.evidence_ids.push_back(e.id);
    log.append(std::move(e));
  }
  return out;
}

// ---- reformulation ---------------------------------------------------------

std::string fallback_terms(const std::string& original_terms, const std::string& sub_claim, unsigned attempt,
                           const std::vector<std::string>& used) {
  std::set<std::string> seen;
  for (const auto& u : used) {
    for (auto& t : text::tokenize(u)) seen.insert(t);
  }
  for (auto& t : text::tokenize(original_terms)) seen.insert(t);

  std::vector<std::string> fresh;
  for (auto& t : text::tokenize(sub_claim)) {
    if (t.size() < 3 || seen.count(t)) continue;
    seen.insert(t);
    fresh.push_back(t);
  }
  // Spread the new keywords over attempts so successive fallbacks differ.
  std::size_t take = std::min<std::size_t>(fresh.size(), std::max<std::size_t>(1, attempt) * 2);
  std::string out = text::trim(original_terms);
  for (std::size_t i = 0; i < take; ++i) out += " " + fresh[i];

  auto is_used = [&](const std::string& c) {
    return c == original_terms || std::find(used.begin(), used.end(), c) != used.end();
  };
  if (take == 0 || is_used(out)) {
    // Nothing new to add: fall back to the bare sub-claim, then a numbered variant.
    out = text::collapse_whitespace(sub_claim);
    if (out.empty() || is_used(out)) out = text::trim(original_terms) + " " + std::to_string(attempt);
  }
  return out;
}

Reformulation reformulate(const std::string& original_terms, const std::string& sub_claim, unsigned attempt,
                          const std::vector<std::string>& used, LlmClient& llm, const PromptLibrary& prompts) {
  if (attempt == 0) throw ValidationError("reformulation attempts start at 1");
  std::vector<std::string> tried = used;
  if (std::find(tried.begin(), tried.end(), original_terms) == tried.end()) tried.insert(tried.begin(), original_terms);

  Reformulation out;
  try {
    auto req = prompts.render("reformulate",
                              {{"sub_claim", sub_claim},
                               {"used_terms", text::join(tried, "; ")},
                               {"attempt", std::to_string(attempt)}},
                              Schema::query_reformulation);
    auto p = llm.complete_as<ReformulationPayload>(req);
    auto terms = text::collapse_whitespace(p.terms);
    if (terms.empty()) {
      out.note = "reformulation was empty";
    } else if (std::find(tried.begin(), tried.end(), terms) != tried.end()) {
      out.note = "reformulation repeated earlier terms '" + terms + "'";
    } else {
      out.terms = terms;
      return out;
    }
  } catch (const Error& ex) {
    out.note = std::string("reformulation failed: ") + ex.what();
  }
  out.fallback = true;
  out.terms = fallback_terms(original_terms, sub_claim, attempt, tried);
  return out;
}

}  // namespace factlab
