#pragma once

// Source credibility assessment against a tiered reliability dataset.
//
// Dataset rows name registrable domains; lookups walk the host's dot-separated
// labels from longest to shortest suffix, so "blog.nytimes.com" resolves to a
// "nytimes.com" row while "notcdc.gov" never matches "cdc.gov".

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "factlab/model.hpp"

namespace factlab {

struct ReliabilityEntry {
  CredibilityTier tier = CredibilityTier::unknown;
  std::optional<std::string> notes;
};

struct ReliabilityDataset {
  std::map<std::string, ReliabilityEntry, std::less<>> entries;
  std::string version;
};

// CSV with header `domain,tier,notes`. Throws IoError, ParseError (with line
// numbers) or DuplicateIdError for a repeated domain.
ReliabilityDataset load_reliability_dataset(const std::string& path);
ReliabilityDataset parse_reliability_csv(std::string_view data, const std::string& version);

// Lowercase host without scheme, credentials, port or path; a leading "www."
// is dropped. Throws ValidationError for anything that is not an absolute URL.
std::string normalize_domain(std::string_view url);

struct CredibilityResult {
  CredibilityTier tier = CredibilityTier::unknown;
  double score = 0.0;
  std::string domain;                         // normalized host of the URL
  std::optional<std::string> matched_domain;  // dataset row that matched
};

CredibilityResult assess(std::string_view url, const ReliabilityDataset& ds, const ScoreConfig& sc);

}  // namespace factlab
