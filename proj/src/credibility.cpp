#include "factlab/credibility.hpp"

#include <cctype>
#include <cstdio>

#include "factlab/errors.hpp"
#include "factlab/text.hpp"

namespace factlab {

namespace {

bool valid_scheme(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
  for (unsigned char c : s) {
    if (!std::isalnum(c) && c != '+' && c != '-' && c != '.') return false;
  }
  return true;
}

void check_host(std::string_view host, std::string_view original) {
  if (host.empty()) throw ValidationError("URL has no host: '" + std::string(original) + "'");
  for (const auto& label : text::split(host, '.')) {
    if (label.empty()) throw ValidationError("URL host has an empty label: '" + std::string(original) + "'");
    for (unsigned char c : label) {
      if (!(std::isalnum(c) || c == '-' || c == '_' || c >= 0x80)) {
        throw ValidationError("URL host contains '" + std::string(1, static_cast<char>(c)) +
                              "': '" + std::string(original) + "'");
      }
    }
  }
}

std::string strip_www(std::string host) {
  if (host.rfind("www.", 0) == 0 && host.size() > 4) host.erase(0, 4);
  return host;
}

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

std::string normalize_domain(std::string_view url) {
  auto s = text::trim(url);
  auto sep = s.find("://");
  if (sep == std::string::npos || !valid_scheme(std::string_view(s).substr(0, sep))) {
    throw ValidationError("not an absolute URL: '" + std::string(url) + "'");
  }
  auto rest = std::string_view(s).substr(sep + 3);
  auto end = rest.find_first_of("/?#");
  auto authority = rest.substr(0, end);
  if (auto at = authority.rfind('@'); at != std::string_view::npos) authority.remove_prefix(at + 1);
  std::string host;
  if (!authority.empty() && authority.front() == '[') {
    auto close = authority.find(']');
    if (close == std::string_view::npos) throw ValidationError("unterminated IPv6 host: '" + std::string(url) + "'");
    return text::to_lower(authority.substr(0, close + 1));
  }
  auto colon = authority.rfind(':');
  if (colon != std::string_view::npos) {
    auto port = authority.substr(colon + 1);
    for (unsigned char c : port) {
      if (!std::isdigit(c)) throw ValidationError("invalid port in URL: '" + std::string(url) + "'");
    }
    authority = authority.substr(0, colon);
  }
  host = text::to_lower(authority);
  while (!host.empty() && host.back() == '.') host.pop_back();
  check_host(host, url);
  return strip_www(std::move(host));
}

ReliabilityDataset parse_reliability_csv(std::string_view data, const std::string& version) {
  auto rows = text::parse_csv(data);
  if (rows.empty()) throw ParseError("reliability dataset is empty; header 'domain,tier,notes' required");
  const auto& header = rows.front().fields;
  if (header.size() != 3 || text::trim(header[0]) != "domain" || text::trim(header[1]) != "tier" ||
      text::trim(header[2]) != "notes") {
    throw ParseError("line " + std::to_string(rows.front().line) +
                     ": header must be 'domain,tier,notes'");
  }
  ReliabilityDataset ds;
  ds.version = version;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    auto where = "line " + std::to_string(row.line);
    if (row.fields.size() < 2 || row.fields.size() > 3) {
      throw ParseError(where + ": expected 3 fields, got " + std::to_string(row.fields.size()));
    }
    auto raw_domain = text::trim(row.fields[0]);
    if (raw_domain.find("://") != std::string::npos || raw_domain.find('/') != std::string::npos) {
      throw ParseError(where + ": domain '" + raw_domain + "' must not carry a scheme or path");
    }
    std::string domain;
    try {
      domain = normalize_domain("http://" + raw_domain);
    } catch (const ValidationError&) {
      throw ParseError(where + ": invalid domain '" + raw_domain + "'");
    }
    auto tier_name = text::trim(row.fields[1]);
    auto tier = tier_from_string(tier_name);
    if (!tier || *tier == CredibilityTier::unknown) {
      throw ParseError(where + ": invalid tier '" + tier_name + "' (expected high, medium or low)");
    }
    ReliabilityEntry entry{*tier, std::nullopt};
    if (row.fields.size() == 3 && !text::is_blank(row.fields[2])) entry.notes = row.fields[2];
    if (!ds.entries.emplace(domain, std::move(entry)).second) {
      throw DuplicateIdError(where + ": duplicate domain '" + domain + "'");
    }
  }
  return ds;
}

ReliabilityDataset load_reliability_dataset(const std::string& path) {
  auto data = text::read_file(path);
  auto name = path.substr(path.find_last_of('/') == std::string::npos ? 0 : path.find_last_of('/') + 1);
  try {
    return parse_reliability_csv(data, name + "@" + fnv1a_hex(data));
  } catch (const DuplicateIdError& ex) {
    throw DuplicateIdError(path + ": " + ex.what());
  } catch (const ParseError& ex) {
    throw ParseError(path + ": " + ex.what());
  }
}

CredibilityResult assess(std::string_view url, const ReliabilityDataset& ds, const ScoreConfig& sc) {
  CredibilityResult r;
  r.domain = normalize_domain(url);
  std::string_view candidate = r.domain;
  while (true) {
    auto it = ds.entries.find(candidate);
    if (it != ds.entries.end()) {
      r.tier = it->second.tier;
      r.matched_domain = it->first;
      break;
    }
    auto dot = candidate.find('.');
    if (dot == std::string_view::npos) break;
    candidate.remove_prefix(dot + 1);
  }
  r.score = sc.tier_score(r.tier);
  return r;
}

}  // namespace factlab
