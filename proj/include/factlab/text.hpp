#pragma once

// Small string utilities shared across factlab: tokenization for lexical
// retrieval, markup stripping for page content, a minimal RFC 4180 CSV reader
// and UTF-8 offset helpers.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace factlab::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool is_blank(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Lowercased tokens split on ASCII punctuation and whitespace. Bytes >= 0x80
// are kept inside tokens so non-ASCII words survive intact.
std::vector<std::string> tokenize(std::string_view s);

// Token-set Jaccard similarity. Two empty token sets score 0.
double jaccard(std::string_view a, std::string_view b);

// Collapse every run of whitespace to a single space and trim the ends.
std::string collapse_whitespace(std::string_view s);

// Remove HTML/XML markup: comments, script/style bodies and tags. Common
// entities are decoded, except &lt; and &gt; which are left encoded so the
// output can never contain a tag.
std::string strip_markup(std::string_view html);

// Cut to at most `cap` bytes at a whitespace boundary (never inside a UTF-8
// sequence). A single word longer than `cap` is hard-cut.
std::string truncate_at_word(std::string_view s, std::size_t cap);

// Map a code-point offset into a byte offset. Offsets past the end clamp to
// s.size(); returns npos when `cp` exceeds the number of code points.
std::size_t codepoint_to_byte(std::string_view s, std::size_t cp);
std::size_t codepoint_length(std::string_view s);

// RFC 4180 CSV. Quoted fields may contain separators, doubled quotes and
// newlines. Each row carries the 1-based line number it started on.
struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};
std::vector<CsvRow> parse_csv(std::string_view data, char sep = ',');

std::string read_file(const std::string& path);

}  // namespace factlab::text
