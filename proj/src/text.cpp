#include "factlab/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "factlab/errors.hpp"

namespace factlab::text {

namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_token_byte(unsigned char c) { return c >= 0x80 || std::isalnum(c); }

bool starts_with_ci(std::string_view s, std::size_t pos, std::string_view prefix) {
  if (pos + prefix.size() > s.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[pos + i])) != prefix[i]) return false;
  }
  return true;
}

// Index just past the first case-insensitive occurrence of `needle` at or
// after `pos`, or s.size() when absent.
std::size_t skip_past_ci(std::string_view s, std::size_t pos, std::string_view needle) {
  for (std::size_t i = pos; i < s.size(); ++i) {
    if (starts_with_ci(s, i, needle)) return i + needle.size();
  }
  return s.size();
}

void append_codepoint(std::string& out, unsigned long cp) {
  if (cp == '<' || cp == '>' || cp == 0 || cp > 0x10FFFF) return;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '&') {
      out += s[i++];
      continue;
    }
    auto semi = s.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out += s[i++];
      continue;
    }
    std::string_view name = s.substr(i + 1, semi - i - 1);
    bool handled = true;
    if (name == "amp") out += '&';
    else if (name == "quot") out += '"';
    else if (name == "apos" || name == "#39") out += '\'';
    else if (name == "nbsp") out += ' ';
    else if (name.size() > 1 && name[0] == '#') {
      unsigned long cp = 0;
      bool ok = true;
      bool hex = name[1] == 'x' || name[1] == 'X';
      for (std::size_t k = hex ? 2 : 1; k < name.size(); ++k) {
        unsigned char c = name[k];
        if (hex && std::isxdigit(c)) cp = cp * 16 + (std::isdigit(c) ? c - '0' : std::tolower(c) - 'a' + 10);
        else if (!hex && std::isdigit(c)) cp = cp * 10 + (c - '0');
        else { ok = false; break; }
        if (cp > 0x10FFFF) { ok = false; break; }
      }
      if (ok && (cp == '<' || cp == '>')) {
        // keep the encoded form; see strip_markup contract
        out += cp == '<' ? "&lt;" : "&gt;";
      } else if (ok) {
        append_codepoint(out, cp);
      } else {
        handled = false;
      }
    } else {
      handled = false;
    }
    if (handled) {
      i = semi + 1;
    } else {
      out += s[i++];
    }
  }
  return out;
}

}  // namespace

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return is_space(c); });
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : s) {
    if (is_token_byte(c)) {
      cur += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

double jaccard(std::string_view a, std::string_view b) {
  auto ta = tokenize(a);
  auto tb = tokenize(b);
  std::unordered_set<std::string> sa(ta.begin(), ta.end());
  std::unordered_set<std::string> sb(tb.begin(), tb.end());
  if (sa.empty() && sb.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& t : sa) inter += sb.count(t);
  std::size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending = false;
  for (unsigned char c : s) {
    if (is_space(c)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out += ' ';
    pending = false;
    out += static_cast<char>(c);
  }
  return out;
}

std::string strip_markup(std::string_view html) {
  std::string out;
  out.reserve(html.size());
  std::size_t i = 0;
  while (i < html.size()) {
    char c = html[i];
    if (c != '<') {
      out += c;
      ++i;
      continue;
    }
    if (html.compare(i, 4, "<!--") == 0) {
      auto end = html.find("-->", i + 4);
      i = end == std::string_view::npos ? html.size() : end + 3;
      out += ' ';
      continue;
    }
    unsigned char next = i + 1 < html.size() ? html[i + 1] : 0;
    bool tag_start = std::isalpha(next) || next == '/' || next == '!' || next == '?';
    if (!tag_start) {
      // A bare '<' that opens no tag is text; keep it encoded.
      out += "&lt;";
      ++i;
      continue;
    }
    bool raw_body = starts_with_ci(html, i, "<script") || starts_with_ci(html, i, "<style");
    auto close = html.find('>', i);
    if (close == std::string_view::npos) {
      i = html.size();
      break;
    }
    if (raw_body) {
      std::string_view end_tag = starts_with_ci(html, i, "<script") ? "</script" : "</style";
      i = skip_past_ci(html, close + 1, end_tag);
      auto gt = html.find('>', i);
      i = gt == std::string_view::npos ? html.size() : gt + 1;
    } else {
      i = close + 1;
    }
    out += ' ';
  }
  std::string decoded = decode_entities(out);
  // Remaining '>' characters are never part of a tag once every '<' is gone,
  // but encode them for symmetry with '<'.
  std::string result;
  result.reserve(decoded.size());
  for (char ch : decoded) {
    if (ch == '>') result += "&gt;";
    else result += ch;
  }
  return collapse_whitespace(result);
}

std::string truncate_at_word(std::string_view s, std::size_t cap) {
  if (s.size() <= cap) return std::string(s);
  std::size_t cut = cap;
  // never split a UTF-8 continuation sequence
  while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
  std::size_t boundary = cut;
  while (boundary > 0 && !is_space(s[boundary])) --boundary;
  if (boundary > 0) cut = boundary;
  return trim(s.substr(0, cut));
}

std::size_t codepoint_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

std::size_t codepoint_to_byte(std::string_view s, std::size_t cp) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) == 0x80) continue;
    if (seen == cp) return i;
    ++seen;
  }
  return seen == cp ? s.size() : std::string::npos;
}

std::vector<CsvRow> parse_csv(std::string_view data, char sep) {
  std::vector<CsvRow> rows;
  CsvRow row;
  std::string field;
  std::size_t line = 1;
  row.line = 1;
  bool in_quotes = false;
  bool field_started = false;
  bool row_has_content = false;

  auto end_field = [&] {
    row.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (row_has_content || row.fields.size() > 1 || !row.fields.front().empty()) {
      rows.push_back(std::move(row));
    }
    row = CsvRow{};
    row.line = line;
    row_has_content = false;
  };

  for (std::size_t i = 0; i < data.size(); ++i) {
    char c = data[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < data.size() && data[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
      row_has_content = true;
    } else if (c == sep) {
      row_has_content = true;
      end_field();
    } else if (c == '\r' && i + 1 < data.size() && data[i + 1] == '\n') {
      continue;
    } else if (c == '\n') {
      ++line;
      end_row();
    } else {
      field += c;
      field_started = true;
      row_has_content = true;
    }
  }
  if (in_quotes) {
    throw ParseError("unterminated quoted field starting on line " + std::to_string(row.line));
  }
  if (field_started || !row.fields.empty() || row_has_content) end_row();
  return rows;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace factlab::text
