#include "factlab/numeric.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "factlab/errors.hpp"
#include "factlab/prompts.hpp"
#include "factlab/text.hpp"

namespace factlab {

namespace {

using boost::multiprecision::cpp_int;

constexpr std::string_view kThinSpace = "\xE2\x80\x89";
constexpr std::string_view kNarrowNbsp = "\xE2\x80\xAF";
constexpr std::string_view kUnicodeMinus = "\xE2\x88\x92";

bool digit(char c) { return c >= '0' && c <= '9'; }
bool alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

bool at(std::string_view s, std::size_t i, std::string_view what) {
  return s.compare(i, what.size(), what) == 0;
}

std::size_t count_digits(std::string_view s, std::size_t i) {
  std::size_t n = 0;
  while (i + n < s.size() && digit(s[i + n])) ++n;
  return n;
}

cpp_int pow10(unsigned k) {
  cpp_int r = 1;
  for (unsigned i = 0; i < k; ++i) r *= 10;
  return r;
}

std::string short_double(double d) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", d);
  return buf;
}

std::string render(const Rational& r) { return to_decimal(r).value; }

std::string with_unit(const Quantity& q) {
  auto s = render(q.value);
  if (q.unit) s += *q.unit == "%" ? "%" : " " + *q.unit;
  return s;
}

// Units present on the given quantities must all be the same string.
void require_same_units(const std::vector<const Quantity*>& qs, const char* what) {
  std::optional<std::string> seen;
  for (const auto* q : qs) {
    if (!q->unit) continue;
    if (seen && *seen != *q->unit) {
      throw ValidationError(std::string(what) + " mixes units '" + *seen + "' and '" + *q->unit + "'");
    }
    seen = q->unit;
  }
}

}  // namespace

std::string_view to_string(NumericKind k) {
  switch (k) {
    case NumericKind::relation: return "relation";
    case NumericKind::percentage_of: return "percentage_of";
    case NumericKind::sum: return "sum";
    case NumericKind::difference: return "difference";
    case NumericKind::ratio: return "ratio";
  }
  return "?";
}

std::string_view to_string(RelationOp op) {
  switch (op) {
    case RelationOp::eq: return "=";
    case RelationOp::lt: return "<";
    case RelationOp::gt: return ">";
    case RelationOp::le: return "<=";
    case RelationOp::ge: return ">=";
  }
  return "?";
}

std::optional<NumericKind> numeric_kind_from_string(std::string_view s) {
  for (auto k : {NumericKind::relation, NumericKind::percentage_of, NumericKind::sum,
                 NumericKind::difference, NumericKind::ratio}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<RelationOp> relation_op_from_string(std::string_view s) {
  for (auto op : {RelationOp::eq, RelationOp::lt, RelationOp::gt, RelationOp::le, RelationOp::ge}) {
    if (to_string(op) == s) return op;
  }
  return std::nullopt;
}

void NumericClaim::validate() const {
  auto arity = operands.size();
  auto name = std::string(to_string(kind));
  switch (kind) {
    case NumericKind::relation:
      if (arity != 2) throw ValidationError("relation needs 2 operands, got " + std::to_string(arity));
      if (!relation_op) throw ValidationError("relation needs a relation_op");
      require_same_units({&operands[0], &operands[1]}, "relation");
      break;
    case NumericKind::percentage_of:
      if (arity != 2) throw ValidationError("percentage_of needs 2 operands, got " + std::to_string(arity));
      if (operands[0].unit && *operands[0].unit != "%") {
        throw ValidationError("percentage_of rate carries unit '" + *operands[0].unit + "'");
      }
      require_same_units({&operands[1], &asserted}, "percentage_of");
      break;
    case NumericKind::sum:
    case NumericKind::difference: {
      if (arity < 2) throw ValidationError(name + " needs at least 2 operands, got " + std::to_string(arity));
      std::vector<const Quantity*> all;
      for (const auto& o : operands) all.push_back(&o);
      all.push_back(&asserted);
      require_same_units(all, name.c_str());
      break;
    }
    case NumericKind::ratio:
      if (arity != 2) throw ValidationError("ratio needs 2 operands, got " + std::to_string(arity));
      require_same_units({&operands[0], &operands[1]}, "ratio");
      if (asserted.unit && *asserted.unit != "%") {
        throw ValidationError("ratio result carries unit '" + *asserted.unit + "'");
      }
      break;
  }
}

std::string normalize_number_literal(std::string_view literal) {
  auto s = text::trim(literal);
  std::string out;
  for (std::size_t i = 0; i < s.size();) {
    if (s[i] == ',') { ++i; continue; }
    if (at(s, i, kThinSpace) || at(s, i, kNarrowNbsp)) { i += 3; continue; }
    if (at(s, i, kUnicodeMinus)) { out += '-'; i += 3; continue; }
    out += s[i++];
  }
  out = text::trim(out);
  if (!out.empty() && out.back() == '%') {
    out.pop_back();
    out = text::trim(out);
  }
  if (!out.empty() && out.front() == '+') out.erase(0, 1);
  return out;
}

std::optional<Rational> parse_number_literal(std::string_view literal) {
  auto s = normalize_number_literal(literal);
  std::size_t i = 0;
  bool negative = false;
  if (i < s.size() && s[i] == '-') {
    negative = true;
    ++i;
  }
  auto int_digits = count_digits(s, i);
  if (int_digits == 0) return std::nullopt;
  cpp_int num(s.substr(i, int_digits));
  i += int_digits;
  unsigned frac = 0;
  if (i < s.size() && s[i] == '.') {
    ++i;
    auto f = count_digits(s, i);
    if (f == 0) return std::nullopt;
    for (std::size_t k = 0; k < f; ++k) num = num * 10 + (s[i + k] - '0');
    frac = static_cast<unsigned>(f);
    i += f;
  }
  if (i != s.size()) return std::nullopt;
  Rational r(num, pow10(frac));
  return negative ? Rational(-r) : r;
}

std::vector<NumericLiteralSpan> find_numeric_literals(std::string_view s) {
  std::vector<NumericLiteralSpan> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!digit(s[i]) || (i > 0 && (digit(s[i - 1]) || alpha(s[i - 1]) || s[i - 1] == '.'))) {
      ++i;
      continue;
    }
    // identifiers such as COVID-19 or H1N1
    if (i >= 2 && s[i - 1] == '-' && alpha(s[i - 2])) {
      i += count_digits(s, i);
      continue;
    }
    std::size_t begin = i;
    if (i >= 1 && s[i - 1] == '-' && (i == 1 || std::isspace(static_cast<unsigned char>(s[i - 2])) || s[i - 2] == '(')) {
      begin = i - 1;
    } else if (i >= 3 && at(s, i - 3, kUnicodeMinus)) {
      begin = i - 3;
    }
    std::size_t j = i + count_digits(s, i);
    while (true) {
      if (j < s.size() && s[j] == ',' && count_digits(s, j + 1) == 3) {
        j += 4;
      } else if ((at(s, j, kThinSpace) || at(s, j, kNarrowNbsp)) && count_digits(s, j + 3) == 3) {
        j += 6;
      } else {
        break;
      }
    }
    if (j + 1 < s.size() && s[j] == '.' && digit(s[j + 1])) j += 1 + count_digits(s, j + 1);
    NumericLiteralSpan lit;
    lit.begin = begin;
    if (j < s.size() && s[j] == '%') {
      lit.percent = true;
      ++j;
    } else if (text::to_lower(s.substr(j, 8)) == " percent") {
      lit.percent = true;
    }
    lit.end = j;
    lit.normalized = normalize_number_literal(s.substr(begin, j - begin));
    out.push_back(std::move(lit));
    i = j;
  }
  return out;
}

bool has_numeric_assertion(std::string_view text) {
  std::size_t numbers = 0;
  for (const auto& lit : find_numeric_literals(text)) {
    if (lit.percent) return true;
    bool year = lit.normalized.size() == 4 && lit.normalized.find_first_not_of("0123456789") == std::string::npos &&
                lit.normalized >= "1800" && lit.normalized <= "2099";
    if (!year) ++numbers;
  }
  return numbers >= 2;
}

Rational rational_from_double(double d) {
  if (!std::isfinite(d)) throw ValidationError("non-finite value has no rational form");
  if (d == 0.0) return Rational(0);
  int exp = 0;
  double mant = std::frexp(std::fabs(d), &exp);
  auto bits = static_cast<long long>(std::ldexp(mant, 53));
  exp -= 53;
  cpp_int num = bits;
  cpp_int den = 1;
  if (exp >= 0) num <<= exp;
  else den <<= -exp;
  Rational r(num, den);
  return d < 0 ? Rational(-r) : r;
}

DecimalString to_decimal(const Rational& r) {
  cpp_int num = boost::multiprecision::numerator(r);
  cpp_int den = boost::multiprecision::denominator(r);
  bool negative = num < 0;
  if (negative) num = -num;

  cpp_int rest = den;
  unsigned twos = 0, fives = 0;
  while (rest % 2 == 0) { rest /= 2; ++twos; }
  while (rest % 5 == 0) { rest /= 5; ++fives; }

  DecimalString out;
  unsigned places;
  cpp_int scaled;
  if (rest == 1) {
    places = std::max(twos, fives);
    scaled = num * pow10(places) / den;
  } else {
    places = 12;
    out.exact = false;
    scaled = (num * pow10(places) * 2 + den) / (den * 2);
  }
  std::string digits = scaled.str();
  if (digits.size() <= places) digits.insert(0, places - digits.size() + 1, '0');
  std::string int_part = digits.substr(0, digits.size() - places);
  std::string frac = digits.substr(digits.size() - places);
  while (!frac.empty() && frac.back() == '0') frac.pop_back();
  out.value = (negative && (int_part != "0" || !frac.empty()) ? "-" : "") + int_part +
              (frac.empty() ? "" : "." + frac);
  return out;
}

ExtractionResult ground_candidates(std::string_view text, const std::vector<NumericCandidate>& candidates) {
  ExtractionResult result;
  const auto total_cp = text::codepoint_length(text);
  for (std::size_t n = 0; n < candidates.size(); ++n) {
    const auto& cand = candidates[n];
    auto tag = "candidate " + std::to_string(n) + ": ";
    auto kind = numeric_kind_from_string(cand.kind);
    if (!kind) {
      result.dropped.push_back(tag + "unknown kind '" + cand.kind + "'");
      continue;
    }
    std::pair<std::size_t, std::size_t> span{0, total_cp};
    if (cand.span) span = *cand.span;
    auto b = text::codepoint_to_byte(text, span.first);
    auto e = text::codepoint_to_byte(text, span.second);
    if (b == std::string::npos || e == std::string::npos || b > e) {
      result.dropped.push_back(tag + "span out of range");
      continue;
    }
    auto scope = text.substr(b, e - b);
    std::set<std::string> grounded;
    for (const auto& lit : find_numeric_literals(scope)) grounded.insert(lit.normalized);

    std::string problem;
    auto make = [&](const NumericLiteral& l) -> std::optional<Quantity> {
      auto value = parse_number_literal(l.literal);
      if (!value) {
        problem = "'" + l.literal + "' is not a number";
        return std::nullopt;
      }
      if (!grounded.count(normalize_number_literal(l.literal))) {
        problem = "'" + l.literal + "' does not appear in the text";
        return std::nullopt;
      }
      Quantity q{*value, std::nullopt, l.literal};
      if (l.unit && !text::is_blank(*l.unit)) q.unit = text::trim(*l.unit);
      else if (!text::trim(l.literal).empty() && text::trim(l.literal).back() == '%') q.unit = "%";
      return q;
    };

    NumericClaim claim;
    claim.kind = *kind;
    claim.source_span = span;
    claim.asserts_exactness = cand.exact;
    bool ok = true;
    for (const auto& op : cand.operands) {
      auto q = make(op);
      if (!q) { ok = false; break; }
      claim.operands.push_back(std::move(*q));
    }
    if (ok && cand.asserted) {
      auto q = make(*cand.asserted);
      if (!q) ok = false;
      else claim.asserted = std::move(*q);
    }
    if (!ok) {
      result.dropped.push_back(tag + problem);
      continue;
    }
    if (cand.relation_op) claim.relation_op = relation_op_from_string(*cand.relation_op);
    if (*kind == NumericKind::relation) {
      if (claim.operands.size() == 2) claim.asserted = claim.operands[1];
    } else if (!cand.asserted) {
      result.dropped.push_back(tag + "no asserted value; nothing to verify");
      continue;
    }
    try {
      claim.validate();
    } catch (const ValidationError& ex) {
      result.dropped.push_back(tag + "ill-typed: " + ex.what());
      continue;
    }
    result.claims.push_back(std::move(claim));
  }
  return result;
}

ExtractionResult extract_claims(std::string_view text, LlmClient& llm, const PromptLibrary& prompts) {
  try {
    auto req = prompts.render("numeric_extraction", {{"text", std::string(text)}}, Schema::numeric_extraction);
    auto payload = llm.complete_as<NumericExtractionPayload>(req);
    return ground_candidates(text, payload.claims);
  } catch (const Error& ex) {
    ExtractionResult degraded;
    degraded.degraded = true;
    degraded.degradation_note = std::string("numeric claim extraction unavailable: ") + ex.what();
    return degraded;
  }
}

NumericVerdict evaluate(const NumericClaim& c, double tolerance) {
  c.validate();
  if (!(tolerance >= 0.0) || !std::isfinite(tolerance)) throw ValidationError("tolerance must be >= 0");
  NumericVerdict v;
  v.claim = c;
  v.tolerance_used = tolerance;
  const auto& ops = c.operands;
  std::string expr;

  switch (c.kind) {
    case NumericKind::sum:
      v.computed_value = 0;
      for (std::size_t i = 0; i < ops.size(); ++i) {
        v.computed_value += ops[i].value;
        expr += (i ? " + " : "") + with_unit(ops[i]);
      }
      break;
    case NumericKind::difference:
      v.computed_value = ops[0].value;
      expr = with_unit(ops[0]);
      for (std::size_t i = 1; i < ops.size(); ++i) {
        v.computed_value -= ops[i].value;
        expr += " - " + with_unit(ops[i]);
      }
      break;
    case NumericKind::percentage_of:
      v.computed_value = ops[0].value / 100 * ops[1].value;
      expr = render(ops[0].value) + "% of " + with_unit(ops[1]);
      break;
    case NumericKind::ratio:
      expr = with_unit(ops[0]) + " / " + with_unit(ops[1]);
      if (ops[1].value == 0) {
        v.computed_value = 0;
        v.explanation = expr + " is undefined (division by zero); asserted " + with_unit(c.asserted);
        return v;
      }
      v.computed_value = ops[0].value / ops[1].value;
      if (c.asserted.unit && *c.asserted.unit == "%") {
        v.computed_value *= 100;
        expr = "(" + expr + ") x 100%";
      }
      break;
    case NumericKind::relation:
      v.computed_value = ops[0].value;
      expr = with_unit(ops[0]) + " " + std::string(to_string(*c.relation_op)) + " " + with_unit(ops[1]);
      break;
  }

  const Rational& computed = v.computed_value;
  const Rational& asserted = c.kind == NumericKind::relation ? ops[1].value : c.asserted.value;

  auto within_tolerance = [&] {
    if (tolerance == 0.0) return computed == asserted;
    Rational diff = computed - asserted;
    if (diff < 0) diff = -diff;
    Rational magnitude = computed < 0 ? Rational(-computed) : computed;
    Rational tiny = rational_from_double(std::numeric_limits<double>::denorm_min());
    if (magnitude < tiny) magnitude = tiny;
    return diff <= rational_from_double(tolerance) * magnitude;
  };

  bool holds = false;
  if (c.kind == NumericKind::relation) {
    switch (*c.relation_op) {
      case RelationOp::eq: holds = within_tolerance(); break;
      case RelationOp::lt: holds = computed < asserted; break;
      case RelationOp::gt: holds = computed > asserted; break;
      case RelationOp::le: holds = computed <= asserted; break;
      case RelationOp::ge: holds = computed >= asserted; break;
    }
    v.holds = holds;
    v.explanation = expr + (holds ? " holds" : " does not hold");
    if (*c.relation_op == RelationOp::eq && tolerance > 0.0) {
      v.explanation += " (relative tolerance " + short_double(tolerance) + ")";
    }
    return v;
  }

  holds = within_tolerance();
  v.holds = holds;
  v.explanation = expr + " = " + render(computed) + (to_decimal(computed).exact ? "" : " (rounded)") +
                  "; asserted " + with_unit(c.asserted) + "; " +
                  (tolerance == 0.0 ? std::string("exact comparison")
                                    : "relative tolerance " + short_double(tolerance)) +
                  (holds ? ": holds" : ": does not hold");
  return v;
}

NumericRecord to_record(const NumericVerdict& v) {
  NumericRecord r;
  r.kind = std::string(to_string(v.claim.kind));
  auto computed = to_decimal(v.computed_value);
  const auto& asserted_q = v.claim.asserted;
  auto asserted = to_decimal(asserted_q.value);
  r.computed = computed.value;
  r.computed_exact = computed.exact;
  r.asserted = asserted.value;
  r.asserted_exact = asserted.exact;
  r.tolerance = v.tolerance_used;
  r.holds = v.holds;
  r.explanation = v.explanation;
  std::vector<std::string> parts;
  for (const auto& op : v.claim.operands) parts.push_back(op.literal);
  r.expression = std::string(to_string(v.claim.kind)) + "(" + text::join(parts, ", ") + ")" +
                 (v.claim.relation_op ? " " + std::string(to_string(*v.claim.relation_op)) : "") +
                 (v.claim.kind == NumericKind::relation ? "" : " -> " + asserted_q.literal);
  return r;
}

}  // namespace factlab
