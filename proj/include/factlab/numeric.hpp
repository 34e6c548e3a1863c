#pragma once

// Numerical claim verification.
//
// Claims come from a closed taxonomy (relation, percentage_of, sum,
// difference, ratio) and are evaluated with exact rational arithmetic. The
// language model only proposes candidate structures; every number a candidate
// uses must appear literally in the analysed text, otherwise the candidate is
// dropped.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "factlab/llm.hpp"
#include "factlab/model.hpp"

namespace factlab {

class PromptLibrary;

using Rational = boost::multiprecision::cpp_rational;

enum class NumericKind { relation, percentage_of, sum, difference, ratio };
enum class RelationOp { eq, lt, gt, le, ge };

std::string_view to_string(NumericKind k);
std::string_view to_string(RelationOp op);
std::optional<NumericKind> numeric_kind_from_string(std::string_view s);
std::optional<RelationOp> relation_op_from_string(std::string_view s);

struct Quantity {
  Rational value;
  std::optional<std::string> unit;
  std::string literal;  // as written in the text
};

struct NumericClaim {
  NumericKind kind = NumericKind::sum;
  std::vector<Quantity> operands;
  Quantity asserted;
  std::optional<RelationOp> relation_op;
  std::pair<std::size_t, std::size_t> source_span{0, 0};  // code points
  bool asserts_exactness = false;

  // Operand count and unit agreement. Throws ValidationError when ill-typed.
  void validate() const;
};

struct NumericVerdict {
  NumericClaim claim;
  Rational computed_value;
  std::optional<bool> holds;  // absent when ill-defined (division by zero)
  double tolerance_used = 0.0;
  std::string explanation;
};

inline constexpr double kDefaultRelativeTolerance = 0.005;

// ---- literals -------------------------------------------------------------

// A number as written: thousands separators (comma, thin space, narrow
// no-break space) and a trailing percent sign are normalized away.
struct NumericLiteralSpan {
  std::size_t begin = 0;  // byte offsets
  std::size_t end = 0;
  std::string normalized;  // e.g. "23196", "44.5", "-3"
  bool percent = false;
};

std::string normalize_number_literal(std::string_view literal);
std::optional<Rational> parse_number_literal(std::string_view literal);
std::vector<NumericLiteralSpan> find_numeric_literals(std::string_view text);

// Deterministic Stage-1 detector: a percentage, or at least two numbers that
// are not bare years.
bool has_numeric_assertion(std::string_view text);

// Decimal rendering; exact=false when the expansion does not terminate, in
// which case the value is rounded to 12 decimal places.
struct DecimalString {
  std::string value;
  bool exact = true;
};
DecimalString to_decimal(const Rational& r);
Rational rational_from_double(double d);

// ---- extraction -----------------------------------------------------------

struct ExtractionResult {
  std::vector<NumericClaim> claims;
  std::vector<std::string> dropped;  // one reason per rejected candidate
  bool degraded = false;             // the model call itself failed
  std::string degradation_note;
};

// Types and grounds model-proposed candidates against `text`.
ExtractionResult ground_candidates(std::string_view text, const std::vector<NumericCandidate>& candidates);

// One numeric_extraction call, then ground_candidates. Model failure yields
// an empty, degraded result rather than an exception.
ExtractionResult extract_claims(std::string_view text, LlmClient& llm, const PromptLibrary& prompts);

// ---- evaluation -----------------------------------------------------------

// Throws ValidationError for an ill-typed claim or a negative tolerance.
NumericVerdict evaluate(const NumericClaim& c, double tolerance = kDefaultRelativeTolerance);

NumericRecord to_record(const NumericVerdict& v);

}  // namespace factlab
