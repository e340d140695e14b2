#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace qmod {

enum class BaseType : std::uint8_t { BOOL, INT, REAL, STRING };

std::string_view to_string(BaseType t);
std::optional<BaseType> base_type_from_string(std::string_view s);

// Index order matches BaseType.
using Value = std::variant<bool, std::int64_t, double, std::string>;
using ValueList = std::vector<Value>;

inline BaseType type_of(const Value& v) { return static_cast<BaseType>(v.index()); }

/// One whitespace-separated unit of a protocol line. `quoted` records whether
/// the token was written in double quotes; quoting makes a literal a STRING.
struct Token {
  std::string text;
  bool quoted = false;
  std::size_t column = 0;

  friend bool operator==(const Token&, const Token&) = default;
};

/// Thrown by tokenize(); carries the byte column of the offending character.
struct TokenizeError {
  std::size_t column;
  std::string reason;
};

std::vector<Token> tokenize(std::string_view line);

/// Bare when possible, otherwise double-quoted with `"` and `\` escaped.
std::string encode_token(std::string_view text);
std::string quote(std::string_view text);

/// Shortest round-trip decimal with a mandatory '.' or exponent.
std::string format_real(double v);

/// Canonical literal form: INT decimal, REAL shortest round-trip, BOOL
/// true/false, STRING always quoted.
std::string format_value(const Value& v);
std::string format_values(const ValueList& values, std::string_view sep = " ");

/// Classifies a token by its lexical form. Returns nullopt for malformed
/// numerics (e.g. out-of-range integers) and non-finite reals.
std::optional<Value> parse_literal(const Token& tok);

/// Strict parse used where the expected type is known (file loading).
std::optional<Value> parse_typed(const Token& tok, BaseType expected);

/// A STRING value is acceptable when it has no line breaks and no NUL.
bool is_clean_text(std::string_view s);

}  // namespace qmod
