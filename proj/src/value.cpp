#include "qmod/value.hpp"

#include <charconv>
#include <cmath>

namespace qmod {

std::string_view to_string(BaseType t) {
  switch (t) {
    case BaseType::BOOL: return "BOOL";
    case BaseType::INT: return "INT";
    case BaseType::REAL: return "REAL";
    case BaseType::STRING: return "STRING";
  }
  return "?";
}

std::optional<BaseType> base_type_from_string(std::string_view s) {
  if (s == "BOOL") return BaseType::BOOL;
  if (s == "INT") return BaseType::INT;
  if (s == "REAL") return BaseType::REAL;
  if (s == "STRING") return BaseType::STRING;
  return std::nullopt;
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

bool needs_quotes(std::string_view text) {
  if (text.empty()) return true;
  for (char c : text) {
    if (is_space(c) || c == '"' || c == '\n') return true;
  }
  return false;
}

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

bool looks_integer(std::string_view s) {
  if (!s.empty() && (s.front() == '+' || s.front() == '-')) s.remove_prefix(1);
  return all_digits(s);
}

// [+-]? digits ( '.' digits )? ( [eE] [+-]? digits )?  with '.' or exponent present
bool looks_real(std::string_view s) {
  if (!s.empty() && (s.front() == '+' || s.front() == '-')) s.remove_prefix(1);
  std::size_t i = 0;
  while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
  if (i == 0) return false;
  bool marker = false;
  if (i < s.size() && s[i] == '.') {
    marker = true;
    std::size_t j = ++i;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
    if (i == j) return false;
  }
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    marker = true;
    ++i;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
    std::size_t j = i;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
    if (i == j) return false;
  }
  return marker && i == s.size();
}

std::optional<Value> parse_int(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return Value{v};
}

std::optional<Value> parse_real(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return Value{v};
}

}  // namespace

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    char c = line[i];
    if (c == '\0') throw TokenizeError{i, "NUL byte"};
    if (c == '\n') throw TokenizeError{i, "embedded line feed"};
    if (is_space(c)) {
      ++i;
      continue;
    }
    Token tok;
    tok.column = i;
    if (c == '"') {
      tok.quoted = true;
      ++i;
      bool closed = false;
      while (i < line.size()) {
        char d = line[i];
        if (d == '\0' || d == '\n') throw TokenizeError{i, "invalid byte in quoted token"};
        if (d == '\\') {
          if (i + 1 >= line.size() || (line[i + 1] != '"' && line[i + 1] != '\\'))
            throw TokenizeError{i, "invalid escape"};
          tok.text += line[i + 1];
          i += 2;
          continue;
        }
        if (d == '"') {
          closed = true;
          ++i;
          break;
        }
        tok.text += d;
        ++i;
      }
      if (!closed) throw TokenizeError{tok.column, "unterminated quoted token"};
      if (i < line.size() && !is_space(line[i])) throw TokenizeError{i, "missing separator after quoted token"};
    } else {
      while (i < line.size() && !is_space(line[i])) {
        if (line[i] == '"') throw TokenizeError{i, "quote inside bare token"};
        if (line[i] == '\0' || line[i] == '\n') throw TokenizeError{i, "invalid byte"};
        tok.text += line[i];
        ++i;
      }
    }
    out.push_back(std::move(tok));
  }
  return out;
}

std::string quote(std::string_view text) {
  std::string out = "\"";
  for (char c : text) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

std::string encode_token(std::string_view text) {
  return needs_quotes(text) ? quote(text) : std::string(text);
}

std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, ptr);
  if (s.find_first_of(".eE") == std::string::npos && s.find_first_of("0123456789") != std::string::npos) s += ".0";
  return s;
}

std::string format_value(const Value& v) {
  switch (type_of(v)) {
    case BaseType::BOOL: return std::get<bool>(v) ? "true" : "false";
    case BaseType::INT: return std::to_string(std::get<std::int64_t>(v));
    case BaseType::REAL: return format_real(std::get<double>(v));
    case BaseType::STRING: return quote(std::get<std::string>(v));
  }
  return {};
}

std::string format_values(const ValueList& values, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += sep;
    out += format_value(values[i]);
  }
  return out;
}

std::optional<Value> parse_literal(const Token& tok) {
  if (tok.quoted) return Value{tok.text};
  const std::string& s = tok.text;
  if (s == "true") return Value{true};
  if (s == "false") return Value{false};
  if (looks_integer(s)) return parse_int(s);
  if (looks_real(s)) return parse_real(s);
  // Something that starts like a number but is not one is malformed rather
  // than a bare word.
  if (!s.empty() && ((s[0] >= '0' && s[0] <= '9') || s[0] == '+' || s[0] == '-' || s[0] == '.'))
    return std::nullopt;
  return Value{s};
}

std::optional<Value> parse_typed(const Token& tok, BaseType expected) {
  switch (expected) {
    case BaseType::STRING:
      if (!tok.quoted) return std::nullopt;
      return Value{tok.text};
    case BaseType::BOOL:
      if (tok.quoted) return std::nullopt;
      if (tok.text == "true") return Value{true};
      if (tok.text == "false") return Value{false};
      return std::nullopt;
    case BaseType::INT:
      if (tok.quoted || !looks_integer(tok.text)) return std::nullopt;
      return parse_int(tok.text);
    case BaseType::REAL:
      if (tok.quoted || !looks_real(tok.text)) return std::nullopt;
      return parse_real(tok.text);
  }
  return std::nullopt;
}

bool is_clean_text(std::string_view s) {
  for (char c : s) {
    if (c == '\n' || c == '\r' || c == '\0') return false;
  }
  return true;
}

}  // namespace qmod
