#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qmod {

// The closed catalogue of codes. Operation errors and constraint violations
// share one namespace so that every code that can reach a client is listed once.
enum class Code : std::uint8_t {
  ABSTRACT_CLASS,
  ASSIGNMENT_INVALID,
  ATTR_NAME_COLLISION,
  ATTR_RANGE,
  BUSY,
  CONSTRAINT_INVALID,
  CONTAINMENT_FORBIDDEN,
  EVENT_OVERFLOW,
  FORMAT_ERROR,
  GUARD_INVALID,
  INDEX_OUT_OF_RANGE,
  INHERITANCE_CYCLE,
  INVALID_MULTIPLICITY,
  INVALID_POTENCY,
  INVALID_VALUE,
  IO_ERROR,
  KIND_MISMATCH,
  LINK_END_MISMATCH,
  LOWER_BOUND,
  META_IN_USE,
  MISSING_FIELD,
  NAME_CLASH,
  ORDER_CLASH,
  PARSE_ERROR,
  POTENCY_EXHAUSTED,
  POTENCY_FROZEN,
  POTENCY_REQUIRED,
  READ_ONLY_FIELD,
  RESERVED_ELEMENT,
  RETYPE_INCOMPATIBLE,
  SCOPE_MISMATCH,
  SOURCE_INVALID,
  TARGET_VIOLATIONS,
  TRANSFORM_INVALID,
  TX_NESTED,
  TX_NONE,
  TX_OPEN,
  TYPE_MISMATCH,
  UNIT_MISMATCH,
  UNKNOWN_FIELD,
  UNKNOWN_ID,
  UNRESOLVED_REF,
  UPPER_BOUND,
  UPPER_BOUND_EXCEEDED,
  VALIDATION_FAILED,
  VERSION_UNSUPPORTED,
};

enum class CodeCategory : std::uint8_t { Error, Violation, Both };

struct CatalogueEntry {
  Code code;
  std::string_view name;
  CodeCategory category;
  // Placeholders {0}, {1}, ... are substituted by format_message().
  std::string_view message_template;
  std::string_view emitted_by;
};

/// All catalogue entries, sorted by code name.
std::span<const CatalogueEntry> catalogue();

const CatalogueEntry& catalogue_entry(Code code);
std::string_view to_string(Code code);
std::optional<Code> code_from_string(std::string_view name);

std::string format_message(Code code, std::initializer_list<std::string> args);

class Error : public std::runtime_error {
 public:
  Error(Code code, std::string message);
  Error(Code code, std::initializer_list<std::string> args);

  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

// Every code that is raised or reported in this process is noted here so
// that test drivers can cross-check it against the generated catalogue.
void note_observed(Code code);
std::set<std::string> observed_codes();

}  // namespace qmod
