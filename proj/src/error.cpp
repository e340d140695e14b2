#include "qmod/error.hpp"

#include <algorithm>
#include <array>
#include <mutex>
#include <vector>

namespace qmod {
namespace {

using C = Code;
using Cat = CodeCategory;

constexpr std::array kCatalogue = {
    CatalogueEntry{C::ABSTRACT_CLASS, "ABSTRACT_CLASS", Cat::Both,
                   "class {0} is abstract and cannot be instantiated", "instantiate, retype, evaluate"},
    CatalogueEntry{C::ASSIGNMENT_INVALID, "ASSIGNMENT_INVALID", Cat::Violation,
                   "assignment {0}: {1}", "validate_transformation"},
    CatalogueEntry{C::ATTR_NAME_COLLISION, "ATTR_NAME_COLLISION", Cat::Violation,
                   "class {0} inherits two attributes named {1}", "validate_metamodel, evaluate"},
    CatalogueEntry{C::ATTR_RANGE, "ATTR_RANGE", Cat::Violation,
                   "element {0}: value {1} of {2} outside [{3}, {4}]", "evaluate"},
    CatalogueEntry{C::BUSY, "BUSY", Cat::Error, "another session is active", "serve"},
    CatalogueEntry{C::CONSTRAINT_INVALID, "CONSTRAINT_INVALID", Cat::Violation,
                   "constraint {0}: {1}", "evaluate"},
    CatalogueEntry{C::CONTAINMENT_FORBIDDEN, "CONTAINMENT_FORBIDDEN", Cat::Both,
                   "{0} cannot be contained by element {1}", "create, instantiate, evaluate, transform"},
    CatalogueEntry{C::EVENT_OVERFLOW, "EVENT_OVERFLOW", Cat::Error,
                   "subscription {0} closed: more than {1} pending events", "event_stream"},
    CatalogueEntry{C::FORMAT_ERROR, "FORMAT_ERROR", Cat::Error, "line {0}: {1}", "load"},
    CatalogueEntry{C::GUARD_INVALID, "GUARD_INVALID", Cat::Violation, "pattern {0}: {1}",
                   "validate_transformation"},
    CatalogueEntry{C::INDEX_OUT_OF_RANGE, "INDEX_OUT_OF_RANGE", Cat::Error,
                   "index {0} exceeds length {1} of field {2}", "update"},
    CatalogueEntry{C::INHERITANCE_CYCLE, "INHERITANCE_CYCLE", Cat::Violation,
                   "inheritance {0} is part of a cycle", "validate_metamodel, evaluate"},
    CatalogueEntry{C::INVALID_MULTIPLICITY, "INVALID_MULTIPLICITY", Cat::Violation,
                   "element {0}: invalid multiplicity {1}", "validate_metamodel, evaluate"},
    CatalogueEntry{C::INVALID_POTENCY, "INVALID_POTENCY", Cat::Violation,
                   "attribute {0}: {1}", "validate_metamodel, evaluate"},
    CatalogueEntry{C::INVALID_VALUE, "INVALID_VALUE", Cat::Error, "invalid value for field {0}: {1}",
                   "create, update"},
    CatalogueEntry{C::IO_ERROR, "IO_ERROR", Cat::Error, "cannot access {0}", "save, load, run"},
    CatalogueEntry{C::KIND_MISMATCH, "KIND_MISMATCH", Cat::Error, "element {0} is a {1}, expected {2}",
                   "create, instantiate, retype, transform, qualify"},
    CatalogueEntry{C::LINK_END_MISMATCH, "LINK_END_MISMATCH", Cat::Violation,
                   "link {0}: end {1} does not conform to its linkage", "evaluate"},
    CatalogueEntry{C::LOWER_BOUND, "LOWER_BOUND", Cat::Violation,
                   "element {0}: {1} has {2} value(s), at least {3} required", "evaluate"},
    CatalogueEntry{C::META_IN_USE, "META_IN_USE", Cat::Error,
                   "element {0} is in use by live instances", "create, update, delete"},
    CatalogueEntry{C::MISSING_FIELD, "MISSING_FIELD", Cat::Violation,
                   "element {0}: mandatory field {1} is not set", "validate_metamodel, evaluate, validate_transformation"},
    CatalogueEntry{C::NAME_CLASH, "NAME_CLASH", Cat::Both, "name {0} already used under element {1}",
                   "create, update, instantiate, evaluate"},
    CatalogueEntry{C::ORDER_CLASH, "ORDER_CLASH", Cat::Violation,
                   "rule {0} shares order index {1} with another rule", "validate_transformation"},
    CatalogueEntry{C::PARSE_ERROR, "PARSE_ERROR", Cat::Error, "column {0}: {1}", "parse"},
    CatalogueEntry{C::POTENCY_EXHAUSTED, "POTENCY_EXHAUSTED", Cat::Error,
                   "element {0} has potency 0 and cannot be instantiated", "decrement_potency, instantiate"},
    CatalogueEntry{C::POTENCY_FROZEN, "POTENCY_FROZEN", Cat::Both,
                   "field {1} of element {0} is fixed at the meta level", "update, evaluate, validate_transformation"},
    CatalogueEntry{C::POTENCY_REQUIRED, "POTENCY_REQUIRED", Cat::Violation,
                   "instance {0} must set its type value", "evaluate"},
    CatalogueEntry{C::READ_ONLY_FIELD, "READ_ONLY_FIELD", Cat::Error,
                   "field {1} of element {0} is read-only", "update"},
    CatalogueEntry{C::RESERVED_ELEMENT, "RESERVED_ELEMENT", Cat::Error,
                   "element {0} is reserved and cannot be modified", "update, delete"},
    CatalogueEntry{C::RETYPE_INCOMPATIBLE, "RETYPE_INCOMPATIBLE", Cat::Error,
                   "element {0} cannot be retyped to class {1}: offending element {2}", "retype"},
    CatalogueEntry{C::SCOPE_MISMATCH, "SCOPE_MISMATCH", Cat::Violation,
                   "element {0}: class {1} is outside meta-model {2}", "validate_transformation"},
    CatalogueEntry{C::SOURCE_INVALID, "SOURCE_INVALID", Cat::Error,
                   "source model {0} is not violation-free: {1}", "transform"},
    CatalogueEntry{C::TARGET_VIOLATIONS, "TARGET_VIOLATIONS", Cat::Error,
                   "target model violates its meta-model: {0}", "transform"},
    CatalogueEntry{C::TRANSFORM_INVALID, "TRANSFORM_INVALID", Cat::Error,
                   "transformation {0} is invalid: {1}", "transform"},
    CatalogueEntry{C::TX_NESTED, "TX_NESTED", Cat::Error, "a transaction is already open", "begin"},
    CatalogueEntry{C::TX_NONE, "TX_NONE", Cat::Error, "no transaction is open", "commit, rollback"},
    CatalogueEntry{C::TX_OPEN, "TX_OPEN", Cat::Error, "command requires that no transaction is open",
                   "save, load, transform"},
    CatalogueEntry{C::TYPE_MISMATCH, "TYPE_MISMATCH", Cat::Both, "field {0} expects {1}, got {2}",
                   "update, evaluate, validate_transformation"},
    CatalogueEntry{C::UNIT_MISMATCH, "UNIT_MISMATCH", Cat::Violation,
                   "assignment {0}: unit {1} is not compatible with unit {2}", "validate_transformation"},
    CatalogueEntry{C::UNKNOWN_FIELD, "UNKNOWN_FIELD", Cat::Error, "element {0} has no field {1}", "read, update"},
    CatalogueEntry{C::UNKNOWN_ID, "UNKNOWN_ID", Cat::Error, "element {0} does not exist",
                   "every operation taking an element id"},
    CatalogueEntry{C::UNRESOLVED_REF, "UNRESOLVED_REF", Cat::Violation,
                   "element {0}: reference {1} does not resolve", "validate_metamodel, evaluate"},
    CatalogueEntry{C::UPPER_BOUND, "UPPER_BOUND", Cat::Violation,
                   "element {0}: {1} has {2} value(s), at most {3} allowed", "evaluate"},
    CatalogueEntry{C::UPPER_BOUND_EXCEEDED, "UPPER_BOUND_EXCEEDED", Cat::Error,
                   "field {1} of element {0} holds at most {2} value(s)", "update"},
    CatalogueEntry{C::VALIDATION_FAILED, "VALIDATION_FAILED", Cat::Error, "{0}", "commit, load"},
    CatalogueEntry{C::VERSION_UNSUPPORTED, "VERSION_UNSUPPORTED", Cat::Error,
                   "format version {0} is not supported", "load"},
};

constexpr bool catalogue_is_indexed() {
  for (std::size_t i = 0; i < kCatalogue.size(); ++i) {
    if (static_cast<std::size_t>(kCatalogue[i].code) != i) return false;
    if (i > 0 && !(kCatalogue[i - 1].name < kCatalogue[i].name)) return false;
  }
  return true;
}
static_assert(catalogue_is_indexed(), "catalogue must follow enum order, sorted by name");

std::mutex g_observed_mutex;
std::set<std::string>& observed_set() {
  static std::set<std::string> codes;
  return codes;
}

}  // namespace

std::span<const CatalogueEntry> catalogue() { return kCatalogue; }

const CatalogueEntry& catalogue_entry(Code code) { return kCatalogue[static_cast<std::size_t>(code)]; }

std::string_view to_string(Code code) { return catalogue_entry(code).name; }

std::optional<Code> code_from_string(std::string_view name) {
  auto it = std::lower_bound(kCatalogue.begin(), kCatalogue.end(), name,
                             [](const CatalogueEntry& e, std::string_view n) { return e.name < n; });
  if (it == kCatalogue.end() || it->name != name) return std::nullopt;
  return it->code;
}

std::string format_message(Code code, std::initializer_list<std::string> args) {
  std::vector<std::string> argv(args);
  std::string_view tpl = catalogue_entry(code).message_template;
  std::string out;
  for (std::size_t i = 0; i < tpl.size(); ++i) {
    if (tpl[i] == '{' && i + 2 < tpl.size() && tpl[i + 2] == '}' && tpl[i + 1] >= '0' && tpl[i + 1] <= '9') {
      std::size_t idx = static_cast<std::size_t>(tpl[i + 1] - '0');
      if (idx < argv.size()) out += argv[idx];
      i += 2;
    } else {
      out += tpl[i];
    }
  }
  return out;
}

Error::Error(Code code, std::string message) : std::runtime_error(std::move(message)), code_(code) {
  note_observed(code);
}

Error::Error(Code code, std::initializer_list<std::string> args) : Error(code, format_message(code, args)) {}

void note_observed(Code code) {
  std::lock_guard lock(g_observed_mutex);
  observed_set().emplace(to_string(code));
}

std::set<std::string> observed_codes() {
  std::lock_guard lock(g_observed_mutex);
  return observed_set();
}

}  // namespace qmod
