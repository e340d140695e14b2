#pragma once

// Out-place model-to-model transformation. A transformation model is an
// ordinary M1 model (TransformationModel > Rule > Pattern/Template >
// Assignment); executing it never touches the source and builds a fresh
// target folder plus a trace.

#include <optional>
#include <string>
#include <vector>

#include "qmod/store.hpp"

namespace qmod {

enum class GuardOp : std::uint8_t { EQ, NE, LT, LE, GT, GE };

struct Guard {
  std::string attribute;
  GuardOp op;
  Value literal;
};

/// `attr op literal`, e.g. `voltage >= 1.5` or `type = "power"`.
std::optional<Guard> parse_guard(std::string_view text);
bool guard_holds(const Guard& g, const ValueList& values);

/// Name usable in patterns and assignments for an instance's type value.
inline constexpr std::string_view kTypePseudoAttribute = "type";

std::vector<Violation> validate_transformation(const Store& store, ElementId tm);

struct StepEvent {
  std::string op;  // MATCH, CREATE or ASSIGN
  ElementId element;
  std::vector<std::string> details;
};

struct TransformResult {
  ElementId target_root;
  ElementId trace;
  std::vector<StepEvent> steps;  // empty unless debugging was requested
};

/// Runs `tm` over the instances below `source_root`. On success the target
/// folder, its instances and the trace are added to `store` (and journaled);
/// on any error `store` is left untouched.
TransformResult execute_transformation(Store& store, ElementId tm, ElementId source_root, bool debug = false);

/// Canonical text of a trace, one record per line.
std::string format_trace(const Trace& trace);

}  // namespace qmod
