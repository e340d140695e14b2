#pragma once

// Column layout of every registry table. Each record stores its
// kind-specific values as one value list per column, in the order listed
// here; persistence and the generic read/update commands walk these tables.

#include <cstdint>
#include <span>
#include <string_view>

#include "qmod/meta_core.hpp"
#include "qmod/value.hpp"

namespace qmod {

// Elements every store starts with.
namespace reserved {
inline constexpr ElementId kRoot{1};
inline constexpr ElementId kM2Region{2};
inline constexpr ElementId kM1Region{3};
inline constexpr ElementId kDimensionless{4};
inline constexpr std::uint64_t kFirstFreeId = 5;
}  // namespace reserved

enum class ColumnType : std::uint8_t {
  Bool,
  Int,
  Real,
  String,
  Ref,       // INT holding an ElementId; an empty list means unset
  Any,       // any literal; typed later by its consumer
  ByDataType // typed by the DataType referenced from the owning record
};

struct ColumnSpec {
  std::string_view name;
  ColumnType type;
  std::int64_t lower;
  std::int64_t upper;  // kUnbounded for lists
  bool writable;
  // Accepted STRING values; empty when unrestricted.
  std::span<const std::string_view> domain;
};

std::span<const ColumnSpec> schema(ElementKind kind);

/// Index of `name` in schema(kind), or -1.
int column_index(ElementKind kind, std::string_view name);

/// Initial column values of a freshly created record.
std::vector<ValueList> default_columns(ElementKind kind);

std::string_view to_string(ColumnType t);

// Column positions, grouped by kind.
namespace col {
inline constexpr int kAbstract = 0, kClassType = 1;
inline constexpr int kDataType = 0, kUnit = 1, kLower = 2, kUpper = 3, kPotency = 4, kFixedValues = 5;
inline constexpr int kBase = 0;
inline constexpr int kSymbol = 0, kDims = 1;
inline constexpr int kEndA = 0, kEndB = 1, kLowerA = 2, kUpperA = 3, kLowerB = 4, kUpperB = 5;
inline constexpr int kConstraintKind = 0, kTarget = 1, kAttribute = 2, kMin = 3, kMax = 4;
inline constexpr int kInstanceClass = 0, kComposition = 1, kInstanceType = 2;
inline constexpr int kLinkage = 0, kLinkA = 1, kLinkB = 2;
inline constexpr int kSourceMeta = 0, kTargetMeta = 1;
inline constexpr int kOrder = 0;
inline constexpr int kPatternClass = 0, kGuards = 1, kGuardLinkage = 2, kGuardEnd = 3, kGuardPeer = 4;
inline constexpr int kTemplateClass = 0, kContainment = 1;
inline constexpr int kOp = 0, kSourceAttr = 1, kTargetAttr = 2, kConstValue = 3, kFactor = 4;
}  // namespace col

}  // namespace qmod
