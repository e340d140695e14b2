#include "qmod/schema.hpp"

#include <array>

namespace qmod {
namespace {

using T = ColumnType;

constexpr std::array<std::string_view, 4> kBaseDomain = {"BOOL", "INT", "REAL", "STRING"};
constexpr std::array<std::string_view, 5> kConstraintDomain = {"ATTR_RANGE", "MULTIPLICITY", "POTENCY_REQUIRED",
                                                               "UNIQUE_NAME", "UNIT_MATCH"};
constexpr std::array<std::string_view, 2> kEndDomain = {"A", "B"};
constexpr std::array<std::string_view, 2> kContainmentDomain = {"PARENT_IMAGE", "TARGET_ROOT"};
constexpr std::array<std::string_view, 3> kOpDomain = {"CONST", "COPY", "SCALE"};

constexpr std::array kConstraintCols = {
    ColumnSpec{"constraintKind", T::String, 0, 1, true, kConstraintDomain},
    ColumnSpec{"target", T::Ref, 1, 1, true, {}},
    ColumnSpec{"attribute", T::String, 0, 1, true, {}},
    ColumnSpec{"min", T::Real, 0, 1, true, {}},
    ColumnSpec{"max", T::Real, 0, 1, true, {}},
};
constexpr std::array kClassCols = {
    ColumnSpec{"abstract", T::Bool, 1, 1, true, {}},
    ColumnSpec{"type", T::String, 0, 1, true, {}},
};
constexpr std::array kAttributeCols = {
    ColumnSpec{"dataType", T::Ref, 0, 1, true, {}},
    ColumnSpec{"unit", T::Ref, 1, 1, true, {}},
    ColumnSpec{"lower", T::Int, 1, 1, true, {}},
    ColumnSpec{"upper", T::Int, 1, 1, true, {}},
    ColumnSpec{"potency", T::Int, 1, 1, true, {}},
    ColumnSpec{"fixedValues", T::ByDataType, 0, kUnbounded, true, {}},
};
constexpr std::array kDataTypeCols = {
    ColumnSpec{"base", T::String, 0, 1, true, kBaseDomain},
};
constexpr std::array kUnitCols = {
    ColumnSpec{"symbol", T::String, 0, 1, true, {}},
    ColumnSpec{"dims", T::Int, 7, 7, true, {}},
};
constexpr std::array kLinkageCols = {
    ColumnSpec{"endA", T::Ref, 0, 1, true, {}},  ColumnSpec{"endB", T::Ref, 0, 1, true, {}},
    ColumnSpec{"lowerA", T::Int, 1, 1, true, {}}, ColumnSpec{"upperA", T::Int, 1, 1, true, {}},
    ColumnSpec{"lowerB", T::Int, 1, 1, true, {}}, ColumnSpec{"upperB", T::Int, 1, 1, true, {}},
};
constexpr std::array kInheritanceCols = {
    ColumnSpec{"endA", T::Ref, 0, 1, true, {}},
    ColumnSpec{"endB", T::Ref, 0, 1, true, {}},
};
constexpr std::array kInstanceCols = {
    ColumnSpec{"class", T::Ref, 1, 1, false, {}},
    ColumnSpec{"composition", T::Ref, 0, 1, false, {}},
    ColumnSpec{"type", T::String, 0, 1, true, {}},
};
constexpr std::array kLinkCols = {
    ColumnSpec{"linkage", T::Ref, 1, 1, false, {}},
    ColumnSpec{"a", T::Ref, 1, 1, false, {}},
    ColumnSpec{"b", T::Ref, 1, 1, false, {}},
};
constexpr std::array kTransformationCols = {
    ColumnSpec{"source", T::Ref, 0, 1, true, {}},
    ColumnSpec{"target", T::Ref, 0, 1, true, {}},
};
constexpr std::array kRuleCols = {
    ColumnSpec{"order", T::Int, 0, 1, true, {}},
};
constexpr std::array kPatternCols = {
    ColumnSpec{"class", T::Ref, 0, 1, true, {}},     ColumnSpec{"guards", T::String, 0, kUnbounded, true, {}},
    ColumnSpec{"linkage", T::Ref, 0, 1, true, {}},   ColumnSpec{"end", T::String, 0, 1, true, kEndDomain},
    ColumnSpec{"peer", T::Ref, 0, 1, true, {}},
};
constexpr std::array kTemplateCols = {
    ColumnSpec{"class", T::Ref, 0, 1, true, {}},
    ColumnSpec{"containment", T::String, 1, 1, true, kContainmentDomain},
};
constexpr std::array kAssignmentCols = {
    ColumnSpec{"op", T::String, 0, 1, true, kOpDomain},   ColumnSpec{"source", T::String, 0, 1, true, {}},
    ColumnSpec{"target", T::String, 0, 1, true, {}},      ColumnSpec{"value", T::Any, 0, 1, true, {}},
    ColumnSpec{"factor", T::Real, 0, 1, true, {}},
};

}  // namespace

std::span<const ColumnSpec> schema(ElementKind kind) {
  switch (kind) {
    case ElementKind::RootFolder:
    case ElementKind::Namespace: return {};
    case ElementKind::Constraint: return kConstraintCols;
    case ElementKind::Class: return kClassCols;
    case ElementKind::Attribute: return kAttributeCols;
    case ElementKind::DataType: return kDataTypeCols;
    case ElementKind::Unit: return kUnitCols;
    case ElementKind::Association:
    case ElementKind::Composition: return kLinkageCols;
    case ElementKind::Inheritance: return kInheritanceCols;
    case ElementKind::Instance: return kInstanceCols;
    case ElementKind::LinkOccurrence: return kLinkCols;
    case ElementKind::TransformationModel: return kTransformationCols;
    case ElementKind::Rule: return kRuleCols;
    case ElementKind::Pattern: return kPatternCols;
    case ElementKind::Template: return kTemplateCols;
    case ElementKind::Assignment: return kAssignmentCols;
  }
  return {};
}

int column_index(ElementKind kind, std::string_view name) {
  auto cols = schema(kind);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<ValueList> default_columns(ElementKind kind) {
  std::vector<ValueList> cols(schema(kind).size());
  auto i64 = [](std::int64_t v) { return Value{v}; };
  switch (kind) {
    case ElementKind::Constraint: cols[col::kTarget] = {i64(0)}; break;
    case ElementKind::Class: cols[col::kAbstract] = {Value{false}}; break;
    case ElementKind::Attribute:
      cols[col::kUnit] = {i64(static_cast<std::int64_t>(reserved::kDimensionless.value))};
      cols[col::kLower] = {i64(1)};
      cols[col::kUpper] = {i64(1)};
      cols[col::kPotency] = {i64(1)};
      break;
    case ElementKind::Unit: cols[col::kDims] = ValueList(7, i64(0)); break;
    case ElementKind::Association:
      cols[col::kLowerA] = {i64(0)};
      cols[col::kUpperA] = {i64(kUnbounded)};
      cols[col::kLowerB] = {i64(0)};
      cols[col::kUpperB] = {i64(kUnbounded)};
      break;
    case ElementKind::Composition:
      cols[col::kLowerA] = {i64(0)};
      cols[col::kUpperA] = {i64(1)};
      cols[col::kLowerB] = {i64(0)};
      cols[col::kUpperB] = {i64(kUnbounded)};
      break;
    case ElementKind::Template: cols[col::kContainment] = {Value{std::string("TARGET_ROOT")}}; break;
    default: break;
  }
  return cols;
}

std::string_view to_string(ColumnType t) {
  switch (t) {
    case T::Bool: return "BOOL";
    case T::Int: return "INT";
    case T::Real: return "REAL";
    case T::String: return "STRING";
    case T::Ref: return "REF";
    case T::Any: return "ANY";
    case T::ByDataType: return "DATATYPE";
  }
  return "?";
}

}  // namespace qmod
