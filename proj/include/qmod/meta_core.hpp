#pragma once

// The essential meta-language: element kinds, the M2 vocabulary (classes,
// attributes, data types, units, linkages) and the pure rules over them.
// Nothing in here knows about storage; the runtime builds a Metamodel view
// from its registries and hands it to these functions.

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qmod/error.hpp"
#include "qmod/value.hpp"

namespace qmod {

struct ElementId {
  std::uint64_t value = 0;

  constexpr ElementId() = default;
  constexpr explicit ElementId(std::uint64_t v) : value(v) {}

  constexpr bool is_null() const { return value == 0; }
  friend constexpr auto operator<=>(ElementId, ElementId) = default;
};

inline constexpr ElementId kNoElement{};

std::string to_string(ElementId id);

enum class Level : std::uint8_t { M3, M2, M1 };
std::string_view to_string(Level level);

enum class ElementKind : std::uint8_t {
  RootFolder,
  Namespace,
  Constraint,
  Class,
  Attribute,
  DataType,
  Unit,
  Association,
  Composition,
  Inheritance,
  Instance,
  LinkOccurrence,
  TransformationModel,
  Rule,
  Pattern,
  Template,
  Assignment,
};
inline constexpr std::size_t kKindCount = 17;

std::string_view to_string(ElementKind kind);
std::optional<ElementKind> kind_from_string(std::string_view name);

/// Kinds that make up a meta-model (everything a Namespace may hold).
bool is_meta_kind(ElementKind kind);
/// Kinds of the transformation meta-model.
bool is_transform_kind(ElementKind kind);

struct StructureElementHeader {
  ElementId id;
  ElementId owner;
  std::string name;
  Level level = Level::M2;
  ElementKind kind = ElementKind::Class;
};

/// A name is acceptable when it is nonempty after trimming and single-line.
bool is_valid_name(std::string_view name);

// ---------------------------------------------------------------------------
// Units
// ---------------------------------------------------------------------------

/// Exponents over the SI base quantities, in the order kg, m, s, A, K, mol, cd.
using Dims = std::array<std::int8_t, 7>;
inline constexpr std::array<std::string_view, 7> kBaseQuantities = {"kg", "m", "s", "A", "K", "mol", "cd"};

struct Unit {
  StructureElementHeader header;
  std::string symbol;
  Dims dims{};
};

/// Compatibility is dimension equality only; scale is not considered.
bool unit_compatible(const Unit& a, const Unit& b);

struct UnitSpec {
  std::string_view name;
  std::string_view symbol;
  Dims dims;
};

/// A small table of common SI units; the dimensionless unit comes first.
std::span<const UnitSpec> standard_units();

// ---------------------------------------------------------------------------
// M2 vocabulary
// ---------------------------------------------------------------------------

struct DataType {
  StructureElementHeader header;
  std::optional<BaseType> base;
};

inline constexpr std::int64_t kUnbounded = -1;

struct Multiplicity {
  std::int64_t lower = 0;
  std::int64_t upper = kUnbounded;

  bool admits(std::int64_t count) const { return count >= lower && (upper == kUnbounded || count <= upper); }
  friend bool operator==(const Multiplicity&, const Multiplicity&) = default;
};

std::string to_string(const Multiplicity& m);

/// The meta-language's own Class definition carries type potency 2; creating
/// a Class at M2 is one instantiation step.
inline constexpr int kMetaLanguageTypePotency = 2;

struct MetaClass {
  StructureElementHeader header;
  bool abstract = false;
  std::optional<std::string> type_value;
  int type_potency = kMetaLanguageTypePotency - 1;
};

struct AttributeDef {
  StructureElementHeader header;  // header.owner is the MetaClass
  ElementId data_type;
  ElementId unit;
  Multiplicity bounds{1, 1};
  int potency = 1;
  std::optional<ValueList> fixed_values;
};

enum class LinkageVariant : std::uint8_t { ASSOCIATION, COMPOSITION, INHERITANCE };
std::string_view to_string(LinkageVariant v);
LinkageVariant variant_of(ElementKind kind);
ElementKind kind_of(LinkageVariant v);

/// COMPOSITION: end A is the parent, end B the child.
/// INHERITANCE: end A is the subclass, end B the superclass; no multiplicities.
struct LinkageDef {
  StructureElementHeader header;
  LinkageVariant variant = LinkageVariant::ASSOCIATION;
  ElementId end_a;
  ElementId end_b;
  Multiplicity mult_a;
  Multiplicity mult_b;
};

struct Metamodel {
  std::map<ElementId, MetaClass> classes;
  std::map<ElementId, AttributeDef> attributes;
  std::map<ElementId, LinkageDef> linkages;
  std::map<ElementId, Unit> units;
  std::map<ElementId, DataType> datatypes;
};

struct Violation {
  Code code;
  ElementId element;
  ElementId constraint;  // null for built-in rules
  std::string message;

  /// Canonical report order: element, then code, then constraint.
  friend bool operator<(const Violation& a, const Violation& b);
  friend bool operator==(const Violation& a, const Violation& b) {
    return a.code == b.code && a.element == b.element && a.constraint == b.constraint;
  }
};

Violation make_violation(Code code, ElementId element, std::initializer_list<std::string> args,
                         ElementId constraint = kNoElement);

/// Sorts into canonical order and drops duplicates of (element, code, constraint).
void canonicalize(std::vector<Violation>& violations);

/// `CODE(id), CODE(id)` -- the text carried by VALIDATION_FAILED responses.
std::string summarize(const std::vector<Violation>& violations);

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

std::vector<Violation> validate_metamodel(const Metamodel& mm);

/// Own plus inherited attributes, each AttributeDef once, ascending by id.
/// Throws Error(UNKNOWN_ID) when the class does not resolve.
std::vector<const AttributeDef*> effective_attributes(ElementId class_id, const Metamodel& mm);

/// The class and every transitive superclass, ascending by id.
std::vector<ElementId> superclass_closure(ElementId class_id, const Metamodel& mm);

/// True if `sub` is `super` or inherits from it, directly or transitively.
bool conforms(ElementId sub, ElementId super, const Metamodel& mm);

/// Throws Error(POTENCY_EXHAUSTED) at zero; `carrier` names the element in the message.
int decrement_potency(int potency, ElementId carrier = kNoElement);

}  // namespace qmod
