#include "qmod/meta_core.hpp"

#include <algorithm>
#include <array>
#include <set>

namespace qmod {
namespace {

constexpr std::array<std::string_view, kKindCount> kKindNames = {
    "RootFolder", "Namespace",  "Constraint",     "Class",               "Attribute", "DataType",
    "Unit",       "Association", "Composition",   "Inheritance",         "Instance",  "LinkOccurrence",
    "TransformationModel", "Rule", "Pattern", "Template", "Assignment",
};

constexpr std::array kStandardUnits = {
    UnitSpec{"dimensionless", "1", {0, 0, 0, 0, 0, 0, 0}},
    UnitSpec{"kilogram", "kg", {1, 0, 0, 0, 0, 0, 0}},
    UnitSpec{"metre", "m", {0, 1, 0, 0, 0, 0, 0}},
    UnitSpec{"second", "s", {0, 0, 1, 0, 0, 0, 0}},
    UnitSpec{"ampere", "A", {0, 0, 0, 1, 0, 0, 0}},
    UnitSpec{"kelvin", "K", {0, 0, 0, 0, 1, 0, 0}},
    UnitSpec{"mole", "mol", {0, 0, 0, 0, 0, 1, 0}},
    UnitSpec{"candela", "cd", {0, 0, 0, 0, 0, 0, 1}},
    UnitSpec{"volt", "V", {1, 2, -3, -1, 0, 0, 0}},
    UnitSpec{"millivolt", "mV", {1, 2, -3, -1, 0, 0, 0}},
    UnitSpec{"newton", "N", {1, 1, -2, 0, 0, 0, 0}},
    UnitSpec{"watt", "W", {1, 2, -3, 0, 0, 0, 0}},
    UnitSpec{"hertz", "Hz", {0, 0, -1, 0, 0, 0, 0}},
    UnitSpec{"metre per second", "m/s", {0, 1, -1, 0, 0, 0, 0}},
};

// Superclass edges: subclass -> list of superclasses.
std::map<ElementId, std::vector<ElementId>> inheritance_edges(const Metamodel& mm) {
  std::map<ElementId, std::vector<ElementId>> edges;
  for (const auto& [id, l] : mm.linkages) {
    if (l.variant == LinkageVariant::INHERITANCE && !l.end_a.is_null() && !l.end_b.is_null())
      edges[l.end_a].push_back(l.end_b);
  }
  return edges;
}

bool reaches(ElementId from, ElementId to, const std::map<ElementId, std::vector<ElementId>>& edges) {
  std::set<ElementId> seen;
  std::vector<ElementId> stack{from};
  while (!stack.empty()) {
    ElementId cur = stack.back();
    stack.pop_back();
    if (cur == to) return true;
    if (!seen.insert(cur).second) continue;
    if (auto it = edges.find(cur); it != edges.end()) {
      for (ElementId next : it->second) stack.push_back(next);
    }
  }
  return false;
}

std::vector<ElementId> closure_from(ElementId class_id, const std::map<ElementId, std::vector<ElementId>>& edges) {
  std::set<ElementId> seen{class_id};
  std::vector<ElementId> stack{class_id};
  while (!stack.empty()) {
    ElementId cur = stack.back();
    stack.pop_back();
    if (auto it = edges.find(cur); it != edges.end()) {
      for (ElementId next : it->second) {
        if (seen.insert(next).second) stack.push_back(next);
      }
    }
  }
  return {seen.begin(), seen.end()};
}

bool valid_bounds(const Multiplicity& m, std::int64_t min_lower) {
  if (m.lower < min_lower) return false;
  return m.upper == kUnbounded || m.upper >= m.lower;
}

}  // namespace

std::string to_string(ElementId id) { return std::to_string(id.value); }

std::string_view to_string(Level level) {
  switch (level) {
    case Level::M3: return "M3";
    case Level::M2: return "M2";
    case Level::M1: return "M1";
  }
  return "?";
}

std::string_view to_string(ElementKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::optional<ElementKind> kind_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<ElementKind>(i);
  }
  return std::nullopt;
}

bool is_meta_kind(ElementKind kind) {
  switch (kind) {
    case ElementKind::Namespace:
    case ElementKind::Constraint:
    case ElementKind::Class:
    case ElementKind::Attribute:
    case ElementKind::DataType:
    case ElementKind::Unit:
    case ElementKind::Association:
    case ElementKind::Composition:
    case ElementKind::Inheritance: return true;
    default: return false;
  }
}

bool is_transform_kind(ElementKind kind) {
  return kind >= ElementKind::TransformationModel && kind <= ElementKind::Assignment;
}

bool is_valid_name(std::string_view name) {
  if (!is_clean_text(name)) return false;
  return name.find_first_not_of(" \t") != std::string_view::npos;
}

bool unit_compatible(const Unit& a, const Unit& b) { return a.dims == b.dims; }

std::span<const UnitSpec> standard_units() { return kStandardUnits; }

std::string to_string(const Multiplicity& m) {
  return std::to_string(m.lower) + ".." + (m.upper == kUnbounded ? std::string("*") : std::to_string(m.upper));
}

std::string_view to_string(LinkageVariant v) {
  switch (v) {
    case LinkageVariant::ASSOCIATION: return "ASSOCIATION";
    case LinkageVariant::COMPOSITION: return "COMPOSITION";
    case LinkageVariant::INHERITANCE: return "INHERITANCE";
  }
  return "?";
}

LinkageVariant variant_of(ElementKind kind) {
  switch (kind) {
    case ElementKind::Composition: return LinkageVariant::COMPOSITION;
    case ElementKind::Inheritance: return LinkageVariant::INHERITANCE;
    default: return LinkageVariant::ASSOCIATION;
  }
}

ElementKind kind_of(LinkageVariant v) {
  switch (v) {
    case LinkageVariant::COMPOSITION: return ElementKind::Composition;
    case LinkageVariant::INHERITANCE: return ElementKind::Inheritance;
    default: return ElementKind::Association;
  }
}

bool operator<(const Violation& a, const Violation& b) {
  if (a.element != b.element) return a.element < b.element;
  if (a.code != b.code) return a.code < b.code;
  return a.constraint < b.constraint;
}

Violation make_violation(Code code, ElementId element, std::initializer_list<std::string> args,
                         ElementId constraint) {
  note_observed(code);
  return Violation{code, element, constraint, format_message(code, args)};
}

void canonicalize(std::vector<Violation>& violations) {
  std::stable_sort(violations.begin(), violations.end());
  violations.erase(std::unique(violations.begin(), violations.end()), violations.end());
}

std::string summarize(const std::vector<Violation>& violations) {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += ", ";
    out += std::string(to_string(v.code)) + "(" + to_string(v.element) + ")";
  }
  return out;
}

std::vector<Violation> validate_metamodel(const Metamodel& mm) {
  std::vector<Violation> out;
  auto add = [&](Code c, ElementId id, std::initializer_list<std::string> args) {
    out.push_back(make_violation(c, id, args));
  };

  for (const auto& [id, dt] : mm.datatypes) {
    if (!dt.base) add(Code::MISSING_FIELD, id, {to_string(id), "base"});
  }
  for (const auto& [id, u] : mm.units) {
    if (u.symbol.empty()) add(Code::MISSING_FIELD, id, {to_string(id), "symbol"});
  }

  for (const auto& [id, a] : mm.attributes) {
    if (!mm.classes.contains(a.header.owner)) add(Code::UNRESOLVED_REF, id, {to_string(id), to_string(a.header.owner)});
    const DataType* dt = nullptr;
    if (a.data_type.is_null()) {
      add(Code::MISSING_FIELD, id, {to_string(id), "dataType"});
    } else if (auto it = mm.datatypes.find(a.data_type); it == mm.datatypes.end()) {
      add(Code::UNRESOLVED_REF, id, {to_string(id), to_string(a.data_type)});
    } else {
      dt = &it->second;
    }
    if (!mm.units.contains(a.unit)) add(Code::UNRESOLVED_REF, id, {to_string(id), to_string(a.unit)});
    if (!valid_bounds(a.bounds, 1)) add(Code::INVALID_MULTIPLICITY, id, {to_string(id), to_string(a.bounds)});
    if (a.potency != 0 && a.potency != 1) {
      add(Code::INVALID_POTENCY, id, {to_string(id), "potency must be 0 or 1"});
    } else if (a.potency == 0 && !a.fixed_values) {
      add(Code::INVALID_POTENCY, id, {to_string(id), "potency 0 requires fixed values"});
    } else if (a.potency == 1 && a.fixed_values) {
      add(Code::INVALID_POTENCY, id, {to_string(id), "fixed values require potency 0"});
    }
    if (a.fixed_values) {
      auto n = static_cast<std::int64_t>(a.fixed_values->size());
      if (n < a.bounds.lower)
        add(Code::LOWER_BOUND, id, {to_string(id), "fixedValues", std::to_string(n), std::to_string(a.bounds.lower)});
      if (a.bounds.upper != kUnbounded && n > a.bounds.upper)
        add(Code::UPPER_BOUND, id, {to_string(id), "fixedValues", std::to_string(n), std::to_string(a.bounds.upper)});
      if (dt && dt->base) {
        for (const auto& v : *a.fixed_values) {
          if (type_of(v) != *dt->base) {
            add(Code::TYPE_MISMATCH, id, {"fixedValues", std::string(to_string(*dt->base)), format_value(v)});
            break;
          }
        }
      }
    }
  }

  const auto edges = inheritance_edges(mm);
  for (const auto& [id, l] : mm.linkages) {
    bool ends_ok = true;
    for (auto [end, field] : {std::pair{l.end_a, "endA"}, std::pair{l.end_b, "endB"}}) {
      if (end.is_null()) {
        add(Code::MISSING_FIELD, id, {to_string(id), field});
        ends_ok = false;
      } else if (!mm.classes.contains(end)) {
        add(Code::UNRESOLVED_REF, id, {to_string(id), to_string(end)});
        ends_ok = false;
      }
    }
    if (l.variant == LinkageVariant::INHERITANCE) {
      if (ends_ok && reaches(l.end_b, l.end_a, edges)) add(Code::INHERITANCE_CYCLE, id, {to_string(id)});
      continue;
    }
    if (!valid_bounds(l.mult_a, 0)) add(Code::INVALID_MULTIPLICITY, id, {to_string(id), "A " + to_string(l.mult_a)});
    if (!valid_bounds(l.mult_b, 0)) add(Code::INVALID_MULTIPLICITY, id, {to_string(id), "B " + to_string(l.mult_b)});
    if (l.variant == LinkageVariant::COMPOSITION && l.mult_a.upper != 1)
      add(Code::INVALID_MULTIPLICITY, id, {to_string(id), "composition parent end must be at most 1"});
  }

  // Sibling names must be distinct among the elements handed in.
  std::map<std::pair<ElementId, std::string>, std::vector<ElementId>> by_name;
  auto note_name = [&](const StructureElementHeader& h) { by_name[{h.owner, h.name}].push_back(h.id); };
  for (const auto& [id, e] : mm.classes) note_name(e.header);
  for (const auto& [id, e] : mm.attributes) note_name(e.header);
  for (const auto& [id, e] : mm.linkages) note_name(e.header);
  for (const auto& [id, e] : mm.units) note_name(e.header);
  for (const auto& [id, e] : mm.datatypes) note_name(e.header);
  for (const auto& [key, ids] : by_name) {
    if (ids.size() < 2) continue;
    for (ElementId id : ids) add(Code::NAME_CLASH, id, {key.second, to_string(key.first)});
  }

  for (const auto& [id, c] : mm.classes) {
    std::map<std::string, ElementId> seen;
    for (const AttributeDef* a : effective_attributes(id, mm)) {
      auto [it, inserted] = seen.emplace(a->header.name, a->header.id);
      if (!inserted && it->second != a->header.id) {
        add(Code::ATTR_NAME_COLLISION, id, {to_string(id), a->header.name});
        break;
      }
    }
  }

  canonicalize(out);
  return out;
}

std::vector<ElementId> superclass_closure(ElementId class_id, const Metamodel& mm) {
  return closure_from(class_id, inheritance_edges(mm));
}

bool conforms(ElementId sub, ElementId super, const Metamodel& mm) {
  if (sub == super) return true;
  return reaches(sub, super, inheritance_edges(mm));
}

std::vector<const AttributeDef*> effective_attributes(ElementId class_id, const Metamodel& mm) {
  if (!mm.classes.contains(class_id)) throw Error(Code::UNKNOWN_ID, {to_string(class_id)});
  const auto closure = superclass_closure(class_id, mm);
  const std::set<ElementId> members(closure.begin(), closure.end());
  std::vector<const AttributeDef*> out;
  for (const auto& [id, a] : mm.attributes) {
    if (members.contains(a.header.owner)) out.push_back(&a);
  }
  return out;
}

int decrement_potency(int potency, ElementId carrier) {
  if (potency <= 0) throw Error(Code::POTENCY_EXHAUSTED, {to_string(carrier)});
  return potency - 1;
}

}  // namespace qmod
