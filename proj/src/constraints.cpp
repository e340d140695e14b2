#include "qmod/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace qmod {
namespace {

using K = ElementKind;

// Kinds a reference column may point at.
std::vector<K> ref_targets(K kind, int column) {
  switch (kind) {
    case K::Attribute:
      if (column == col::kDataType) return {K::DataType};
      return {K::Unit};
    case K::Association:
    case K::Composition:
    case K::Inheritance: return {K::Class};
    case K::Constraint: return {K::Class};
    case K::Instance:
      if (column == col::kInstanceClass) return {K::Class};
      return {K::Composition};
    case K::LinkOccurrence:
      if (column == col::kLinkage) return {K::Association};
      return {K::Instance};
    case K::TransformationModel: return {K::Namespace};
    case K::Pattern:
      if (column == col::kGuardLinkage) return {K::Association, K::Composition};
      return {K::Class};
    case K::Template: return {K::Class};
    default: return {};
  }
}

struct RangeRule {
  ElementId constraint;
  ElementId target;                 // null: every class below the owning namespace
  std::set<ElementId> scope_classes;  // used when target is null
  std::string attribute;
  std::optional<double> min;
  std::optional<double> max;
};

std::optional<double> as_number(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  return std::nullopt;
}

class Evaluator {
 public:
  explicit Evaluator(const Store& store) : s_(store), mm_(store.metamodel()) {
    for (auto& v : validate_metamodel(mm_)) meta_[v.element].push_back(std::move(v));
    for (const auto& [id, l] : s_.table(K::LinkOccurrence)) {
      ++links_from_a_[{l.ref(col::kLinkage), l.ref(col::kLinkA)}];
      ++links_from_b_[{l.ref(col::kLinkage), l.ref(col::kLinkB)}];
    }
    for (const auto& [id, i] : s_.table(K::Instance)) {
      if (ElementId c = i.ref(col::kComposition); !c.is_null()) ++children_via_[{i.header.owner, c}];
    }
    for (const auto& [id, c] : s_.table(K::Constraint)) {
      auto r = range_rule(c);
      if (r) ranges_.push_back(std::move(*r));
    }
  }

  void check(ElementId id) {
    if (const Element* e = s_.find(id)) {
      check_element(*e);
    } else if (const Trace* t = s_.find_trace(id)) {
      check_trace(*t);
    }
  }

  std::vector<Violation> take() {
    canonicalize(out_);
    return std::move(out_);
  }

 private:
  void add(Code code, ElementId element, std::initializer_list<std::string> args, ElementId constraint = kNoElement) {
    out_.push_back(make_violation(code, element, args, constraint));
  }

  bool is_kind(ElementId id, std::span<const K> kinds) const {
    const Element* e = s_.find(id);
    return e && std::find(kinds.begin(), kinds.end(), e->header.kind) != kinds.end();
  }

  std::optional<RangeRule> range_rule(const Element& c) const {
    if (c.text(col::kConstraintKind) != "ATTR_RANGE") return std::nullopt;
    RangeRule r;
    r.constraint = c.header.id;
    r.target = c.ref(col::kTarget);
    r.attribute = c.text(col::kAttribute).value_or("");
    r.min = c.real(col::kMin);
    r.max = c.real(col::kMax);
    if (r.attribute.empty() || (!r.min && !r.max)) return std::nullopt;
    if (r.target.is_null()) {
      for (ElementId d : s_.descendants(c.header.owner)) {
        if (s_.get(d).header.kind == K::Class) r.scope_classes.insert(d);
      }
    } else if (!mm_.classes.contains(r.target)) {
      return std::nullopt;
    }
    return r;
  }

  void check_element(const Element& e) {
    const ElementId id = e.header.id;
    if (auto it = meta_.find(id); it != meta_.end()) out_.insert(out_.end(), it->second.begin(), it->second.end());
    check_structure(e);
    switch (e.header.kind) {
      case K::Instance: check_instance(e); break;
      case K::LinkOccurrence: check_link(e); break;
      case K::Constraint: check_constraint(e); break;
      default: break;
    }
  }

  void check_structure(const Element& e) {
    const ElementId id = e.header.id;
    const ElementKind kind = e.header.kind;
    if (id == reserved::kRoot) return;
    const Element* owner = s_.find(e.header.owner);
    if (!owner) {
      add(Code::UNRESOLVED_REF, id, {to_string(id), to_string(e.header.owner)});
    } else if (kind != K::Instance && !is_reserved_id(id)) {
      bool legal = containment_legal(kind, *owner);
      if (legal && (kind == K::Pattern || kind == K::Template)) {
        for (ElementId c : s_.children(owner->header.id)) {
          if (c < id && s_.get(c).header.kind == kind) legal = false;
        }
      }
      if (!legal) add(Code::CONTAINMENT_FORBIDDEN, id, {std::string(to_string(kind)), to_string(owner->header.id)});
    }
    for (ElementId sib : s_.children(e.header.owner)) {
      if (sib != id && s_.get(sib).header.name == e.header.name) {
        add(Code::NAME_CLASH, id, {e.header.name, to_string(e.header.owner)});
        break;
      }
    }
    if (!is_valid_name(e.header.name)) add(Code::MISSING_FIELD, id, {to_string(id), "name"});

    const auto cols = schema(kind);
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (cols[i].type != ColumnType::Ref) continue;
      const auto targets = ref_targets(kind, static_cast<int>(i));
      for (const Value& v : e.columns[i]) {
        const auto* raw = std::get_if<std::int64_t>(&v);
        if (!raw) continue;
        if (*raw == 0 && kind == K::Constraint) continue;
        const ElementId ref(static_cast<std::uint64_t>(std::max<std::int64_t>(*raw, 0)));
        if (!is_kind(ref, targets)) add(Code::UNRESOLVED_REF, id, {to_string(id), std::to_string(*raw)});
      }
    }
  }

  void check_instance(const Element& e) {
    const ElementId id = e.header.id;
    const ElementId cls = e.ref(col::kInstanceClass);
    auto cit = mm_.classes.find(cls);
    if (cit == mm_.classes.end()) return;  // reported as UNRESOLVED_REF
    const MetaClass& c = cit->second;
    if (c.abstract) add(Code::ABSTRACT_CLASS, id, {to_string(cls)});

    const bool own_type = !e.column(col::kInstanceType).empty();
    if (!c.type_value && !own_type) add(Code::POTENCY_REQUIRED, id, {to_string(id)});
    if (c.type_value && own_type) add(Code::POTENCY_FROZEN, id, {to_string(id), "type"});

    const auto attrs = qmod::effective_attributes(cls, mm_);
    std::set<ElementId> known;
    for (const AttributeDef* a : attrs) {
      known.insert(a->header.id);
      auto sit = e.slots.find(a->header.id);
      const ValueList empty;
      const ValueList& values = sit == e.slots.end() ? empty : sit->second;
      const std::string& name = a->header.name;
      if (a->potency == 0) {
        if (!a->fixed_values || values != *a->fixed_values) add(Code::POTENCY_FROZEN, id, {to_string(id), name});
        continue;
      }
      const auto n = static_cast<std::int64_t>(values.size());
      if (n < a->bounds.lower)
        add(Code::LOWER_BOUND, id, {to_string(id), name, std::to_string(n), std::to_string(a->bounds.lower)});
      if (a->bounds.upper != kUnbounded && n > a->bounds.upper)
        add(Code::UPPER_BOUND, id, {to_string(id), name, std::to_string(n), std::to_string(a->bounds.upper)});
      std::optional<BaseType> base;
      if (auto dt = mm_.datatypes.find(a->data_type); dt != mm_.datatypes.end()) base = dt->second.base;
      for (const Value& v : values) {
        const auto* d = std::get_if<double>(&v);
        if ((base && type_of(v) != *base) || (d && !std::isfinite(*d))) {
          add(Code::TYPE_MISMATCH, id,
              {name, base ? std::string(to_string(*base)) : std::string("?"), format_value(v)});
          break;
        }
      }
    }
    for (const auto& [aid, values] : e.slots) {
      if (!known.contains(aid)) add(Code::UNRESOLVED_REF, id, {to_string(id), to_string(aid)});
    }

    check_instance_containment(e, cls);
    check_instance_linkages(e, cls, attrs);
  }

  void check_instance_containment(const Element& e, ElementId cls) {
    const ElementId id = e.header.id;
    const Element* parent = s_.find(e.header.owner);
    const ElementId comp = e.ref(col::kComposition);
    if (parent) {
      bool ok = false;
      if (parent->header.kind == K::RootFolder && parent->header.level == Level::M1) {
        ok = comp.is_null();
      } else if (parent->header.kind == K::Instance && !comp.is_null()) {
        auto lit = mm_.linkages.find(comp);
        ok = lit != mm_.linkages.end() && lit->second.variant == LinkageVariant::COMPOSITION &&
             conforms(cls, lit->second.end_b, mm_) && conforms(parent->ref(col::kInstanceClass), lit->second.end_a, mm_);
      }
      if (!ok) add(Code::CONTAINMENT_FORBIDDEN, id, {"instance " + to_string(id), to_string(e.header.owner)});
    }
  }

  void check_instance_linkages(const Element& e, ElementId cls, const std::vector<const AttributeDef*>& attrs) {
    const ElementId id = e.header.id;
    auto count = [](const auto& m, const std::pair<ElementId, ElementId>& key) -> std::int64_t {
      auto it = m.find(key);
      return it == m.end() ? 0 : it->second;
    };
    auto bound_check = [&](const Multiplicity& m, std::int64_t n, const std::string& what) {
      if (n < m.lower) add(Code::LOWER_BOUND, id, {to_string(id), what, std::to_string(n), std::to_string(m.lower)});
      if (m.upper != kUnbounded && n > m.upper)
        add(Code::UPPER_BOUND, id, {to_string(id), what, std::to_string(n), std::to_string(m.upper)});
    };
    for (const auto& [lid, l] : mm_.linkages) {
      if (l.variant == LinkageVariant::INHERITANCE || l.end_a.is_null() || l.end_b.is_null()) continue;
      const std::string what = std::string(to_string(l.variant)) + " " + to_string(lid);
      if (l.variant == LinkageVariant::COMPOSITION) {
        if (conforms(cls, l.end_a, mm_)) bound_check(l.mult_b, count(children_via_, {id, lid}), what);
        if (conforms(cls, l.end_b, mm_) && l.mult_a.lower > 0)
          bound_check(l.mult_a, e.ref(col::kComposition) == lid ? 1 : 0, what);
        continue;
      }
      if (conforms(cls, l.end_a, mm_)) bound_check(l.mult_b, count(links_from_a_, {lid, id}), what);
      if (conforms(cls, l.end_b, mm_)) bound_check(l.mult_a, count(links_from_b_, {lid, id}), what);
    }

    for (const RangeRule& r : ranges_) {
      const bool applies = r.target.is_null() ? r.scope_classes.contains(cls) : conforms(cls, r.target, mm_);
      if (!applies) continue;
      for (const AttributeDef* a : attrs) {
        if (a->header.name != r.attribute) continue;
        auto sit = e.slots.find(a->header.id);
        if (sit == e.slots.end()) continue;
        for (const Value& v : sit->second) {
          auto x = as_number(v);
          if (!x) continue;
          if ((r.min && *x < *r.min) || (r.max && *x > *r.max)) {
            add(Code::ATTR_RANGE, id,
                {to_string(id), format_value(v), r.attribute, r.min ? format_real(*r.min) : "-inf",
                 r.max ? format_real(*r.max) : "+inf"},
                r.constraint);
            break;
          }
        }
      }
    }
  }

  void check_link(const Element& e) {
    const ElementId id = e.header.id;
    auto lit = mm_.linkages.find(e.ref(col::kLinkage));
    if (lit == mm_.linkages.end() || lit->second.variant != LinkageVariant::ASSOCIATION) return;
    const LinkageDef& l = lit->second;
    for (auto [end, col_index, want] : {std::tuple{"a", col::kLinkA, l.end_a}, std::tuple{"b", col::kLinkB, l.end_b}}) {
      const Element* inst = s_.find(e.ref(col_index));
      if (!inst || inst->header.kind != K::Instance) continue;
      if (want.is_null() || !conforms(inst->ref(col::kInstanceClass), want, mm_))
        add(Code::LINK_END_MISMATCH, id, {to_string(id), end});
    }
  }

  void check_constraint(const Element& e) {
    const ElementId id = e.header.id;
    const auto kind = e.text(col::kConstraintKind);
    if (!kind) {
      add(Code::MISSING_FIELD, id, {to_string(id), "constraintKind"});
      return;
    }
    const ElementId target = e.ref(col::kTarget);
    if (*kind != "ATTR_RANGE") return;  // the built-in kinds are always active; a declaration adds nothing
    const auto attribute = e.text(col::kAttribute);
    if (!attribute) {
      add(Code::MISSING_FIELD, id, {to_string(id), "attribute"});
      return;
    }
    const auto lo = e.real(col::kMin);
    const auto hi = e.real(col::kMax);
    if (!lo && !hi) add(Code::CONSTRAINT_INVALID, id, {to_string(id), "a range needs min or max"});
    if (lo && hi && *lo > *hi) add(Code::CONSTRAINT_INVALID, id, {to_string(id), "min exceeds max"});
    if ((lo && !std::isfinite(*lo)) || (hi && !std::isfinite(*hi)))
      add(Code::CONSTRAINT_INVALID, id, {to_string(id), "bounds must be finite"});
    if (!target.is_null() && mm_.classes.contains(target)) {
      bool found = false;
      for (const AttributeDef* a : qmod::effective_attributes(target, mm_)) {
        if (a->header.name != *attribute) continue;
        auto dt = mm_.datatypes.find(a->data_type);
        found = dt != mm_.datatypes.end() && (dt->second.base == BaseType::INT || dt->second.base == BaseType::REAL);
      }
      if (!found)
        add(Code::CONSTRAINT_INVALID, id, {to_string(id), "class " + to_string(target) + " has no numeric attribute " + *attribute});
    }
  }

  void check_trace(const Trace& t) {
    auto need = [&](ElementId ref) {
      if (!s_.contains(ref)) add(Code::UNRESOLVED_REF, t.id, {to_string(t.id), to_string(ref)});
    };
    need(t.transformation);
    need(t.source_root);
    need(t.target_root);
    for (const auto& r : t.records) {
      need(r.rule);
      for (ElementId x : r.targets) need(x);
    }
  }

  const Store& s_;
  const Metamodel& mm_;
  std::map<ElementId, std::vector<Violation>> meta_;
  std::map<std::pair<ElementId, ElementId>, std::int64_t> links_from_a_;
  std::map<std::pair<ElementId, ElementId>, std::int64_t> links_from_b_;
  std::map<std::pair<ElementId, ElementId>, std::int64_t> children_via_;
  std::vector<RangeRule> ranges_;
  std::vector<Violation> out_;
};

}  // namespace

std::vector<Violation> evaluate_elements(const Store& store, const std::set<ElementId>& elements) {
  Evaluator ev(store);
  for (ElementId id : elements) ev.check(id);
  return ev.take();
}

std::vector<Violation> evaluate(const Store& store, ElementId scope) {
  std::set<ElementId> ids;
  if (scope.is_null()) {
    for (ElementKind k = ElementKind::RootFolder; static_cast<std::size_t>(k) < kKindCount;
         k = static_cast<ElementKind>(static_cast<std::size_t>(k) + 1)) {
      for (const auto& [id, e] : store.table(k)) ids.insert(id);
    }
    for (const auto& [id, t] : store.traces()) ids.insert(id);
  } else {
    store.get(scope);
    ids.insert(scope);
    for (ElementId d : store.descendants(scope)) ids.insert(d);
  }
  return evaluate_elements(store, ids);
}

std::optional<std::set<ElementId>> affected_scope(const std::vector<Change>& changes, const Store& store) {
  std::set<ElementId> ids;
  for (const Change& c : changes) {
    if (c.level == Level::M2) return std::nullopt;
    ids.insert(c.element);
    ids.insert(c.related.begin(), c.related.end());
  }
  // Neighbours whose verdict depends on an instance: its parent, its
  // children and the instances it is linked with.
  std::set<ElementId> extra;
  for (ElementId id : ids) {
    const Element* e = store.find(id);
    if (!e || e->header.kind != ElementKind::Instance) continue;
    extra.insert(e->header.owner);
    for (ElementId c : store.children(id)) extra.insert(c);
  }
  for (const auto& [lid, l] : store.table(ElementKind::LinkOccurrence)) {
    if (ids.contains(l.ref(col::kLinkA)) || ids.contains(l.ref(col::kLinkB))) {
      extra.insert(lid);
      extra.insert(l.ref(col::kLinkA));
      extra.insert(l.ref(col::kLinkB));
    }
  }
  ids.insert(extra.begin(), extra.end());
  ids.erase(kNoElement);
  return ids;
}

std::vector<Violation> enforce_at_commit(const std::vector<Change>& changes, const Store& store) {
  if (changes.empty()) return {};
  auto scope = affected_scope(changes, store);
  if (!scope) return evaluate(store);
  return evaluate_elements(store, *scope);
}

}  // namespace qmod
