#include "qmod/store.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>

namespace qmod {
namespace {

constexpr std::array<std::string_view, 9> kReservedFieldNames = {
    "class", "composition", "id", "kind", "level", "name", "owner", "type", "typePotency"};

Value ref_value(ElementId id) { return Value{static_cast<std::int64_t>(id.value)}; }

Level level_for(ElementKind kind) {
  if (kind == ElementKind::RootFolder) return Level::M1;
  if (is_meta_kind(kind)) return Level::M2;
  return Level::M1;
}

std::string describe(const Value& v) { return format_value(v); }

std::string base_name(ColumnType t) { return std::string(to_string(t)); }

const std::set<ElementId> kNoChildren;

}  // namespace

ElementId Element::ref(int index) const {
  const auto& c = column(index);
  if (c.empty()) return kNoElement;
  if (const auto* v = std::get_if<std::int64_t>(&c.front()); v && *v > 0) return ElementId(static_cast<std::uint64_t>(*v));
  return kNoElement;
}

std::optional<std::int64_t> Element::integer(int index) const {
  const auto& c = column(index);
  if (c.empty()) return std::nullopt;
  if (const auto* v = std::get_if<std::int64_t>(&c.front())) return *v;
  return std::nullopt;
}

std::optional<std::string> Element::text(int index) const {
  const auto& c = column(index);
  if (c.empty()) return std::nullopt;
  if (const auto* v = std::get_if<std::string>(&c.front())) return *v;
  return std::nullopt;
}

std::optional<double> Element::real(int index) const {
  const auto& c = column(index);
  if (c.empty()) return std::nullopt;
  if (const auto* v = std::get_if<double>(&c.front())) return *v;
  return std::nullopt;
}

bool Element::flag(int index) const {
  const auto& c = column(index);
  if (c.empty()) return false;
  const auto* v = std::get_if<bool>(&c.front());
  return v && *v;
}

std::string_view to_string(ChangeOp op) {
  switch (op) {
    case ChangeOp::CREATED: return "CREATED";
    case ChangeOp::UPDATED: return "UPDATED";
    case ChangeOp::DELETED: return "DELETED";
    case ChangeOp::LINKED: return "LINKED";
    case ChangeOp::UNLINKED: return "UNLINKED";
    case ChangeOp::RETYPED: return "RETYPED";
  }
  return "?";
}

bool is_reserved_id(ElementId id) { return id.value >= 1 && id.value < reserved::kFirstFreeId; }

bool is_reserved_field_name(std::string_view name) {
  return std::find(kReservedFieldNames.begin(), kReservedFieldNames.end(), name) != kReservedFieldNames.end();
}

// ---------------------------------------------------------------------------
// Construction and registry access
// ---------------------------------------------------------------------------

Store::Store() {
  auto make = [](ElementId id, ElementId owner, std::string name, Level level, ElementKind kind) {
    Element e;
    e.header = {id, owner, std::move(name), level, kind};
    e.columns = default_columns(kind);
    return e;
  };
  insert_raw(make(reserved::kRoot, kNoElement, "root", Level::M2, ElementKind::RootFolder));
  insert_raw(make(reserved::kM2Region, reserved::kRoot, "M2", Level::M2, ElementKind::Namespace));
  insert_raw(make(reserved::kM1Region, reserved::kRoot, "M1", Level::M1, ElementKind::RootFolder));
  Element unit = make(reserved::kDimensionless, reserved::kM2Region, "dimensionless", Level::M2, ElementKind::Unit);
  unit.columns[col::kSymbol] = {Value{std::string("1")}};
  insert_raw(std::move(unit));
  next_id_ = reserved::kFirstFreeId;
}

const Element* Store::find(ElementId id) const {
  auto k = kinds_.find(id);
  if (k == kinds_.end()) return nullptr;
  const auto& t = tables_[static_cast<std::size_t>(k->second)];
  auto it = t.find(id);
  return it == t.end() ? nullptr : &it->second;
}

const Element& Store::get(ElementId id) const {
  const Element* e = find(id);
  if (!e) throw Error(Code::UNKNOWN_ID, {to_string(id)});
  return *e;
}

const Element& Store::get(ElementId id, ElementKind expected) const {
  const Element& e = get(id);
  if (e.header.kind != expected)
    throw Error(Code::KIND_MISMATCH,
                {to_string(id), std::string(to_string(e.header.kind)), std::string(to_string(expected))});
  return e;
}

Element& Store::mutable_get(ElementId id) { return const_cast<Element&>(get(id)); }

const std::map<ElementId, Element>& Store::table(ElementKind kind) const {
  return tables_[static_cast<std::size_t>(kind)];
}

const std::set<ElementId>& Store::children(ElementId id) const {
  auto it = children_.find(id);
  return it == children_.end() ? kNoChildren : it->second;
}

std::vector<ElementId> Store::descendants(ElementId id) const {
  std::vector<ElementId> out;
  std::deque<ElementId> queue{id};
  while (!queue.empty()) {
    ElementId cur = queue.front();
    queue.pop_front();
    for (ElementId c : children(cur)) {
      out.push_back(c);
      queue.push_back(c);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

Level Store::level_of(ElementId id) const { return get(id).header.level; }

ElementId Store::allocate() { return ElementId(next_id_++); }

void Store::insert_raw(Element element) {
  const ElementId id = element.header.id;
  const ElementKind kind = element.header.kind;
  if (!element.header.owner.is_null()) children_[element.header.owner].insert(id);
  kinds_[id] = kind;
  tables_[static_cast<std::size_t>(kind)][id] = std::move(element);
  touch(kind);
}

void Store::clear_all() {
  for (auto& t : tables_) t.clear();
  kinds_.clear();
  children_.clear();
  traces_.clear();
  journal_.clear();
  drafts_.clear();
  metamodel_.reset();
  next_id_ = 1;
}

void Store::touch(ElementKind kind) {
  if (is_meta_kind(kind)) metamodel_.reset();
}

void Store::record(ChangeOp op, const Element& e, std::vector<std::string> details, std::vector<ElementId> related) {
  journal_.push_back(Change{op, e.header.id, e.header.level, std::move(details), std::move(related)});
}

std::vector<Change> Store::take_journal() {
  drafts_.clear();
  return std::exchange(journal_, {});
}

// ---------------------------------------------------------------------------
// Typed meta-model view
// ---------------------------------------------------------------------------

const Metamodel& Store::metamodel() const {
  if (metamodel_) return *metamodel_;
  auto mm = std::make_shared<Metamodel>();
  for (const auto& [id, e] : table(ElementKind::Class)) {
    MetaClass c;
    c.header = e.header;
    c.abstract = e.flag(col::kAbstract);
    c.type_value = e.text(col::kClassType);
    mm->classes.emplace(id, std::move(c));
  }
  for (const auto& [id, e] : table(ElementKind::Attribute)) {
    AttributeDef a;
    a.header = e.header;
    a.data_type = e.ref(col::kDataType);
    a.unit = e.ref(col::kUnit);
    a.bounds = {e.integer(col::kLower).value_or(1), e.integer(col::kUpper).value_or(1)};
    a.potency = static_cast<int>(e.integer(col::kPotency).value_or(1));
    if (!e.column(col::kFixedValues).empty()) a.fixed_values = e.column(col::kFixedValues);
    mm->attributes.emplace(id, std::move(a));
  }
  for (ElementKind k : {ElementKind::Association, ElementKind::Composition, ElementKind::Inheritance}) {
    for (const auto& [id, e] : table(k)) {
      LinkageDef l;
      l.header = e.header;
      l.variant = variant_of(k);
      l.end_a = e.ref(col::kEndA);
      l.end_b = e.ref(col::kEndB);
      if (k != ElementKind::Inheritance) {
        l.mult_a = {e.integer(col::kLowerA).value_or(0), e.integer(col::kUpperA).value_or(kUnbounded)};
        l.mult_b = {e.integer(col::kLowerB).value_or(0), e.integer(col::kUpperB).value_or(kUnbounded)};
      }
      mm->linkages.emplace(id, std::move(l));
    }
  }
  for (const auto& [id, e] : table(ElementKind::Unit)) {
    Unit u;
    u.header = e.header;
    u.symbol = e.text(col::kSymbol).value_or("");
    const auto& dims = e.column(col::kDims);
    for (std::size_t i = 0; i < u.dims.size() && i < dims.size(); ++i) {
      if (const auto* v = std::get_if<std::int64_t>(&dims[i])) u.dims[i] = static_cast<std::int8_t>(*v);
    }
    mm->units.emplace(id, std::move(u));
  }
  for (const auto& [id, e] : table(ElementKind::DataType)) {
    DataType d;
    d.header = e.header;
    if (auto b = e.text(col::kBase)) d.base = base_type_from_string(*b);
    mm->datatypes.emplace(id, std::move(d));
  }
  metamodel_ = std::move(mm);
  return *metamodel_;
}

std::vector<const AttributeDef*> Store::effective_attributes(ElementId class_id) const {
  return qmod::effective_attributes(class_id, metamodel());
}

std::set<ElementId> Store::classes_in_use() const {
  const Metamodel& mm = metamodel();
  std::set<ElementId> direct;
  for (const auto& [id, e] : table(ElementKind::Instance)) direct.insert(e.ref(col::kInstanceClass));
  std::set<ElementId> out;
  for (ElementId c : direct) {
    if (!mm.classes.contains(c)) continue;
    for (ElementId s : superclass_closure(c, mm)) out.insert(s);
  }
  return out;
}

bool Store::in_use(ElementId id) const {
  const Element* e = find(id);
  if (!e) return false;
  const auto used = classes_in_use();
  if (used.empty()) return false;
  auto class_in_use = [&](ElementId c) { return used.contains(c); };
  switch (e->header.kind) {
    case ElementKind::Class: return class_in_use(id);
    case ElementKind::Attribute: return class_in_use(e->header.owner);
    case ElementKind::Association:
    case ElementKind::Composition: return class_in_use(e->ref(col::kEndA)) || class_in_use(e->ref(col::kEndB));
    case ElementKind::Inheritance: return class_in_use(e->ref(col::kEndA));
    case ElementKind::DataType:
    case ElementKind::Unit: {
      const int column = e->header.kind == ElementKind::DataType ? col::kDataType : col::kUnit;
      for (const auto& [aid, a] : table(ElementKind::Attribute)) {
        if (a.ref(column) == id && class_in_use(a.header.owner)) return true;
      }
      return false;
    }
    case ElementKind::Namespace: {
      for (ElementId d : descendants(id)) {
        const Element& de = get(d);
        if (de.header.kind != ElementKind::Namespace && is_meta_kind(de.header.kind) && in_use(d)) return true;
      }
      return false;
    }
    default: return false;
  }
}

void Store::check_meta_mutable(const Element& e) const {
  if (is_meta_kind(e.header.kind) && in_use(e.header.id)) throw Error(Code::META_IN_USE, {to_string(e.header.id)});
}

ElementId Store::class_of(ElementId id) const {
  const Element* e = find(id);
  if (!e) return kNoElement;
  if (e->header.kind == ElementKind::Instance) return e->ref(col::kInstanceClass);
  if (e->header.kind == ElementKind::Class) return id;
  return kNoElement;
}

ElementId Store::admitting_composition(ElementId parent_class, ElementId child_class) const {
  const Metamodel& mm = metamodel();
  if (!mm.classes.contains(parent_class) || !mm.classes.contains(child_class)) return kNoElement;
  for (const auto& [id, l] : mm.linkages) {
    if (l.variant != LinkageVariant::COMPOSITION) continue;
    if (conforms(parent_class, l.end_a, mm) && conforms(child_class, l.end_b, mm)) return id;
  }
  return kNoElement;
}

std::optional<BaseType> Store::datatype_base(ElementId datatype) const {
  const Element* d = find(datatype);
  if (!d || d->header.kind != ElementKind::DataType) return std::nullopt;
  if (auto b = d->text(col::kBase)) return base_type_from_string(*b);
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// CRUD
// ---------------------------------------------------------------------------

bool containment_legal(ElementKind kind, const Element& owner) {
  const ElementKind ok = owner.header.kind;
  const bool m1_folder = ok == ElementKind::RootFolder && owner.header.level == Level::M1;
  switch (kind) {
    case ElementKind::RootFolder: return owner.header.id == reserved::kM1Region;
    case ElementKind::Namespace: return owner.header.id == reserved::kRoot || ok == ElementKind::Namespace;
    case ElementKind::Constraint:
    case ElementKind::Class:
    case ElementKind::DataType:
    case ElementKind::Unit:
    case ElementKind::Association:
    case ElementKind::Composition:
    case ElementKind::Inheritance: return ok == ElementKind::Namespace;
    case ElementKind::Attribute: return ok == ElementKind::Class;
    case ElementKind::Instance: return false;
    case ElementKind::LinkOccurrence:
    case ElementKind::TransformationModel: return m1_folder;
    case ElementKind::Rule: return ok == ElementKind::TransformationModel;
    case ElementKind::Pattern:
    case ElementKind::Template: return ok == ElementKind::Rule;
    case ElementKind::Assignment: return ok == ElementKind::Template;
  }
  return false;
}

bool Store::containment_allowed(ElementKind kind, const Element& owner) const {
  if (!containment_legal(kind, owner)) return false;
  // A rule holds at most one pattern and one template.
  if (kind == ElementKind::Pattern || kind == ElementKind::Template) {
    for (ElementId c : children(owner.header.id)) {
      if (get(c).header.kind == kind) return false;
    }
  }
  return true;
}

void Store::check_name_free(ElementId owner, std::string_view name, ElementId self) const {
  for (ElementId c : children(owner)) {
    if (c != self && get(c).header.name == name) throw Error(Code::NAME_CLASH, {std::string(name), to_string(owner)});
  }
}

ElementId Store::create(ElementKind kind, ElementId owner, std::string_view name,
                        std::optional<std::array<ElementId, 3>> link) {
  const Element& parent = get(owner);
  if (!is_valid_name(name)) throw Error(Code::INVALID_VALUE, {"name", quote(name)});
  if (kind == ElementKind::Attribute && is_reserved_field_name(name))
    throw Error(Code::INVALID_VALUE, {"name", quote(name) + " is reserved"});
  if (!containment_allowed(kind, parent))
    throw Error(Code::CONTAINMENT_FORBIDDEN, {std::string(to_string(kind)), to_string(owner)});
  if (kind == ElementKind::Attribute) check_meta_mutable(parent);
  if (kind == ElementKind::LinkOccurrence) {
    if (!link) throw Error(Code::INVALID_VALUE, {"linkage", "a link needs a linkage and two ends"});
    get((*link)[0], ElementKind::Association);
    get((*link)[1], ElementKind::Instance);
    get((*link)[2], ElementKind::Instance);
  }
  check_name_free(owner, name, kNoElement);

  Element e;
  e.header = {allocate(), owner, std::string(name), level_for(kind), kind};
  e.columns = default_columns(kind);
  std::vector<std::string> details{std::string(to_string(kind)), to_string(owner), quote(name)};
  ChangeOp op = ChangeOp::CREATED;
  std::vector<ElementId> related{owner};
  if (kind == ElementKind::LinkOccurrence) {
    for (int i = 0; i < 3; ++i) {
      e.columns[static_cast<std::size_t>(col::kLinkage + i)] = {ref_value((*link)[static_cast<std::size_t>(i)])};
      details.push_back(to_string((*link)[static_cast<std::size_t>(i)]));
    }
    related.push_back((*link)[1]);
    related.push_back((*link)[2]);
    op = ChangeOp::LINKED;
  }
  const ElementId id = e.header.id;
  drafts_.insert(id);
  record(op, e, std::move(details), std::move(related));
  insert_raw(std::move(e));
  return id;
}

ValueList Store::read(ElementId id, std::string_view field) const {
  const Element& e = get(id);
  const auto& h = e.header;
  if (field == "id") return {ref_value(h.id)};
  if (field == "name") return {Value{h.name}};
  if (field == "owner") return {ref_value(h.owner)};
  if (field == "kind") return {Value{std::string(to_string(h.kind))}};
  if (field == "level") return {Value{std::string(to_string(h.level))}};
  if (field == "typePotency") {
    if (h.kind == ElementKind::Class) return {Value{std::int64_t{kMetaLanguageTypePotency - 1}}};
    if (h.kind == ElementKind::Instance) return {Value{std::int64_t{0}}};
  }
  if (h.kind == ElementKind::Instance) {
    const ElementId cls = e.ref(col::kInstanceClass);
    if (field == "type") {
      if (const Element* c = find(cls); c && c->header.kind == ElementKind::Class && c->text(col::kClassType))
        return c->column(col::kClassType);
      return e.column(col::kInstanceType);
    }
    if (int i = column_index(h.kind, field); i >= 0) return e.column(i);
    if (metamodel().classes.contains(cls)) {
      for (const AttributeDef* a : effective_attributes(cls)) {
        if (a->header.name != field) continue;
        auto it = e.slots.find(a->header.id);
        return it == e.slots.end() ? ValueList{} : it->second;
      }
    }
    throw Error(Code::UNKNOWN_FIELD, {to_string(id), std::string(field)});
  }
  if (int i = column_index(h.kind, field); i >= 0) return e.column(i);
  throw Error(Code::UNKNOWN_FIELD, {to_string(id), std::string(field)});
}

Value Store::check_value(const Element& e, std::string_view field, const ColumnSpec* spec, const Value& v) const {
  const std::string f(field);
  auto mismatch = [&](std::string expected) { return Error(Code::TYPE_MISMATCH, {f, std::move(expected), describe(v)}); };
  auto require = [&](BaseType t, std::string expected) {
    if (type_of(v) != t) throw mismatch(std::move(expected));
  };
  if (const auto* s = std::get_if<std::string>(&v); s && !is_clean_text(*s))
    throw Error(Code::INVALID_VALUE, {f, "line breaks are not allowed"});
  if (!spec) return v;
  switch (spec->type) {
    case ColumnType::Bool: require(BaseType::BOOL, base_name(spec->type)); break;
    case ColumnType::Int: require(BaseType::INT, base_name(spec->type)); break;
    case ColumnType::Real: require(BaseType::REAL, base_name(spec->type)); break;
    case ColumnType::String: require(BaseType::STRING, base_name(spec->type)); break;
    case ColumnType::Ref:
      require(BaseType::INT, base_name(spec->type));
      if (std::get<std::int64_t>(v) < 0) throw Error(Code::INVALID_VALUE, {f, describe(v)});
      break;
    case ColumnType::Any: break;
    case ColumnType::ByDataType: {
      auto base = datatype_base(e.ref(col::kDataType));
      if (!base) throw Error(Code::INVALID_VALUE, {f, "the attribute has no resolvable data type"});
      require(*base, std::string(to_string(*base)));
      break;
    }
  }
  if (!spec->domain.empty()) {
    const auto& s = std::get<std::string>(v);
    if (std::find(spec->domain.begin(), spec->domain.end(), s) == spec->domain.end())
      throw Error(Code::INVALID_VALUE, {f, describe(v)});
  }
  if (e.header.kind == ElementKind::Unit && field == "dims") {
    auto x = std::get<std::int64_t>(v);
    if (x < -128 || x > 127) throw Error(Code::INVALID_VALUE, {f, describe(v)});
  }
  return v;
}

void Store::update(ElementId id, std::string_view field, std::size_t index, const Value& value) {
  const Element& e = get(id);
  const auto kind = e.header.kind;
  const std::string f(field);
  if (is_reserved_id(id)) throw Error(Code::RESERVED_ELEMENT, {to_string(id)});
  if (field == "id" || field == "owner" || field == "kind" || field == "level" ||
      (field == "typePotency" && (kind == ElementKind::Class || kind == ElementKind::Instance)))
    throw Error(Code::READ_ONLY_FIELD, {to_string(id), f});

  // Resolve the target list and its bounds.
  enum class Target { Name, Column, Slot } target;
  int column = -1;
  const ColumnSpec* spec = nullptr;
  const AttributeDef* attr = nullptr;
  std::int64_t upper = 1;
  if (field == "name") {
    target = Target::Name;
  } else if ((column = column_index(kind, field)) >= 0) {
    target = Target::Column;
    spec = &schema(kind)[static_cast<std::size_t>(column)];
    if (!spec->writable) throw Error(Code::READ_ONLY_FIELD, {to_string(id), f});
    upper = spec->upper;
    if (kind == ElementKind::Instance && column == col::kInstanceType) {
      const Element* c = find(e.ref(col::kInstanceClass));
      if (c && c->header.kind == ElementKind::Class && c->text(col::kClassType))
        throw Error(Code::POTENCY_FROZEN, {to_string(id), f});
    }
  } else if (kind == ElementKind::Instance) {
    target = Target::Slot;
    const ElementId cls = e.ref(col::kInstanceClass);
    if (metamodel().classes.contains(cls)) {
      for (const AttributeDef* a : effective_attributes(cls)) {
        if (a->header.name == field) attr = a;
      }
    }
    if (!attr) throw Error(Code::UNKNOWN_FIELD, {to_string(id), f});
    if (attr->potency == 0) throw Error(Code::POTENCY_FROZEN, {to_string(id), f});
    upper = attr->bounds.upper;
  } else {
    throw Error(Code::UNKNOWN_FIELD, {to_string(id), f});
  }

  check_meta_mutable(e);
  if (target == Target::Column && (kind == ElementKind::Association || kind == ElementKind::Composition ||
                                   (kind == ElementKind::Inheritance && column == col::kEndA)) &&
      (column == col::kEndA || column == col::kEndB)) {
    if (const auto* v = std::get_if<std::int64_t>(&value); v && *v > 0) {
      const ElementId end(static_cast<std::uint64_t>(*v));
      if (table(ElementKind::Class).contains(end) && in_use(end)) throw Error(Code::META_IN_USE, {to_string(end)});
    }
  }

  // Type and value checks.
  Value checked = value;
  if (target == Target::Name) {
    if (type_of(value) != BaseType::STRING) throw Error(Code::TYPE_MISMATCH, {f, "STRING", describe(value)});
    const auto& s = std::get<std::string>(value);
    if (!is_valid_name(s)) throw Error(Code::INVALID_VALUE, {f, describe(value)});
    if (kind == ElementKind::Attribute && is_reserved_field_name(s))
      throw Error(Code::INVALID_VALUE, {f, describe(value) + " is reserved"});
  } else if (target == Target::Column) {
    checked = check_value(e, field, spec, value);
  } else {
    auto base = datatype_base(attr->data_type);
    if (!base) throw Error(Code::INVALID_VALUE, {f, "the attribute has no resolvable data type"});
    if (type_of(value) != *base)
      throw Error(Code::TYPE_MISMATCH, {f, std::string(to_string(*base)), describe(value)});
    check_value(e, field, nullptr, value);
  }

  // Index checks.
  const ValueList empty;
  const ValueList* current = &empty;
  ValueList name_list;
  if (target == Target::Name) {
    name_list = {Value{e.header.name}};
    current = &name_list;
  } else if (target == Target::Column) {
    current = &e.column(column);
  } else if (auto it = e.slots.find(attr->header.id); it != e.slots.end()) {
    current = &it->second;
  }
  const std::size_t len = current->size();
  if (index > len) throw Error(Code::INDEX_OUT_OF_RANGE, {std::to_string(index), std::to_string(len), f});
  if (index == len && upper != kUnbounded && static_cast<std::int64_t>(len) >= upper)
    throw Error(Code::UPPER_BOUND_EXCEEDED, {to_string(id), f, std::to_string(upper)});
  if (target == Target::Name) check_name_free(e.header.owner, std::get<std::string>(checked), id);

  // Apply.
  std::string old = index < len ? format_value((*current)[index]) : "-";
  Element& m = mutable_get(id);
  ValueList* list = nullptr;
  if (target == Target::Name) {
    m.header.name = std::get<std::string>(checked);
  } else if (target == Target::Column) {
    list = &m.columns[static_cast<std::size_t>(column)];
  } else {
    list = &m.slots[attr->header.id];
  }
  if (list) {
    if (index == list->size()) list->push_back(checked);
    else (*list)[index] = checked;
  }
  touch(kind);
  record(ChangeOp::UPDATED, m, {quote(field), std::to_string(index), old, format_value(checked)}, {m.header.owner});
}

void Store::remove(ElementId id) {
  const Element& e = get(id);
  if (is_reserved_id(id)) throw Error(Code::RESERVED_ELEMENT, {to_string(id)});
  check_meta_mutable(e);

  std::set<ElementId> doomed{id};
  for (ElementId d : descendants(id)) doomed.insert(d);
  std::set<ElementId> links;
  for (const auto& [lid, l] : table(ElementKind::LinkOccurrence)) {
    if (doomed.contains(lid) || doomed.contains(l.ref(col::kLinkA)) || doomed.contains(l.ref(col::kLinkB)))
      links.insert(lid);
  }
  for (ElementId l : links) doomed.erase(l);
  std::vector<ElementId> traces;
  for (const auto& [tid, t] : traces_) {
    if (doomed.contains(t.transformation) || doomed.contains(t.source_root) || doomed.contains(t.target_root))
      traces.push_back(tid);
  }

  const ElementId former_owner = e.header.owner;
  auto erase = [&](ElementId x) {
    const Element& xe = get(x);
    const ElementKind k = xe.header.kind;
    if (auto it = children_.find(xe.header.owner); it != children_.end()) {
      it->second.erase(x);
      if (it->second.empty()) children_.erase(it);
    }
    children_.erase(x);
    drafts_.erase(x);
    tables_[static_cast<std::size_t>(k)].erase(x);
    kinds_.erase(x);
    touch(k);
  };
  for (ElementId l : links) {
    const Element& le = get(l);
    std::vector<std::string> details{to_string(le.ref(col::kLinkage)), to_string(le.ref(col::kLinkA)),
                                     to_string(le.ref(col::kLinkB))};
    record(ChangeOp::UNLINKED, le, std::move(details), {le.ref(col::kLinkA), le.ref(col::kLinkB), le.header.owner});
    erase(l);
  }
  for (auto it = traces.rbegin(); it != traces.rend(); ++it) {
    journal_.push_back(Change{ChangeOp::DELETED, *it, Level::M1, {"Trace"}, {}});
    traces_.erase(*it);
  }
  for (auto it = doomed.rbegin(); it != doomed.rend(); ++it) {
    const Element& de = get(*it);
    std::vector<ElementId> related;
    if (*it == id) related.push_back(former_owner);
    record(ChangeOp::DELETED, de, {std::string(to_string(de.header.kind))}, std::move(related));
    erase(*it);
  }
}

// ---------------------------------------------------------------------------
// Instantiation and retyping
// ---------------------------------------------------------------------------

ElementId Store::instantiate(ElementId class_id, ElementId parent, std::string_view name) {
  const Element& c = get(class_id);
  if (c.header.kind == ElementKind::Instance) decrement_potency(0, class_id);
  if (c.header.kind != ElementKind::Class)
    throw Error(Code::KIND_MISMATCH,
                {to_string(class_id), std::string(to_string(c.header.kind)), std::string(to_string(ElementKind::Class))});
  if (c.flag(col::kAbstract)) throw Error(Code::ABSTRACT_CLASS, {to_string(class_id)});
  decrement_potency(kMetaLanguageTypePotency - 1, class_id);

  const Element& p = get(parent);
  ElementId composition;
  if (p.header.kind == ElementKind::Instance) {
    composition = admitting_composition(p.ref(col::kInstanceClass), class_id);
    if (composition.is_null())
      throw Error(Code::CONTAINMENT_FORBIDDEN, {"an instance of class " + to_string(class_id), to_string(parent)});
  } else if (!(p.header.kind == ElementKind::RootFolder && p.header.level == Level::M1)) {
    throw Error(Code::CONTAINMENT_FORBIDDEN, {"an instance of class " + to_string(class_id), to_string(parent)});
  }
  if (!is_valid_name(name)) throw Error(Code::INVALID_VALUE, {"name", quote(name)});
  check_name_free(parent, name, kNoElement);

  Element e;
  e.header = {allocate(), parent, std::string(name), Level::M1, ElementKind::Instance};
  e.columns = default_columns(ElementKind::Instance);
  e.columns[col::kInstanceClass] = {ref_value(class_id)};
  if (!composition.is_null()) e.columns[col::kComposition] = {ref_value(composition)};
  for (const AttributeDef* a : effective_attributes(class_id)) {
    if (a->potency == 0 && a->fixed_values) e.slots[a->header.id] = *a->fixed_values;
  }
  const ElementId id = e.header.id;
  drafts_.insert(id);
  record(ChangeOp::CREATED, e, {"Instance", to_string(parent), quote(name), to_string(class_id)}, {parent});
  insert_raw(std::move(e));
  return id;
}

void Store::retype(ElementId instance, ElementId new_class) {
  const Element& inst = get(instance, ElementKind::Instance);
  const Element& nc = get(new_class, ElementKind::Class);
  if (nc.flag(col::kAbstract)) throw Error(Code::ABSTRACT_CLASS, {to_string(new_class)});
  const ElementId old_class = inst.ref(col::kInstanceClass);
  if (old_class == new_class) return;

  const Metamodel& mm = metamodel();
  auto incompatible = [&](ElementId offending) {
    return Error(Code::RETYPE_INCOMPATIBLE, {to_string(instance), to_string(new_class), to_string(offending)});
  };
  const auto target_attrs = effective_attributes(new_class);
  auto target_named = [&](const std::string& n) -> const AttributeDef* {
    for (const AttributeDef* a : target_attrs) {
      if (a->header.name == n) return a;
    }
    return nullptr;
  };
  auto unit_of = [&](ElementId u) -> const Unit* {
    auto it = mm.units.find(u);
    return it == mm.units.end() ? nullptr : &it->second;
  };

  std::map<ElementId, ValueList> slots;
  for (const auto& [aid, values] : inst.slots) {
    if (values.empty()) continue;
    auto old_it = mm.attributes.find(aid);
    if (old_it == mm.attributes.end()) throw incompatible(aid);
    const AttributeDef& old_attr = old_it->second;
    const AttributeDef* t = target_named(old_attr.header.name);
    if (!t || t->data_type != old_attr.data_type) throw incompatible(aid);
    const Unit* ou = unit_of(old_attr.unit);
    const Unit* tu = unit_of(t->unit);
    if (!ou || !tu || !unit_compatible(*ou, *tu)) throw incompatible(aid);
    if (t->potency == 0 && t->fixed_values && *t->fixed_values != values) throw incompatible(t->header.id);
    slots[t->header.id] = values;
  }
  for (const AttributeDef* a : target_attrs) {
    if (a->potency == 0 && a->fixed_values && !slots.contains(a->header.id)) slots[a->header.id] = *a->fixed_values;
  }
  if (!inst.column(col::kInstanceType).empty() && nc.text(col::kClassType)) throw incompatible(new_class);

  for (const auto& [lid, l] : table(ElementKind::LinkOccurrence)) {
    const bool at_a = l.ref(col::kLinkA) == instance;
    const bool at_b = l.ref(col::kLinkB) == instance;
    if (!at_a && !at_b) continue;
    auto lit = mm.linkages.find(l.ref(col::kLinkage));
    if (lit == mm.linkages.end()) throw incompatible(lid);
    if ((at_a && !conforms(new_class, lit->second.end_a, mm)) || (at_b && !conforms(new_class, lit->second.end_b, mm)))
      throw incompatible(lid);
  }
  if (ElementId comp = inst.ref(col::kComposition); !comp.is_null()) {
    auto lit = mm.linkages.find(comp);
    if (lit == mm.linkages.end() || !conforms(new_class, lit->second.end_b, mm)) throw incompatible(inst.header.owner);
  }
  for (ElementId child : children(instance)) {
    const Element& ce = get(child);
    if (ce.header.kind != ElementKind::Instance) continue;
    auto lit = mm.linkages.find(ce.ref(col::kComposition));
    if (lit == mm.linkages.end() || !conforms(new_class, lit->second.end_a, mm)) throw incompatible(child);
  }

  Element& m = mutable_get(instance);
  m.columns[col::kInstanceClass] = {ref_value(new_class)};
  m.slots = std::move(slots);
  record(ChangeOp::RETYPED, m, {to_string(old_class), to_string(new_class)}, {m.header.owner});
}

// ---------------------------------------------------------------------------
// Reflection and listing
// ---------------------------------------------------------------------------

Reflection Store::reflect(ElementId id) const {
  const Element& e = get(id);
  Reflection r;
  r.id = id;
  r.kind = e.header.kind;
  r.level = e.header.level;
  r.name = e.header.name;
  r.owner = e.header.owner;
  r.draft = is_draft(id);

  const Metamodel& mm = metamodel();
  ElementId cls;
  if (e.header.kind == ElementKind::Class) {
    cls = id;
    r.type_potency = kMetaLanguageTypePotency - 1;
    r.type_frozen = e.text(col::kClassType).has_value();
  } else if (e.header.kind == ElementKind::Instance) {
    cls = e.ref(col::kInstanceClass);
    r.class_ref = cls;
    r.type_potency = 0;
    if (auto it = mm.classes.find(cls); it != mm.classes.end()) r.type_frozen = it->second.type_value.has_value();
  }
  if (!cls.is_null() && mm.classes.contains(cls)) {
    for (const AttributeDef* a : effective_attributes(cls)) {
      AttributeDescriptor d;
      d.id = a->header.id;
      d.name = a->header.name;
      if (auto dt = mm.datatypes.find(a->data_type); dt != mm.datatypes.end()) d.type = dt->second.base;
      if (auto u = mm.units.find(a->unit); u != mm.units.end()) d.unit_symbol = u->second.symbol;
      d.bounds = a->bounds;
      d.potency = a->potency;
      d.frozen = a->potency == 0;
      r.attributes.push_back(std::move(d));
    }
    for (const auto& [lid, l] : mm.linkages) {
      if (l.variant == LinkageVariant::INHERITANCE) {
        if (e.header.kind != ElementKind::Class) continue;
        if (l.end_a == cls) r.linkages.push_back({lid, l.variant, 'A', l.end_b});
        if (l.end_b == cls) r.linkages.push_back({lid, l.variant, 'B', l.end_a});
        continue;
      }
      if (!l.end_a.is_null() && conforms(cls, l.end_a, mm)) r.linkages.push_back({lid, l.variant, 'A', l.end_b});
      if (!l.end_b.is_null() && conforms(cls, l.end_b, mm)) r.linkages.push_back({lid, l.variant, 'B', l.end_a});
    }
  }

  for (std::size_t k = 0; k < kKindCount; ++k) {
    if (containment_allowed(static_cast<ElementKind>(k), e)) r.creatable.push_back(static_cast<ElementKind>(k));
  }
  const bool m1_folder = e.header.kind == ElementKind::RootFolder && e.header.level == Level::M1;
  if (m1_folder || e.header.kind == ElementKind::Instance) {
    for (const auto& [cid, c] : mm.classes) {
      if (c.abstract) continue;
      if (m1_folder || !admitting_composition(cls, cid).is_null()) r.instantiable.push_back(cid);
    }
  }
  return r;
}

std::vector<std::string> to_tokens(const Reflection& r) {
  std::vector<std::string> out;
  auto kv = [&](std::string_view k, const std::string& v) { out.push_back(encode_token(std::string(k) + "=" + v)); };
  kv("kind", std::string(to_string(r.kind)));
  kv("level", std::string(to_string(r.level)));
  kv("owner", to_string(r.owner));
  kv("name", r.name);
  kv("draft", r.draft ? "true" : "false");
  if (!r.class_ref.is_null()) kv("class", to_string(r.class_ref));
  if (r.type_potency) {
    kv("typePotency", std::to_string(*r.type_potency));
    kv("typeFrozen", r.type_frozen ? "true" : "false");
  }
  for (const auto& a : r.attributes) {
    kv("attr", a.name + ":" + (a.type ? std::string(to_string(*a.type)) : "?") + ":" + a.unit_symbol + ":" +
                   to_string(a.bounds) + ":" + std::to_string(a.potency) + ":" + (a.frozen ? "ro" : "rw"));
  }
  for (const auto& l : r.linkages) {
    kv("link", std::string(to_string(l.variant)) + ":" + to_string(l.linkage) + ":" + std::string(1, l.end) + ":" +
                   to_string(l.peer_class));
  }
  for (ElementKind k : r.creatable) kv("create", std::string(to_string(k)));
  for (ElementId c : r.instantiable) kv("inst", to_string(c));
  return out;
}

std::vector<ElementId> Store::list(ElementKind kind, ElementId filter) const {
  if (!filter.is_null()) {
    if (kind != ElementKind::Instance) throw Error(Code::INVALID_VALUE, {"filter", "only instances can be filtered"});
    get(filter, ElementKind::Class);
  }
  std::vector<ElementId> out;
  const Metamodel& mm = metamodel();
  for (const auto& [id, e] : table(kind)) {
    if (!filter.is_null() && !conforms(e.ref(col::kInstanceClass), filter, mm)) continue;
    out.push_back(id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Direct writes used by the transformation engine and the loader
// ---------------------------------------------------------------------------

void Store::set_slot(ElementId instance, ElementId attribute, ValueList values) {
  Element& m = mutable_get(instance);
  const AttributeDef* a = nullptr;
  if (auto it = metamodel().attributes.find(attribute); it != metamodel().attributes.end()) a = &it->second;
  std::vector<std::string> details{quote(a ? a->header.name : to_string(attribute)), "0", "-",
                                   format_values(values)};
  if (values.empty()) m.slots.erase(attribute);
  else m.slots[attribute] = std::move(values);
  record(ChangeOp::UPDATED, m, std::move(details), {m.header.owner});
}

void Store::set_instance_parent(ElementId instance, ElementId parent, ElementId composition) {
  Element& m = mutable_get(instance);
  const ElementId old = m.header.owner;
  if (auto it = children_.find(old); it != children_.end()) it->second.erase(instance);
  children_[parent].insert(instance);
  m.header.owner = parent;
  m.columns[col::kComposition] = composition.is_null() ? ValueList{} : ValueList{ref_value(composition)};
  record(ChangeOp::UPDATED, m, {quote("owner"), "0", to_string(old), to_string(parent)}, {old, parent});
}

void Store::set_instance_type(ElementId instance, std::optional<std::string> type) {
  Element& m = mutable_get(instance);
  std::string old = m.column(col::kInstanceType).empty() ? "-" : format_value(m.column(col::kInstanceType).front());
  m.columns[col::kInstanceType] = type ? ValueList{Value{*type}} : ValueList{};
  record(ChangeOp::UPDATED, m, {quote("type"), "0", old, type ? quote(*type) : "-"}, {m.header.owner});
}

void Store::set_slots_raw(ElementId instance, std::map<ElementId, ValueList> slots) {
  mutable_get(instance).slots = std::move(slots);
}

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

const Trace* Store::find_trace(ElementId id) const {
  auto it = traces_.find(id);
  return it == traces_.end() ? nullptr : &it->second;
}

ElementId Store::add_trace(Trace trace) {
  trace.id = allocate();
  const ElementId id = trace.id;
  journal_.push_back(Change{ChangeOp::CREATED, id, Level::M1,
                            {"Trace", to_string(trace.transformation), to_string(trace.source_root),
                             to_string(trace.target_root)},
                            {}});
  traces_.emplace(id, std::move(trace));
  return id;
}

void Store::insert_trace_raw(Trace trace) { traces_[trace.id] = std::move(trace); }

}  // namespace qmod
