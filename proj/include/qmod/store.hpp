#pragma once

// The model runtime: one ordered registry per element kind, linked only by
// ElementIds, plus the generic CRUD, instantiation, retyping and reflective
// queries that operate on it.
//
// A Store is a value. Transactions are implemented by the protocol layer as
// copy-on-begin snapshots, so every operation here either completes or
// throws qmod::Error before touching any record.

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "qmod/meta_core.hpp"
#include "qmod/schema.hpp"

namespace qmod {

struct Element {
  StructureElementHeader header;
  std::vector<ValueList> columns;        // schema(header.kind) order
  std::map<ElementId, ValueList> slots;  // Instance values by AttributeDef id

  const ValueList& column(int index) const { return columns[static_cast<std::size_t>(index)]; }
  ElementId ref(int index) const;  // null when unset
  std::optional<std::int64_t> integer(int index) const;
  std::optional<std::string> text(int index) const;
  std::optional<double> real(int index) const;
  bool flag(int index) const;
};

enum class ChangeOp : std::uint8_t { CREATED, UPDATED, DELETED, LINKED, UNLINKED, RETYPED };
std::string_view to_string(ChangeOp op);

/// One applied change inside an open transaction.
struct Change {
  ChangeOp op;
  ElementId element;
  Level level;
  std::vector<std::string> details;  // wire tokens, already encoded
  // Elements whose consistency may depend on this change (former parent,
  // link peers). Used to size the commit-time check.
  std::vector<ElementId> related;
};

struct TraceRecord {
  std::uint64_t seq = 0;
  ElementId rule;
  std::vector<ElementId> sources;
  std::vector<ElementId> targets;
  std::string note;  // empty unless containment fell back to the target root

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct Trace {
  ElementId id;
  ElementId transformation;
  ElementId source_root;
  ElementId target_root;
  std::vector<TraceRecord> records;

  friend bool operator==(const Trace&, const Trace&) = default;
};

struct AttributeDescriptor {
  ElementId id;
  std::string name;
  std::optional<BaseType> type;
  std::string unit_symbol;
  Multiplicity bounds;
  int potency = 1;
  bool frozen = false;
};

struct LinkageParticipation {
  ElementId linkage;
  LinkageVariant variant;
  char end;  // 'A' or 'B'
  ElementId peer_class;
};

/// Everything a generic client needs to present an element and offer the
/// edits that are legal on it.
struct Reflection {
  ElementId id;
  ElementKind kind;
  Level level;
  std::string name;
  ElementId owner;
  bool draft = false;
  ElementId class_ref;  // instances only
  std::optional<int> type_potency;
  bool type_frozen = false;
  std::vector<AttributeDescriptor> attributes;
  std::vector<LinkageParticipation> linkages;
  std::vector<ElementKind> creatable;      // kinds CREATE accepts under this element
  std::vector<ElementId> instantiable;     // classes INSTANTIATE accepts under this element
};

std::vector<std::string> to_tokens(const Reflection& r);

class Store {
 public:
  /// A fresh store: the root folder, the M2 and M1 regions and the
  /// dimensionless unit, with the id counter at the first free id.
  Store();

  // CRUD --------------------------------------------------------------------
  /// `link` carries (linkage, a, b) when creating a LinkOccurrence.
  ElementId create(ElementKind kind, ElementId owner, std::string_view name,
                   std::optional<std::array<ElementId, 3>> link = std::nullopt);
  ValueList read(ElementId id, std::string_view field) const;
  void update(ElementId id, std::string_view field, std::size_t index, const Value& value);
  void remove(ElementId id);

  ElementId instantiate(ElementId class_id, ElementId parent, std::string_view name);
  void retype(ElementId instance, ElementId new_class);
  Reflection reflect(ElementId id) const;
  /// Ascending ids of `kind`; for Instances, `filter` keeps conforming ones.
  std::vector<ElementId> list(ElementKind kind, ElementId filter = kNoElement) const;

  // Registry access ---------------------------------------------------------
  const Element* find(ElementId id) const;
  const Element& get(ElementId id) const;  // throws UNKNOWN_ID
  const Element& get(ElementId id, ElementKind expected) const;  // also KIND_MISMATCH
  bool contains(ElementId id) const { return find(id) != nullptr; }
  const std::map<ElementId, Element>& table(ElementKind kind) const;
  const std::set<ElementId>& children(ElementId id) const;
  std::vector<ElementId> descendants(ElementId id) const;  // excluding id, ascending
  std::size_t size() const { return kinds_.size(); }
  std::uint64_t next_id() const { return next_id_; }
  Level level_of(ElementId id) const;

  /// Cached typed view of the M2 registries.
  const Metamodel& metamodel() const;
  std::vector<const AttributeDef*> effective_attributes(ElementId class_id) const;
  /// Classes with at least one live instance, closed under superclasses.
  std::set<ElementId> classes_in_use() const;
  bool in_use(ElementId id) const;

  /// The class an instance or M2 class stands for; null for anything else.
  ElementId class_of(ElementId id) const;
  /// Lowest-id composition admitting `child_class` under an instance of `parent_class`.
  ElementId admitting_composition(ElementId parent_class, ElementId child_class) const;

  // Transaction support -----------------------------------------------------
  const std::vector<Change>& journal() const { return journal_; }
  std::vector<Change> take_journal();
  bool is_draft(ElementId id) const { return drafts_.contains(id); }

  // Traces ------------------------------------------------------------------
  const std::map<ElementId, Trace>& traces() const { return traces_; }
  const Trace* find_trace(ElementId id) const;
  ElementId add_trace(Trace trace);  // assigns the next id

  // Direct writes for the loader and the transformation engine. They skip
  // the per-command checks; the commit-time evaluation still applies. The
  // set_* calls are journaled, the *_raw ones are not.
  void insert_raw(Element element);
  void set_next_id(std::uint64_t next) { next_id_ = next; }
  void set_slot(ElementId instance, ElementId attribute, ValueList values);
  void set_instance_parent(ElementId instance, ElementId parent, ElementId composition);
  void set_instance_type(ElementId instance, std::optional<std::string> type);
  void set_slots_raw(ElementId instance, std::map<ElementId, ValueList> slots);
  void insert_trace_raw(Trace trace);
  void clear_all();

 private:
  Element& mutable_get(ElementId id);
  ElementId allocate();
  void check_name_free(ElementId owner, std::string_view name, ElementId self) const;
  void check_meta_mutable(const Element& e) const;
  void record(ChangeOp op, const Element& e, std::vector<std::string> details,
              std::vector<ElementId> related = {});
  void touch(ElementKind kind);
  bool containment_allowed(ElementKind kind, const Element& owner) const;
  Value check_value(const Element& e, std::string_view field, const ColumnSpec* spec, const Value& v) const;
  std::optional<BaseType> datatype_base(ElementId datatype) const;

  std::array<std::map<ElementId, Element>, kKindCount> tables_;
  std::map<ElementId, ElementKind> kinds_;
  std::map<ElementId, std::set<ElementId>> children_;
  std::map<ElementId, Trace> traces_;
  std::uint64_t next_id_ = 1;
  std::vector<Change> journal_;
  std::set<ElementId> drafts_;
  mutable std::shared_ptr<const Metamodel> metamodel_;
};

/// Instance attribute names and the other names an Attribute may not take.
bool is_reserved_field_name(std::string_view name);

/// Whether `owner` may hold a child of `kind`, ignoring how many siblings it
/// already has. Instances are never legal here; they follow compositions.
bool containment_legal(ElementKind kind, const Element& owner);

bool is_reserved_id(ElementId id);

}  // namespace qmod
