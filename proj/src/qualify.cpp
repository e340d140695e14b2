#include "qmod/qualify.hpp"

#include <cmath>
#include <sstream>

#include "qmod/persist.hpp"

namespace qmod {
namespace {

using K = ElementKind;

Artifact finish(ArtifactKind kind, std::string content) {
  return Artifact{kind, content, sha256_hex(content)};
}

void header(std::ostringstream& os, ArtifactKind kind, const Store* store) {
  os << "== QMOD " << to_string(kind) << " ==\n";
  os << "template: " << to_string(kind) << "-" << kTemplateVersion << "\n";
  if (store) os << "store: " << digest(*store) << "\n";
}

const Element& namespace_root(const Store& s, ElementId root) { return s.get(root, K::Namespace); }

// Namespaces at and below `root`, ascending.
std::vector<ElementId> namespaces(const Store& s, ElementId root) {
  std::vector<ElementId> out{root};
  for (ElementId d : s.descendants(root)) {
    if (s.get(d).header.kind == K::Namespace) out.push_back(d);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ElementId> members(const Store& s, ElementId ns, K kind) {
  std::vector<ElementId> out;
  for (ElementId c : s.children(ns)) {
    if (s.get(c).header.kind == kind) out.push_back(c);
  }
  return out;
}

// Every element of `kind` directly inside one of the covered namespaces.
std::vector<ElementId> covered(const Store& s, ElementId root, K kind) {
  std::vector<ElementId> out;
  for (ElementId ns : namespaces(s, root)) {
    for (ElementId id : members(s, ns, kind)) out.push_back(id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string name_of(const Store& s, ElementId id) {
  const Element* e = s.find(id);
  return e ? e->header.name : "?" + to_string(id);
}

std::string base_of(const Metamodel& mm, ElementId datatype) {
  auto it = mm.datatypes.find(datatype);
  if (it == mm.datatypes.end() || !it->second.base) return "?";
  return std::string(to_string(*it->second.base));
}

std::string symbol_of(const Metamodel& mm, ElementId unit) {
  auto it = mm.units.find(unit);
  return it == mm.units.end() ? "?" : it->second.symbol;
}

std::string dims_text(const Dims& d) {
  std::string out;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] == 0) continue;
    if (!out.empty()) out += ' ';
    out += std::string(kBaseQuantities[i]) + "^" + std::to_string(d[i]);
  }
  return out.empty() ? "dimensionless" : out;
}

std::string range_text(const Element& c) {
  auto lo = c.real(col::kMin);
  auto hi = c.real(col::kMax);
  return "[" + (lo ? format_real(*lo) : std::string("-inf")) + ", " + (hi ? format_real(*hi) : std::string("+inf")) + "]";
}

}  // namespace

std::string_view to_string(ArtifactKind k) {
  switch (k) {
    case ArtifactKind::DOCS: return "DOCS";
    case ArtifactKind::REQUIREMENTS: return "REQUIREMENTS";
    case ArtifactKind::TESTS: return "TESTS";
    case ArtifactKind::ERROR_CATALOGUE: return "ERROR_CATALOGUE";
    case ArtifactKind::TRACE_REPORT: return "TRACE_REPORT";
  }
  return "?";
}

std::string element_path(const Store& s, ElementId id) {
  std::vector<std::string> parts;
  for (const Element* e = s.find(id); e; e = s.find(e->header.owner)) parts.push_back(e->header.name);
  if (parts.empty()) return "?" + to_string(id);
  std::string out;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) out += "/" + *it;
  return out;
}

// ---------------------------------------------------------------------------
// Documentation
// ---------------------------------------------------------------------------

Artifact gen_docs(const Store& s, ElementId root) {
  namespace_root(s, root);
  const Metamodel& mm = s.metamodel();
  std::ostringstream os;
  header(os, ArtifactKind::DOCS, &s);
  os << "root: " << root.value << " " << element_path(s, root) << "\n";
  for (ElementId ns : namespaces(s, root)) {
    if (s.children(ns).empty()) continue;
    os << "\nnamespace " << ns.value << " " << element_path(s, ns) << "\n";
    for (ElementId cid : members(s, ns, K::Class)) {
      const MetaClass& c = mm.classes.at(cid);
      os << "  class " << cid.value << " " << c.header.name << "\n";
      os << "    abstract: " << (c.abstract ? "true" : "false") << "\n";
      os << "    type: " << (c.type_value ? quote(*c.type_value) + " (fixed at M2)" : "set per instance") << "\n";
      for (const auto& [lid, l] : mm.linkages) {
        if (l.variant == LinkageVariant::INHERITANCE && l.end_a == cid)
          os << "    inherits: " << l.end_b.value << " " << name_of(s, l.end_b) << "\n";
      }
      for (const AttributeDef* a : effective_attributes(cid, mm)) {
        os << "    attribute " << a->header.id.value << " " << a->header.name << ": " << base_of(mm, a->data_type) << " ["
           << symbol_of(mm, a->unit) << "] " << to_string(a->bounds) << " potency " << a->potency;
        if (a->header.owner != cid) os << " inherited from " << name_of(s, a->header.owner);
        if (a->fixed_values) os << " fixed " << format_values(*a->fixed_values);
        os << "\n";
      }
    }
    for (ElementId id : members(s, ns, K::DataType)) {
      os << "  datatype " << id.value << " " << name_of(s, id) << ": " << base_of(mm, id) << "\n";
    }
    for (ElementId id : members(s, ns, K::Unit)) {
      const Unit& u = mm.units.at(id);
      os << "  unit " << id.value << " " << u.header.name << ": " << u.symbol << " (" << dims_text(u.dims) << ")\n";
    }
    for (K k : {K::Association, K::Composition}) {
      for (ElementId id : members(s, ns, k)) {
        const LinkageDef& l = mm.linkages.at(id);
        os << "  " << (k == K::Association ? "association " : "composition ") << id.value << " " << l.header.name
           << ": A " << l.end_a.value << " " << name_of(s, l.end_a) << " " << to_string(l.mult_a) << " -- B "
           << l.end_b.value << " " << name_of(s, l.end_b) << " " << to_string(l.mult_b) << "\n";
      }
    }
    for (ElementId id : members(s, ns, K::Inheritance)) {
      const LinkageDef& l = mm.linkages.at(id);
      os << "  inheritance " << id.value << " " << l.header.name << ": " << name_of(s, l.end_a) << " -> "
         << name_of(s, l.end_b) << "\n";
    }
    for (ElementId id : members(s, ns, K::Constraint)) {
      const Element& c = s.get(id);
      os << "  constraint " << id.value << " " << c.header.name << ": " << c.text(col::kConstraintKind).value_or("?");
      const ElementId target = c.ref(col::kTarget);
      os << " target " << (target.is_null() ? std::string("namespace") : name_of(s, target));
      if (auto attr = c.text(col::kAttribute)) os << " attribute " << *attr;
      if (c.text(col::kConstraintKind) == "ATTR_RANGE") os << " range " << range_text(c);
      os << "\n";
    }
  }
  return finish(ArtifactKind::DOCS, os.str());
}

// ---------------------------------------------------------------------------
// Requirements
// ---------------------------------------------------------------------------

Artifact gen_requirements(const Store& s, ElementId root) {
  namespace_root(s, root);
  const Metamodel& mm = s.metamodel();
  std::ostringstream os;
  header(os, ArtifactKind::REQUIREMENTS, &s);
  os << "root: " << root.value << " " << element_path(s, root) << "\n";
  auto req = [&](ElementId id, std::string_view tag, const std::string& text) {
    os << "REQ-" << id.value << "-" << tag << ": " << text << "\n";
  };

  std::set<ElementId> attrs_seen;
  std::map<ElementId, K> order;
  for (K k : {K::Class, K::Association, K::Composition, K::Inheritance, K::Constraint}) {
    for (ElementId id : covered(s, root, k)) order.emplace(id, k);
  }
  for (const auto& [id, kind] : order) {
    if (kind == K::Class) {
      const MetaClass& c = mm.classes.at(id);
      const std::string& n = c.header.name;
      if (c.abstract) req(id, "ABS", "The model shall not contain direct instances of abstract class " + n + ".");
      else req(id, "CLS", "The model shall admit instances of class " + n + ".");
      if (c.type_value)
        req(id, "TYPE", "Every instance of " + n + " shall carry the type value " + quote(*c.type_value) + " fixed at M2.");
      else
        req(id, "TYPE", "Every instance of " + n + " shall set its own type value.");
      const auto effective = effective_attributes(id, mm);
      std::string names;
      for (const AttributeDef* a : effective) names += (names.empty() ? "" : ", ") + a->header.name;
      req(id, "ATTRS", "Every instance of " + n + " shall hold the attributes {" + names + "}.");
      for (const AttributeDef* a : effective) {
        if (!attrs_seen.insert(a->header.id).second) continue;
        const ElementId aid = a->header.id;
        const std::string an = a->header.name;
        const std::string owner = name_of(s, a->header.owner);
        req(aid, "LB", "The model shall contain at least " + std::to_string(a->bounds.lower) + " value(s) of " + an +
                           " in every instance of " + owner + ".");
        if (a->bounds.upper != kUnbounded)
          req(aid, "UB", "The model shall contain at most " + std::to_string(a->bounds.upper) + " value(s) of " + an +
                             " in every instance of " + owner + ".");
        req(aid, "DT", "Every value of " + an + " shall be of type " + base_of(mm, a->data_type) + ".");
        req(aid, "UNIT", "Every value of " + an + " shall be expressed in unit " + symbol_of(mm, a->unit) + ".");
        if (a->fixed_values)
          req(aid, "FIX", "The values of " + an + " shall equal " + format_values(*a->fixed_values, ", ") +
                              " and shall not be changed at M1.");
      }
    } else if (kind == K::Association || kind == K::Composition) {
      const LinkageDef& l = mm.linkages.at(id);
      const std::string a = name_of(s, l.end_a);
      const std::string b = name_of(s, l.end_b);
      const std::string what = kind == K::Association ? "association " : "composition ";
      req(id, "ENDS", "Every link of " + what + l.header.name + " shall connect an instance of " + a +
                          " (end A) with an instance of " + b + " (end B).");
      auto bounds = [&](const Multiplicity& m, const std::string& side, const std::string& peer, const std::string& self) {
        req(id, side + "-LB", "Every instance of " + peer + " shall have at least " + std::to_string(m.lower) + " " + self +
                                  " peer(s) through " + l.header.name + ".");
        if (m.upper != kUnbounded)
          req(id, side + "-UB", "Every instance of " + peer + " shall have at most " + std::to_string(m.upper) + " " +
                                    self + " peer(s) through " + l.header.name + ".");
      };
      bounds(l.mult_a, "A", b, a);
      bounds(l.mult_b, "B", a, b);
    } else if (kind == K::Inheritance) {
      const LinkageDef& l = mm.linkages.at(id);
      req(id, "INH", "Every instance of " + name_of(s, l.end_a) + " shall also conform to " + name_of(s, l.end_b) + ".");
    } else {
      const Element& c = s.get(id);
      if (c.text(col::kConstraintKind) != "ATTR_RANGE") continue;
      const ElementId target = c.ref(col::kTarget);
      req(id, "RANGE", "Every value of " + c.text(col::kAttribute).value_or("?") + " in " +
                           (target.is_null() ? "the namespace " + name_of(s, c.header.owner)
                                             : "instances of " + name_of(s, target)) +
                           " shall lie within " + range_text(c) + ".");
    }
  }
  return finish(ArtifactKind::REQUIREMENTS, os.str());
}

// ---------------------------------------------------------------------------
// Test scripts
// ---------------------------------------------------------------------------

namespace {

constexpr std::int64_t kMaxOverflowValues = 16;

class ScriptWriter {
 public:
  ScriptWriter(const Store& s) : s_(s), next_(s.next_id()) {}

  void comment(const std::string& text) { os_ << "# " << text << "\n"; }
  void blank() { os_ << "\n"; }

  // Emits a command with an exact expectation on its response.
  void expect(const std::string& command, const std::string& response) {
    os_ << command << "\n#> " << response << "\n";
  }
  void ok(const std::string& command) { expect(command, "OK"); }
  void err(const std::string& command, Code code, std::initializer_list<std::string> args) {
    expect(command, "ERR " + std::string(to_string(code)) + " " + quote(format_message(code, args)));
  }

  std::uint64_t allocate() { return next_++; }
  std::uint64_t next() const { return next_; }
  void restore(std::uint64_t next) { next_ = next; }

  std::string fresh_name(const std::string& stem) {
    std::string name = stem;
    for (int n = 2; taken(name); ++n) name = stem + "_" + std::to_string(n);
    used_.insert(name);
    return name;
  }

  std::string text() const { return os_.str(); }

 private:
  bool taken(const std::string& name) const {
    if (used_.contains(name)) return true;
    for (ElementId c : s_.children(reserved::kM1Region)) {
      if (s_.get(c).header.name == name) return true;
    }
    return false;
  }

  const Store& s_;
  std::uint64_t next_;
  std::set<std::string> used_;
  std::ostringstream os_;
};

// A value of `base` inside every applicable range, if one exists.
std::optional<Value> minimal_value(BaseType base, std::optional<double> lo, std::optional<double> hi) {
  switch (base) {
    case BaseType::BOOL: return Value{false};
    case BaseType::STRING: return Value{std::string("x")};
    case BaseType::INT: {
      double pick = 0;
      if (lo && pick < *lo) pick = std::ceil(*lo);
      if (hi && pick > *hi) pick = std::floor(*hi);
      if ((lo && pick < *lo) || (hi && pick > *hi) || std::fabs(pick) > 9e15) return std::nullopt;
      return Value{static_cast<std::int64_t>(pick)};
    }
    case BaseType::REAL: {
      double pick = 0.0;
      if (lo && pick < *lo) pick = *lo;
      if (hi && pick > *hi) pick = *hi;
      if ((lo && pick < *lo) || (hi && pick > *hi)) return std::nullopt;
      return Value{pick};
    }
  }
  return std::nullopt;
}

// Why instances of `cls` cannot stand alone under the M1 root, or empty.
std::string needs_context(const Metamodel& mm, ElementId cls) {
  for (const auto& [lid, l] : mm.linkages) {
    if (l.variant == LinkageVariant::INHERITANCE) continue;
    const bool at_a = conforms(cls, l.end_a, mm);
    const bool at_b = conforms(cls, l.end_b, mm);
    if ((at_a && l.mult_b.lower > 0) || (at_b && l.mult_a.lower > 0))
      return "needs linked elements through " + to_string(lid);
  }
  return {};
}

}  // namespace

Artifact gen_tests(const Store& s, ElementId root) {
  namespace_root(s, root);
  const Metamodel& mm = s.metamodel();
  ScriptWriter w(s);
  const std::string folder = to_string(reserved::kM1Region);

  std::ostringstream head;
  header(head, ArtifactKind::TESTS, &s);
  std::string preamble;
  {
    std::istringstream lines(head.str());
    std::string l;
    while (std::getline(lines, l)) preamble += "# " + l + "\n";
  }
  preamble += "# root: " + to_string(root) + " " + element_path(s, root) + "\n";
  preamble += "# run with: qmod run <this file> --expect --store <model file with the digest above>\n";

  // Ranges that constrain a class's attributes, by attribute name.
  auto ranges_for = [&](ElementId cls, const std::string& attr) {
    std::pair<std::optional<double>, std::optional<double>> r;
    for (const auto& [cid, c] : s.table(K::Constraint)) {
      if (c.text(col::kConstraintKind) != "ATTR_RANGE" || c.text(col::kAttribute) != attr) continue;
      const ElementId target = c.ref(col::kTarget);
      bool applies = false;
      if (target.is_null()) {
        for (ElementId d : s.descendants(c.header.owner)) applies = applies || d == cls;
      } else {
        applies = mm.classes.contains(target) && conforms(cls, target, mm);
      }
      if (!applies) continue;
      if (auto lo = c.real(col::kMin)) r.first = r.first ? std::max(*r.first, *lo) : *lo;
      if (auto hi = c.real(col::kMax)) r.second = r.second ? std::min(*r.second, *hi) : *hi;
    }
    return r;
  };

  for (ElementId cid : covered(s, root, K::Class)) {
    const MetaClass& c = mm.classes.at(cid);
    const std::string cls = to_string(cid);
    w.blank();
    w.comment("class " + cls + " " + c.header.name);
    if (c.abstract) {
      w.err("INSTANTIATE " + cls + " " + folder + " " + quote(w.fresh_name("abstract_" + cls)), Code::ABSTRACT_CLASS,
            {cls});
      continue;
    }
    if (auto why = needs_context(mm, cid); !why.empty()) {
      w.comment("skipped: instances " + why);
      continue;
    }

    struct Fill {
      const AttributeDef* attr;
      Value value;
    };
    std::vector<Fill> fills;
    bool satisfiable = true;
    for (const AttributeDef* a : effective_attributes(cid, mm)) {
      if (a->potency == 0) continue;
      auto dt = mm.datatypes.find(a->data_type);
      if (dt == mm.datatypes.end() || !dt->second.base) {
        satisfiable = false;
        break;
      }
      auto [lo, hi] = ranges_for(cid, a->header.name);
      auto v = minimal_value(*dt->second.base, lo, hi);
      if (!v) {
        satisfiable = false;
        break;
      }
      fills.push_back({a, *v});
    }
    if (!satisfiable) {
      w.comment("skipped: no value satisfies the declared ranges");
      continue;
    }

    auto fill_values = [&](const std::string& id) {
      for (const Fill& f : fills) {
        for (std::int64_t i = 0; i < f.attr->bounds.lower; ++i)
          w.ok("UPDATE " + id + " " + encode_token(f.attr->header.name) + " " + std::to_string(i) + " " +
               format_value(f.value));
      }
    };
    auto set_type = [&](const std::string& id) {
      if (!c.type_value) w.ok("UPDATE " + id + " type 0 " + quote("t" + cls));
    };
    auto instantiate = [&](const std::string& stem) {
      const std::string id = std::to_string(w.allocate());
      w.expect("INSTANTIATE " + cls + " " + folder + " " + quote(w.fresh_name(stem)), "OK " + id);
      return id;
    };

    // Minimal complete instance.
    {
      w.comment("minimal instance is accepted");
      w.ok("BEGIN");
      const std::string id = instantiate("ok_" + cls);
      fill_values(id);
      set_type(id);
      w.ok("COMMIT");
      w.comment("an instance has potency 0 and cannot be instantiated");
      w.err("INSTANTIATE " + id + " " + folder + " " + quote(w.fresh_name("meta_" + cls)), Code::POTENCY_EXHAUSTED, {id});
      w.ok("DELETE " + id);
    }

    // Missing values violate the lower bounds.
    if (!fills.empty()) {
      w.comment("missing values violate the lower bounds");
      const std::uint64_t mark = w.next();
      w.ok("BEGIN");
      const std::string id = instantiate("lb_" + cls);
      set_type(id);
      w.expect("COMMIT", "ERR VALIDATION_FAILED " + quote("LOWER_BOUND(" + id + ")"));
      w.restore(mark);
    }

    // One value too many.
    for (const Fill& f : fills) {
      const auto upper = f.attr->bounds.upper;
      if (upper == kUnbounded) continue;
      if (upper > kMaxOverflowValues) {
        w.comment("overflow of " + f.attr->header.name + " not generated: upper bound " + std::to_string(upper));
        continue;
      }
      w.comment("attribute " + f.attr->header.name + " holds at most " + std::to_string(upper) + " value(s)");
      const std::uint64_t mark = w.next();
      w.ok("BEGIN");
      const std::string id = instantiate("ub_" + cls);
      const std::string field = encode_token(f.attr->header.name);
      for (std::int64_t i = 0; i < upper; ++i)
        w.ok("UPDATE " + id + " " + field + " " + std::to_string(i) + " " + format_value(f.value));
      w.err("UPDATE " + id + " " + field + " " + std::to_string(upper) + " " + format_value(f.value),
            Code::UPPER_BOUND_EXCEEDED, {id, f.attr->header.name, std::to_string(upper)});
      w.ok("ROLLBACK");
      w.restore(mark);
    }

    // The type value.
    {
      const std::uint64_t mark = w.next();
      w.ok("BEGIN");
      if (c.type_value) {
        w.comment("the type value is fixed at M2");
        const std::string id = instantiate("ty_" + cls);
        w.err("UPDATE " + id + " type 0 " + quote("other"), Code::POTENCY_FROZEN, {id, "type"});
        w.ok("ROLLBACK");
      } else {
        w.comment("the type value must be set at M1");
        const std::string id = instantiate("ty_" + cls);
        fill_values(id);
        w.expect("COMMIT", "ERR VALIDATION_FAILED " + quote("POTENCY_REQUIRED(" + id + ")"));
      }
      w.restore(mark);
    }
  }
  return finish(ArtifactKind::TESTS, preamble + w.text());
}

// ---------------------------------------------------------------------------
// Error catalogue and trace report
// ---------------------------------------------------------------------------

Artifact gen_error_catalogue() {
  std::ostringstream os;
  header(os, ArtifactKind::ERROR_CATALOGUE, nullptr);
  for (const CatalogueEntry& e : catalogue()) {
    const char* category = e.category == CodeCategory::Error       ? "error"
                           : e.category == CodeCategory::Violation ? "violation"
                                                                   : "error, violation";
    os << "\n" << e.name << "\n";
    os << "  category: " << category << "\n";
    os << "  message: " << e.message_template << "\n";
    os << "  emitted by: " << e.emitted_by << "\n";
  }
  return finish(ArtifactKind::ERROR_CATALOGUE, os.str());
}

Artifact gen_trace_report(const Store& s, ElementId trace_id) {
  const Trace* t = s.find_trace(trace_id);
  if (!t) throw Error(Code::UNKNOWN_ID, {to_string(trace_id)});
  std::ostringstream os;
  header(os, ArtifactKind::TRACE_REPORT, &s);
  os << "trace: " << t->id.value << "\n";
  os << "transformation: " << element_path(s, t->transformation) << "\n";
  os << "source: " << element_path(s, t->source_root) << "\n";
  os << "target: " << element_path(s, t->target_root) << "\n";
  os << "seq | rule | sources | targets | note\n";
  auto paths = [&](const std::vector<ElementId>& ids) {
    std::string out;
    for (ElementId id : ids) out += (out.empty() ? "" : ", ") + element_path(s, id);
    return out;
  };
  for (const TraceRecord& r : t->records) {
    os << r.seq << " | " << element_path(s, r.rule) << " | " << paths(r.sources) << " | " << paths(r.targets) << " | "
       << r.note << "\n";
  }
  return finish(ArtifactKind::TRACE_REPORT, os.str());
}

}  // namespace qmod
