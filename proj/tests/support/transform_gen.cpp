#include "transform_gen.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

namespace qmod::testing {
namespace {

using K = ElementKind;

constexpr std::array<double, 5> kReals = {0.0, 0.5, 1.5, -2.0, 12.0};
constexpr std::array<std::string_view, 3> kStrings = {"x", "y", "z"};
constexpr std::array<std::string_view, 6> kOps = {"=", "!=", "<", "<=", ">", ">="};

class Builder {
 public:
  Builder(std::uint64_t seed, const TransformCaseOptions& o) : rng_(seed), options_(o) {}

  TransformCase run() {
    meta_models();
    source_model();
    transformation();
    return std::move(c_);
  }

 private:
  bool chance(double p) { return std::uniform_real_distribution<double>(0, 1)(rng_) < p; }
  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  std::size_t between(std::size_t lo, std::size_t hi) { return lo + pick(hi - lo + 1); }

  Value random_value(BaseType t) {
    switch (t) {
      case BaseType::BOOL: return Value{chance(0.5)};
      case BaseType::INT: return Value{static_cast<std::int64_t>(pick(12)) - 3};
      case BaseType::REAL: return Value{kReals[pick(kReals.size())]};
      case BaseType::STRING: return Value{std::string(kStrings[pick(kStrings.size())])};
    }
    return Value{false};
  }

  void set(ElementId id, std::string_view field, Value v, std::size_t index = 0) {
    c_.store.update(id, field, index, v);
  }
  static Value ref(ElementId id) { return Value{static_cast<std::int64_t>(id.value)}; }

  // DataTypes for each base plus a voltage unit inside `ns`.
  void vocabulary(ElementId ns, std::map<BaseType, ElementId>& types, ElementId& volt) {
    for (BaseType b : {BaseType::BOOL, BaseType::INT, BaseType::REAL, BaseType::STRING}) {
      const ElementId dt = c_.store.create(K::DataType, ns, "dt_" + std::string(to_string(b)));
      set(dt, "base", Value{std::string(to_string(b))});
      types[b] = dt;
    }
    volt = c_.store.create(K::Unit, ns, "volt");
    set(volt, "symbol", Value{std::string("V")});
    const std::array<std::int64_t, 4> dims = {1, 2, -3, -1};
    for (std::size_t i = 0; i < dims.size(); ++i) set(volt, "dims", Value{dims[i]}, i);
  }

  AttrDesc attribute(ElementId cls, const std::string& name, const std::map<BaseType, ElementId>& types, ElementId volt,
                     std::int64_t lower, std::int64_t upper) {
    AttrDesc a;
    a.name = name;
    a.base = static_cast<BaseType>(pick(4));
    a.volt = a.base == BaseType::REAL && chance(0.5);
    a.id = c_.store.create(K::Attribute, cls, name);
    set(a.id, "dataType", ref(types.at(a.base)));
    if (a.volt) set(a.id, "unit", ref(volt));
    set(a.id, "upper", Value{upper});
    set(a.id, "lower", Value{lower});
    return a;
  }

  void meta_models() {
    const ElementId src_ns = c_.store.create(K::Namespace, reserved::kM2Region, "src_mm");
    const ElementId tgt_ns = c_.store.create(K::Namespace, reserved::kM2Region, "tgt_mm");
    vocabulary(src_ns, src_types_, src_volt_);
    vocabulary(tgt_ns, tgt_types_, tgt_volt_);
    src_ns_ = src_ns;
    tgt_ns_ = tgt_ns;

    std::size_t attr_no = 0;
    const std::size_t n = between(2, 4);
    for (std::size_t i = 0; i < n; ++i) {
      SourceClass sc;
      sc.id = c_.store.create(K::Class, src_ns, "S" + std::to_string(i));
      if (chance(0.25)) {
        sc.fixed_type = "fixed" + std::to_string(i);
        set(sc.id, "type", Value{*sc.fixed_type});
      }
      for (std::size_t k = between(0, 2); k > 0; --k) {
        const std::int64_t upper = static_cast<std::int64_t>(between(1, 3));
        const std::int64_t lower = upper > 1 && chance(0.3) ? 2 : 1;
        sc.own.push_back(attribute(sc.id, "a" + std::to_string(attr_no++), src_types_, src_volt_, lower, upper));
      }
      c_.source_classes.push_back(sc);
    }
    for (std::size_t i = 1; i < n; ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (!chance(0.3)) continue;
        const ElementId inh = c_.store.create(K::Inheritance, src_ns, "inh" + std::to_string(i) + "_" + std::to_string(j));
        set(inh, "endA", ref(c_.source_classes[i].id));
        set(inh, "endB", ref(c_.source_classes[j].id));
        c_.source_classes[i].supers.push_back(c_.source_classes[j].id);
      }
    }
    for (std::size_t k = between(0, 2); k > 0; --k) {
      SourceComposition sc;
      sc.parent = c_.source_classes[pick(n)].id;
      sc.child = c_.source_classes[pick(n)].id;
      sc.id = c_.store.create(K::Composition, src_ns, "comp" + std::to_string(k));
      set(sc.id, "endA", ref(sc.parent));
      set(sc.id, "endB", ref(sc.child));
      c_.source_compositions.push_back(sc);
    }

    const std::size_t m = between(1, 3);
    for (std::size_t i = 0; i < m; ++i) {
      TargetClass tc;
      tc.id = c_.store.create(K::Class, tgt_ns, "T" + std::to_string(i));
      if (chance(0.3)) {
        tc.fixed_type = "tfixed" + std::to_string(i);
        set(tc.id, "type", Value{*tc.fixed_type});
      }
      for (std::size_t k = between(1, 3); k > 0; --k)
        tc.attrs.push_back(attribute(tc.id, "t" + std::to_string(attr_no++), tgt_types_, tgt_volt_, 1, kUnbounded));
      c_.target_classes.push_back(tc);
    }
    for (const TargetClass& p : c_.target_classes) {
      for (const TargetClass& ch : c_.target_classes) {
        if (!chance(0.4)) continue;
        const ElementId comp = c_.store.create(K::Composition, tgt_ns, "tc" + std::to_string(p.id.value) + "_" +
                                                                         std::to_string(ch.id.value));
        set(comp, "endA", ref(p.id));
        set(comp, "endB", ref(ch.id));
        c_.target_compositions.emplace_back(p.id, ch.id);
      }
    }
  }

  const SourceClass& source_class(ElementId id) const {
    for (const SourceClass& s : c_.source_classes) {
      if (s.id == id) return s;
    }
    throw std::logic_error("unknown source class");
  }

  bool conforms_desc(ElementId sub, ElementId super) const {
    if (sub == super) return true;
    for (ElementId s : source_class(sub).supers) {
      if (conforms_desc(s, super)) return true;
    }
    return false;
  }

  std::vector<AttrDesc> effective(ElementId cls) const {
    std::map<ElementId, AttrDesc> all;
    std::function<void(ElementId)> walk = [&](ElementId c) {
      for (const AttrDesc& a : source_class(c).own) all.emplace(a.id, a);
      for (ElementId s : source_class(c).supers) walk(s);
    };
    walk(cls);
    std::vector<AttrDesc> out;
    for (auto& [id, a] : all) out.push_back(a);
    return out;
  }

  void source_model() {
    c_.source_root = c_.store.create(K::RootFolder, reserved::kM1Region, "src");
    const std::size_t count = between(1, options_.max_instances);
    for (std::size_t k = 0; k < count; ++k) {
      SourceInstance inst;
      inst.cls = c_.source_classes[pick(c_.source_classes.size())].id;
      inst.name = "i" + std::to_string(k);
      if (chance(0.5) && !c_.instances.empty()) {
        const SourceInstance& p = c_.instances[pick(c_.instances.size())];
        for (const SourceComposition& comp : c_.source_compositions) {
          if (conforms_desc(p.cls, comp.parent) && conforms_desc(inst.cls, comp.child) &&
              (inst.composition.is_null() || comp.id < inst.composition)) {
            inst.parent = p.id;
            inst.composition = comp.id;
          }
        }
      }
      inst.id = c_.store.instantiate(inst.cls, inst.parent.is_null() ? c_.source_root : inst.parent, inst.name);
      if (c_.store.get(inst.id).ref(col::kComposition) != inst.composition)
        throw std::logic_error("instance placed under an unexpected composition");
      for (const AttrDesc& a : effective(inst.cls)) {
        const Element& def = c_.store.get(a.id);
        const std::int64_t lower = *def.integer(col::kLower);
        const std::int64_t upper = *def.integer(col::kUpper);
        const std::size_t n = between(static_cast<std::size_t>(lower), static_cast<std::size_t>(std::min<std::int64_t>(upper, 3)));
        ValueList values;
        for (std::size_t i = 0; i < n; ++i) {
          values.push_back(random_value(a.base));
          set(inst.id, a.name, values.back(), i);
        }
        inst.values[a.name] = values;
      }
      const auto& fixed = source_class(inst.cls).fixed_type;
      if (fixed) {
        inst.type = *fixed;
      } else {
        inst.type = std::string(kStrings[pick(kStrings.size())]);
        set(inst.id, "type", Value{inst.type});
      }
      c_.instances.push_back(inst);
    }
  }

  void transformation() {
    Store& s = c_.store;
    c_.tm = s.create(K::TransformationModel, reserved::kM1Region, "tm");
    set(c_.tm, "source", ref(src_ns_));
    set(c_.tm, "target", ref(tgt_ns_));

    std::vector<std::int64_t> orders(10);
    std::iota(orders.begin(), orders.end(), 1);
    std::shuffle(orders.begin(), orders.end(), rng_);
    const std::size_t rules = between(1, options_.max_rules);
    for (std::size_t k = 0; k < rules; ++k) {
      RuleDesc r;
      r.order = orders[k];
      r.id = s.create(K::Rule, c_.tm, "r" + std::to_string(k));
      set(r.id, "order", Value{r.order});

      r.pattern = c_.source_classes[pick(c_.source_classes.size())].id;
      const ElementId pat = s.create(K::Pattern, r.id, "p");
      set(pat, "class", ref(r.pattern));
      const auto attrs = effective(r.pattern);
      for (std::size_t g = between(0, 2); g > 0; --g) {
        GuardDesc gd;
        BaseType base = BaseType::STRING;
        if (attrs.empty() || chance(0.15)) {
          gd.attribute = "type";
        } else {
          const AttrDesc& a = attrs[pick(attrs.size())];
          gd.attribute = a.name;
          base = a.base;
        }
        const bool numeric = base == BaseType::INT || base == BaseType::REAL;
        gd.op = std::string(kOps[pick(numeric ? kOps.size() : 2)]);
        gd.literal = random_value(base);
        if (gd.attribute == "type" && chance(0.5)) {
          const SourceInstance& some = c_.instances[pick(c_.instances.size())];
          gd.literal = Value{some.type};
        }
        set(pat, "guards", Value{gd.text()}, r.guards.size());
        r.guards.push_back(gd);
      }
      if (!c_.source_compositions.empty() && chance(0.3)) {
        const SourceComposition& comp = c_.source_compositions[pick(c_.source_compositions.size())];
        const char end = chance(0.5) ? 'A' : 'B';
        const ElementId own = end == 'A' ? comp.parent : comp.child;
        if (conforms_desc(r.pattern, own) || conforms_desc(own, r.pattern)) {
          r.link = LinkGuardDesc{comp.id, end, end == 'A' ? comp.child : comp.parent};
          set(pat, "linkage", ref(comp.id));
          set(pat, "end", Value{std::string(1, end)});
          set(pat, "peer", ref(r.link->peer));
        }
      }

      const TargetClass& tc = c_.target_classes[pick(c_.target_classes.size())];
      r.tmpl = tc.id;
      const ElementId tpl = s.create(K::Template, r.id, "t");
      set(tpl, "class", ref(tc.id));
      r.parent_image = chance(0.5);
      if (r.parent_image) set(tpl, "containment", Value{std::string("PARENT_IMAGE")});

      for (const AttrDesc& ta : tc.attrs) {
        AssignDesc a;
        a.target = ta.name;
        std::vector<const AttrDesc*> sources;
        for (const AttrDesc& sa : attrs) {
          if (sa.base == ta.base && sa.volt == ta.volt) sources.push_back(&sa);
        }
        if (!sources.empty() && chance(0.7)) {
          a.source = sources[pick(sources.size())]->name;
          a.op = ta.base == BaseType::REAL && chance(0.5) ? "SCALE" : "COPY";
          if (a.op == "SCALE") a.factor = std::array{2.0, 0.5, -1.0}[pick(3)];
        } else {
          a.op = "CONST";
          a.value = random_value(ta.base);
        }
        r.assigns.push_back(a);
      }
      if (!tc.fixed_type) {
        AssignDesc a;
        a.target = "type";
        if (chance(0.5)) {
          a.op = "COPY";
          a.source = "type";
        } else {
          a.op = "CONST";
          a.value = Value{std::string("k") + std::to_string(k)};
        }
        r.assigns.push_back(a);
      }
      std::size_t n = 0;
      for (const AssignDesc& a : r.assigns) {
        const ElementId id = s.create(K::Assignment, tpl, "as" + std::to_string(n++));
        set(id, "op", Value{a.op});
        set(id, "target", Value{a.target});
        if (a.op == "CONST") {
          set(id, "value", a.value);
        } else {
          set(id, "source", Value{a.source});
        }
        if (a.op == "SCALE") set(id, "factor", Value{a.factor});
      }
      c_.rules.push_back(r);
    }
  }

  std::mt19937_64 rng_;
  TransformCaseOptions options_;
  TransformCase c_;
  ElementId src_ns_, tgt_ns_, src_volt_, tgt_volt_;
  std::map<BaseType, ElementId> src_types_, tgt_types_;
};

// Three-way comparison of two values of the same base type.
int compare_same(const Value& a, const Value& b) {
  switch (type_of(a)) {
    case BaseType::BOOL: return static_cast<int>(std::get<bool>(a)) - static_cast<int>(std::get<bool>(b));
    case BaseType::INT: {
      const auto x = std::get<std::int64_t>(a), y = std::get<std::int64_t>(b);
      return x < y ? -1 : x > y ? 1 : 0;
    }
    case BaseType::REAL: {
      const double x = std::get<double>(a), y = std::get<double>(b);
      return x < y ? -1 : x > y ? 1 : 0;
    }
    case BaseType::STRING: {
      const int c = std::get<std::string>(a).compare(std::get<std::string>(b));
      return c < 0 ? -1 : c > 0 ? 1 : 0;
    }
  }
  return 0;
}

bool guard_ok(const GuardDesc& g, const ValueList& values) {
  if (values.empty()) return false;
  return std::all_of(values.begin(), values.end(), [&](const Value& v) {
    if (v.index() != g.literal.index()) return false;
    const int c = compare_same(v, g.literal);
    if (g.op == "=") return c == 0;
    if (g.op == "!=") return c != 0;
    if (g.op == "<") return c < 0;
    if (g.op == "<=") return c <= 0;
    if (g.op == ">") return c > 0;
    return c >= 0;
  });
}

std::string show(const ValueList& values) { return "[" + format_values(values, ", ") + "]"; }

}  // namespace

std::string GuardDesc::text() const { return attribute + " " + op + " " + format_value(literal); }

TransformCase generate_transform_case(std::uint64_t seed, const TransformCaseOptions& options) {
  return Builder(seed, options).run();
}

ExpectedOutcome transform_oracle(const TransformCase& c) {
  std::map<ElementId, const SourceClass*> classes;
  for (const SourceClass& sc : c.source_classes) classes[sc.id] = &sc;
  std::function<bool(ElementId, ElementId)> conforms_to = [&](ElementId sub, ElementId super) {
    if (sub == super) return true;
    return std::any_of(classes.at(sub)->supers.begin(), classes.at(sub)->supers.end(),
                       [&](ElementId s) { return conforms_to(s, super); });
  };
  std::map<ElementId, const SourceInstance*> by_id;
  for (const SourceInstance& i : c.instances) by_id[i.id] = &i;
  auto values = [](const SourceInstance& inst, const std::string& attr) -> ValueList {
    if (attr == "type") return {Value{inst.type}};
    auto it = inst.values.find(attr);
    return it == inst.values.end() ? ValueList{} : it->second;
  };
  auto link_ok = [&](const LinkGuardDesc& l, const SourceInstance& inst) {
    if (l.end == 'B')
      return inst.composition == l.composition && conforms_to(by_id.at(inst.parent)->cls, l.peer);
    return std::any_of(c.instances.begin(), c.instances.end(), [&](const SourceInstance& child) {
      return child.parent == inst.id && child.composition == l.composition && conforms_to(child.cls, l.peer);
    });
  };

  std::vector<const RuleDesc*> rules;
  for (const RuleDesc& r : c.rules) rules.push_back(&r);
  std::sort(rules.begin(), rules.end(), [](const RuleDesc* a, const RuleDesc* b) { return a->order < b->order; });
  std::vector<const SourceInstance*> sources;
  for (const auto& [id, inst] : by_id) sources.push_back(inst);

  ExpectedOutcome out;
  std::vector<const RuleDesc*> record_rule;
  for (const RuleDesc* r : rules) {
    for (const SourceInstance* inst : sources) {
      if (!conforms_to(inst->cls, r->pattern)) continue;
      if (!std::all_of(r->guards.begin(), r->guards.end(),
                       [&](const GuardDesc& g) { return guard_ok(g, values(*inst, g.attribute)); }))
        continue;
      if (r->link && !link_ok(*r->link, *inst)) continue;
      ExpectedRecord e;
      e.rule = r->id;
      e.source = inst->id;
      e.target_class = r->tmpl;
      e.name = inst->name + "#" + std::to_string(out.records.size() + 1);
      for (const TargetClass& tc : c.target_classes) {
        if (tc.id == r->tmpl && tc.fixed_type) e.type = *tc.fixed_type;
      }
      for (const AssignDesc& a : r->assigns) {
        ValueList v;
        if (a.op == "CONST") {
          v = {a.value};
        } else {
          v = values(*inst, a.source);
          if (a.op == "SCALE") {
            for (Value& x : v) x = std::get<double>(x) * a.factor;
          }
        }
        if (a.target == "type") e.type = std::get<std::string>(v.front());
        else e.slots[a.target] = v;
      }
      out.records.push_back(std::move(e));
      record_rule.push_back(r);
    }
  }

  for (std::size_t k = 0; k < out.records.size(); ++k) {
    if (!record_rule[k]->parent_image) continue;
    ExpectedRecord& e = out.records[k];
    const SourceInstance& inst = *by_id.at(e.source);
    std::optional<std::size_t> image;
    for (std::size_t j = 0; j < out.records.size() && !inst.parent.is_null(); ++j) {
      if (out.records[j].source == inst.parent) {
        image = j;
        break;
      }
    }
    if (!image) {
      e.noted = true;
      continue;
    }
    e.parent_record = image;
    const ElementId pc = out.records[*image].target_class;
    const bool admitted = std::any_of(c.target_compositions.begin(), c.target_compositions.end(),
                                      [&](const auto& tc) { return tc.first == pc && tc.second == e.target_class; });
    if (!admitted) out.containment_failure = true;
  }
  return out;
}

std::string compare_with_oracle(const TransformCase& c, const ExpectedOutcome& expected, const Store& after,
                                const TransformResult& result) {
  const Trace* t = after.find_trace(result.trace);
  if (!t) return "trace missing";
  if (t->transformation != c.tm || t->source_root != c.source_root || t->target_root != result.target_root)
    return "trace header differs";
  if (t->records.size() != expected.records.size())
    return "record count " + std::to_string(t->records.size()) + " != " + std::to_string(expected.records.size());
  for (std::size_t k = 0; k < expected.records.size(); ++k) {
    const ExpectedRecord& e = expected.records[k];
    const TraceRecord& r = t->records[k];
    const std::string at = "record " + std::to_string(k + 1) + ": ";
    if (r.seq != k + 1) return at + "seq";
    if (r.rule != e.rule) return at + "rule";
    if (r.sources != std::vector<ElementId>{e.source}) return at + "sources";
    if (r.targets.size() != 1) return at + "targets";
    const Element* te = after.find(r.targets.front());
    if (!te || te->header.kind != K::Instance) return at + "target missing";
    if (te->ref(col::kInstanceClass) != e.target_class) return at + "target class";
    if (te->header.name != e.name) return at + "name " + te->header.name + " != " + e.name;
    for (const auto& [name, values] : e.slots) {
      const ValueList got = after.read(te->header.id, name);
      if (got != values) return at + name + " " + show(got) + " != " + show(values);
    }
    if (after.read(te->header.id, "type") != ValueList{Value{e.type}}) return at + "type";
    const ElementId want_parent =
        e.parent_record ? t->records[*e.parent_record].targets.front() : result.target_root;
    if (te->header.owner != want_parent) return at + "parent";
    if (r.note.empty() == e.noted) return at + "note";
  }
  std::size_t instances = 0;
  for (ElementId d : after.descendants(result.target_root)) {
    if (after.get(d).header.kind == K::Instance) ++instances;
  }
  if (instances != expected.records.size()) return "target holds unexpected instances";
  return {};
}

}  // namespace qmod::testing
