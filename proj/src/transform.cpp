#include "qmod/transform.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "qmod/constraints.hpp"

namespace qmod {
namespace {

using K = ElementKind;

struct AttrInfo {
  ElementId id;  // null for the type pseudo-attribute
  std::optional<BaseType> base;
  Dims dims{};
  std::string unit_symbol;
  int potency = 1;
};

bool inside(const Store& s, ElementId element, ElementId ns) {
  for (const Element* e = s.find(element); e; e = s.find(e->header.owner)) {
    if (e->header.owner == ns) return true;
  }
  return false;
}

std::optional<AttrInfo> attribute_info(const Metamodel& mm, ElementId cls, std::string_view name) {
  if (!mm.classes.contains(cls)) return std::nullopt;
  if (name == kTypePseudoAttribute) return AttrInfo{kNoElement, BaseType::STRING, Dims{}, "1", 1};
  for (const AttributeDef* a : effective_attributes(cls, mm)) {
    if (a->header.name != name) continue;
    AttrInfo info;
    info.id = a->header.id;
    if (auto dt = mm.datatypes.find(a->data_type); dt != mm.datatypes.end()) info.base = dt->second.base;
    if (auto u = mm.units.find(a->unit); u != mm.units.end()) {
      info.dims = u->second.dims;
      info.unit_symbol = u->second.symbol;
    }
    info.potency = a->potency;
    return info;
  }
  return std::nullopt;
}

std::optional<ElementId> only_child(const Store& s, ElementId owner, K kind) {
  for (ElementId c : s.children(owner)) {
    if (s.get(c).header.kind == kind) return c;
  }
  return std::nullopt;
}

std::vector<ElementId> children_of(const Store& s, ElementId owner, K kind) {
  std::vector<ElementId> out;
  for (ElementId c : s.children(owner)) {
    if (s.get(c).header.kind == kind) out.push_back(c);
  }
  return out;
}

int compare(const Value& a, const Value& b) {
  if (a < b) return -1;
  if (b < a) return 1;
  return 0;
}

bool ordering(GuardOp op) { return op != GuardOp::EQ && op != GuardOp::NE; }

// The rules of one transformation, resolved once.
struct RulePlan {
  ElementId rule;
  std::int64_t order = 0;
  ElementId pattern_class;
  std::vector<Guard> guards;
  ElementId link_linkage;
  char link_end = 0;
  ElementId link_peer;
  ElementId template_id;
  ElementId template_class;
  bool parent_image = false;
  std::vector<ElementId> assignments;
};

RulePlan plan_rule(const Store& s, ElementId rule) {
  RulePlan p;
  p.rule = rule;
  p.order = s.get(rule).integer(col::kOrder).value_or(0);
  const Element& pat = s.get(*only_child(s, rule, K::Pattern));
  p.pattern_class = pat.ref(col::kPatternClass);
  for (const Value& g : pat.column(col::kGuards)) p.guards.push_back(*parse_guard(std::get<std::string>(g)));
  p.link_linkage = pat.ref(col::kGuardLinkage);
  if (auto end = pat.text(col::kGuardEnd)) p.link_end = end->front();
  p.link_peer = pat.ref(col::kGuardPeer);
  const Element& tpl = s.get(*only_child(s, rule, K::Template));
  p.template_id = tpl.header.id;
  p.template_class = tpl.ref(col::kTemplateClass);
  p.parent_image = tpl.text(col::kContainment) == "PARENT_IMAGE";
  p.assignments = children_of(s, tpl.header.id, K::Assignment);
  return p;
}

ValueList values_of(const Store& s, const Element& inst, const AttrInfo& info) {
  if (info.id.is_null()) return s.read(inst.header.id, kTypePseudoAttribute);
  auto it = inst.slots.find(info.id);
  return it == inst.slots.end() ? ValueList{} : it->second;
}

}  // namespace

std::optional<Guard> parse_guard(std::string_view text) {
  std::vector<Token> toks;
  try {
    toks = tokenize(text);
  } catch (const TokenizeError&) {
    return std::nullopt;
  }
  if (toks.size() != 3 || toks[0].quoted || toks[1].quoted) return std::nullopt;
  static const std::map<std::string, GuardOp, std::less<>> ops = {
      {"=", GuardOp::EQ}, {"!=", GuardOp::NE}, {"<", GuardOp::LT},
      {"<=", GuardOp::LE}, {">", GuardOp::GT}, {">=", GuardOp::GE}};
  auto op = ops.find(toks[1].text);
  if (op == ops.end()) return std::nullopt;
  auto lit = parse_literal(toks[2]);
  if (!lit) return std::nullopt;
  return Guard{toks[0].text, op->second, *lit};
}

bool guard_holds(const Guard& g, const ValueList& values) {
  if (values.empty()) return false;
  for (const Value& v : values) {
    if (type_of(v) != type_of(g.literal)) return false;
    const int c = compare(v, g.literal);
    bool ok = false;
    switch (g.op) {
      case GuardOp::EQ: ok = c == 0; break;
      case GuardOp::NE: ok = c != 0; break;
      case GuardOp::LT: ok = c < 0; break;
      case GuardOp::LE: ok = c <= 0; break;
      case GuardOp::GT: ok = c > 0; break;
      case GuardOp::GE: ok = c >= 0; break;
    }
    if (!ok) return false;
  }
  return true;
}

std::vector<Violation> validate_transformation(const Store& s, ElementId tm_id) {
  const Element& tm = s.get(tm_id, K::TransformationModel);
  const Metamodel& mm = s.metamodel();
  std::vector<Violation> out;
  auto add = [&](Code c, ElementId id, std::initializer_list<std::string> args) {
    out.push_back(make_violation(c, id, args));
  };
  auto namespace_ref = [&](int column, const char* field) {
    ElementId ns = tm.ref(column);
    if (ns.is_null()) {
      add(Code::MISSING_FIELD, tm_id, {to_string(tm_id), field});
    } else if (const Element* e = s.find(ns); !e || e->header.kind != K::Namespace) {
      add(Code::UNRESOLVED_REF, tm_id, {to_string(tm_id), to_string(ns)});
      ns = kNoElement;
    }
    return ns;
  };
  const ElementId source_ns = namespace_ref(col::kSourceMeta, "source");
  const ElementId target_ns = namespace_ref(col::kTargetMeta, "target");

  // A class reference that must resolve and lie inside a given meta-model.
  auto class_ref = [&](const Element& holder, int column, ElementId ns) -> ElementId {
    const ElementId id = holder.header.id;
    const ElementId cls = holder.ref(column);
    if (cls.is_null()) {
      add(Code::MISSING_FIELD, id, {to_string(id), "class"});
      return kNoElement;
    }
    if (!mm.classes.contains(cls)) {
      add(Code::UNRESOLVED_REF, id, {to_string(id), to_string(cls)});
      return kNoElement;
    }
    if (!ns.is_null() && !inside(s, cls, ns)) add(Code::SCOPE_MISMATCH, id, {to_string(id), to_string(cls), to_string(ns)});
    return cls;
  };

  std::map<std::int64_t, std::vector<ElementId>> by_order;
  for (ElementId rule_id : children_of(s, tm_id, K::Rule)) {
    const Element& rule = s.get(rule_id);
    if (auto order = rule.integer(col::kOrder)) by_order[*order].push_back(rule_id);
    else add(Code::MISSING_FIELD, rule_id, {to_string(rule_id), "order"});

    auto pattern_id = only_child(s, rule_id, K::Pattern);
    auto template_id = only_child(s, rule_id, K::Template);
    if (!pattern_id) add(Code::MISSING_FIELD, rule_id, {to_string(rule_id), "pattern"});
    if (!template_id) add(Code::MISSING_FIELD, rule_id, {to_string(rule_id), "template"});

    ElementId source_cls;
    if (pattern_id) {
      const Element& pat = s.get(*pattern_id);
      source_cls = class_ref(pat, col::kPatternClass, source_ns);
      for (const Value& gv : pat.column(col::kGuards)) {
        const auto& text = std::get<std::string>(gv);
        auto g = parse_guard(text);
        if (!g) {
          add(Code::GUARD_INVALID, *pattern_id, {to_string(*pattern_id), "cannot parse " + quote(text)});
          continue;
        }
        if (source_cls.is_null()) continue;
        auto info = attribute_info(mm, source_cls, g->attribute);
        if (!info || !info->base) {
          add(Code::GUARD_INVALID, *pattern_id, {to_string(*pattern_id), "unknown attribute " + g->attribute});
        } else if (type_of(g->literal) != *info->base) {
          add(Code::GUARD_INVALID, *pattern_id,
              {to_string(*pattern_id), g->attribute + " is " + std::string(to_string(*info->base))});
        } else if (ordering(g->op) && *info->base != BaseType::INT && *info->base != BaseType::REAL) {
          add(Code::GUARD_INVALID, *pattern_id, {to_string(*pattern_id), "ordering needs INT or REAL"});
        }
      }
      const ElementId linkage = pat.ref(col::kGuardLinkage);
      const auto end = pat.text(col::kGuardEnd);
      const ElementId peer = pat.ref(col::kGuardPeer);
      const bool any = !pat.column(col::kGuardLinkage).empty() || end || !pat.column(col::kGuardPeer).empty();
      if (any) {
        if (linkage.is_null() || !end || peer.is_null()) {
          add(Code::MISSING_FIELD, *pattern_id, {to_string(*pattern_id), "linkage, end and peer"});
        } else if (auto lit = mm.linkages.find(linkage);
                   lit == mm.linkages.end() || lit->second.variant == LinkageVariant::INHERITANCE) {
          add(Code::UNRESOLVED_REF, *pattern_id, {to_string(*pattern_id), to_string(linkage)});
        } else if (!mm.classes.contains(peer)) {
          add(Code::UNRESOLVED_REF, *pattern_id, {to_string(*pattern_id), to_string(peer)});
        } else if (!source_cls.is_null()) {
          const LinkageDef& l = lit->second;
          const ElementId own_end = *end == "A" ? l.end_a : l.end_b;
          const ElementId peer_end = *end == "A" ? l.end_b : l.end_a;
          auto related = [&](ElementId x, ElementId y) { return conforms(x, y, mm) || conforms(y, x, mm); };
          if (!related(source_cls, own_end) || !related(peer, peer_end))
            add(Code::GUARD_INVALID, *pattern_id, {to_string(*pattern_id), "linkage cannot connect these classes"});
        }
      }
    }

    if (!template_id) continue;
    const Element& tpl = s.get(*template_id);
    const ElementId target_cls = class_ref(tpl, col::kTemplateClass, target_ns);
    if (target_cls.is_null()) continue;
    if (mm.classes.at(target_cls).abstract) add(Code::ABSTRACT_CLASS, *template_id, {to_string(target_cls)});

    std::set<std::string> assigned;
    for (ElementId asg_id : children_of(s, *template_id, K::Assignment)) {
      const Element& asg = s.get(asg_id);
      const std::string id_text = to_string(asg_id);
      const auto op = asg.text(col::kOp);
      const auto target_name = asg.text(col::kTargetAttr);
      if (!op) add(Code::MISSING_FIELD, asg_id, {id_text, "op"});
      if (!target_name) add(Code::MISSING_FIELD, asg_id, {id_text, "target"});
      if (!op || !target_name) continue;
      if (!assigned.insert(*target_name).second) {
        add(Code::ASSIGNMENT_INVALID, asg_id, {id_text, "target " + *target_name + " is assigned twice"});
        continue;
      }
      auto target = attribute_info(mm, target_cls, *target_name);
      if (!target) {
        add(Code::ASSIGNMENT_INVALID, asg_id, {id_text, "unknown target attribute " + *target_name});
        continue;
      }
      const bool frozen = target->id.is_null() ? mm.classes.at(target_cls).type_value.has_value() : target->potency == 0;
      if (frozen) add(Code::POTENCY_FROZEN, asg_id, {to_string(target_cls), *target_name});

      if (*op == "CONST") {
        const auto& v = asg.column(col::kConstValue);
        if (v.empty()) add(Code::MISSING_FIELD, asg_id, {id_text, "value"});
        else if (target->base && type_of(v.front()) != *target->base)
          add(Code::TYPE_MISMATCH, asg_id, {*target_name, std::string(to_string(*target->base)), format_value(v.front())});
        continue;
      }
      const auto source_name = asg.text(col::kSourceAttr);
      if (!source_name) {
        add(Code::MISSING_FIELD, asg_id, {id_text, "source"});
        continue;
      }
      if (source_cls.is_null()) continue;
      auto source = attribute_info(mm, source_cls, *source_name);
      if (!source) {
        add(Code::ASSIGNMENT_INVALID, asg_id, {id_text, "unknown source attribute " + *source_name});
        continue;
      }
      if (source->base != target->base) {
        add(Code::TYPE_MISMATCH, asg_id,
            {*target_name, target->base ? std::string(to_string(*target->base)) : "?",
             source->base ? std::string(to_string(*source->base)) : "?"});
      } else if (*op == "SCALE" && source->base != BaseType::REAL) {
        add(Code::TYPE_MISMATCH, asg_id, {*target_name, "REAL", std::string(to_string(*source->base))});
      }
      if (source->dims != target->dims)
        add(Code::UNIT_MISMATCH, asg_id, {id_text, source->unit_symbol, target->unit_symbol});
      if (*op == "SCALE" && asg.column(col::kFactor).empty()) add(Code::MISSING_FIELD, asg_id, {id_text, "factor"});
    }
  }
  for (const auto& [order, rules] : by_order) {
    if (rules.size() < 2) continue;
    for (ElementId r : rules) add(Code::ORDER_CLASH, r, {to_string(r), std::to_string(order)});
  }
  canonicalize(out);
  return out;
}

TransformResult execute_transformation(Store& store, ElementId tm_id, ElementId source_root, bool debug) {
  store.get(tm_id, K::TransformationModel);
  const Element& src = store.get(source_root, K::RootFolder);
  if (src.header.level != Level::M1)
    throw Error(Code::KIND_MISMATCH, {to_string(source_root), "M2 folder", "M1 folder"});

  if (auto v = validate_transformation(store, tm_id); !v.empty())
    throw Error(Code::TRANSFORM_INVALID, {to_string(tm_id), summarize(v)});
  if (auto v = evaluate(store, source_root); !v.empty())
    throw Error(Code::SOURCE_INVALID, {to_string(source_root), summarize(v)});

  std::vector<RulePlan> plans;
  for (ElementId r : children_of(store, tm_id, K::Rule)) plans.push_back(plan_rule(store, r));
  std::sort(plans.begin(), plans.end(), [](const RulePlan& a, const RulePlan& b) { return a.order < b.order; });

  std::vector<ElementId> sources;
  for (ElementId d : store.descendants(source_root)) {
    if (store.get(d).header.kind == K::Instance) sources.push_back(d);
  }

  Store work = store;
  const Metamodel mm = work.metamodel();
  TransformResult result;
  auto step = [&](std::string op, ElementId element, std::vector<std::string> details) {
    if (debug) result.steps.push_back({std::move(op), element, std::move(details)});
  };

  auto link_guard = [&](const RulePlan& p, const Element& inst) {
    if (p.link_linkage.is_null()) return true;
    const ElementId id = inst.header.id;
    const LinkageDef& l = mm.linkages.at(p.link_linkage);
    auto peer_ok = [&](ElementId peer) {
      const Element* e = store.find(peer);
      return e && e->header.kind == K::Instance && conforms(e->ref(col::kInstanceClass), p.link_peer, mm);
    };
    if (l.variant == LinkageVariant::COMPOSITION) {
      if (p.link_end == 'B') return inst.ref(col::kComposition) == p.link_linkage && peer_ok(inst.header.owner);
      for (ElementId c : store.children(id)) {
        const Element& ce = store.get(c);
        if (ce.header.kind == K::Instance && ce.ref(col::kComposition) == p.link_linkage && peer_ok(c)) return true;
      }
      return false;
    }
    for (const auto& [lid, link] : store.table(K::LinkOccurrence)) {
      if (link.ref(col::kLinkage) != p.link_linkage) continue;
      if (p.link_end == 'A' && link.ref(col::kLinkA) == id && peer_ok(link.ref(col::kLinkB))) return true;
      if (p.link_end == 'B' && link.ref(col::kLinkB) == id && peer_ok(link.ref(col::kLinkA))) return true;
    }
    return false;
  };

  const ElementId target_root = work.create(K::RootFolder, reserved::kM1Region, "out_" + std::to_string(work.next_id()));
  Trace trace;
  trace.transformation = tm_id;
  trace.source_root = source_root;
  trace.target_root = target_root;

  // Phase 1: one target per (rule, source) match, in (order, source id) order.
  std::vector<const RulePlan*> record_plan;
  for (const RulePlan& p : plans) {
    for (ElementId sid : sources) {
      const Element& inst = store.get(sid);
      if (!conforms(inst.ref(col::kInstanceClass), p.pattern_class, mm)) continue;
      bool ok = true;
      for (const Guard& g : p.guards) {
        auto info = attribute_info(mm, inst.ref(col::kInstanceClass), g.attribute);
        if (!info || !guard_holds(g, values_of(store, inst, *info))) {
          ok = false;
          break;
        }
      }
      if (!ok || !link_guard(p, inst)) continue;

      const std::uint64_t seq = trace.records.size() + 1;
      step("MATCH", sid, {to_string(p.rule)});
      const ElementId tid = work.instantiate(p.template_class, target_root, inst.header.name + "#" + std::to_string(seq));
      step("CREATE", tid, {to_string(p.rule), to_string(sid)});
      for (ElementId aid : p.assignments) {
        const Element& asg = store.get(aid);
        const std::string op = *asg.text(col::kOp);
        const std::string target_name = *asg.text(col::kTargetAttr);
        ValueList values;
        if (op == "CONST") {
          values = asg.column(col::kConstValue);
        } else {
          auto info = attribute_info(mm, inst.ref(col::kInstanceClass), *asg.text(col::kSourceAttr));
          values = values_of(store, inst, *info);
          if (op == "SCALE") {
            const double factor = *asg.real(col::kFactor);
            for (Value& v : values) v = std::get<double>(v) * factor;
          }
        }
        auto target = attribute_info(mm, p.template_class, target_name);
        if (target->id.is_null()) {
          std::optional<std::string> type;
          if (!values.empty()) type = std::get<std::string>(values.front());
          work.set_instance_type(tid, type);
        } else {
          work.set_slot(tid, target->id, values);
        }
        std::vector<std::string> details{quote(target_name)};
        for (const Value& v : values) details.push_back(format_value(v));
        step("ASSIGN", tid, std::move(details));
      }
      trace.records.push_back(TraceRecord{seq, p.rule, {sid}, {tid}, {}});
      record_plan.push_back(&p);
    }
  }

  // Phase 2: containment. The image of a source parent is its target under
  // the lowest-order rule that mapped it.
  std::map<ElementId, ElementId> image;
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    image.emplace(trace.records[i].sources.front(), trace.records[i].targets.front());
  }
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    if (!record_plan[i]->parent_image) continue;
    TraceRecord& rec = trace.records[i];
    const ElementId parent = store.get(rec.sources.front()).header.owner;
    const Element& pe = store.get(parent);
    auto it = pe.header.kind == K::Instance ? image.find(parent) : image.end();
    if (it == image.end()) {
      rec.note = "parent " + to_string(parent) + " has no image; placed under the target root";
      continue;
    }
    const ElementId target = rec.targets.front();
    const ElementId comp = work.admitting_composition(work.class_of(it->second), work.class_of(target));
    work.set_instance_parent(target, it->second, comp);
  }

  if (auto v = evaluate(work, target_root); !v.empty()) throw Error(Code::TARGET_VIOLATIONS, {summarize(v)});
  result.target_root = target_root;
  result.trace = work.add_trace(std::move(trace));
  store = std::move(work);
  return result;
}

std::string format_trace(const Trace& t) {
  std::ostringstream os;
  os << "trace " << t.id.value << " transformation " << t.transformation.value << " source " << t.source_root.value
     << " target " << t.target_root.value << "\n";
  for (const TraceRecord& r : t.records) {
    os << r.seq << " rule " << r.rule.value << " sources";
    for (ElementId x : r.sources) os << ' ' << x.value;
    os << " targets";
    for (ElementId x : r.targets) os << ' ' << x.value;
    if (!r.note.empty()) os << " note " << quote(r.note);
    os << "\n";
  }
  return os.str();
}

}  // namespace qmod
