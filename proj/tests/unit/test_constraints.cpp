#include "doctest.h"

#include "fixtures.hpp"
#include "qmod/constraints.hpp"
#include "qmod/persist.hpp"
#include "script_gen.hpp"

using namespace qmod;
using namespace qmod::testing;

namespace {

Value I(std::int64_t v) { return Value{v}; }
Value S(std::string v) { return Value{std::move(v)}; }
Value ref(ElementId id) { return Value{static_cast<std::int64_t>(id.value)}; }

struct RangeModel {
  Store s;
  ElementId ns, real, integer, signal, voltage, count, range;

  RangeModel() {
    ns = s.create(ElementKind::Namespace, reserved::kM2Region, "m");
    real = s.create(ElementKind::DataType, ns, "Real");
    s.update(real, "base", 0, S("REAL"));
    integer = s.create(ElementKind::DataType, ns, "Int");
    s.update(integer, "base", 0, S("INT"));
    signal = s.create(ElementKind::Class, ns, "Signal");
    s.update(signal, "type", 0, S("signal"));
    voltage = s.create(ElementKind::Attribute, signal, "voltage");
    s.update(voltage, "dataType", 0, ref(real));
    count = s.create(ElementKind::Attribute, signal, "count");
    s.update(count, "dataType", 0, ref(integer));
    range = s.create(ElementKind::Constraint, ns, "safe");
    s.update(range, "constraintKind", 0, S("ATTR_RANGE"));
    s.update(range, "target", 0, ref(signal));
    s.update(range, "attribute", 0, S("voltage"));
    s.update(range, "min", 0, Value{0.0});
    s.update(range, "max", 0, Value{5.0});
    s.take_journal();
  }
};

std::vector<Violation> restricted(const std::vector<Violation>& all, const std::set<ElementId>& keep) {
  std::vector<Violation> out;
  for (const Violation& v : all)
    if (keep.contains(v.element)) out.push_back(v);
  return out;
}

}  // namespace

TEST_CASE("evaluate examples") {
  RangeModel m;
  CHECK(evaluate(m.s).empty());
  const ElementId inst = m.s.instantiate(m.signal, reserved::kM1Region, "sig");

  SUBCASE("missing value on a lower-bound-1 attribute") {
    m.s.update(inst, "count", 0, I(1));
    const auto vs = evaluate(m.s);
    REQUIRE(vs.size() == 1);
    CHECK(vs[0] == Violation{Code::LOWER_BOUND, inst, kNoElement, ""});
  }
  SUBCASE("in range") {
    m.s.update(inst, "count", 0, I(1));
    m.s.update(inst, "voltage", 0, Value{3.3});
    CHECK(evaluate(m.s).empty());
  }
  SUBCASE("range and bound violations on one element sort by code") {
    m.s.update(inst, "voltage", 0, Value{9.0});
    const auto vs = evaluate(m.s);
    REQUIRE(vs.size() == 2);
    CHECK(vs[0] == Violation{Code::ATTR_RANGE, inst, m.range, ""});
    CHECK(vs[1] == Violation{Code::LOWER_BOUND, inst, kNoElement, ""});
    CHECK(summarize(vs) == "ATTR_RANGE(" + to_string(inst) + "), LOWER_BOUND(" + to_string(inst) + ")");
  }
  SUBCASE("unknown scope") { CHECK_THROWS_AS(evaluate(m.s, ElementId{999}), Error); }
}

TEST_CASE("commit gate") {
  Session session;
  auto ok = [&](std::string_view line) {
    const std::string r = respond(session, line);
    INFO(line << " -> " << r);
    REQUIRE(r.rfind("OK", 0) == 0);
    return r.size() > 3 ? r.substr(3) : std::string{};
  };
  ok("BEGIN");
  const std::string ns = ok("CREATE Namespace 2 \"m\"");
  const std::string parent = ok("CREATE Class " + ns + " \"Parent\"");
  const std::string child = ok("CREATE Class " + ns + " \"Child\"");
  const std::string comp = ok("CREATE Composition " + ns + " \"holds\"");
  ok("UPDATE " + comp + " endA 0 " + parent);
  ok("UPDATE " + comp + " endB 0 " + child);
  ok("UPDATE " + comp + " upperB 0 1");
  ok("COMMIT");

  ok("BEGIN");
  const std::string p = ok("INSTANTIATE " + parent + " 3 \"p\"");
  ok("UPDATE " + p + " type 0 \"box\"");
  ok("COMMIT");

  SUBCASE("valid instance") {
    ok("BEGIN");
    const std::string c = ok("INSTANTIATE " + child + " " + p + " \"c\"");
    ok("UPDATE " + c + " type 0 \"item\"");
    CHECK(respond(session, "COMMIT") == "OK");
  }
  SUBCASE("type left unset") {
    ok("BEGIN");
    const std::string c = ok("INSTANTIATE " + child + " " + p + " \"c\"");
    CHECK(respond(session, "COMMIT") == "ERR VALIDATION_FAILED \"POTENCY_REQUIRED(" + c + ")\"");
    CHECK_FALSE(session.in_transaction());
    CHECK(respond(session, "READ " + c + " name").rfind("ERR UNKNOWN_ID", 0) == 0);
  }
  SUBCASE("two children where one is allowed") {
    ok("BEGIN");
    for (const char* n : {"c1", "c2"}) {
      const std::string c = ok("INSTANTIATE " + child + " " + p + " \"" + n + "\"");
      ok("UPDATE " + c + " type 0 \"item\"");
    }
    const std::string r = respond(session, "COMMIT");
    CHECK(r == "ERR VALIDATION_FAILED \"UPPER_BOUND(" + p + ")\"");
  }
}

TEST_CASE("scoped evaluation equals the full result restricted to the scope") {
  std::size_t nonempty = 0;
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    CAPTURE(seed);
    const GeneratedScript script = generate_script(seed);
    Session session;
    for (const std::string& line : script.lines) {
      session.execute_line(line);
      // mid-transaction views are where violations live
      const Store& view = session.view();
      const auto full = evaluate(view);
      if (!full.empty()) ++nonempty;

      for (ElementId scope : {reserved::kRoot, reserved::kM2Region, reserved::kM1Region}) {
        std::set<ElementId> keep{scope};
        for (ElementId d : view.descendants(scope)) keep.insert(d);
        REQUIRE(evaluate(view, scope) == restricted(full, keep));
      }
      for (ElementId id : view.list(ElementKind::Instance)) {
        std::set<ElementId> keep{id};
        for (ElementId d : view.descendants(id)) keep.insert(d);
        REQUIRE(evaluate(view, id) == restricted(full, keep));
        REQUIRE(evaluate_elements(view, {id}) == restricted(full, {id}));
      }
      // the commit gate looks at a neighbourhood only; it must still see
      // everything the full scan attributes to elements the journal touched
      if (session.in_transaction()) {
        const auto gate = enforce_at_commit(view.journal(), view);
        for (const Violation& v : gate) CHECK(std::find(full.begin(), full.end(), v) != full.end());
        if (auto scope = affected_scope(view.journal(), view)) {
          CHECK(gate == restricted(full, *scope));
        } else {
          CHECK(gate == full);
        }
      } else {
        // every committed state is consistent
        CHECK(full.empty());
      }
    }
  }
  CHECK(nonempty > 0);
}

TEST_CASE("evaluate is pure") {
  Session session = signal_session();
  Store s = session.committed();
  s.update(ElementId{15}, "voltage", 0, Value{99.0});
  const std::string before = serialize(s);
  const auto first = evaluate(s);
  const auto second = evaluate(s);
  CHECK(serialize(s) == before);
  CHECK(first == second);
  REQUIRE(first.size() == 1);
  CHECK(first[0].code == Code::ATTR_RANGE);
  CHECK(first[0].constraint == ElementId{12});
}
