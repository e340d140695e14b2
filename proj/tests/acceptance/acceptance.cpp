// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Every count, limit and tolerance is a named constant below.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "fixtures.hpp"
#include "qmod/constraints.hpp"
#include "qmod/persist.hpp"
#include "qmod/qualify.hpp"
#include "qmod/runner.hpp"
#include "qmod/transform.hpp"
#include "script_gen.hpp"
#include "transform_gen.hpp"

using namespace qmod;
using namespace qmod::testing;

namespace {

constexpr std::size_t kReplayScripts = 100;
constexpr std::size_t kReplayMaxCommands = 200;
constexpr double kReplayLimitSeconds = 10.0;

constexpr std::size_t kAcidScripts = 50;

constexpr std::size_t kTransformCases = 50;
constexpr std::size_t kTransformMaxInstances = 20;
constexpr std::size_t kTransformMaxRules = 5;
constexpr double kTransformLimitSeconds = 5.0;
// Cases additionally replayed through a fresh `qmod transform` process.
constexpr std::size_t kTransformCliCases = 10;

constexpr std::size_t kUnitCount = 10;

constexpr std::size_t kClosureCases = 20;
constexpr std::size_t kPersistScripts = 100;

// Exact match everywhere: digests, traces and counts are compared for equality.
constexpr std::size_t kAllowedMismatches = 0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

int g_failures = 0;

void report(int index, std::string_view name, const Outcome& o) {
  std::cout << (o.pass ? "PASS" : "FAIL") << " [" << index << "] " << name << ": " << o.detail << std::endl;
  if (!o.pass) ++g_failures;
}

Outcome guarded(const std::function<Outcome()>& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << v;
  return os.str();
}

struct Process {
  int status = -1;
  std::string out;
};

Process run_cli(const std::string& args) {
  Process p;
  const std::string cmd = std::string(QMOD_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* f = ::popen(cmd.c_str(), "r");
  if (!f) return p;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) p.out.append(buf, n);
  const int raw = ::pclose(f);
  p.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return p;
}

std::string last_save_digest(const RunResult& r) {
  for (auto it = r.transcript.rbegin(); it != r.transcript.rend(); ++it) {
    if (it->rfind("EVT ", 0) == 0) continue;
    const std::string_view body = strip_seq(*it);
    if (body.rfind("OK ", 0) == 0 && body.size() == 3 + 64) return std::string(body.substr(3));
    return {};
  }
  return {};
}

std::vector<std::string> event_lines(const std::vector<std::string>& lines) {
  std::vector<std::string> out;
  for (const std::string& l : lines)
    if (l.rfind("EVT ", 0) == 0) out.push_back(l);
  return out;
}

// ---------------------------------------------------------------------------

Outcome replay_determinism() {
  const auto start = Clock::now();
  std::size_t identical = 0, longest = 0;
  for (std::size_t i = 0; i < kReplayScripts; ++i) {
    ScriptOptions o;
    o.max_commands = kReplayMaxCommands;
    o.save_path = temp_path("replay");
    const GeneratedScript script = generate_script(1000 + i, o);
    longest = std::max(longest, script.commands());
    const std::string text = script.text();
    Session a, b;
    const RunResult ra = run_script(a, text, false);
    const RunResult rb = run_script(b, text, false);
    const std::string da = last_save_digest(ra), db = last_save_digest(rb);
    if (!da.empty() && da == db && ra.transcript == rb.transcript) ++identical;
  }
  const double elapsed = seconds_since(start);
  const std::size_t misses = kReplayScripts - identical;
  return {misses <= kAllowedMismatches && elapsed < kReplayLimitSeconds && longest <= kReplayMaxCommands,
          std::to_string(identical) + "/" + std::to_string(kReplayScripts) + " SAVE digests identical, longest script " +
              std::to_string(longest) + " commands, " + fmt(elapsed) + " s (limit " + fmt(kReplayLimitSeconds) + " s)"};
}

Outcome acid_atomicity() {
  std::size_t equal = 0, blocks = 0, leaked = 0;
  for (std::size_t i = 0; i < kAcidScripts; ++i) {
    ScriptOptions o;
    o.inject_rollbacks = true;
    const GeneratedScript script = generate_script(5000 + i, o);

    Session full;
    std::vector<std::string> full_events;
    bool in_block = false;
    for (std::size_t k = 0; k < script.lines.size(); ++k) {
      const auto out = full.execute_line(script.lines[k]);
      const auto evts = event_lines(out);
      if (script.injected[k]) {
        if (!in_block) ++blocks;
        in_block = true;
        leaked += evts.size();
      } else {
        in_block = false;
      }
      full_events.insert(full_events.end(), evts.begin(), evts.end());
    }

    Session excised;
    const RunResult r = run_script(excised, script.excised(), false);
    if (digest(full.committed()) == digest(excised.committed()) && full_events == event_lines(r.transcript)) ++equal;
  }
  const std::size_t misses = kAcidScripts - equal;
  return {misses <= kAllowedMismatches && leaked == 0 && blocks > 0,
          std::to_string(equal) + "/" + std::to_string(kAcidScripts) + " excised digests and event streams equal, " +
              std::to_string(blocks) + " injected rollback blocks, " + std::to_string(leaked) + " events from them"};
}

Outcome potency_mechanics() {
  std::vector<std::string> failures;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };

  // meta-language Class @2 -> M2 class @1 -> M1 instance @0
  const int m2 = decrement_potency(kMetaLanguageTypePotency);
  const int m1 = decrement_potency(m2);
  expect(kMetaLanguageTypePotency == 2 && m2 == 1 && m1 == 0, "decrement chain 2->1->0");
  try {
    decrement_potency(m1);
    expect(false, "decrement at 0");
  } catch (const Error& e) {
    expect(e.code() == Code::POTENCY_EXHAUSTED, "decrement at 0 code");
  }

  Session s;
  const std::string ns = must(s, "CREATE Namespace 2 \"potency\"");
  const std::string cls = must(s, "CREATE Class " + ns + " \"Signal\"");
  expect(respond(s, "READ " + cls + " typePotency") == "OK 1", "class typePotency 1");
  must(s, "BEGIN");
  const std::string inst = must(s, "INSTANTIATE " + cls + " 3 \"sig\"");
  expect(respond(s, "READ " + inst + " typePotency") == "OK 0", "instance typePotency 0");
  must(s, "UPDATE " + inst + " type 0 \"dc\"");
  expect(respond(s, "COMMIT") == "OK", "commit with type");
  const std::string exhausted = respond(s, "INSTANTIATE " + inst + " 3 \"deeper\"");
  expect(exhausted == "ERR POTENCY_EXHAUSTED \"element " + inst + " has potency 0 and cannot be instantiated\"",
         "instantiate at potency 0: " + exhausted);

  must(s, "BEGIN");
  const std::string bare = must(s, "INSTANTIATE " + cls + " 3 \"bare\"");
  const std::string required = respond(s, "COMMIT");
  expect(required == "ERR VALIDATION_FAILED \"POTENCY_REQUIRED(" + bare + ")\"", "commit without type: " + required);

  // a type fixed at M2 is frozen at M1
  const std::string fixed = must(s, "CREATE Class " + ns + " \"Fixed\"");
  must(s, "UPDATE " + fixed + " type 0 \"power\"");
  const std::string f = must(s, "INSTANTIATE " + fixed + " 3 \"f\"");
  expect(respond(s, "UPDATE " + f + " type 0 \"other\"").rfind("ERR POTENCY_FROZEN", 0) == 0, "frozen type");

  std::string detail = "chain 2->1->0, POTENCY_EXHAUSTED at 0, POTENCY_REQUIRED(" + bare + ") on commit";
  if (!failures.empty()) detail = std::to_string(failures.size()) + " check(s) failed, first: " + failures.front();
  return {failures.empty(), detail};
}

Outcome transform_oracle_equivalence(std::vector<std::pair<std::string, std::string>>& debug_digests) {
  const auto start = Clock::now();
  std::size_t equivalent = 0, stable = 0, cli_stable = 0, cli_checked = 0, records = 0, failing_cases = 0;
  std::string first_problem;
  TransformCaseOptions opts{kTransformMaxInstances, kTransformMaxRules};
  for (std::size_t i = 0; i < kTransformCases; ++i) {
    const TransformCase c = generate_transform_case(9000 + i, opts);
    const ExpectedOutcome expected = transform_oracle(c);

    if (expected.containment_failure) {
      ++failing_cases;
      Store store = c.store;
      bool refused = false;
      try {
        execute_transformation(store, c.tm, c.source_root);
      } catch (const Error& e) {
        refused = e.code() == Code::TARGET_VIOLATIONS && digest(store) == digest(c.store);
      }
      if (refused) ++equivalent, ++stable;
      else if (first_problem.empty()) first_problem = "case " + std::to_string(i) + " did not refuse";
      continue;
    }

    Store store = c.store;
    const TransformResult result = execute_transformation(store, c.tm, c.source_root);
    const std::string diff = compare_with_oracle(c, expected, store, result);
    if (diff.empty()) ++equivalent;
    else if (first_problem.empty()) first_problem = "case " + std::to_string(i) + ": " + diff;
    records += expected.records.size();
    const std::string trace = format_trace(*store.find_trace(result.trace));

    // repeated run and a SAVE/LOAD cycle
    Store again = c.store;
    const TransformResult r2 = execute_transformation(again, c.tm, c.source_root);
    const std::string path = temp_path("case");
    save_file(c.store, path);
    Store reloaded = load_file(path);
    const TransformResult r3 = execute_transformation(reloaded, c.tm, c.source_root);
    if (format_trace(*again.find_trace(r2.trace)) == trace && format_trace(*reloaded.find_trace(r3.trace)) == trace &&
        digest(again) == digest(store) && digest(reloaded) == digest(store))
      ++stable;

    // a fresh process on the saved file
    if (cli_checked < kTransformCliCases) {
      ++cli_checked;
      const std::string args =
          "transform " + std::to_string(c.tm.value) + " " + std::to_string(c.source_root.value) + " " + path;
      const Process p = run_cli(args);
      const std::string expected_out = "target " + std::to_string(result.target_root.value) + " trace " +
                                       std::to_string(result.trace.value) + "\n" + trace;
      if (p.status == 0 && p.out == expected_out && run_cli(args).out == p.out) ++cli_stable;
    }

    Store debugged = c.store;
    execute_transformation(debugged, c.tm, c.source_root, true);
    debug_digests.emplace_back(digest(store), digest(debugged));
  }
  const double elapsed = seconds_since(start);
  const bool pass = kTransformCases - equivalent <= kAllowedMismatches && kTransformCases - stable <= kAllowedMismatches &&
                    cli_checked - cli_stable <= kAllowedMismatches && elapsed < kTransformLimitSeconds;
  std::string detail = std::to_string(equivalent) + "/" + std::to_string(kTransformCases) + " isomorphic to the oracle (" +
                       std::to_string(records) + " records, " + std::to_string(failing_cases) +
                       " refused as expected), " + std::to_string(stable) + "/" + std::to_string(kTransformCases) +
                       " traces identical across reruns and SAVE/LOAD, " + std::to_string(cli_stable) + "/" +
                       std::to_string(cli_checked) + " identical in a fresh process, " + fmt(elapsed) + " s (limit " +
                       fmt(kTransformLimitSeconds) + " s)";
  if (!first_problem.empty()) detail += "; " + first_problem;
  return {pass, detail};
}

Outcome debug_decoupling(const std::vector<std::pair<std::string, std::string>>& digests) {
  std::size_t equal = 0;
  for (const auto& [off, on] : digests) equal += off == on;

  // the sample model, through the protocol
  std::size_t total = digests.size() + 1;
  Session with = signal_session();
  Session without;
  std::string script = read_data("signals.qscript");
  script.replace(script.rfind("TRANSFORM 20 3 debug"), 20, "TRANSFORM 20 3");
  const RunResult r = run_script(without, script, false);
  std::size_t steps_off = 0;
  for (const std::string& l : r.transcript)
    if (l.find(" MATCH ") != std::string::npos || l.find(" ASSIGN ") != std::string::npos) ++steps_off;
  equal += digest(with.committed()) == digest(without.committed());
  return {total - equal <= kAllowedMismatches && steps_off == 0,
          std::to_string(equal) + "/" + std::to_string(total) + " target digests identical with debugging on and off, " +
              std::to_string(steps_off) + " step events with debugging off"};
}

// Hand-derived SI exponents (kg, m, s, A, K, mol, cd) keyed by symbol.
const std::map<std::string, std::array<int, 7>> kSiDims = {
    {"1", {0, 0, 0, 0, 0, 0, 0}},   {"kg", {1, 0, 0, 0, 0, 0, 0}},  {"m", {0, 1, 0, 0, 0, 0, 0}},
    {"s", {0, 0, 1, 0, 0, 0, 0}},   {"A", {0, 0, 0, 1, 0, 0, 0}},   {"K", {0, 0, 0, 0, 1, 0, 0}},
    {"mol", {0, 0, 0, 0, 0, 1, 0}}, {"cd", {0, 0, 0, 0, 0, 0, 1}},
    // V = W/A = (J/s)/A = kg m^2 s^-3 A^-1; mV differs only by scale
    {"V", {1, 2, -3, -1, 0, 0, 0}}, {"mV", {1, 2, -3, -1, 0, 0, 0}},
};

Outcome unit_checking() {
  const auto units = standard_units();
  if (units.size() < kUnitCount) return {false, "fewer than 10 predefined units"};

  // source and target meta-models with one REAL attribute per unit
  Session s;
  must(s, "BEGIN");
  std::map<std::string, std::string> ns, cls;
  std::map<std::pair<std::string, std::size_t>, std::string> attr_name;
  for (const std::string side : {"src", "tgt"}) {
    ns[side] = must(s, "CREATE Namespace 2 \"" + side + "_units\"");
    const std::string dt = must(s, "CREATE DataType " + ns[side] + " \"Real\"");
    must(s, "UPDATE " + dt + " base 0 \"REAL\"");
    cls[side] = must(s, "CREATE Class " + ns[side] + " \"Holder\"");
    must(s, "UPDATE " + cls[side] + " type 0 \"" + side + "\"");
    for (std::size_t u = 0; u < kUnitCount; ++u) {
      const std::string unit = must(s, "CREATE Unit " + ns[side] + " \"" + std::string(units[u].name) + "\"");
      must(s, "UPDATE " + unit + " symbol 0 " + quote(units[u].symbol));
      for (std::size_t d = 0; d < 7; ++d)
        if (units[u].dims[d] != 0)
          must(s, "UPDATE " + unit + " dims " + std::to_string(d) + " " + std::to_string(units[u].dims[d]));
      const std::string name = side + "_" + std::to_string(u);
      const std::string a = must(s, "CREATE Attribute " + cls[side] + " \"" + name + "\"");
      must(s, "UPDATE " + a + " dataType 0 " + dt);
      must(s, "UPDATE " + a + " unit 0 " + unit);
      attr_name[{side, u}] = name;
    }
  }
  must(s, "COMMIT");
  const Store base = s.committed();

  std::size_t pairs = 0, false_accepts = 0, false_rejects = 0, incompatible = 0;
  for (const std::string op : {"COPY", "SCALE"}) {
    for (std::size_t i = 0; i < kUnitCount; ++i) {
      for (std::size_t j = 0; j < kUnitCount; ++j) {
        Session t(base);
        must(t, "BEGIN");
        const std::string tm = must(t, "CREATE TransformationModel 3 \"tm\"");
        must(t, "UPDATE " + tm + " source 0 " + ns["src"]);
        must(t, "UPDATE " + tm + " target 0 " + ns["tgt"]);
        const std::string rule = must(t, "CREATE Rule " + tm + " \"r\"");
        must(t, "UPDATE " + rule + " order 0 1");
        const std::string pat = must(t, "CREATE Pattern " + rule + " \"p\"");
        must(t, "UPDATE " + pat + " class 0 " + cls["src"]);
        const std::string tpl = must(t, "CREATE Template " + rule + " \"t\"");
        must(t, "UPDATE " + tpl + " class 0 " + cls["tgt"]);
        const std::string asg = must(t, "CREATE Assignment " + tpl + " \"a\"");
        must(t, "UPDATE " + asg + " op 0 \"" + op + "\"");
        must(t, "UPDATE " + asg + " source 0 \"" + attr_name[{"src", i}] + "\"");
        must(t, "UPDATE " + asg + " target 0 \"" + attr_name[{"tgt", j}] + "\"");
        if (op == std::string("SCALE")) must(t, "UPDATE " + asg + " factor 0 1000.0");
        must(t, "COMMIT");

        const auto vs = validate_transformation(t.committed(), ElementId(std::stoull(tm)));
        const bool rejected = std::any_of(vs.begin(), vs.end(), [&](const Violation& v) {
          return v.code == Code::UNIT_MISMATCH && v.element == ElementId(std::stoull(asg));
        });
        const bool compatible =
            kSiDims.at(std::string(units[i].symbol)) == kSiDims.at(std::string(units[j].symbol));
        ++pairs;
        if (!compatible) ++incompatible;
        if (!compatible && !rejected) ++false_accepts;
        if (compatible && rejected) ++false_rejects;
        // nothing else may be wrong with the model
        if (vs.size() != (rejected ? 1u : 0u)) ++false_rejects;
      }
    }
  }
  return {false_accepts == 0 && false_rejects == 0,
          std::to_string(pairs) + " COPY/SCALE pairs over " + std::to_string(kUnitCount) + " units, " +
              std::to_string(incompatible) + " incompatible, " + std::to_string(false_accepts) + " false accepts, " +
              std::to_string(false_rejects) + " false rejects"};
}

Outcome artifact_closure() {
  std::vector<std::pair<Store, ElementId>> models;
  models.emplace_back(signal_session().committed(), ElementId{5});
  for (std::size_t i = 0; i < kClosureCases; ++i) {
    const TransformCase c = generate_transform_case(12000 + i);
    for (ElementId ns : c.store.list(ElementKind::Namespace))
      if (ns != reserved::kM2Region) models.emplace_back(c.store, ns);
  }

  std::size_t checked = 0, mismatches = 0, cli_runs = 0, cli_failures = 0, unstable = 0;
  std::string first_problem;
  for (std::size_t m = 0; m < models.size(); ++m) {
    const auto& [store, root] = models[m];
    const Artifact tests = gen_tests(store, root);
    Session session(store);
    const RunResult r = run_script(session, tests.content, true);
    checked += r.checked;
    mismatches += r.mismatches.size();
    if (!r.mismatches.empty() && first_problem.empty()) first_problem = format_mismatch(r.mismatches.front());

    // the same script through the CLI for a handful of models
    if (m < 5) {
      const std::string store_path = temp_path("closure_store"), script_path = temp_path("closure_script");
      save_file(store, store_path);
      write_text_file(script_path, tests.content);
      ++cli_runs;
      if (run_cli("run " + script_path + " --expect --store " + store_path).status != 0) ++cli_failures;
    }

    const Store reloaded = deserialize(serialize(store));
    for (auto gen : {&gen_docs, &gen_requirements, &gen_tests}) {
      const std::string d = gen(store, root).digest;
      if (d != gen(store, root).digest || d != gen(reloaded, root).digest) ++unstable;
    }
  }
  if (gen_error_catalogue().digest != gen_error_catalogue().digest) ++unstable;

  // every code this process has raised or reported is catalogued
  const std::string catalogue_text = gen_error_catalogue().content;
  std::size_t missing = 0;
  const auto observed = observed_codes();
  for (const std::string& code : observed)
    if (catalogue_text.find("\n" + code + "\n") == std::string::npos) ++missing;

  std::string detail = std::to_string(checked - mismatches) + "/" + std::to_string(checked) + " expectations over " +
                       std::to_string(models.size()) + " meta-models, " + std::to_string(cli_runs - cli_failures) +
                       "/" + std::to_string(cli_runs) + " CLI runs exit 0, " + std::to_string(unstable) +
                       " unstable digests, " + std::to_string(missing) + "/" + std::to_string(observed.size()) +
                       " observed codes missing from the catalogue";
  if (!first_problem.empty()) detail += "; " + first_problem;
  return {mismatches == 0 && cli_failures == 0 && unstable == 0 && missing == 0 && checked > 0, detail};
}

Outcome persistence_round_trip() {
  std::size_t identical = 0, continuous = 0, total = 0;
  auto check = [&](const Store& s) {
    ++total;
    const std::string path = temp_path("persist");
    const std::string saved = save_file(s, path);
    const Store loaded = load_file(path);
    if (saved == digest(s) && digest(loaded) == digest(s)) ++identical;
    Session a(s), b(loaded);
    const std::string probe = "CREATE Namespace 2 \"probe\"";
    const std::string ra = respond(a, probe), rb = respond(b, probe);
    if (ra == rb && ra == "OK " + std::to_string(s.next_id())) ++continuous;
  };
  for (std::size_t i = 0; i < kPersistScripts; ++i) {
    Session s;
    run_script(s, generate_script(20000 + i).text(), false);
    check(s.committed());
  }
  // stores carrying transformation targets and traces
  for (std::size_t i = 0; i < 10; ++i) {
    TransformCase c = generate_transform_case(21000 + i);
    if (transform_oracle(c).containment_failure) continue;
    execute_transformation(c.store, c.tm, c.source_root);
    check(c.store);
  }
  return {total - identical <= kAllowedMismatches && total - continuous <= kAllowedMismatches,
          std::to_string(identical) + "/" + std::to_string(total) + " reloaded digests identical, " +
              std::to_string(continuous) + "/" + std::to_string(total) + " next ids continuous"};
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, std::string>> debug_digests;
  report(1, "replay determinism", guarded(replay_determinism));
  report(2, "transaction atomicity and isolation", guarded(acid_atomicity));
  report(3, "potency mechanics", guarded(potency_mechanics));
  report(4, "transformation determinism and oracle equivalence",
         guarded([&] { return transform_oracle_equivalence(debug_digests); }));
  report(5, "debug decoupling", guarded([&] { return debug_decoupling(debug_digests); }));
  report(6, "unit checking", guarded(unit_checking));
  report(7, "artifact closure", guarded(artifact_closure));
  report(8, "persistence round trip", guarded(persistence_round_trip));
  std::cout << (g_failures ? std::to_string(g_failures) + " criterion(s) failed" : "all criteria passed") << std::endl;
  return g_failures ? 1 : 0;
}
