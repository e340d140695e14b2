#include <charconv>
#include <csignal>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "qmod/constraints.hpp"
#include "qmod/persist.hpp"
#include "qmod/qualify.hpp"
#include "qmod/runner.hpp"
#include "qmod/server.hpp"
#include "qmod/transform.hpp"

using namespace qmod;

namespace {

SocketServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int exit_for(const Error& e) { return e.code() == Code::IO_ERROR ? kExitIo : kExitFailed; }

void report(const Error& e) { std::cerr << "qmod: " << to_string(e.code()) << ": " << e.what() << "\n"; }

Store load_or_fresh(const std::string& path) { return path.empty() ? Store{} : load_file(path); }

ElementId parse_id(const std::string& text) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) throw CLI::ValidationError("id", "not an element id: " + text);
  return ElementId(v);
}

void emit(const std::string& out_path, std::string_view content) {
  if (out_path.empty()) {
    std::cout << content;
  } else {
    write_text_file(out_path, content);
  }
}

int cmd_run(const std::string& script_path, bool expect, const std::string& store_path) {
  std::string script;
  try {
    script = read_text_file(script_path);
  } catch (const Error& e) {
    report(e);
    return kExitIo;
  }
  Session session(load_or_fresh(store_path));
  RunResult result = run_script(session, script, expect);
  for (const std::string& line : result.transcript) std::cout << line << '\n';
  std::cout.flush();
  for (const Mismatch& m : result.mismatches) std::cerr << format_mismatch(m) << '\n';
  if (expect) {
    std::cerr << result.checked - result.mismatches.size() << "/" << result.checked << " expectations passed\n";
  }
  return result.exit_code();
}

int cmd_serve(const std::string& socket, const std::string& store_path) {
  Store store = load_or_fresh(store_path);
  if (socket.empty()) {
    Session session(std::move(store));
    serve_stream(session, std::cin, std::cout);
    return kExitOk;
  }
  SocketServer server(SocketAddress::parse(socket), std::move(store));
  server.open();
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  if (server.port() != 0) std::cerr << "listening on port " << server.port() << "\n";
  else std::cerr << "listening on " << socket << "\n";
  server.run();
  g_server = nullptr;
  return kExitOk;
}

int cmd_transform(const std::string& tm, const std::string& src, const std::string& store_path, bool debug,
                  const std::string& out_path) {
  Store store = load_file(store_path);
  TransformResult t = execute_transformation(store, parse_id(tm), parse_id(src), debug);
  for (const StepEvent& s : t.steps) {
    std::cout << "STEP " << s.op << ' ' << s.element.value;
    for (const std::string& d : s.details) std::cout << ' ' << d;
    std::cout << '\n';
  }
  std::cout << "target " << t.target_root.value << " trace " << t.trace.value << '\n';
  std::cout << format_trace(*store.find_trace(t.trace));
  if (!out_path.empty()) std::cerr << "saved " << save_file(store, out_path) << "\n";
  return kExitOk;
}

int cmd_qualify(const std::string& kind, const std::string& store_path, const std::string& root, const std::string& trace,
                const std::string& out_path) {
  Artifact a;
  if (kind == "errors") {
    a = gen_error_catalogue();
  } else {
    if (store_path.empty()) throw CLI::ValidationError("--store", "required for " + kind);
    const Store store = load_file(store_path);
    if (kind == "trace") {
      if (trace.empty()) throw CLI::ValidationError("--trace", "required for trace reports");
      a = gen_trace_report(store, parse_id(trace));
    } else {
      const ElementId r = parse_id(root);
      if (kind == "docs") a = gen_docs(store, r);
      else if (kind == "reqs") a = gen_requirements(store, r);
      else a = gen_tests(store, r);
    }
  }
  emit(out_path, a.content);
  std::cerr << to_string(a.kind) << " " << a.digest << "\n";
  return kExitOk;
}

int cmd_check(const std::string& store_path) {
  const Store store = load_file(store_path, false);
  const auto violations = evaluate(store);
  for (const Violation& v : violations) {
    std::cout << to_string(v.code) << ' ' << v.element.value << ' ' << v.constraint.value << ' ' << quote(v.message)
              << '\n';
  }
  std::cout << (violations.empty() ? "consistent" : std::to_string(violations.size()) + " violation(s)") << " digest "
            << digest(store) << '\n';
  return violations.empty() ? kExitOk : kExitFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qmod: meta-modeling kernel with a transactional line protocol"};
  app.require_subcommand(1);

  std::string script, store_path, socket, tm, src, out_path, kind, root = "2", trace;
  bool expect = false, debug = false;

  auto* run = app.add_subcommand("run", "Execute a protocol script");
  run->add_option("script", script, "Script file")->required();
  run->add_flag("--expect", expect, "Check #> annotations");
  run->add_option("--store", store_path, "Model file to load first");

  auto* serve = app.add_subcommand("serve", "Serve the protocol on stdio or a socket");
  serve->add_option("--socket", socket, "host:port, or unix:<path>");
  serve->add_option("--store", store_path, "Model file to load first");

  auto* transform = app.add_subcommand("transform", "Run a transformation on a model file");
  transform->add_option("tm", tm, "TransformationModel id")->required();
  transform->add_option("src", src, "Source RootFolder id")->required();
  transform->add_option("store", store_path, "Model file")->required();
  transform->add_flag("--debug", debug, "Print step events");
  transform->add_option("--out", out_path, "Save the resulting store here");

  auto* qualify = app.add_subcommand("qualify", "Generate a qualification artifact");
  qualify->add_option("kind", kind, "docs, reqs, tests, errors or trace")
      ->required()
      ->check(CLI::IsMember({"docs", "reqs", "tests", "errors", "trace"}));
  qualify->add_option("--store", store_path, "Model file");
  qualify->add_option("--root", root, "Meta-model Namespace id");
  qualify->add_option("--trace", trace, "Trace id for trace reports");
  qualify->add_option("--out", out_path, "Output file (default stdout)");

  auto* check = app.add_subcommand("check", "Load a model file and report violations");
  check->add_option("store", store_path, "Model file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) return cmd_run(script, expect, store_path);
    if (*serve) return cmd_serve(socket, store_path);
    if (*transform) return cmd_transform(tm, src, store_path, debug, out_path);
    if (*qualify) return cmd_qualify(kind, store_path, root, trace, out_path);
    if (*check) return cmd_check(store_path);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "qmod: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    report(e);
    return exit_for(e);
  }
  return kExitUsage;
}
