#include "fixtures.hpp"

#include <filesystem>
#include <stdexcept>
#include <unistd.h>

#include "qmod/persist.hpp"
#include "qmod/runner.hpp"

namespace qmod::testing {

std::string data_path(std::string_view name) { return std::string(QMOD_TEST_DATA) + "/" + std::string(name); }

std::string read_data(std::string_view name) { return read_text_file(data_path(name)); }

std::string respond(Session& session, std::string_view line) {
  auto out = session.execute_line(line);
  return out.empty() ? std::string{} : std::string(strip_seq(out.front()));
}

std::string must(Session& session, std::string_view line) {
  const std::string r = respond(session, line);
  if (r == "OK") return {};
  if (r.rfind("OK ", 0) != 0) throw std::runtime_error(std::string(line) + " -> " + r);
  return r.substr(3);
}

std::vector<std::string> respond_all(Session& session, std::string_view script) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= script.size()) {
    std::size_t nl = script.find('\n', start);
    if (nl == std::string_view::npos) nl = script.size();
    std::string_view line = script.substr(start, nl - start);
    start = nl + 1;
    if (is_blank_or_comment(line)) continue;
    out.push_back(respond(session, line));
  }
  return out;
}

Session signal_session() {
  Session s;
  run_script(s, read_data("signals.qscript"), false);
  return s;
}

std::string temp_path(std::string_view stem) {
  static int counter = 0;
  const auto dir = std::filesystem::temp_directory_path() / ("qmod_test_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return (dir / (std::string(stem) + "_" + std::to_string(counter++))).string();
}

}  // namespace qmod::testing
