#include "qmod/runner.hpp"

namespace qmod {
namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    start = nl + 1;
  }
  return out;
}

}  // namespace

std::string_view strip_seq(std::string_view response) {
  const std::size_t sp = response.find(' ');
  return sp == std::string_view::npos ? std::string_view{} : response.substr(sp + 1);
}

RunResult run_script(Session& session, std::string_view script, bool expect) {
  RunResult result;
  // Response of the most recent command, awaiting a possible annotation.
  std::string last_response;
  std::uint64_t last_seq = 0;
  bool have_last = false;

  const std::vector<std::string_view> lines = split_lines(script);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string_view line = lines[i];
    const std::size_t index = i + 1;
    if (line.starts_with("#>")) {
      if (!expect) continue;
      Expectation e;
      e.line = index;
      std::string_view body = line.substr(2);
      if (body.starts_with('*')) {
        e.prefix = true;
        body.remove_prefix(1);
      }
      if (body.starts_with(' ')) body.remove_prefix(1);
      e.text = body;
      ++result.checked;
      const std::string_view actual = have_last ? strip_seq(last_response) : std::string_view{};
      const bool ok = have_last && (e.prefix ? actual.starts_with(e.text) : actual == e.text);
      if (!ok) {
        result.mismatches.push_back(
            Mismatch{last_seq, index, (e.prefix ? "prefix " : "") + e.text, have_last ? std::string(actual) : "<no command>"});
      }
      continue;
    }
    if (is_blank_or_comment(line)) continue;
    std::vector<std::string> out = session.execute_line(line);
    ++result.commands;
    have_last = !out.empty();
    if (have_last) {
      last_response = out.front();
      last_seq = session.last_seq();
    }
    for (std::string& l : out) result.transcript.push_back(std::move(l));
  }
  return result;
}

std::string format_mismatch(const Mismatch& m) {
  return "expectation failed at seq " + std::to_string(m.seq) + " (line " + std::to_string(m.line) +
         "): expected \"" + m.expected + "\", got \"" + m.actual + "\"";
}

}  // namespace qmod
