#pragma once

// Script execution for `qmod run`. A script is a sequence of protocol lines;
// a line `#> text` annotates the preceding command with its exact expected
// response (without the sequence number), `#>* text` with a prefix.

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "qmod/protocol.hpp"

namespace qmod {

enum ExitCode : int { kExitOk = 0, kExitFailed = 1, kExitUsage = 2, kExitIo = 3 };

struct Expectation {
  std::string text;
  bool prefix = false;
  std::size_t line = 0;  // script line of the annotation
};

struct Mismatch {
  std::uint64_t seq = 0;
  std::size_t line = 0;
  std::string expected;
  std::string actual;
};

struct RunResult {
  std::vector<std::string> transcript;  // responses and event lines, in order
  std::vector<Mismatch> mismatches;
  std::size_t commands = 0;
  std::size_t checked = 0;
  int exit_code() const { return mismatches.empty() ? kExitOk : kExitFailed; }
};

/// Executes every command of `script` on `session`. Expectations are only
/// compared when `expect` is set.
RunResult run_script(Session& session, std::string_view script, bool expect);

/// The response with its leading sequence number removed.
std::string_view strip_seq(std::string_view response);

std::string format_mismatch(const Mismatch& m);

}  // namespace qmod
