#pragma once

// Small helpers shared by the test binaries.

#include <string>
#include <string_view>
#include <vector>

#include "qmod/protocol.hpp"

namespace qmod::testing {

std::string data_path(std::string_view name);
std::string read_data(std::string_view name);

/// Response of one command with the sequence number removed.
std::string respond(Session& session, std::string_view line);

/// Payload of an OK response; throws std::runtime_error on anything else.
std::string must(Session& session, std::string_view line);

/// Responses (without seq) of every command of a script, events dropped.
std::vector<std::string> respond_all(Session& session, std::string_view script);

/// A session after running the bundled signal model script.
Session signal_session();

/// Scratch file path unique to this process.
std::string temp_path(std::string_view stem);

}  // namespace qmod::testing
