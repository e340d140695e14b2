#pragma once

// Qualification artifacts: documentation, requirements, executable test
// scripts, the error catalogue and transformation trace reports. Every
// generator is a pure function of the store content.

#include <string>
#include <string_view>

#include "qmod/store.hpp"

namespace qmod {

enum class ArtifactKind : std::uint8_t { DOCS, REQUIREMENTS, TESTS, ERROR_CATALOGUE, TRACE_REPORT };
std::string_view to_string(ArtifactKind k);

struct Artifact {
  ArtifactKind kind;
  std::string content;  // LF line endings, trailing newline
  std::string digest;   // SHA-256 of content, 64 hex characters
};

// Bumped whenever the wording of a generator changes.
inline constexpr std::string_view kTemplateVersion = "v1";

/// `root` must be a Namespace; everything below it is covered.
Artifact gen_docs(const Store& store, ElementId root);
Artifact gen_requirements(const Store& store, ElementId root);
/// A protocol script with `#>` expectations, meant to run against `store`.
Artifact gen_tests(const Store& store, ElementId root);
Artifact gen_error_catalogue();
Artifact gen_trace_report(const Store& store, ElementId trace);

/// `/root/M1/folder/name` style path built from element names.
std::string element_path(const Store& store, ElementId id);

}  // namespace qmod
