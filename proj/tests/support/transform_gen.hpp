#pragma once

// Random transformation scenarios and a brute-force oracle for them. The
// generator keeps a plain description of everything it builds; the oracle
// works from that description only and never looks at the store.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qmod/store.hpp"
#include "qmod/transform.hpp"

namespace qmod::testing {

struct AttrDesc {
  ElementId id;
  std::string name;
  BaseType base = BaseType::INT;
  bool volt = false;  // unit with voltage dimensions, else dimensionless
};

struct SourceClass {
  ElementId id;
  std::vector<ElementId> supers;  // direct superclasses
  std::optional<std::string> fixed_type;
  std::vector<AttrDesc> own;
};

struct SourceComposition {
  ElementId id;
  ElementId parent;
  ElementId child;
};

struct SourceInstance {
  ElementId id;
  std::string name;
  ElementId cls;
  ElementId parent;       // null when directly under the source root
  ElementId composition;  // null when directly under the source root
  std::map<std::string, ValueList> values;
  std::string type;  // effective type value
};

struct TargetClass {
  ElementId id;
  std::optional<std::string> fixed_type;
  std::vector<AttrDesc> attrs;
};

struct LinkGuardDesc {
  ElementId composition;
  char end = 'B';
  ElementId peer;
};

struct GuardDesc {
  std::string attribute;
  std::string op;  // = != < <= > >=
  Value literal;
  std::string text() const;
};

struct AssignDesc {
  std::string op;  // CONST, COPY or SCALE
  std::string source;
  std::string target;
  Value value;
  double factor = 1.0;
};

struct RuleDesc {
  ElementId id;
  std::int64_t order = 0;
  ElementId pattern;
  std::vector<GuardDesc> guards;
  std::optional<LinkGuardDesc> link;
  ElementId tmpl;
  bool parent_image = false;
  std::vector<AssignDesc> assigns;
};

struct TransformCase {
  Store store;
  ElementId tm;
  ElementId source_root;
  std::vector<SourceClass> source_classes;
  std::vector<SourceComposition> source_compositions;
  std::vector<SourceInstance> instances;
  std::vector<TargetClass> target_classes;
  std::vector<std::pair<ElementId, ElementId>> target_compositions;  // (parent class, child class)
  std::vector<RuleDesc> rules;
};

struct TransformCaseOptions {
  std::size_t max_instances = 20;
  std::size_t max_rules = 5;
};

TransformCase generate_transform_case(std::uint64_t seed, const TransformCaseOptions& options = {});

struct ExpectedRecord {
  ElementId rule;
  ElementId source;
  ElementId target_class;
  std::string name;
  std::map<std::string, ValueList> slots;
  std::string type;
  // Index of the record whose target becomes the parent; nullopt for the
  // target root.
  std::optional<std::size_t> parent_record;
  bool noted = false;
};

struct ExpectedOutcome {
  std::vector<ExpectedRecord> records;
  // Set when some parent image cannot hold its child, which must make the
  // engine fail with TARGET_VIOLATIONS.
  bool containment_failure = false;
};

/// Enumerates every (rule order, source id) pair and evaluates it directly.
ExpectedOutcome transform_oracle(const TransformCase& c);

/// Compares an engine result with the oracle; returns an empty string when
/// the target model and trace are isomorphic to the expectation.
std::string compare_with_oracle(const TransformCase& c, const ExpectedOutcome& expected, const Store& after,
                                const TransformResult& result);

}  // namespace qmod::testing
