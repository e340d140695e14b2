#pragma once

// Consistency rules over a store. Every violation is attributed to exactly
// one element, and a scoped evaluation is the whole-model result filtered to
// the scope, so the commit check can look at a small neighbourhood of the
// changes and still agree with a full scan.

#include <set>
#include <vector>

#include "qmod/store.hpp"

namespace qmod {

/// All violations in scope, canonically ordered. A null scope means the whole
/// store; otherwise the scope is the element and its containment subtree.
/// Throws Error(UNKNOWN_ID) for an unresolvable scope.
std::vector<Violation> evaluate(const Store& store, ElementId scope = kNoElement);

/// Violations attributed to exactly the given elements (missing ids skipped).
std::vector<Violation> evaluate_elements(const Store& store, const std::set<ElementId>& elements);

/// Elements whose verdict a transaction can have changed, or nullopt when the
/// meta level was touched and only a full evaluation is sound.
std::optional<std::set<ElementId>> affected_scope(const std::vector<Change>& changes, const Store& store);

/// The commit gate: empty means the transaction may commit.
std::vector<Violation> enforce_at_commit(const std::vector<Change>& changes, const Store& store);

}  // namespace qmod
