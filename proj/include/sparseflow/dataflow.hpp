#pragma once

#include <map>

#include "sparseflow/ir.hpp"
#include "sparseflow/meta.hpp"

namespace sparseflow {

// May the two addresses on the same field name the same cell in one
// iteration? Only identical bases with differing constant offsets (or two
// differing constants) are provably distinct.
bool may_alias(const Address &a, const Address &b);

// Intra-task data-flow optimization of a straight-line body, run to a
// fixpoint: store-to-load forwarding, identical load merging, dead and
// identical store elimination, constant folding with reassociation of
// constant addends, and removal of unused pure instructions.
// Never increases the instruction count; applying it twice is the identity.
TaskBody dataflow_optimize(const TaskBody &body);

// Rewrites every AtomicAdd on a field in `fields` into Load, add, Store.
// Throws std::invalid_argument when a requested field is not injective per
// iteration in a looping task.
TaskBody demote_atomics(const TaskBody &body, const std::map<FieldId, AccessVerdict> &verdicts,
                        const std::set<FieldId> &fields);

// Demotes all AtomicAdds whose precondition holds.
TaskBody demote_legal_atomics(const TaskBody &body, const SNodeTree &layout);

// Removes stores and atomic adds into `fields` (used for dead value versions)
// and cleans up. The caller guarantees the body never reads those fields
// after writing them and that the writes are non-activating.
TaskBody strip_stores(const TaskBody &body, const std::set<FieldId> &fields);

}  // namespace sparseflow
