#pragma once

#include <cstdint>
#include <functional>

#include "sparseflow/grid.hpp"
#include "sparseflow/ir.hpp"
#include "sparseflow/meta.hpp"

namespace sparseflow {

// Called for every state a running task actually touches.
using AccessObserver = std::function<void(const StateKey &state, bool is_write)>;

// Executes one task against the grid. Throws RuntimeTrap on out-of-range
// accesses, non-activating writes to inactive cells, integer overflow,
// integer division by zero and non-finite float results.
void interpret_task(const TaskBody &body, SparseGrid &grid, std::int64_t launch_id = 0,
                    const AccessObserver &observer = nullptr);

}  // namespace sparseflow
