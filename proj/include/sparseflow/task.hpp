#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sparseflow/ir.hpp"
#include "sparseflow/meta.hpp"

namespace sparseflow {

// A user kernel before lowering. Struct-for kernels loop over the active
// cells of `over`; range-for kernels over [begin, end) on axis i.
struct Kernel {
  std::string name;
  TaskKind kind = TaskKind::Serial;  // Serial, RangeFor or StructFor
  std::int64_t begin = 0;
  std::int64_t end = 0;
  FieldId over = -1;
  std::vector<Instruction> instrs;
};

struct Task {
  std::string name;
  std::shared_ptr<const TaskBody> body;
  IRHandle handle;
  TaskMeta meta;
  std::int64_t launch_id = 0;

  TaskKind kind() const { return body->kind; }
  SNodeId snode() const { return body->snode; }
};

// Builds a task with its handle and meta computed from the body.
Task make_task(std::string name, TaskBody body, const SNodeTree &layout, std::int64_t launch_id = 0);

// Lowers a kernel into its task sequence. A struct-for over a field with a
// sparse ancestor emits one list generation per level from the first
// non-root node down to the field's leaf, then the compute task; any other
// kernel emits a single task. Writes that can never activate anything are
// lowered as non-activating: writes to fields without sparse ancestors, and
// identity-indexed writes inside a struct-for to fields sharing its leaf.
// Throws IRError for an unknown field or an ill-formed body.
std::vector<Task> lower_kernel(const Kernel &kernel, const SNodeTree &layout);

}  // namespace sparseflow
