#include "sparseflow/task.hpp"

namespace sparseflow {

Task make_task(std::string name, TaskBody body, const SNodeTree &layout, std::int64_t launch_id) {
  Task t;
  t.name = std::move(name);
  t.handle = hash_body(body);
  t.meta = analyze_meta(body, layout);
  t.body = std::make_shared<const TaskBody>(std::move(body));
  t.launch_id = launch_id;
  return t;
}

namespace {

bool identity_on_leaf(const Address &addr, const FieldInfo &info) {
  int k = 0;
  for (int a = 0; a < kMaxAxes; ++a) {
    if (!(info.axes & (1u << a))) continue;
    if (!addr[k++].is_identity_on(a)) return false;
  }
  return true;
}

}  // namespace

std::vector<Task> lower_kernel(const Kernel &kernel, const SNodeTree &layout) {
  TaskBody body;
  body.kind = kernel.kind;
  body.instrs = kernel.instrs;
  switch (kernel.kind) {
    case TaskKind::Serial:
      break;
    case TaskKind::RangeFor:
      body.begin = kernel.begin;
      body.end = kernel.end;
      break;
    case TaskKind::StructFor:
      if (kernel.over < 0 || kernel.over >= layout.num_fields())
        throw IRError("kernel '" + kernel.name + "': struct-for over unknown field");
      body.snode = layout.field(kernel.over).leaf;
      if (body.snode == layout.root())
        throw IRError("kernel '" + kernel.name + "': struct-for over a 0-d field");
      break;
    case TaskKind::ListGen:
      throw IRError("kernel '" + kernel.name + "': list generation is not a kernel kind");
  }
  validate_body(body, layout);

  for (auto &ins : body.instrs) {
    auto demote = [&](FieldId f, const Address &addr, bool &activating) {
      const auto &info = layout.field(f);
      if (info.sparse_ancestors.empty()) activating = false;
      if (body.kind == TaskKind::StructFor && info.leaf == body.snode && identity_on_leaf(addr, info))
        activating = false;
    };
    if (auto *s = std::get_if<Store>(&ins)) demote(s->field, s->addr, s->activating);
    if (auto *a = std::get_if<AtomicAdd>(&ins)) demote(a->field, a->addr, a->activating);
  }

  std::vector<Task> tasks;
  if (body.kind == TaskKind::StructFor && layout.needs_list(body.snode)) {
    const auto &info = layout.field(kernel.over);
    for (SNodeId level : info.path) {
      TaskBody lg;
      lg.kind = TaskKind::ListGen;
      lg.snode = level;
      tasks.push_back(make_task(kernel.name + ".listgen", std::move(lg), layout));
    }
  }
  tasks.push_back(make_task(kernel.name, std::move(body), layout));
  return tasks;
}

}  // namespace sparseflow
