#include "sparseflow/meta.hpp"

namespace sparseflow {

std::string to_string(const StateKey &s, const SNodeTree *layout) {
  switch (s.kind) {
    case StateKind::Value:
      if (layout && s.id < layout->num_fields()) return "value(" + layout->field(s.id).name + ")";
      return "value(f" + std::to_string(s.id) + ")";
    case StateKind::Mask: return "mask(s" + std::to_string(s.id) + ")";
    case StateKind::List: return "list(s" + std::to_string(s.id) + ")";
    case StateKind::Allocator: return "allocator";
  }
  return "?";
}

namespace {

bool is_identity_address(const Address &addr, const FieldInfo &info) {
  int k = 0;
  for (int a = 0; a < kMaxAxes; ++a) {
    if (!(info.axes & (1u << a))) continue;
    if (!addr[k].is_identity_on(a)) return false;
    ++k;
  }
  return true;
}

// Whether one execution of the body covers every cell of the field.
bool loop_covers_field(const TaskBody &body, const FieldInfo &info) {
  // A 0-d field has a single cell, written when the body runs at least once.
  if (info.axes == 0) return body.kind == TaskKind::Serial || (body.kind == TaskKind::RangeFor && body.end > body.begin);
  switch (body.kind) {
    case TaskKind::RangeFor:
      return info.axes == 1 && body.begin == 0 && body.end == info.shape[0];
    case TaskKind::StructFor:
      return body.snode == info.leaf;
    default:
      return false;
  }
}

}  // namespace

TaskMeta analyze_meta(const TaskBody &body, const SNodeTree &layout) {
  TaskMeta m;
  if (body.kind == TaskKind::ListGen) {
    if (layout.is_sparse(body.snode)) m.inputs.insert(StateKey::mask(body.snode));
    m.inputs.insert(StateKey::list(layout.parent(body.snode)));
    m.outputs.insert(StateKey::list(body.snode));
    m.overwrite[StateKey::list(body.snode)] = Overwrite::Complete;
    return m;
  }
  if (body.kind == TaskKind::StructFor && layout.needs_list(body.snode)) {
    m.inputs.insert(StateKey::list(body.snode));
  }

  std::set<FieldId> complete_fields;
  auto access = [&](FieldId f, bool write, bool activating) {
    const auto &info = layout.field(f);
    for (SNodeId s : info.sparse_ancestors) m.inputs.insert(StateKey::mask(s));
    if (!write) {
      m.inputs.insert(StateKey::value(f));
      return;
    }
    m.outputs.insert(StateKey::value(f));
    if (activating && !info.sparse_ancestors.empty()) {
      for (SNodeId s : info.sparse_ancestors) m.outputs.insert(StateKey::mask(s));
      m.inputs.insert(StateKey::allocator());
      m.outputs.insert(StateKey::allocator());
    }
  };

  for (const auto &ins : body.instrs) {
    if (const auto *l = std::get_if<Load>(&ins)) {
      access(l->field, false, false);
    } else if (const auto *s = std::get_if<Store>(&ins)) {
      access(s->field, true, s->activating);
      const auto &info = layout.field(s->field);
      if (is_identity_address(s->addr, info) && loop_covers_field(body, info)) complete_fields.insert(s->field);
    } else if (const auto *a = std::get_if<AtomicAdd>(&ins)) {
      access(a->field, false, false);  // read-modify-write
      access(a->field, true, a->activating);
    }
  }

  for (const auto &s : m.outputs) {
    if (s.kind != StateKind::Value) continue;
    if (complete_fields.count(s.id)) {
      m.overwrite[s] = Overwrite::Complete;
    } else {
      m.overwrite[s] = Overwrite::Partial;
      m.inputs.insert(s);
    }
  }
  return m;
}

bool address_injective(const Address &addr, const TaskBody &body, const SNodeTree &layout) {
  const AxisMask axes = loop_axes(body, layout);
  for (int a = 0; a < kMaxAxes; ++a) {
    if (!(axes & (1u << a))) continue;
    bool covered = false;
    for (const auto &ix : addr) {
      if (ix.op == IndexOp::Const || ix.loop_axis != a) continue;
      if (ix.op == IndexOp::Div && ix.c != 1) continue;
      covered = true;
    }
    if (!covered) return false;
  }
  return true;
}

std::map<FieldId, AccessVerdict> access_analysis(const TaskBody &body, const SNodeTree &layout) {
  std::map<FieldId, AccessVerdict> out;
  std::map<FieldId, Address> first;
  auto visit = [&](FieldId f, const Address &addr) {
    auto [it, inserted] = out.try_emplace(f);
    if (inserted) {
      first[f] = addr;
    } else if (!(first[f] == addr)) {
      it->second.same_address = false;
    }
    if (!address_injective(addr, body, layout)) it->second.injective = false;
  };
  for (const auto &ins : body.instrs) {
    if (const auto *l = std::get_if<Load>(&ins)) visit(l->field, l->addr);
    if (const auto *s = std::get_if<Store>(&ins)) visit(s->field, s->addr);
    if (const auto *a = std::get_if<AtomicAdd>(&ins)) visit(a->field, a->addr);
  }
  return out;
}

bool has_activating_access(const TaskBody &body) {
  for (const auto &ins : body.instrs) {
    if (const auto *s = std::get_if<Store>(&ins); s && s->activating) return true;
    if (const auto *a = std::get_if<AtomicAdd>(&ins); a && a->activating) return true;
  }
  return false;
}

}  // namespace sparseflow
