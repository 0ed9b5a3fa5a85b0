#include "sparseflow/interpreter.hpp"

#include <string>
#include <vector>

namespace sparseflow {

namespace {

class Runner {
 public:
  Runner(const TaskBody &body, SparseGrid &grid, const AccessObserver &observer)
      : body_(body), grid_(grid), layout_(grid.layout()), observer_(observer), vals_(body.instrs.size()) {}

  void iterate(const Coord &loop) {
    for (std::size_t p = 0; p < body_.instrs.size(); ++p) step(p, loop);
  }

 private:
  void note(const StateKey &s, bool write) {
    if (observer_) observer_(s, write);
  }

  void note_masks(FieldId f) {
    for (SNodeId s : layout_.field(f).sparse_ancestors) note(StateKey::mask(s), false);
  }

  Coord resolve(FieldId f, const Address &addr, const Coord &loop) const {
    const auto &info = layout_.field(f);
    Coord cell;
    int k = 0;
    for (int a = 0; a < kMaxAxes; ++a) {
      if (info.axes & (1u << a)) cell[a] = addr[k++].eval(loop);
    }
    return cell;
  }

  void store(FieldId f, const Coord &cell, const Scalar &v, bool activating) {
    const std::int64_t before = grid_.allocator_count();
    grid_.write_value(f, cell, v, activating);
    note(StateKey::value(f), true);
    if (grid_.allocator_count() != before) {
      for (SNodeId s : layout_.field(f).sparse_ancestors) note(StateKey::mask(s), true);
      note(StateKey::allocator(), false);
      note(StateKey::allocator(), true);
    }
  }

  Scalar binop(BinOpKind op, const Scalar &a, const Scalar &b) const {
    if (!is_float(a) && !is_float(b)) {
      std::int64_t out;
      if (!checked_int_op(op, std::get<std::int64_t>(a), std::get<std::int64_t>(b), out))
        throw RuntimeTrap(std::string("integer ") + to_string(op) + " of " + to_string(a) + " and " +
                          to_string(b) + " overflows or divides by zero");
      return out;
    }
    double out;
    if (!checked_float_op(op, as_double(a), as_double(b), out))
      throw RuntimeTrap(std::string("float ") + to_string(op) + " of " + to_string(a) + " and " + to_string(b) +
                        " is not finite");
    return out;
  }

  void step(std::size_t p, const Coord &loop) {
    const Instruction &ins = body_.instrs[p];
    if (const auto *c = std::get_if<ConstInt>(&ins)) {
      vals_[p] = c->value;
    } else if (const auto *c = std::get_if<ConstFloat>(&ins)) {
      vals_[p] = c->value;
    } else if (const auto *li = std::get_if<LoopIndexVal>(&ins)) {
      vals_[p] = loop[li->axis];
    } else if (const auto *b = std::get_if<BinOp>(&ins)) {
      vals_[p] = binop(b->op, vals_[b->lhs], vals_[b->rhs]);
    } else if (const auto *l = std::get_if<Load>(&ins)) {
      note_masks(l->field);
      note(StateKey::value(l->field), false);
      vals_[p] = grid_.read_value(l->field, resolve(l->field, l->addr, loop));
    } else if (const auto *s = std::get_if<Store>(&ins)) {
      note_masks(s->field);
      store(s->field, resolve(s->field, s->addr, loop), vals_[s->value], s->activating);
    } else if (const auto *a = std::get_if<AtomicAdd>(&ins)) {
      note_masks(a->field);
      note(StateKey::value(a->field), false);
      const Coord cell = resolve(a->field, a->addr, loop);
      store(a->field, cell, binop(BinOpKind::Add, grid_.read_value(a->field, cell), vals_[a->value]),
            a->activating);
    }
  }

  const TaskBody &body_;
  SparseGrid &grid_;
  const SNodeTree &layout_;
  const AccessObserver &observer_;
  std::vector<Scalar> vals_;
};

}  // namespace

void interpret_task(const TaskBody &body, SparseGrid &grid, std::int64_t launch_id, const AccessObserver &observer) {
  const SNodeTree &layout = grid.layout();
  switch (body.kind) {
    case TaskKind::ListGen: {
      const SNodeId parent = layout.parent(body.snode);
      if (parent != layout.root()) {
        if (observer) observer(StateKey::list(parent), false);
      }
      if (layout.is_sparse(body.snode) && observer) observer(StateKey::mask(body.snode), false);
      grid.generate_list(body.snode, launch_id);
      if (observer) observer(StateKey::list(body.snode), true);
      return;
    }
    case TaskKind::Serial: {
      Runner r(body, grid, observer);
      r.iterate(Coord{});
      return;
    }
    case TaskKind::RangeFor: {
      Runner r(body, grid, observer);
      for (std::int64_t i = body.begin; i < body.end; ++i) {
        Coord c;
        c[0] = i;
        r.iterate(c);
      }
      return;
    }
    case TaskKind::StructFor: {
      Runner r(body, grid, observer);
      std::vector<Coord> entries;
      if (layout.needs_list(body.snode)) {
        if (observer) observer(StateKey::list(body.snode), false);
        entries = grid.list(body.snode).entries;
      } else {
        for_each_coord(layout.shape(body.snode), layout.axes(body.snode),
                       [&](const Coord &c) { entries.push_back(c); });
      }
      for (const Coord &c : entries) r.iterate(c);
      return;
    }
  }
}

}  // namespace sparseflow
