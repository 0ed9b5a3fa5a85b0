#include "sparseflow/dataflow.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

namespace sparseflow {

bool may_alias(const Address &a, const Address &b) {
  if (a.size() != b.size()) return true;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const AxisIndex &x = a[k], &y = b[k];
    if (x.op == IndexOp::Const && y.op == IndexOp::Const) {
      if (x.c != y.c) return false;
      continue;
    }
    auto offset = [](const AxisIndex &ix) -> std::optional<std::int64_t> {
      if (ix.op == IndexOp::Identity) return 0;
      if (ix.op == IndexOp::Add) return ix.c;
      return std::nullopt;
    };
    const auto ox = offset(x), oy = offset(y);
    if (ox && oy && x.loop_axis == y.loop_axis && *ox != *oy) return false;
  }
  return true;
}

namespace {

struct MemRef {
  FieldId field;
  const Address *addr;
};

std::optional<MemRef> mem_ref(const Instruction &ins) {
  if (const auto *l = std::get_if<Load>(&ins)) return MemRef{l->field, &l->addr};
  if (const auto *s = std::get_if<Store>(&ins)) return MemRef{s->field, &s->addr};
  if (const auto *a = std::get_if<AtomicAdd>(&ins)) return MemRef{a->field, &a->addr};
  return std::nullopt;
}

bool is_write(const Instruction &ins) { return has_side_effect(ins); }
bool reads_memory(const Instruction &ins) {
  return std::holds_alternative<Load>(ins) || std::holds_alternative<AtomicAdd>(ins);
}

// Folds two constants of the same kind. Mixed kinds are left alone.
std::optional<Instruction> fold(BinOpKind op, const Instruction &a, const Instruction &b) {
  if (const auto *x = std::get_if<ConstInt>(&a)) {
    if (const auto *y = std::get_if<ConstInt>(&b)) {
      std::int64_t r;
      if (checked_int_op(op, x->value, y->value, r)) return ConstInt{r};
    }
    return std::nullopt;
  }
  if (const auto *x = std::get_if<ConstFloat>(&a)) {
    if (const auto *y = std::get_if<ConstFloat>(&b)) {
      double r;
      if (checked_float_op(op, x->value, y->value, r)) return ConstFloat{r};
    }
  }
  return std::nullopt;
}

bool is_const(const Instruction &ins) {
  return std::holds_alternative<ConstInt>(ins) || std::holds_alternative<ConstFloat>(ins);
}

class Optimizer {
 public:
  explicit Optimizer(TaskBody body) : body_(std::move(body)) {}

  TaskBody run() {
    while (true) {
      const bool changed = scan();
      const bool shrunk = compact();
      if (!changed && !shrunk) break;
    }
    return std::move(body_);
  }

 private:
  int resolve(int i) const {
    while (repl_[i] != i) i = repl_[i];
    return i;
  }

  void reset() {
    const int n = static_cast<int>(body_.instrs.size());
    repl_.resize(n);
    for (int i = 0; i < n; ++i) repl_[i] = i;
    alive_.assign(n, true);
  }

  int use_count(int target) const {
    int uses = 0;
    for (int i = 0; i < static_cast<int>(body_.instrs.size()); ++i) {
      if (!alive_[i]) continue;
      for_each_operand(body_.instrs[i], [&](int op) {
        if (resolve(op) == target) ++uses;
      });
    }
    return uses;
  }

  // One forward pass applying every local rewrite once.
  bool scan() {
    reset();
    auto &ins = body_.instrs;
    const int n = static_cast<int>(ins.size());
    bool changed = false;
    for (int p = 0; p < n; ++p) {
      for_each_operand(ins[p], [&](int &op) { op = resolve(op); });

      if (auto *b = std::get_if<BinOp>(&ins[p])) {
        if (auto folded = fold(b->op, ins[b->lhs], ins[b->rhs])) {
          ins[p] = *folded;
          changed = true;
          continue;
        }
        if (reassociate(p)) changed = true;
        continue;
      }

      if (const auto *l = std::get_if<Load>(&ins[p])) {
        for (int q = p - 1; q >= 0; --q) {
          if (!alive_[q]) continue;
          auto ref = mem_ref(ins[q]);
          if (!ref || ref->field != l->field) continue;
          const bool same = *ref->addr == l->addr;
          if (const auto *s = std::get_if<Store>(&ins[q]); s && same) {
            repl_[p] = s->value;
            alive_[p] = false;
            changed = true;
            break;
          }
          if (std::holds_alternative<Load>(ins[q]) && same) {
            repl_[p] = q;
            alive_[p] = false;
            changed = true;
            break;
          }
          if (is_write(ins[q]) && may_alias(*ref->addr, l->addr)) break;
        }
        continue;
      }

      if (const auto *s = std::get_if<Store>(&ins[p])) {
        // A store of the value just loaded from the same cell is a no-op.
        if (!s->activating) {
          if (const auto *src = std::get_if<Load>(&ins[s->value]);
              src && src->field == s->field && src->addr == s->addr && !write_between(s->value, p, s->field, s->addr)) {
            alive_[p] = false;
            changed = true;
            continue;
          }
        }
        // An earlier store to the same cell with no read in between is dead.
        for (int q = p - 1; q >= 0; --q) {
          if (!alive_[q]) continue;
          auto ref = mem_ref(ins[q]);
          if (!ref) continue;
          if (ref->field != s->field) continue;
          const bool same = *ref->addr == s->addr;
          if (const auto *prev = std::get_if<Store>(&ins[q]); prev && same) {
            if (!prev->activating || (s->activating && !other_field_access_between(q, p, s->field))) {
              alive_[q] = false;
              changed = true;
            }
            break;
          }
          if (reads_memory(ins[q]) && may_alias(*ref->addr, s->addr)) break;
        }
      }
    }
    return changed;
  }

  bool write_between(int from, int to, FieldId f, const Address &addr) const {
    for (int q = from + 1; q < to; ++q) {
      if (!alive_[q] || !is_write(body_.instrs[q])) continue;
      auto ref = mem_ref(body_.instrs[q]);
      if (ref->field == f && may_alias(*ref->addr, addr)) return true;
    }
    return false;
  }

  bool other_field_access_between(int from, int to, FieldId f) const {
    for (int q = from + 1; q < to; ++q) {
      if (!alive_[q]) continue;
      auto ref = mem_ref(body_.instrs[q]);
      if (ref && ref->field != f) return true;
    }
    return false;
  }

  // (y op c1) op c2  ->  y op (c1 op c2) for op in {add, mul}, when the inner
  // operation has no other user. The inner slot is reused for the folded
  // constant so the instruction count does not grow.
  bool reassociate(int p) {
    auto &ins = body_.instrs;
    auto &outer = std::get<BinOp>(ins[p]);
    if (outer.op != BinOpKind::Add && outer.op != BinOpKind::Mul) return false;
    int inner_pos = -1, c2 = -1;
    if (is_const(ins[outer.rhs]) && std::holds_alternative<BinOp>(ins[outer.lhs])) {
      inner_pos = outer.lhs;
      c2 = outer.rhs;
    } else if (is_const(ins[outer.lhs]) && std::holds_alternative<BinOp>(ins[outer.rhs])) {
      inner_pos = outer.rhs;
      c2 = outer.lhs;
    } else {
      return false;
    }
    const auto inner = std::get<BinOp>(ins[inner_pos]);
    if (inner.op != outer.op) return false;
    int y = -1, c1 = -1;
    if (is_const(ins[inner.rhs])) {
      y = inner.lhs;
      c1 = inner.rhs;
    } else if (is_const(ins[inner.lhs])) {
      y = inner.rhs;
      c1 = inner.lhs;
    } else {
      return false;
    }
    if (use_count(inner_pos) != 1) return false;
    auto folded = fold(outer.op, ins[c1], ins[c2]);
    if (!folded) return false;
    ins[inner_pos] = *folded;
    outer.lhs = y;
    outer.rhs = inner_pos;
    return true;
  }

  // Drops dead and replaced instructions and renumbers operands.
  bool compact() {
    auto &ins = body_.instrs;
    const int n = static_cast<int>(ins.size());
    if (static_cast<int>(alive_.size()) != n) reset();
    for (int p = 0; p < n; ++p) for_each_operand(ins[p], [&](int &op) { op = resolve(op); });

    std::vector<bool> live(n, false);
    for (int p = n - 1; p >= 0; --p) {
      if (!alive_[p]) continue;
      if (has_side_effect(ins[p])) live[p] = true;
      if (!live[p]) continue;
      for_each_operand(ins[p], [&](int op) { live[op] = true; });
    }
    std::vector<int> remap(n, -1);
    std::vector<Instruction> out;
    out.reserve(n);
    for (int p = 0; p < n; ++p) {
      if (!live[p]) continue;
      remap[p] = static_cast<int>(out.size());
      Instruction copy = ins[p];
      for_each_operand(copy, [&](int &op) { op = remap[op]; });
      out.push_back(std::move(copy));
    }
    const bool shrunk = out.size() != ins.size();
    ins = std::move(out);
    reset();
    return shrunk;
  }

  TaskBody body_;
  std::vector<int> repl_;
  std::vector<bool> alive_;
};

}  // namespace

TaskBody dataflow_optimize(const TaskBody &body) {
  if (body.kind == TaskKind::ListGen) return body;
  return Optimizer(body).run();
}

TaskBody demote_atomics(const TaskBody &body, const std::map<FieldId, AccessVerdict> &verdicts,
                        const std::set<FieldId> &fields) {
  for (FieldId f : fields) {
    if (body.kind == TaskKind::Serial) continue;
    auto it = verdicts.find(f);
    if (it == verdicts.end() || !it->second.injective)
      throw std::invalid_argument("atomic demotion on field " + std::to_string(f) +
                                  " needs an injective access in a looping task");
  }
  TaskBody out = body;
  out.instrs.clear();
  std::vector<int> remap(body.instrs.size(), -1);
  for (std::size_t p = 0; p < body.instrs.size(); ++p) {
    Instruction ins = body.instrs[p];
    for_each_operand(ins, [&](int &op) { op = remap[op]; });
    if (const auto *a = std::get_if<AtomicAdd>(&ins); a && fields.count(a->field)) {
      const int load = static_cast<int>(out.instrs.size());
      out.instrs.push_back(Load{a->field, a->addr});
      out.instrs.push_back(BinOp{BinOpKind::Add, load, a->value});
      out.instrs.push_back(Store{a->field, a->addr, load + 1, a->activating});
      remap[p] = load + 2;
      continue;
    }
    remap[p] = static_cast<int>(out.instrs.size());
    out.instrs.push_back(std::move(ins));
  }
  return out;
}

TaskBody demote_legal_atomics(const TaskBody &body, const SNodeTree &layout) {
  const auto verdicts = access_analysis(body, layout);
  std::set<FieldId> fields;
  for (const auto &ins : body.instrs) {
    if (const auto *a = std::get_if<AtomicAdd>(&ins)) {
      if (body.kind == TaskKind::Serial || verdicts.at(a->field).injective) fields.insert(a->field);
    }
  }
  if (fields.empty()) return body;
  return demote_atomics(body, verdicts, fields);
}

TaskBody strip_stores(const TaskBody &body, const std::set<FieldId> &fields) {
  TaskBody out = body;
  out.instrs.clear();
  std::vector<int> remap(body.instrs.size(), -1);
  // Stores are never operands, so dropping them leaves operand order intact.
  for (std::size_t p = 0; p < body.instrs.size(); ++p) {
    const auto &ins = body.instrs[p];
    if (auto ref = mem_ref(ins); ref && is_write(ins) && fields.count(ref->field)) continue;
    Instruction copy = ins;
    for_each_operand(copy, [&](int &op) { op = remap[op]; });
    remap[p] = static_cast<int>(out.instrs.size());
    out.instrs.push_back(std::move(copy));
  }
  return dataflow_optimize(out);
}

}  // namespace sparseflow
