#include "sparseflow/ir.hpp"

#include <sodium.h>

#include <algorithm>
#include <bit>
#include <climits>
#include <cmath>
#include <cstring>
#include <sstream>

namespace sparseflow {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

const char *axis_name(int a) {
  static const char *names[] = {"i", "j", "k"};
  return (a >= 0 && a < kMaxAxes) ? names[a] : "?";
}

}  // namespace

std::int64_t AxisIndex::eval(const Coord &loop) const {
  switch (op) {
    case IndexOp::Identity: return loop[loop_axis];
    case IndexOp::Add: return loop[loop_axis] + c;
    case IndexOp::Mul: return loop[loop_axis] * c;
    case IndexOp::Div: return floor_div(loop[loop_axis], c);
    case IndexOp::Const: return c;
  }
  return 0;
}

std::string to_string(const AxisIndex &ix) {
  const std::string a = axis_name(ix.loop_axis);
  switch (ix.op) {
    case IndexOp::Identity: return a;
    case IndexOp::Add: return ix.c >= 0 ? a + "+" + std::to_string(ix.c) : a + std::to_string(ix.c);
    case IndexOp::Mul: return a + "*" + std::to_string(ix.c);
    case IndexOp::Div: return a + "/" + std::to_string(ix.c);
    case IndexOp::Const: return std::to_string(ix.c);
  }
  return "?";
}

std::string to_string(const Address &addr) {
  std::string s = "[";
  for (std::size_t i = 0; i < addr.size(); ++i) {
    if (i) s += ",";
    s += to_string(addr[i]);
  }
  return s + "]";
}

const char *to_string(BinOpKind op) {
  switch (op) {
    case BinOpKind::Add: return "add";
    case BinOpKind::Sub: return "sub";
    case BinOpKind::Mul: return "mul";
    case BinOpKind::Div: return "div";
    case BinOpKind::Min: return "min";
    case BinOpKind::Max: return "max";
  }
  return "?";
}

const char *to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::Serial: return "serial";
    case TaskKind::RangeFor: return "range_for";
    case TaskKind::StructFor: return "struct_for";
    case TaskKind::ListGen: return "listgen";
  }
  return "?";
}

bool checked_int_op(BinOpKind op, std::int64_t a, std::int64_t b, std::int64_t &out) {
  switch (op) {
    case BinOpKind::Add: return !__builtin_add_overflow(a, b, &out);
    case BinOpKind::Sub: return !__builtin_sub_overflow(a, b, &out);
    case BinOpKind::Mul: return !__builtin_mul_overflow(a, b, &out);
    case BinOpKind::Div: {
      if (b == 0 || (a == INT64_MIN && b == -1)) return false;
      std::int64_t q = a / b;
      if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
      out = q;
      return true;
    }
    case BinOpKind::Min: out = std::min(a, b); return true;
    case BinOpKind::Max: out = std::max(a, b); return true;
  }
  return false;
}

bool checked_float_op(BinOpKind op, double a, double b, double &out) {
  switch (op) {
    case BinOpKind::Add: out = a + b; break;
    case BinOpKind::Sub: out = a - b; break;
    case BinOpKind::Mul: out = a * b; break;
    case BinOpKind::Div: out = a / b; break;
    case BinOpKind::Min: out = std::min(a, b); break;
    case BinOpKind::Max: out = std::max(a, b); break;
  }
  return std::isfinite(out);
}

bool ConstFloat::operator==(const ConstFloat &o) const {
  return std::bit_cast<std::uint64_t>(value) == std::bit_cast<std::uint64_t>(o.value);
}

bool has_side_effect(const Instruction &ins) {
  return std::holds_alternative<Store>(ins) || std::holds_alternative<AtomicAdd>(ins);
}

bool produces_value(const Instruction &ins) { return !has_side_effect(ins); }

void for_each_operand(Instruction &ins, const std::function<void(int &)> &fn) {
  if (auto *b = std::get_if<BinOp>(&ins)) {
    fn(b->lhs);
    fn(b->rhs);
  } else if (auto *s = std::get_if<Store>(&ins)) {
    fn(s->value);
  } else if (auto *a = std::get_if<AtomicAdd>(&ins)) {
    fn(a->value);
  }
}

void for_each_operand(const Instruction &ins, const std::function<void(int)> &fn) {
  Instruction copy = ins;
  for_each_operand(copy, [&](int &v) { fn(v); });
}

AxisMask loop_axes(const TaskBody &body, const SNodeTree &layout) {
  switch (body.kind) {
    case TaskKind::RangeFor: return 1;
    case TaskKind::StructFor: return layout.axes(body.snode);
    default: return 0;
  }
}

void validate_body(const TaskBody &body, const SNodeTree &layout) {
  if (body.kind == TaskKind::RangeFor && body.end < body.begin)
    throw IRError("range_for with end < begin");
  if (body.kind == TaskKind::StructFor || body.kind == TaskKind::ListGen) {
    if (body.snode < 0 || body.snode >= layout.size() || body.snode == layout.root() ||
        layout.node(body.snode).kind == SNodeKind::Place)
      throw IRError(std::string(to_string(body.kind)) + " needs a non-root, non-place snode");
  }
  if (body.kind == TaskKind::ListGen && !body.instrs.empty()) throw IRError("listgen tasks carry no instructions");
  const AxisMask axes = loop_axes(body, layout);

  auto check_addr = [&](int pos, FieldId f, const Address &addr) {
    if (f < 0 || f >= layout.num_fields())
      throw IRError("instruction " + std::to_string(pos) + ": unknown field id " + std::to_string(f));
    const auto &info = layout.field(f);
    if (static_cast<int>(addr.size()) != axis_count(info.axes))
      throw IRError("instruction " + std::to_string(pos) + ": field '" + info.name + "' expects " +
                    std::to_string(axis_count(info.axes)) + " indices");
    for (const auto &ix : addr) {
      if (ix.op == IndexOp::Const) continue;
      if (ix.loop_axis < 0 || ix.loop_axis >= kMaxAxes || !(axes & (1u << ix.loop_axis)))
        throw IRError("instruction " + std::to_string(pos) + ": loop axis " + axis_name(ix.loop_axis) +
                      " not available in a " + to_string(body.kind) + " task");
      if ((ix.op == IndexOp::Mul || ix.op == IndexOp::Div) && ix.c <= 0)
        throw IRError("instruction " + std::to_string(pos) + ": multiplier/divisor must be positive");
    }
  };

  // Value type per instruction: float or not.
  std::vector<bool> is_float_value(body.instrs.size(), false);
  auto check_store_type = [&](int pos, FieldId f, int value) {
    const bool want_float = layout.field(f).type == ScalarType::Float64;
    if (is_float_value[value] != want_float)
      throw IRError("instruction " + std::to_string(pos) + ": " + (want_float ? "int" : "float") +
                    " value written to " + to_string(layout.field(f).type) + " field '" + layout.field(f).name + "'");
  };

  for (int pos = 0; pos < static_cast<int>(body.instrs.size()); ++pos) {
    const auto &ins = body.instrs[pos];
    for_each_operand(ins, [&](int op) {
      if (op < 0 || op >= pos) throw IRError("instruction " + std::to_string(pos) + ": operand must refer backward");
      if (!produces_value(body.instrs[op]))
        throw IRError("instruction " + std::to_string(pos) + ": operand refers to a store");
    });
    if (std::holds_alternative<ConstFloat>(ins)) is_float_value[pos] = true;
    if (const auto *b = std::get_if<BinOp>(&ins)) is_float_value[pos] = is_float_value[b->lhs] || is_float_value[b->rhs];
    if (const auto *li = std::get_if<LoopIndexVal>(&ins)) {
      if (li->axis < 0 || li->axis >= kMaxAxes || !(axes & (1u << li->axis)))
        throw IRError("instruction " + std::to_string(pos) + ": loop index not available");
    } else if (const auto *l = std::get_if<Load>(&ins)) {
      check_addr(pos, l->field, l->addr);
      is_float_value[pos] = layout.field(l->field).type == ScalarType::Float64;
    } else if (const auto *s = std::get_if<Store>(&ins)) {
      check_addr(pos, s->field, s->addr);
      check_store_type(pos, s->field, s->value);
    } else if (const auto *a = std::get_if<AtomicAdd>(&ins)) {
      check_addr(pos, a->field, a->addr);
      check_store_type(pos, a->field, a->value);
    }
  }
}

std::string to_string(const Instruction &ins, const SNodeTree *layout) {
  auto fname = [&](FieldId f) {
    if (layout && f >= 0 && f < layout->num_fields()) return layout->field(f).name;
    return "f" + std::to_string(f);
  };
  std::ostringstream os;
  std::visit(
      [&](const auto &x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ConstInt>) {
          os << "const " << x.value;
        } else if constexpr (std::is_same_v<T, ConstFloat>) {
          os.precision(17);
          os << "const " << x.value << "f";
        } else if constexpr (std::is_same_v<T, LoopIndexVal>) {
          os << "index " << axis_name(x.axis);
        } else if constexpr (std::is_same_v<T, BinOp>) {
          os << to_string(x.op) << " %" << x.lhs << " %" << x.rhs;
        } else if constexpr (std::is_same_v<T, Load>) {
          os << "load " << fname(x.field) << to_string(x.addr);
        } else if constexpr (std::is_same_v<T, Store>) {
          os << (x.activating ? "store! " : "store ") << fname(x.field) << to_string(x.addr) << " = %" << x.value;
        } else {
          os << (x.activating ? "atomic_add! " : "atomic_add ") << fname(x.field) << to_string(x.addr) << " += %"
             << x.value;
        }
      },
      ins);
  return os.str();
}

std::string to_string(const TaskBody &body, const SNodeTree *layout) {
  std::ostringstream os;
  os << to_string(body.kind);
  if (body.kind == TaskKind::RangeFor) os << "(" << body.begin << "," << body.end << ")";
  if (body.kind == TaskKind::StructFor || body.kind == TaskKind::ListGen) os << "(snode " << body.snode << ")";
  os << "\n";
  for (std::size_t i = 0; i < body.instrs.size(); ++i) os << "  %" << i << " = " << to_string(body.instrs[i], layout) << "\n";
  return os.str();
}

namespace {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void address(const Address &addr) {
    u8(static_cast<std::uint8_t>(addr.size()));
    for (const auto &ix : addr) {
      u8(static_cast<std::uint8_t>(ix.op));
      u8(ix.op == IndexOp::Const ? 0 : static_cast<std::uint8_t>(ix.loop_axis));
      i64(ix.op == IndexOp::Identity ? 0 : ix.c);
    }
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

}  // namespace

std::vector<std::uint8_t> serialize_body(const TaskBody &body) {
  ByteWriter w;
  w.u8('S');
  w.u8('F');
  w.u8(1);
  w.u8(static_cast<std::uint8_t>(body.kind));
  w.i64(body.kind == TaskKind::RangeFor ? body.begin : 0);
  w.i64(body.kind == TaskKind::RangeFor ? body.end : 0);
  w.i32(body.kind == TaskKind::StructFor || body.kind == TaskKind::ListGen ? body.snode : -1);
  w.u32(static_cast<std::uint32_t>(body.instrs.size()));
  for (const auto &ins : body.instrs) {
    w.u8(static_cast<std::uint8_t>(ins.index()));
    std::visit(
        [&](const auto &x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, ConstInt>) {
            w.i64(x.value);
          } else if constexpr (std::is_same_v<T, ConstFloat>) {
            w.u64(std::bit_cast<std::uint64_t>(x.value));
          } else if constexpr (std::is_same_v<T, LoopIndexVal>) {
            w.u8(static_cast<std::uint8_t>(x.axis));
          } else if constexpr (std::is_same_v<T, BinOp>) {
            w.u8(static_cast<std::uint8_t>(x.op));
            w.u32(static_cast<std::uint32_t>(x.lhs));
            w.u32(static_cast<std::uint32_t>(x.rhs));
          } else if constexpr (std::is_same_v<T, Load>) {
            w.i32(x.field);
            w.address(x.addr);
          } else {
            w.i32(x.field);
            w.address(x.addr);
            w.u32(static_cast<std::uint32_t>(x.value));
            w.u8(x.activating ? 1 : 0);
          }
        },
        ins);
  }
  return w.take();
}

IRHandle hash_body(const TaskBody &body) {
  static const bool sodium_ready = sodium_init() >= 0;
  if (!sodium_ready) throw std::runtime_error("libsodium failed to initialize");
  const auto bytes = serialize_body(body);
  IRHandle h;
  crypto_generichash(h.bytes.data(), h.bytes.size(), bytes.data(), bytes.size(), nullptr, 0);
  return h;
}

std::string IRHandle::hex() const {
  static const char *digits = "0123456789abcdef";
  std::string s;
  s.reserve(32);
  for (auto b : bytes) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 15]);
  }
  return s;
}

}  // namespace sparseflow
