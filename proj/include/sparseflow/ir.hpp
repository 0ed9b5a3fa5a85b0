#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sparseflow/layout.hpp"

namespace sparseflow {

// One component of an access address, evaluated per loop iteration.
enum class IndexOp : std::uint8_t { Identity, Add, Mul, Div, Const };

struct AxisIndex {
  IndexOp op = IndexOp::Identity;
  int loop_axis = 0;     // loop axis slot (ignored for Const)
  std::int64_t c = 0;    // offset, factor, divisor or constant

  static AxisIndex loop(int axis) { return {IndexOp::Identity, axis, 0}; }
  static AxisIndex plus(int axis, std::int64_t c) { return {IndexOp::Add, axis, c}; }
  static AxisIndex times(int axis, std::int64_t c) { return {IndexOp::Mul, axis, c}; }
  static AxisIndex floordiv(int axis, std::int64_t c) { return {IndexOp::Div, axis, c}; }
  static AxisIndex constant(std::int64_t c) { return {IndexOp::Const, 0, c}; }

  bool operator==(const AxisIndex &o) const {
    if (op != o.op) return false;
    if (op == IndexOp::Const) return c == o.c;
    if (op == IndexOp::Identity) return loop_axis == o.loop_axis;
    return loop_axis == o.loop_axis && c == o.c;
  }
  bool is_identity_on(int axis) const {
    return loop_axis == axis && (op == IndexOp::Identity || (op == IndexOp::Add && c == 0) ||
                                 ((op == IndexOp::Mul || op == IndexOp::Div) && c == 1));
  }
  std::int64_t eval(const Coord &loop) const;
};

// One AxisIndex per used axis of the accessed field, in axis-slot order.
using Address = std::vector<AxisIndex>;

std::string to_string(const AxisIndex &ix);
std::string to_string(const Address &addr);

enum class BinOpKind : std::uint8_t { Add, Sub, Mul, Div, Min, Max };
const char *to_string(BinOpKind op);

// Integer arithmetic with floor division; false on overflow or division by zero.
bool checked_int_op(BinOpKind op, std::int64_t a, std::int64_t b, std::int64_t &out);
// Float arithmetic; false when the result is not finite.
bool checked_float_op(BinOpKind op, double a, double b, double &out);

struct ConstInt {
  std::int64_t value = 0;
  bool operator==(const ConstInt &) const = default;
};
struct ConstFloat {
  double value = 0;
  bool operator==(const ConstFloat &o) const;  // bitwise
};
struct LoopIndexVal {
  int axis = 0;
  bool operator==(const LoopIndexVal &) const = default;
};
struct BinOp {
  BinOpKind op = BinOpKind::Add;
  int lhs = 0;
  int rhs = 0;
  bool operator==(const BinOp &) const = default;
};
struct Load {
  FieldId field = 0;
  Address addr;
  bool operator==(const Load &) const = default;
};
struct Store {
  FieldId field = 0;
  Address addr;
  int value = 0;
  bool activating = true;
  bool operator==(const Store &) const = default;
};
struct AtomicAdd {
  FieldId field = 0;
  Address addr;
  int value = 0;
  bool activating = true;
  bool operator==(const AtomicAdd &) const = default;
};

// Operands reference earlier instructions by position (single assignment).
using Instruction = std::variant<ConstInt, ConstFloat, LoopIndexVal, BinOp, Load, Store, AtomicAdd>;

bool has_side_effect(const Instruction &ins);
bool produces_value(const Instruction &ins);
// Calls fn(int&) for every operand slot of the instruction.
void for_each_operand(Instruction &ins, const std::function<void(int &)> &fn);
void for_each_operand(const Instruction &ins, const std::function<void(int)> &fn);

enum class TaskKind : std::uint8_t { Serial, RangeFor, StructFor, ListGen };
const char *to_string(TaskKind kind);

struct TaskBody {
  TaskKind kind = TaskKind::Serial;
  std::int64_t begin = 0;  // RangeFor
  std::int64_t end = 0;    // RangeFor
  SNodeId snode = -1;      // StructFor: leaf being iterated; ListGen: target node
  std::vector<Instruction> instrs;

  bool operator==(const TaskBody &) const = default;
  bool is_loop() const { return kind == TaskKind::RangeFor || kind == TaskKind::StructFor; }
};

class IRError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Loop axes available to index expressions: axis 0 for RangeFor, the leaf's
// axes for StructFor, none otherwise.
AxisMask loop_axes(const TaskBody &body, const SNodeTree &layout);

// Throws IRError on forward references, bad loop axes, bad constants, or
// address arity mismatches.
void validate_body(const TaskBody &body, const SNodeTree &layout);

std::string to_string(const Instruction &ins, const SNodeTree *layout = nullptr);
std::string to_string(const TaskBody &body, const SNodeTree *layout = nullptr);

// 128-bit content hash of a canonical body serialization.
struct IRHandle {
  std::array<std::uint8_t, 16> bytes{};

  auto operator<=>(const IRHandle &) const = default;
  bool operator==(const IRHandle &) const = default;
  std::string hex() const;
  std::string short_hex() const { return hex().substr(0, 8); }
};

// Canonical byte layout (all integers little-endian):
//   u8 'S','F',1                       magic + format version
//   u8 kind; i64 begin; i64 end; i32 snode; u32 instruction count
//   per instruction: u8 opcode, then
//     0 ConstInt    i64 value
//     1 ConstFloat  u64 IEEE-754 bit pattern
//     2 LoopIndex   u8 axis
//     3 BinOp       u8 op; u32 lhs; u32 rhs
//     4 Load        i32 field; address
//     5 Store       i32 field; address; u32 value; u8 activating
//     6 AtomicAdd   i32 field; address; u32 value; u8 activating
//   address: u8 arity, then per axis u8 op; u8 loop axis; i64 c
std::vector<std::uint8_t> serialize_body(const TaskBody &body);
IRHandle hash_body(const TaskBody &body);

}  // namespace sparseflow

template <>
struct std::hash<sparseflow::IRHandle> {
  std::size_t operator()(const sparseflow::IRHandle &h) const noexcept {
    std::size_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | h.bytes[i];
    return v;
  }
};
