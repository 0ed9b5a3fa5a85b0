#pragma once

#include <initializer_list>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sparseflow/task.hpp"

namespace sparseflow {

// Shorthands for index expressions on loop axes i, j, k.
namespace ix {
inline AxisIndex i() { return AxisIndex::loop(0); }
inline AxisIndex j() { return AxisIndex::loop(1); }
inline AxisIndex k() { return AxisIndex::loop(2); }
inline AxisIndex i_plus(std::int64_t c) { return AxisIndex::plus(0, c); }
inline AxisIndex j_plus(std::int64_t c) { return AxisIndex::plus(1, c); }
inline AxisIndex i_div(std::int64_t c) { return AxisIndex::floordiv(0, c); }
inline AxisIndex j_div(std::int64_t c) { return AxisIndex::floordiv(1, c); }
inline AxisIndex i_mul(std::int64_t c) { return AxisIndex::times(0, c); }
inline AxisIndex at(std::int64_t c) { return AxisIndex::constant(c); }
}  // namespace ix

inline constexpr AxisMask kAxisI = 0b001;
inline constexpr AxisMask kAxesIJ = 0b011;
inline constexpr AxisMask kAxesIJK = 0b111;

// Assembles an SNode tree top-down. Node 0 is the root.
class LayoutBuilder {
 public:
  LayoutBuilder() {
    SNodeDesc root;
    root.id = 0;
    root.kind = SNodeKind::Root;
    nodes_.push_back(root);
  }

  static constexpr SNodeId root() { return 0; }

  // `extents` lists one extent per used axis, in axis order.
  SNodeId child(SNodeId parent, SNodeKind kind, AxisMask axes, std::initializer_list<std::int64_t> extents) {
    return child(parent, kind, axes, std::vector<std::int64_t>(extents));
  }
  SNodeId child(SNodeId parent, SNodeKind kind, AxisMask axes, const std::vector<std::int64_t> &extents) {
    SNodeDesc d;
    d.id = static_cast<SNodeId>(nodes_.size());
    d.kind = kind;
    d.axes = axes;
    std::size_t k = 0;
    for (int a = 0; a < kMaxAxes; ++a) {
      if (axes & (1u << a)) d.extents[a] = k < extents.size() ? extents[k++] : 1;
    }
    return attach(parent, std::move(d));
  }
  SNodeId dense(SNodeId parent, AxisMask axes, std::initializer_list<std::int64_t> extents) {
    return child(parent, SNodeKind::Dense, axes, extents);
  }
  SNodeId indirection(SNodeId parent, AxisMask axes, std::initializer_list<std::int64_t> extents) {
    return child(parent, SNodeKind::Indirection, axes, extents);
  }
  SNodeId bitmasked(SNodeId parent, AxisMask axes, std::initializer_list<std::int64_t> extents) {
    return child(parent, SNodeKind::Bitmasked, axes, extents);
  }
  SNodeId place(SNodeId parent, std::string field, ScalarType type = ScalarType::Int64) {
    SNodeDesc d;
    d.id = static_cast<SNodeId>(nodes_.size());
    d.kind = SNodeKind::Place;
    d.field = std::move(field);
    d.type = type;
    return attach(parent, std::move(d));
  }

  const std::vector<SNodeDesc> &descriptors() const { return nodes_; }
  std::shared_ptr<const SNodeTree> build() const { return std::make_shared<const SNodeTree>(SNodeTree::build(nodes_)); }

 private:
  SNodeId attach(SNodeId parent, SNodeDesc d) {
    const SNodeId id = d.id;
    nodes_.at(parent).children.push_back(id);
    nodes_.push_back(std::move(d));
    return id;
  }

  std::vector<SNodeDesc> nodes_;
};

// Appends instructions to a kernel and returns operand positions.
class KernelBuilder {
 public:
  static KernelBuilder serial(std::string name) { return KernelBuilder(std::move(name), TaskKind::Serial); }
  static KernelBuilder range_for(std::string name, std::int64_t begin, std::int64_t end) {
    KernelBuilder b(std::move(name), TaskKind::RangeFor);
    b.k_.begin = begin;
    b.k_.end = end;
    return b;
  }
  static KernelBuilder struct_for(std::string name, FieldId over) {
    KernelBuilder b(std::move(name), TaskKind::StructFor);
    b.k_.over = over;
    return b;
  }

  int const_int(std::int64_t v) { return push(ConstInt{v}); }
  int const_float(double v) { return push(ConstFloat{v}); }
  int index(int axis) { return push(LoopIndexVal{axis}); }
  int binop(BinOpKind op, int lhs, int rhs) { return push(BinOp{op, lhs, rhs}); }
  int add(int lhs, int rhs) { return binop(BinOpKind::Add, lhs, rhs); }
  int sub(int lhs, int rhs) { return binop(BinOpKind::Sub, lhs, rhs); }
  int mul(int lhs, int rhs) { return binop(BinOpKind::Mul, lhs, rhs); }
  int div(int lhs, int rhs) { return binop(BinOpKind::Div, lhs, rhs); }
  int load(FieldId f, Address addr) { return push(Load{f, std::move(addr)}); }
  void store(FieldId f, Address addr, int value, bool activating = true) {
    push(Store{f, std::move(addr), value, activating});
  }
  void atomic_add(FieldId f, Address addr, int value, bool activating = true) {
    push(AtomicAdd{f, std::move(addr), value, activating});
  }

  Kernel build() const { return k_; }

 private:
  KernelBuilder(std::string name, TaskKind kind) {
    k_.name = std::move(name);
    k_.kind = kind;
  }
  int push(Instruction ins) {
    k_.instrs.push_back(std::move(ins));
    return static_cast<int>(k_.instrs.size()) - 1;
  }

  Kernel k_;
};

}  // namespace sparseflow
