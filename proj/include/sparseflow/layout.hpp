#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sparseflow {

using SNodeId = int;
using FieldId = int;

inline constexpr int kMaxAxes = 3;
inline constexpr std::int64_t kMaxExtent = 1 << 10;
inline constexpr int kMaxDepth = 5;

// Per-axis index. Axis slots are fixed (i=0, j=1, k=2); unused slots stay 0.
struct Coord {
  std::array<std::int64_t, kMaxAxes> v{0, 0, 0};

  std::int64_t &operator[](int a) { return v[a]; }
  std::int64_t operator[](int a) const { return v[a]; }
  auto operator<=>(const Coord &) const = default;
  bool operator==(const Coord &) const = default;
};

std::string to_string(const Coord &c, std::uint8_t axes);

enum class SNodeKind : std::uint8_t { Root, Dense, Indirection, Bitmasked, Place };
enum class ScalarType : std::uint8_t { Int64, Float64 };

const char *to_string(SNodeKind kind);
const char *to_string(ScalarType type);

// Bit a set means axis slot a is used.
using AxisMask = std::uint8_t;

struct SNodeDesc {
  SNodeId id = 0;
  SNodeKind kind = SNodeKind::Dense;
  AxisMask axes = 0;
  std::array<std::int64_t, kMaxAxes> extents{1, 1, 1};
  std::vector<SNodeId> children;
  // Place only.
  std::string field;
  ScalarType type = ScalarType::Int64;
};

class LayoutError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FieldInfo {
  FieldId id = 0;
  std::string name;
  SNodeId place = 0;
  SNodeId leaf = 0;  // parent of the place node
  ScalarType type = ScalarType::Int64;
  AxisMask axes = 0;
  Coord shape;  // 1 on unused axes
  std::vector<SNodeId> path;              // non-root ancestors, top-down
  std::vector<SNodeId> sparse_ancestors;  // subset of path, top-down
};

// Validated, immutable SNode tree. Node ids are dense indices [0, size()).
class SNodeTree {
 public:
  // Throws LayoutError when the descriptor violates a tree invariant.
  static SNodeTree build(std::vector<SNodeDesc> nodes);

  int size() const { return static_cast<int>(nodes_.size()); }
  SNodeId root() const { return root_; }
  const SNodeDesc &node(SNodeId id) const { return nodes_.at(id); }
  const std::vector<SNodeDesc> &nodes() const { return nodes_; }
  SNodeId parent(SNodeId id) const { return parent_.at(id); }

  // Cumulative per-axis shape: product of extents from the root down to id.
  const Coord &shape(SNodeId id) const { return shape_.at(id); }
  AxisMask axes(SNodeId id) const { return axes_.at(id); }
  bool is_sparse(SNodeId id) const;
  // True when some node on the path root..id carries a mask.
  bool needs_list(SNodeId id) const { return needs_list_.at(id); }
  int depth(SNodeId id) const;

  int num_fields() const { return static_cast<int>(fields_.size()); }
  const FieldInfo &field(FieldId f) const { return fields_.at(f); }
  const std::vector<FieldInfo> &fields() const { return fields_; }
  std::optional<FieldId> find_field(const std::string &name) const;
  std::vector<FieldId> fields_under(SNodeId id) const;

  // Level-local index of `cell` (full resolution coord of field f) at ancestor `level`.
  Coord level_coord(FieldId f, SNodeId level, const Coord &cell) const;
  bool in_bounds(FieldId f, const Coord &cell) const;
  std::int64_t num_cells(SNodeId id) const;

 private:
  std::vector<SNodeDesc> nodes_;
  std::vector<SNodeId> parent_;
  std::vector<Coord> shape_;
  std::vector<AxisMask> axes_;
  std::vector<bool> needs_list_;
  std::vector<FieldInfo> fields_;
  SNodeId root_ = 0;
};

// Visits every coordinate of the box [0, shape) over `axes`, lexicographically.
template <typename Fn>
void for_each_coord(const Coord &shape, AxisMask axes, Fn &&fn) {
  Coord c;
  for (int a = 0; a < kMaxAxes; ++a) {
    if ((axes & (1u << a)) && shape[a] == 0) return;
  }
  while (true) {
    fn(static_cast<const Coord &>(c));
    int a = kMaxAxes - 1;
    for (; a >= 0; --a) {
      if (!(axes & (1u << a))) continue;
      if (++c[a] < shape[a]) break;
      c[a] = 0;
    }
    if (a < 0) return;
  }
}

inline int axis_count(AxisMask axes) { return __builtin_popcount(axes); }

}  // namespace sparseflow
