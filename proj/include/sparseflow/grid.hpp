#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sparseflow/layout.hpp"

namespace sparseflow {

using Scalar = std::variant<std::int64_t, double>;

inline bool is_float(const Scalar &s) { return std::holds_alternative<double>(s); }
inline double as_double(const Scalar &s) {
  return is_float(s) ? std::get<double>(s) : static_cast<double>(std::get<std::int64_t>(s));
}
std::string to_string(const Scalar &s);
Scalar zero_of(ScalarType type);

// A runtime fault raised while executing a task: out-of-range access,
// non-activating write to an inactive cell, integer overflow, NaN, etc.
class RuntimeTrap : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ElementList {
  SNodeId snode = -1;
  std::vector<Coord> entries;  // level-local, ascending, unique
  std::int64_t version = 0;    // launch id of the producing task
};

// Deep, order-canonical copy of masks, values and the allocator counter.
struct GridSnapshot {
  std::vector<std::set<Coord>> masks;                 // per snode; empty for dense nodes
  std::vector<std::map<Coord, Scalar>> values;        // per field; active cells only
  std::int64_t allocator = 0;
};

struct SnapshotDiff {
  bool equal = true;
  std::string first_divergence;
};

// Exact for integers and masks, relative tolerance `rel_tol` for floats.
// When `fields` is given only those fields (and their ancestor masks) are compared.
SnapshotDiff compare_snapshots(const SNodeTree &layout, const GridSnapshot &a, const GridSnapshot &b,
                               double rel_tol = 1e-9,
                               const std::optional<std::set<FieldId>> &fields = std::nullopt);

// Hex digest of the canonical rendering of the snapshot (restricted to
// `fields` and their masks when given). Equal digests mean equal snapshots.
std::string snapshot_digest(const SNodeTree &layout, const GridSnapshot &snap,
                            const std::optional<std::set<FieldId>> &fields = std::nullopt);

// Runtime instance of a layout. Value storage holds an entry for exactly the
// active cells of each field; reads of inactive cells return zero.
class SparseGrid {
 public:
  explicit SparseGrid(std::shared_ptr<const SNodeTree> layout);

  const SNodeTree &layout() const { return *layout_; }
  const std::shared_ptr<const SNodeTree> &layout_ptr() const { return layout_; }

  // Activates every sparse ancestor entry covering `cell`, zero-filling
  // storage that becomes active. Returns the number of entries newly activated.
  int activate(FieldId f, const Coord &cell);
  bool is_active(FieldId f, const Coord &cell) const;
  Scalar read_value(FieldId f, const Coord &cell) const;
  void write_value(FieldId f, const Coord &cell, const Scalar &v, bool activating);

  // Mask of a sparse node, keyed by level-local coordinate.
  bool entry_active(SNodeId node, const Coord &entry) const;
  const std::set<Coord> &mask(SNodeId node) const { return masks_.at(node); }

  // Derives the active-entry list of `node` from its parent's current list and
  // its mask, installs it, and returns it.
  const ElementList &generate_list(SNodeId node, std::int64_t version = 0);
  const ElementList &list(SNodeId node) const;

  std::int64_t allocator_count() const { return allocator_; }
  GridSnapshot snapshot() const;

 private:
  void check_cell(FieldId f, const Coord &cell) const;
  void zero_fill_entry(SNodeId node, const Coord &entry);

  std::shared_ptr<const SNodeTree> layout_;
  std::vector<std::set<Coord>> masks_;
  std::vector<std::map<Coord, Scalar>> values_;
  std::vector<ElementList> lists_;
  std::int64_t allocator_ = 0;
};

}  // namespace sparseflow
