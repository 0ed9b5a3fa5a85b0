#include "sparseflow/layout.hpp"

#include <algorithm>
#include <sstream>

namespace sparseflow {

std::string to_string(const Coord &c, AxisMask axes) {
  std::ostringstream os;
  os << '[';
  bool first = true;
  for (int a = 0; a < kMaxAxes; ++a) {
    if (!(axes & (1u << a))) continue;
    if (!first) os << ',';
    os << c[a];
    first = false;
  }
  os << ']';
  return os.str();
}

const char *to_string(SNodeKind kind) {
  switch (kind) {
    case SNodeKind::Root: return "root";
    case SNodeKind::Dense: return "dense";
    case SNodeKind::Indirection: return "indirection";
    case SNodeKind::Bitmasked: return "bitmasked";
    case SNodeKind::Place: return "place";
  }
  return "?";
}

const char *to_string(ScalarType type) {
  return type == ScalarType::Int64 ? "int64" : "float64";
}

namespace {

bool is_power_of_two(std::int64_t v) { return v >= 1 && (v & (v - 1)) == 0; }

std::string where(const SNodeDesc &n) {
  return "snode " + std::to_string(n.id) + " (" + to_string(n.kind) + ")";
}

}  // namespace

SNodeTree SNodeTree::build(std::vector<SNodeDesc> nodes) {
  SNodeTree t;
  const int n = static_cast<int>(nodes.size());
  if (n == 0) throw LayoutError("layout has no nodes");

  t.nodes_.resize(n);
  std::vector<bool> seen(n, false);
  for (auto &d : nodes) {
    if (d.id < 0 || d.id >= n) throw LayoutError("snode id " + std::to_string(d.id) + " out of range");
    if (seen[d.id]) throw LayoutError("duplicate snode id " + std::to_string(d.id));
    seen[d.id] = true;
    t.nodes_[d.id] = std::move(d);
  }

  int roots = 0;
  for (const auto &d : t.nodes_) {
    if (d.kind == SNodeKind::Root) {
      t.root_ = d.id;
      ++roots;
    }
  }
  if (roots != 1) throw LayoutError("layout must have exactly one root, found " + std::to_string(roots));

  t.parent_.assign(n, -1);
  for (const auto &d : t.nodes_) {
    if (d.kind == SNodeKind::Place && !d.children.empty())
      throw LayoutError(where(d) + ": place node cannot have children");
    for (SNodeId c : d.children) {
      if (c < 0 || c >= n) throw LayoutError(where(d) + ": dangling child " + std::to_string(c));
      if (c == t.root_) throw LayoutError(where(d) + ": root cannot be a child");
      if (t.parent_[c] != -1) throw LayoutError("snode " + std::to_string(c) + " has two parents");
      t.parent_[c] = d.id;
    }
  }

  t.shape_.assign(n, Coord{{1, 1, 1}});
  t.axes_.assign(n, 0);
  t.needs_list_.assign(n, false);

  // Top-down walk from the root; anything unreached is disconnected.
  std::vector<SNodeId> order{t.root_};
  std::vector<bool> reached(n, false);
  reached[t.root_] = true;
  for (std::size_t qi = 0; qi < order.size(); ++qi) {
    const SNodeId id = order[qi];
    const auto &d = t.nodes_[id];
    if (id != t.root_) {
      const SNodeId p = t.parent_[id];
      const auto &pd = t.nodes_[p];
      if (d.kind == SNodeKind::Root) throw LayoutError(where(d) + ": nested root");
      if (d.kind == SNodeKind::Place) {
        t.axes_[id] = t.axes_[p];
        t.shape_[id] = t.shape_[p];
        t.needs_list_[id] = t.needs_list_[p];
      } else {
        if (d.axes == 0 || d.axes >= (1u << kMaxAxes))
          throw LayoutError(where(d) + ": needs 1 to 3 axes");
        if (pd.kind != SNodeKind::Root && pd.axes != d.axes)
          throw LayoutError(where(d) + ": axis mismatch with parent snode " + std::to_string(p));
        for (int a = 0; a < kMaxAxes; ++a) {
          const std::int64_t e = d.extents[a];
          if (!(d.axes & (1u << a))) {
            if (e != 1) throw LayoutError(where(d) + ": extent on unused axis must be 1");
            continue;
          }
          if (!is_power_of_two(e))
            throw LayoutError(where(d) + ": extent " + std::to_string(e) + " is not a power of two");
          if (e > kMaxExtent) throw LayoutError(where(d) + ": extent exceeds " + std::to_string(kMaxExtent));
          t.shape_[id][a] = t.shape_[p][a] * e;
          if (t.shape_[id][a] > kMaxExtent)
            throw LayoutError(where(d) + ": cumulative extent exceeds " + std::to_string(kMaxExtent));
        }
        t.axes_[id] = d.axes;
        t.needs_list_[id] = t.needs_list_[p] || t.is_sparse(id);
      }
      if (t.depth(id) > kMaxDepth + (d.kind == SNodeKind::Place ? 1 : 0))
        throw LayoutError(where(d) + ": tree deeper than " + std::to_string(kMaxDepth));
    }
    for (SNodeId c : d.children) {
      if (reached[c]) throw LayoutError("cycle through snode " + std::to_string(c));
      reached[c] = true;
      order.push_back(c);
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!reached[i]) throw LayoutError("snode " + std::to_string(i) + " is not connected to the root");
  }

  for (const auto &d : t.nodes_) {
    if (d.kind != SNodeKind::Place) continue;
    if (d.field.empty()) throw LayoutError(where(d) + ": place without a field name");
    FieldInfo f;
    f.id = static_cast<FieldId>(t.fields_.size());
    f.name = d.field;
    f.place = d.id;
    f.leaf = t.parent_[d.id];
    f.type = d.type;
    f.axes = t.axes_[d.id];
    f.shape = t.shape_[d.id];
    for (SNodeId a = f.leaf; a != t.root_; a = t.parent_[a]) f.path.push_back(a);
    std::reverse(f.path.begin(), f.path.end());
    for (SNodeId a : f.path) {
      if (t.is_sparse(a)) f.sparse_ancestors.push_back(a);
    }
    if (t.find_field(f.name)) throw LayoutError("duplicate field name '" + f.name + "'");
    t.fields_.push_back(std::move(f));
  }
  return t;
}

bool SNodeTree::is_sparse(SNodeId id) const {
  const auto k = nodes_.at(id).kind;
  return k == SNodeKind::Indirection || k == SNodeKind::Bitmasked;
}

int SNodeTree::depth(SNodeId id) const {
  int d = 0;
  for (SNodeId a = id; a != root_; a = parent_[a]) ++d;
  return d;
}

std::optional<FieldId> SNodeTree::find_field(const std::string &name) const {
  for (const auto &f : fields_) {
    if (f.name == name) return f.id;
  }
  return std::nullopt;
}

std::vector<FieldId> SNodeTree::fields_under(SNodeId id) const {
  std::vector<FieldId> out;
  for (const auto &f : fields_) {
    for (SNodeId a = f.place; a != -1; a = parent_[a]) {
      if (a == id) {
        out.push_back(f.id);
        break;
      }
    }
  }
  return out;
}

Coord SNodeTree::level_coord(FieldId f, SNodeId level, const Coord &cell) const {
  const auto &info = fields_.at(f);
  const Coord &ls = shape_.at(level);
  Coord out;
  for (int a = 0; a < kMaxAxes; ++a) {
    if (!(axes_[level] & (1u << a))) continue;
    out[a] = cell[a] / (info.shape[a] / ls[a]);
  }
  return out;
}

bool SNodeTree::in_bounds(FieldId f, const Coord &cell) const {
  const auto &info = fields_.at(f);
  for (int a = 0; a < kMaxAxes; ++a) {
    if (info.axes & (1u << a)) {
      if (cell[a] < 0 || cell[a] >= info.shape[a]) return false;
    } else if (cell[a] != 0) {
      return false;
    }
  }
  return true;
}

std::int64_t SNodeTree::num_cells(SNodeId id) const {
  std::int64_t n = 1;
  for (int a = 0; a < kMaxAxes; ++a) n *= shape_.at(id)[a];
  return n;
}

}  // namespace sparseflow
