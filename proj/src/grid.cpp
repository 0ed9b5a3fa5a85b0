#include "sparseflow/grid.hpp"

#include <sodium.h>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sparseflow {

std::string to_string(const Scalar &s) {
  std::ostringstream os;
  if (is_float(s)) {
    os.precision(17);
    os << std::get<double>(s);
  } else {
    os << std::get<std::int64_t>(s);
  }
  return os.str();
}

Scalar zero_of(ScalarType type) {
  if (type == ScalarType::Float64) return 0.0;
  return std::int64_t{0};
}

SparseGrid::SparseGrid(std::shared_ptr<const SNodeTree> layout)
    : layout_(std::move(layout)),
      masks_(layout_->size()),
      values_(layout_->num_fields()),
      lists_(layout_->size()) {
  for (SNodeId i = 0; i < layout_->size(); ++i) lists_[i].snode = i;
  lists_[layout_->root()].entries.push_back(Coord{});
  for (const auto &f : layout_->fields()) {
    if (!f.sparse_ancestors.empty()) continue;
    auto &vals = values_[f.id];
    const Scalar zero = zero_of(f.type);
    for_each_coord(f.shape, f.axes, [&](const Coord &c) { vals.emplace_hint(vals.end(), c, zero); });
  }
}

void SparseGrid::check_cell(FieldId f, const Coord &cell) const {
  if (f < 0 || f >= layout_->num_fields()) throw RuntimeTrap("unknown field id " + std::to_string(f));
  if (!layout_->in_bounds(f, cell)) {
    const auto &info = layout_->field(f);
    throw RuntimeTrap("index " + to_string(cell, info.axes) + " out of range for field '" + info.name +
                      "' of shape " + to_string(info.shape, info.axes));
  }
}

void SparseGrid::zero_fill_entry(SNodeId node, const Coord &entry) {
  const Coord &ns = layout_->shape(node);
  for (FieldId g : layout_->fields_under(node)) {
    const auto &info = layout_->field(g);
    if (info.sparse_ancestors.empty() || info.sparse_ancestors.back() != node) continue;
    Coord block;
    for (int a = 0; a < kMaxAxes; ++a) block[a] = info.shape[a] / ns[a];
    const Scalar zero = zero_of(info.type);
    auto &vals = values_[g];
    for_each_coord(block, info.axes, [&](const Coord &off) {
      Coord cell;
      for (int a = 0; a < kMaxAxes; ++a) cell[a] = entry[a] * block[a] + off[a];
      vals.emplace(cell, zero);
    });
  }
}

int SparseGrid::activate(FieldId f, const Coord &cell) {
  check_cell(f, cell);
  int activated = 0;
  for (SNodeId s : layout_->field(f).sparse_ancestors) {
    const Coord e = layout_->level_coord(f, s, cell);
    if (masks_[s].insert(e).second) {
      ++allocator_;
      ++activated;
      zero_fill_entry(s, e);
    }
  }
  return activated;
}

bool SparseGrid::is_active(FieldId f, const Coord &cell) const {
  check_cell(f, cell);
  for (SNodeId s : layout_->field(f).sparse_ancestors) {
    if (!masks_[s].count(layout_->level_coord(f, s, cell))) return false;
  }
  return true;
}

Scalar SparseGrid::read_value(FieldId f, const Coord &cell) const {
  check_cell(f, cell);
  const auto &vals = values_[f];
  auto it = vals.find(cell);
  if (it == vals.end()) return zero_of(layout_->field(f).type);
  return it->second;
}

void SparseGrid::write_value(FieldId f, const Coord &cell, const Scalar &v, bool activating) {
  check_cell(f, cell);
  const auto &info = layout_->field(f);
  Scalar stored = v;
  if (info.type == ScalarType::Int64 && is_float(v))
    throw RuntimeTrap("float value stored into int64 field '" + info.name + "'");
  if (info.type == ScalarType::Float64 && !is_float(v)) stored = as_double(v);
  if (activating) {
    activate(f, cell);
  } else if (!is_active(f, cell)) {
    throw RuntimeTrap("non-activating write to inactive cell " + to_string(cell, info.axes) + " of field '" +
                      info.name + "'");
  }
  values_[f][cell] = stored;
}

bool SparseGrid::entry_active(SNodeId node, const Coord &entry) const {
  if (!layout_->is_sparse(node)) return true;
  return masks_.at(node).count(entry) > 0;
}

const ElementList &SparseGrid::generate_list(SNodeId node, std::int64_t version) {
  if (node == layout_->root()) throw std::invalid_argument("the root list is implicit");
  const auto &desc = layout_->node(node);
  if (desc.kind == SNodeKind::Place) throw std::invalid_argument("place nodes have no element list");
  const ElementList &parent = lists_[layout_->parent(node)];
  const bool sparse = layout_->is_sparse(node);
  std::vector<Coord> out;
  for (const Coord &p : parent.entries) {
    for_each_coord(Coord{desc.extents}, desc.axes, [&](const Coord &off) {
      Coord child;
      for (int a = 0; a < kMaxAxes; ++a) {
        if (desc.axes & (1u << a)) child[a] = p[a] * desc.extents[a] + off[a];
      }
      if (!sparse || masks_[node].count(child)) out.push_back(child);
    });
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  auto &l = lists_[node];
  l.entries = std::move(out);
  l.version = version;
  return l;
}

const ElementList &SparseGrid::list(SNodeId node) const { return lists_.at(node); }

GridSnapshot SparseGrid::snapshot() const {
  GridSnapshot s;
  s.masks = masks_;
  s.values = values_;
  s.allocator = allocator_;
  return s;
}

namespace {

bool scalar_equal(const Scalar &a, const Scalar &b, double rel_tol) {
  if (!is_float(a) && !is_float(b)) return std::get<std::int64_t>(a) == std::get<std::int64_t>(b);
  const double x = as_double(a), y = as_double(b);
  if (x == y) return true;
  return std::fabs(x - y) <= rel_tol * std::max(std::fabs(x), std::fabs(y));
}

}  // namespace

SnapshotDiff compare_snapshots(const SNodeTree &layout, const GridSnapshot &a, const GridSnapshot &b,
                               double rel_tol, const std::optional<std::set<FieldId>> &fields) {
  SnapshotDiff d;
  auto fail = [&](std::string msg) {
    d.equal = false;
    d.first_divergence = std::move(msg);
    return d;
  };
  std::set<SNodeId> masks_to_check;
  for (const auto &f : layout.fields()) {
    if (fields && !fields->count(f.id)) continue;
    masks_to_check.insert(f.sparse_ancestors.begin(), f.sparse_ancestors.end());
  }
  for (SNodeId s : masks_to_check) {
    const auto &ma = a.masks.at(s), &mb = b.masks.at(s);
    if (ma == mb) continue;
    const AxisMask axes = layout.axes(s);
    for (const Coord &c : ma) {
      if (!mb.count(c)) return fail("mask of snode " + std::to_string(s) + ": entry " + to_string(c, axes) +
                                    " active only in the first snapshot");
    }
    for (const Coord &c : mb) {
      if (!ma.count(c)) return fail("mask of snode " + std::to_string(s) + ": entry " + to_string(c, axes) +
                                    " active only in the second snapshot");
    }
  }
  for (const auto &f : layout.fields()) {
    if (fields && !fields->count(f.id)) continue;
    const auto &va = a.values.at(f.id), &vb = b.values.at(f.id);
    auto ia = va.begin(), ib = vb.begin();
    for (; ia != va.end() && ib != vb.end(); ++ia, ++ib) {
      if (ia->first != ib->first) {
        const Coord &c = std::min(ia->first, ib->first);
        return fail("field '" + f.name + "' cell " + to_string(c, f.axes) + " active in only one snapshot");
      }
      if (!scalar_equal(ia->second, ib->second, rel_tol)) {
        return fail("field '" + f.name + "' cell " + to_string(ia->first, f.axes) + ": " + to_string(ia->second) +
                    " vs " + to_string(ib->second));
      }
    }
    if (ia != va.end() || ib != vb.end()) return fail("field '" + f.name + "' active cell counts differ");
  }
  if (!fields && a.allocator != b.allocator) {
    return fail("allocator counter " + std::to_string(a.allocator) + " vs " + std::to_string(b.allocator));
  }
  return d;
}

std::string snapshot_digest(const SNodeTree &layout, const GridSnapshot &snap,
                            const std::optional<std::set<FieldId>> &fields) {
  std::ostringstream os;
  std::set<SNodeId> masks;
  for (const auto &f : layout.fields()) {
    if (fields && !fields->count(f.id)) continue;
    masks.insert(f.sparse_ancestors.begin(), f.sparse_ancestors.end());
  }
  for (SNodeId s : masks) {
    os << "mask " << s << ":";
    for (const Coord &c : snap.masks.at(s)) os << " " << to_string(c, layout.axes(s));
    os << "\n";
  }
  for (const auto &f : layout.fields()) {
    if (fields && !fields->count(f.id)) continue;
    os << "field " << f.name << ":";
    for (const auto &[c, v] : snap.values.at(f.id)) os << " " << to_string(c, f.axes) << "=" << to_string(v);
    os << "\n";
  }
  if (!fields) os << "allocator " << snap.allocator << "\n";
  const std::string text = os.str();
  if (sodium_init() < 0) throw std::runtime_error("libsodium initialization failed");
  unsigned char out[16];
  crypto_generichash(out, sizeof out, reinterpret_cast<const unsigned char *>(text.data()), text.size(), nullptr, 0);
  static const char *hex = "0123456789abcdef";
  std::string h;
  for (unsigned char b : out) {
    h += hex[b >> 4];
    h += hex[b & 15];
  }
  return h;
}

}  // namespace sparseflow
