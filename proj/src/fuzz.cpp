#include "sparseflow/fuzz.hpp"

#include <vector>

#include "sparseflow/builder.hpp"

namespace sparseflow {

std::int64_t fuzz_uniform(std::mt19937_64 &rng, std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::int64_t>(rng() % span);
}

namespace {

class Generator {
 public:
  Generator(std::uint64_t seed, const FuzzOptions &o) : rng_(seed), o_(o) {}

  Program run(std::uint64_t seed) {
    Program p;
    p.name = "fuzz_" + std::to_string(seed);
    p.layout = make_layout();
    layout_ = p.layout.get();
    const int nk = static_cast<int>(pick(1, o_.max_kernels));
    for (int k = 0; k < nk; ++k) p.kernels.push_back(make_kernel("k" + std::to_string(k)));
    const int launches = static_cast<int>(pick(1, o_.max_launches));
    for (int l = 0; l < launches; ++l) {
      p.schedule.push_back(Directive::launch(static_cast<int>(pick(0, nk - 1))));
      if (pick(0, 4) == 0) p.schedule.push_back(Directive::sync());
    }
    const int inits = static_cast<int>(pick(0, 4));
    for (int c = 0; c < inits; ++c) {
      const FieldId f = static_cast<FieldId>(pick(0, layout_->num_fields() - 1));
      const auto &info = layout_->field(f);
      Coord cell;
      for (int a = 0; a < kMaxAxes; ++a) {
        if (info.axes & (1u << a)) cell[a] = pick(0, info.shape[a] - 1);
      }
      p.init.push_back({f, cell, pick(-20, 20)});
    }
    return p;
  }

 private:
  std::int64_t pick(std::int64_t lo, std::int64_t hi) { return fuzz_uniform(rng_, lo, hi); }
  bool chance(int one_in) { return pick(0, one_in - 1) == 0; }

  std::shared_ptr<const SNodeTree> make_layout() {
    LayoutBuilder lb;
    int next_field = 0;
    auto place = [&](SNodeId parent) { lb.place(parent, "f" + std::to_string(next_field++)); };
    const int subtrees = static_cast<int>(pick(1, 2));
    for (int t = 0; t < subtrees; ++t) {
      const AxisMask axes = chance(2) ? kAxisI : kAxesIJ;
      const int depth = static_cast<int>(pick(1, o_.max_depth));
      std::vector<std::int64_t> cumulative(kMaxAxes, 1);
      SNodeId node = lb.root();
      std::vector<SNodeId> chain;
      for (int d = 0; d < depth; ++d) {
        static const SNodeKind kinds[] = {SNodeKind::Dense, SNodeKind::Indirection, SNodeKind::Bitmasked};
        const SNodeKind kind = kinds[pick(0, 2)];
        std::vector<std::int64_t> extents;
        for (int a = 0; a < kMaxAxes; ++a) {
          if (!(axes & (1u << a))) continue;
          std::int64_t e = std::int64_t{1} << pick(0, 2);
          while (cumulative[a] * e > 16) e /= 2;
          cumulative[a] *= e;
          extents.push_back(e);
        }
        node = lb.child(node, kind, axes, extents);
        chain.push_back(node);
      }
      const int leaf_fields = static_cast<int>(pick(1, 2));
      for (int f = 0; f < leaf_fields; ++f) place(node);
      if (chain.size() > 1 && chance(3)) place(chain[pick(0, static_cast<std::int64_t>(chain.size()) - 2)]);
    }
    if (chance(4)) place(lb.root());
    return lb.build();
  }

  // Loop domain of the kernel under construction.
  struct Domain {
    TaskKind kind = TaskKind::Serial;
    AxisMask axes = 0;
    Coord hi;  // exclusive upper bound per loop axis
    bool shrunk = false;
  };

  AxisIndex index_for(const Domain &dom, FieldId f, int a) {
    const std::int64_t extent = layout_->field(f).shape[a];
    std::vector<AxisIndex> options;
    const int b = dom.kind == TaskKind::RangeFor ? 0 : a;
    if (dom.axes & (1u << b)) {
      const std::int64_t top = dom.hi[b] - 1;
      if (top < extent) options.push_back(AxisIndex::loop(b));
      if (top >= 0) {
        std::int64_t d = 2;
        while (top / d >= extent) d *= 2;
        options.push_back(AxisIndex::floordiv(b, d));
      }
      if (2 * top < extent) options.push_back(AxisIndex::times(b, 2));
      if (dom.shrunk) {
        for (std::int64_t c = 1; c <= 2; ++c) {
          if (top + c < extent) options.push_back(AxisIndex::plus(b, c));
        }
      }
    }
    if (options.empty() || chance(4)) return AxisIndex::constant(pick(0, extent - 1));
    return options[pick(0, static_cast<std::int64_t>(options.size()) - 1)];
  }

  Address address_for(const Domain &dom, FieldId f) {
    Address addr;
    const auto &info = layout_->field(f);
    for (int a = 0; a < kMaxAxes; ++a) {
      if (info.axes & (1u << a)) addr.push_back(index_for(dom, f, a));
    }
    return addr;
  }

  FieldId any_field() { return static_cast<FieldId>(pick(0, layout_->num_fields() - 1)); }

  int loop_index(KernelBuilder &kb, const Domain &dom) {
    for (int a = 0; a < kMaxAxes; ++a) {
      if (dom.axes & (1u << a)) return kb.index(a);
    }
    return kb.const_int(0);
  }

  int base(KernelBuilder &kb, const Domain &dom) {
    switch (pick(0, 3)) {
      case 0: return kb.const_int(pick(0, 9));
      case 1: return loop_index(kb, dom);
      default: {
        const FieldId f = any_field();
        return kb.load(f, address_for(dom, f));
      }
    }
  }

  int small(KernelBuilder &kb, const Domain &dom) {
    return chance(2) ? kb.const_int(pick(1, 9)) : loop_index(kb, dom);
  }

  // Growth stays additive inside loops so no program can overflow.
  int expr(KernelBuilder &kb, const Domain &dom) {
    const int a = base(kb, dom);
    switch (pick(0, dom.kind == TaskKind::Serial ? 5 : 4)) {
      case 0: return a;
      case 1: return kb.binop(BinOpKind::Min, a, base(kb, dom));
      case 2: return kb.binop(BinOpKind::Max, a, base(kb, dom));
      case 3: return kb.add(a, small(kb, dom));
      case 4: return kb.sub(a, small(kb, dom));
      default: return kb.mul(a, kb.const_int(2));
    }
  }

  Kernel make_kernel(const std::string &name) {
    std::vector<FieldId> iterable;
    std::vector<FieldId> one_d;
    for (const auto &f : layout_->fields()) {
      if (f.leaf != layout_->root()) iterable.push_back(f.id);
      if (f.axes == kAxisI) one_d.push_back(f.id);
    }
    Domain dom;
    const int kind = static_cast<int>(pick(0, 3));
    KernelBuilder kb = KernelBuilder::serial(name);
    if (kind <= 1 && !iterable.empty()) {
      const FieldId over = iterable[pick(0, static_cast<std::int64_t>(iterable.size()) - 1)];
      const SNodeId leaf = layout_->field(over).leaf;
      dom.kind = TaskKind::StructFor;
      dom.axes = layout_->axes(leaf);
      dom.hi = layout_->shape(leaf);
      kb = KernelBuilder::struct_for(name, over);
    } else if (kind == 2) {
      std::int64_t end = one_d.empty() ? pick(1, 8) : layout_->field(one_d[pick(0, one_d.size() - 1)]).shape[0];
      if (end > 2 && chance(3)) {
        end -= pick(1, 2);
        dom.shrunk = true;
      }
      dom.kind = TaskKind::RangeFor;
      dom.axes = kAxisI;
      dom.hi[0] = end;
      kb = KernelBuilder::range_for(name, 0, end);
    }
    const int statements = static_cast<int>(pick(1, o_.max_statements));
    for (int s = 0; s < statements; ++s) {
      const FieldId dst = any_field();
      if (chance(4)) {
        const int v = chance(2) ? kb.const_int(pick(1, 5)) : loop_index(kb, dom);
        kb.atomic_add(dst, address_for(dom, dst), v);
      } else {
        const int v = expr(kb, dom);
        kb.store(dst, address_for(dom, dst), v);
      }
    }
    return kb.build();
  }

  std::mt19937_64 rng_;
  FuzzOptions o_;
  const SNodeTree *layout_ = nullptr;
};

}  // namespace

Program random_program(std::uint64_t seed, const FuzzOptions &options) {
  Generator g(seed, options);
  return g.run(seed);
}

}  // namespace sparseflow
