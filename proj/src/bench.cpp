#include "sparseflow/bench.hpp"

#include <stdexcept>

#include "sparseflow/builder.hpp"

namespace sparseflow {

namespace {

FieldId field(const Program &p, const std::string &name) { return p.layout->find_field(name).value(); }

int add_kernel(Program &p, Kernel k) {
  p.kernels.push_back(std::move(k));
  return static_cast<int>(p.kernels.size()) - 1;
}

void launch(Program &p, int kernel) { p.schedule.push_back(Directive::launch(kernel)); }

void check_scale(int scale) {
  if (scale < 1 || (scale & (scale - 1)) != 0) throw std::invalid_argument("scale must be a power of two");
}

}  // namespace

Program bench_chain_copy(int scale) {
  check_scale(scale);
  LayoutBuilder lb;
  const SNodeId ptr = lb.indirection(lb.root(), kAxisI, {4 * scale});
  const SNodeId blk = lb.dense(ptr, kAxisI, {2});
  for (const char *name : {"x", "y", "z"}) lb.place(blk, name);
  Program p;
  p.name = "chain_copy";
  p.layout = lb.build();
  const FieldId x = field(p, "x"), y = field(p, "y"), z = field(p, "z");

  auto k1 = KernelBuilder::struct_for("copy_xy", x);
  k1.store(y, {ix::i()}, k1.add(k1.load(x, {ix::i()}), k1.const_int(1)));
  auto k2 = KernelBuilder::struct_for("copy_yz", y);
  k2.store(z, {ix::i()}, k2.add(k2.load(y, {ix::i()}), k2.const_int(4)));
  launch(p, add_kernel(p, k1.build()));
  launch(p, add_kernel(p, k2.build()));
  p.schedule.push_back(Directive::sync());

  const std::int64_t n = 8 * scale;
  for (std::int64_t c = 0; c < n; c += 4) {
    Coord cell;
    cell[0] = c + 1;
    p.init.push_back({x, cell, std::int64_t{c + 10}});
  }
  return p;
}

Program bench_increments(int kernels, int scale) {
  check_scale(scale);
  const std::int64_t n = 64 * scale;
  LayoutBuilder lb;
  lb.place(lb.dense(lb.root(), kAxisI, {n}), "x");
  Program p;
  p.name = "increments";
  p.layout = lb.build();
  const FieldId x = field(p, "x");
  for (int k = 0; k < kernels; ++k) {
    auto kb = KernelBuilder::range_for("inc_" + std::to_string(k), 0, n);
    kb.store(x, {ix::i()}, kb.add(kb.load(x, {ix::i()}), kb.const_int(1)));
    launch(p, add_kernel(p, kb.build()));
  }
  return p;
}

Program bench_fill_array(int kernels, int scale) {
  check_scale(scale);
  const std::int64_t n = 256 * scale;
  LayoutBuilder lb;
  lb.place(lb.dense(lb.root(), kAxisI, {n}), "x");
  Program p;
  p.name = "fill_array";
  p.layout = lb.build();
  const FieldId x = field(p, "x");
  for (int k = 0; k < kernels; ++k) {
    auto kb = KernelBuilder::range_for("fill_" + std::to_string(k), 0, n);
    kb.store(x, {ix::i()}, kb.const_int(7));
    launch(p, add_kernel(p, kb.build()));
  }
  return p;
}

Program bench_sparse_saxpy(int scale) {
  check_scale(scale);
  LayoutBuilder lb;
  const SNodeId ptr = lb.indirection(lb.root(), kAxisI, {16 * scale});
  const SNodeId blk = lb.bitmasked(ptr, kAxisI, {8});
  for (const char *name : {"x", "y", "z"}) lb.place(blk, name, ScalarType::Float64);
  Program p;
  p.name = "sparse_saxpy";
  p.layout = lb.build();
  const FieldId x = field(p, "x"), y = field(p, "y"), z = field(p, "z");

  auto saxpy = [&](const std::string &name, FieldId over, FieldId dst, FieldId a_src, double alpha, FieldId b_src) {
    auto kb = KernelBuilder::struct_for(name, over);
    const int ax = kb.mul(kb.const_float(alpha), kb.load(a_src, {ix::i()}));
    kb.store(dst, {ix::i()}, kb.add(ax, kb.load(b_src, {ix::i()})));
    return add_kernel(p, kb.build());
  };
  const int s1 = saxpy("saxpy_y", x, y, x, 2.0, y);
  const int s2 = saxpy("saxpy_z", y, z, y, 0.5, x);
  const int s3 = saxpy("saxpy_x", z, x, z, 1.5, x);
  for (int r = 0; r < 3; ++r) {
    launch(p, s1);
    launch(p, s2);
    launch(p, s3);
  }
  const std::int64_t n = 128 * scale;
  for (std::int64_t c = 3; c < n; c += 37) {
    Coord cell;
    cell[0] = c;
    p.init.push_back({x, cell, 0.25 * static_cast<double>(c)});
  }
  return p;
}

Program bench_autodiff(int iterations, int scale) {
  check_scale(scale);
  const std::int64_t n = 64 * scale;
  LayoutBuilder lb;
  const SNodeId arr = lb.dense(lb.root(), kAxisI, {n});
  lb.place(arr, "x", ScalarType::Float64);
  lb.place(arr, "grad", ScalarType::Float64);
  lb.place(lb.root(), "loss", ScalarType::Float64);
  Program p;
  p.name = "autodiff";
  p.layout = lb.build();
  const FieldId x = field(p, "x"), grad = field(p, "grad"), loss = field(p, "loss");

  auto clear = KernelBuilder::serial("clear_loss");
  clear.store(loss, {}, clear.const_float(0.0));
  auto forward = KernelBuilder::range_for("forward", 0, n);
  {
    const int v = forward.load(x, {ix::i()});
    forward.atomic_add(loss, {}, forward.mul(v, v));
  }
  auto backward = KernelBuilder::range_for("backward", 0, n);
  backward.atomic_add(grad, {ix::i()}, backward.mul(backward.const_float(2.0), backward.load(x, {ix::i()})));
  const int kc = add_kernel(p, clear.build());
  const int kf = add_kernel(p, forward.build());
  const int kb = add_kernel(p, backward.build());
  for (int it = 0; it < iterations; ++it) {
    launch(p, kc);
    launch(p, kf);
    launch(p, kb);
  }
  for (std::int64_t c = 0; c < n; ++c) {
    Coord cell;
    cell[0] = c;
    p.init.push_back({x, cell, 0.125 * static_cast<double>(c % 9)});
  }
  p.observed = std::set<FieldId>{grad};
  return p;
}

Program bench_stencil_reduction(int scale) {
  check_scale(scale);
  const std::int64_t n = 128 * scale;
  LayoutBuilder lb;
  const SNodeId arr = lb.dense(lb.root(), kAxisI, {n});
  lb.place(arr, "u", ScalarType::Float64);
  lb.place(arr, "lap", ScalarType::Float64);
  lb.place(lb.root(), "total", ScalarType::Float64);
  Program p;
  p.name = "stencil_reduction";
  p.layout = lb.build();
  const FieldId u = field(p, "u"), lap = field(p, "lap"), total = field(p, "total");

  auto stencil = KernelBuilder::range_for("laplacian", 1, n - 1);
  {
    const int l = stencil.load(u, {ix::i_plus(-1)});
    const int r = stencil.load(u, {ix::i_plus(1)});
    const int c = stencil.load(u, {ix::i()});
    stencil.store(lap, {ix::i()}, stencil.sub(stencil.add(l, r), stencil.mul(stencil.const_float(2.0), c)));
  }
  auto update = KernelBuilder::range_for("diffuse", 1, n - 1);
  update.store(u, {ix::i()},
               update.add(update.load(u, {ix::i()}), update.mul(update.const_float(0.1), update.load(lap, {ix::i()}))));
  auto reduce = KernelBuilder::range_for("reduce", 0, n);
  reduce.atomic_add(total, {}, reduce.load(u, {ix::i()}));
  auto clear = KernelBuilder::serial("clear_total");
  clear.store(total, {}, clear.const_float(0.0));

  const int ks = add_kernel(p, stencil.build());
  const int ku = add_kernel(p, update.build());
  const int kc = add_kernel(p, clear.build());
  const int kr = add_kernel(p, reduce.build());
  for (int it = 0; it < 4; ++it) {
    launch(p, ks);
    launch(p, ku);
    launch(p, kc);
    launch(p, kr);
  }
  for (std::int64_t c = 0; c < n; ++c) {
    Coord cell;
    cell[0] = c;
    p.init.push_back({u, cell, static_cast<double>((c * 7) % 13)});
  }
  return p;
}

Program bench_simple_advection(int steps, int scale) {
  check_scale(scale);
  LayoutBuilder lb;
  const SNodeId blocks = lb.bitmasked(lb.root(), kAxesIJ, {4 * scale, 4 * scale});
  const SNodeId cells = lb.dense(blocks, kAxesIJ, {4, 4});
  lb.place(cells, "q", ScalarType::Float64);
  lb.place(cells, "q_new", ScalarType::Float64);
  Program p;
  p.name = "simple_advection";
  p.layout = lb.build();
  const FieldId q = field(p, "q"), q_new = field(p, "q_new");

  auto advect = KernelBuilder::struct_for("advect", q);
  {
    const int here = advect.load(q, {ix::i(), ix::j()});
    const int back = advect.load(q, {ix::i_div(2), ix::j_div(2)});
    const int half = advect.const_float(0.5);
    advect.store(q_new, {ix::i(), ix::j()}, advect.add(advect.mul(half, here), advect.mul(half, back)));
  }
  auto copy = KernelBuilder::struct_for("copy_back", q_new);
  copy.store(q, {ix::i(), ix::j()}, copy.load(q_new, {ix::i(), ix::j()}));
  const int ka = add_kernel(p, advect.build());
  const int kc = add_kernel(p, copy.build());
  for (int s = 0; s < steps; ++s) {
    launch(p, ka);
    launch(p, kc);
  }
  const std::int64_t n = 16 * scale;
  for (std::int64_t i = 0; i < n; i += 3) {
    Coord cell;
    cell[0] = i;
    cell[1] = (i * 5) % n;
    p.init.push_back({q, cell, 1.0 + static_cast<double>(i)});
  }
  return p;
}

namespace {

// x_l has 32 >> l cells per axis (times scale), stored as 4x4 masked blocks.
void add_pyramid(LayoutBuilder &lb, int levels, int scale) {
  for (int l = 0; l < levels; ++l) {
    const SNodeId blocks = lb.bitmasked(lb.root(), kAxesIJ, {4 * scale, 4 * scale});
    const std::int64_t inner = std::int64_t{8} >> l;
    lb.place(lb.dense(blocks, kAxesIJ, {inner, inner}), "x" + std::to_string(l), ScalarType::Float64);
  }
}

int downsample_kernel(Program &p, FieldId src, FieldId dst, const std::string &name) {
  auto kb = KernelBuilder::struct_for(name, src);
  kb.atomic_add(dst, {ix::i_div(2), ix::j_div(2)}, kb.mul(kb.load(src, {ix::i(), ix::j()}), kb.const_float(0.25)));
  return add_kernel(p, kb.build());
}

void seed_pyramid_base(Program &p, FieldId base, std::int64_t n) {
  for (std::int64_t i = 0; i < n; i += 5) {
    Coord cell;
    cell[0] = i;
    cell[1] = (i * 3 + 1) % n;
    p.init.push_back({base, cell, 4.0 + static_cast<double>(i % 7)});
  }
}

}  // namespace

Program bench_multires(int repeats, int scale) {
  check_scale(scale);
  LayoutBuilder lb;
  add_pyramid(lb, 4, scale);
  Program p;
  p.name = "multires";
  p.layout = lb.build();
  std::vector<int> kernels;
  for (int l = 0; l + 1 < 4; ++l)
    kernels.push_back(downsample_kernel(p, field(p, "x" + std::to_string(l)), field(p, "x" + std::to_string(l + 1)),
                                        "down_" + std::to_string(l)));
  for (int r = 0; r < repeats; ++r) {
    for (int k : kernels) launch(p, k);
  }
  seed_pyramid_base(p, field(p, "x0"), 32 * scale);
  return p;
}

Program bench_downsample_repeat(int runs, int scale) {
  check_scale(scale);
  LayoutBuilder lb;
  add_pyramid(lb, 2, scale);
  Program p;
  p.name = "downsample_repeat";
  p.layout = lb.build();
  const FieldId x = field(p, "x0"), y = field(p, "x1");
  const int down = downsample_kernel(p, x, y, "downsample");
  auto scale_y = KernelBuilder::struct_for("scale_coarse", y);
  scale_y.store(y, {ix::i(), ix::j()}, scale_y.mul(scale_y.load(y, {ix::i(), ix::j()}), scale_y.const_float(0.5)));
  const int sy = add_kernel(p, scale_y.build());
  for (int r = 0; r < runs; ++r) {
    launch(p, down);
    launch(p, sy);
  }
  seed_pyramid_base(p, x, 32 * scale);
  return p;
}

Program bench_deep_hierarchy(int kernels, int scale) {
  check_scale(scale);
  LayoutBuilder lb;
  SNodeId s = lb.indirection(lb.root(), kAxisI, {2 * scale});
  s = lb.bitmasked(s, kAxisI, {2});
  s = lb.indirection(s, kAxisI, {2});
  s = lb.bitmasked(s, kAxisI, {2});
  s = lb.dense(s, kAxisI, {4});
  lb.place(s, "x");
  Program p;
  p.name = "deep_hierarchy";
  p.layout = lb.build();
  const FieldId x = field(p, "x");
  for (int k = 0; k < kernels; ++k) {
    auto kb = KernelBuilder::struct_for("jitter_" + std::to_string(k), x);
    kb.store(x, {ix::i()}, kb.add(kb.load(x, {ix::i()}), kb.load(x, {ix::i_plus(1)})));
    launch(p, add_kernel(p, kb.build()));
  }
  const std::int64_t n = 64 * scale;
  for (std::int64_t c = 0; c + 8 < n; c += 3) {
    Coord cell;
    cell[0] = c;
    p.init.push_back({x, cell, std::int64_t{c % 5 + 1}});
  }
  return p;
}

Program bench_mpm_splitted(int substeps, int scale) {
  check_scale(scale);
  const std::int64_t particles = 64 * scale;
  LayoutBuilder lb;
  const SNodeId parr = lb.dense(lb.root(), kAxisI, {particles});
  lb.place(parr, "p_mass", ScalarType::Float64);
  lb.place(parr, "p_vel", ScalarType::Float64);
  const SNodeId gptr = lb.indirection(lb.root(), kAxisI, {4 * scale});
  const SNodeId gblk = lb.dense(gptr, kAxisI, {4});
  lb.place(gblk, "g_mass", ScalarType::Float64);
  lb.place(gblk, "g_vel", ScalarType::Float64);
  Program p;
  p.name = "mpm_splitted";
  p.layout = lb.build();
  const FieldId pm = field(p, "p_mass"), pv = field(p, "p_vel");
  const FieldId gm = field(p, "g_mass"), gv = field(p, "g_vel");

  auto clear = KernelBuilder::struct_for("clear_grid", gm);
  {
    const int zero = clear.const_float(0.0);
    clear.store(gm, {ix::i()}, zero);
    clear.store(gv, {ix::i()}, zero);
  }
  auto p2g = KernelBuilder::range_for("p2g", 0, particles);
  {
    const int m = p2g.load(pm, {ix::i()});
    p2g.atomic_add(gm, {ix::i_div(4)}, m);
    p2g.atomic_add(gv, {ix::i_div(4)}, p2g.mul(m, p2g.load(pv, {ix::i()})));
  }
  auto grid_op = KernelBuilder::struct_for("grid_op", gm);
  {
    const int m = grid_op.load(gm, {ix::i()});
    const int v = grid_op.load(gv, {ix::i()});
    grid_op.store(gv, {ix::i()}, grid_op.mul(grid_op.div(v, grid_op.add(m, grid_op.const_float(1.0))),
                                             grid_op.const_float(0.9)));
  }
  auto g2p = KernelBuilder::range_for("g2p", 0, particles);
  g2p.store(pv, {ix::i()}, g2p.add(g2p.load(gv, {ix::i_div(4)}), g2p.const_float(0.01)));

  const int kc = add_kernel(p, clear.build());
  const int k1 = add_kernel(p, p2g.build());
  const int k2 = add_kernel(p, grid_op.build());
  const int k3 = add_kernel(p, g2p.build());
  for (int s = 0; s < substeps; ++s) {
    launch(p, kc);
    launch(p, k1);
    launch(p, k2);
    launch(p, k3);
  }
  for (std::int64_t c = 0; c < particles; ++c) {
    Coord cell;
    cell[0] = c;
    p.init.push_back({pm, cell, 1.0 + static_cast<double>(c % 3)});
    p.init.push_back({pv, cell, 0.5 * static_cast<double>(c % 4)});
  }
  return p;
}

const std::vector<BenchCase> &bench_suite() {
  static const std::vector<BenchCase> suite = {
      {"chain_copy", [](int s) { return bench_chain_copy(s); }},
      {"increments", [](int s) { return bench_increments(10, s); }},
      {"fill_array", [](int s) { return bench_fill_array(10, s); }},
      {"sparse_saxpy", [](int s) { return bench_sparse_saxpy(s); }},
      {"autodiff", [](int s) { return bench_autodiff(10, s); }},
      {"stencil_reduction", [](int s) { return bench_stencil_reduction(s); }},
      {"simple_advection", [](int s) { return bench_simple_advection(10, s); }},
      {"multires", [](int s) { return bench_multires(2, s); }},
      {"downsample_repeat", [](int s) { return bench_downsample_repeat(8, s); }},
      {"deep_hierarchy", [](int s) { return bench_deep_hierarchy(5, s); }},
      {"mpm_splitted", [](int s) { return bench_mpm_splitted(4, s); }},
  };
  return suite;
}

}  // namespace sparseflow
