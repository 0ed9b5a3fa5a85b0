#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sparseflow/engine.hpp"

namespace sparseflow {

// Program generators for the microbenchmark suite. `scale` is a power of
// two multiplying the problem size.
Program bench_chain_copy(int scale = 1);
Program bench_increments(int kernels = 10, int scale = 1);
Program bench_fill_array(int kernels = 10, int scale = 1);
Program bench_sparse_saxpy(int scale = 1);
Program bench_autodiff(int iterations = 10, int scale = 1);
Program bench_stencil_reduction(int scale = 1);
Program bench_simple_advection(int steps = 10, int scale = 1);
Program bench_multires(int repeats = 2, int scale = 1);
Program bench_downsample_repeat(int runs = 8, int scale = 1);
Program bench_deep_hierarchy(int kernels = 5, int scale = 1);
// Simplified particle/grid scatter-gather standing in for a split MPM substep.
Program bench_mpm_splitted(int substeps = 4, int scale = 1);

struct BenchCase {
  std::string name;
  std::function<Program(int scale)> make;
};

// Every benchmark at its default parameters, in a fixed order.
const std::vector<BenchCase> &bench_suite();

}  // namespace sparseflow
