#pragma once

#include <cstdint>
#include <random>

#include "sparseflow/engine.hpp"

namespace sparseflow {

struct FuzzOptions {
  int max_depth = 4;     // internal levels below the root
  int max_kernels = 6;
  int max_launches = 8;
  int max_statements = 3;
};

// Uniform integer in [lo, hi] drawn from the generator's raw output, so a
// seed yields the same sequence on every platform.
std::int64_t fuzz_uniform(std::mt19937_64 &rng, std::int64_t lo, std::int64_t hi);

// Random integer-field program: random layout, kernels whose accesses stay
// in range by construction, a schedule with occasional syncs and a few
// initial cells. Deterministic in `seed`.
Program random_program(std::uint64_t seed, const FuzzOptions &options = {});

}  // namespace sparseflow
