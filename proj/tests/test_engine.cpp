#include <gtest/gtest.h>

#include "sparseflow/bench.hpp"
#include "sparseflow/builder.hpp"
#include "sparseflow/engine.hpp"
#include "sparseflow/fuzz.hpp"

using namespace sparseflow;

namespace {

EngineOptions sync_options() {
  EngineOptions o;
  o.mode = ExecMode::Sync;
  return o;
}

std::string digest(const Program &p, const RunResult &r) { return snapshot_digest(*p.layout, r.snapshot, p.observed); }

}  // namespace

TEST(Engine, SyncRunsTasksImmediately) {
  auto p = bench_fill_array(3);
  Engine e(p.layout, sync_options());
  e.launch(p.kernels[0]);
  EXPECT_EQ(e.metrics().tasks_launched, 1);
  EXPECT_EQ(e.pending().num_tasks(), 0);
  EXPECT_EQ(std::get<std::int64_t>(e.grid().read_value(0, Coord{{3, 0, 0}})), 7);
}

TEST(Engine, AsyncDefersUntilSync) {
  auto p = bench_fill_array(3);
  Engine e(p.layout);
  int flushes = 0;
  e.on_flush = [&](const StateFlowGraph &before, const StateFlowGraph &after) {
    ++flushes;
    EXPECT_EQ(before.num_tasks(), 2);
    EXPECT_EQ(after.num_tasks(), 1);
  };
  e.launch(p.kernels[0]);
  e.launch(p.kernels[1]);
  EXPECT_EQ(e.metrics().tasks_launched, 0);
  EXPECT_EQ(e.pending().num_tasks(), 2);
  e.sync();
  EXPECT_EQ(flushes, 1);
  EXPECT_EQ(e.metrics().tasks_launched, 1);
  EXPECT_EQ(e.metrics().sync_count, 1);
  e.sync();
  EXPECT_EQ(flushes, 1);
}

TEST(Engine, TrapDropsWindowAndPropagates) {
  LayoutBuilder lb;
  lb.place(lb.root(), "s");
  auto layout = lb.build();
  KernelBuilder kb = KernelBuilder::serial("div0");
  kb.store(0, {}, kb.div(kb.const_int(1), kb.load(0, {})));
  for (auto mode : {ExecMode::Sync, ExecMode::Async}) {
    EngineOptions o;
    o.mode = mode;
    Engine e(layout, o);
    if (mode == ExecMode::Sync) {
      EXPECT_THROW(e.launch(kb.build()), RuntimeTrap);
    } else {
      e.launch(kb.build());
      EXPECT_THROW(e.sync(), RuntimeTrap);
      EXPECT_EQ(e.pending().num_tasks(), 0);
    }
  }
}

TEST(Engine, RunsAreDeterministic) {
  for (const auto &bc : bench_suite()) {
    const auto p = bc.make(1);
    const auto a = run_program(p, {});
    const auto b = run_program(p, {});
    EXPECT_EQ(digest(p, a), digest(p, b)) << bc.name;
    EXPECT_EQ(a.metrics.tasks_launched, b.metrics.tasks_launched) << bc.name;
    ASSERT_EQ(a.trace.size(), b.trace.size()) << bc.name;
    for (std::size_t k = 0; k < a.trace.size(); ++k) {
      EXPECT_EQ(a.trace[k].handle, b.trace[k].handle) << bc.name;
      EXPECT_EQ(a.trace[k].launch_id, b.trace[k].launch_id) << bc.name;
    }
  }
}

TEST(Engine, SerialAndParallelCompilationAgree) {
  const auto p = bench_simple_advection(4);
  EngineOptions serial;
  serial.parallel_compile = false;
  const auto a = run_program(p, {});
  const auto b = run_program(p, serial);
  EXPECT_EQ(digest(p, a), digest(p, b));
  EXPECT_EQ(a.metrics.tasks_compiled, b.metrics.tasks_compiled);
  EXPECT_EQ(a.metrics.instructions_emitted, b.metrics.instructions_emitted);
}

TEST(Engine, EachHandleCompilesOnce) {
  const auto p = bench_increments(6);
  Engine e(p.layout, sync_options());
  run_program(p, sync_options(), &e);
  std::set<IRHandle> distinct;
  for (const auto &t : e.trace()) distinct.insert(t.handle);
  EXPECT_EQ(e.metrics().tasks_compiled, static_cast<std::int64_t>(distinct.size()));
  EXPECT_EQ(e.metrics().tasks_launched, 6);
}

TEST(Engine, ResetKeepsCompiledCode) {
  const auto p = bench_chain_copy();
  Engine e(p.layout);
  const auto first = run_program(p, {}, &e);
  const auto second = run_program(p, {}, &e);
  EXPECT_GT(first.metrics.tasks_compiled, 0);
  EXPECT_EQ(second.metrics.tasks_compiled, 0);
  EXPECT_EQ(digest(p, first), digest(p, second));
  EXPECT_EQ(second.metrics.tasks_launched, first.metrics.tasks_launched);
}

TEST(Engine, AsyncNeverLaunchesMoreThanSync) {
  for (const auto &bc : bench_suite()) {
    const auto p = bc.make(1);
    const auto s = run_program(p, sync_options());
    const auto a = run_program(p, {});
    EXPECT_LE(a.metrics.tasks_launched, s.metrics.tasks_launched) << bc.name;
    EXPECT_LE(a.metrics.listgen_tasks_launched, s.metrics.listgen_tasks_launched) << bc.name;
    EXPECT_EQ(digest(p, a), digest(p, s)) << bc.name;
  }
}

TEST(Engine, BenchmarksMatchOracleAtLargerScale) {
  for (const auto &bc : bench_suite()) {
    const auto d = oracle_diff(bc.make(2));
    EXPECT_TRUE(d.equal) << bc.name << ": " << d.divergence;
  }
}

TEST(Engine, MetricsRenderAsKeyValueLines) {
  const auto p = bench_chain_copy();
  const auto r = run_program(p, {});
  const auto text = to_string(r.metrics);
  EXPECT_NE(text.find("tasks_launched 3"), std::string::npos) << text;
  EXPECT_NE(text.find("listgen_snode_"), std::string::npos) << text;
}

TEST(Engine, DfoOffStillMatches) {
  EngineOptions o;
  o.dfo = false;
  for (const auto &bc : bench_suite()) {
    const auto d = oracle_diff(bc.make(1), o);
    EXPECT_TRUE(d.equal) << bc.name << ": " << d.divergence;
  }
}

class EngineProperties : public ::testing::TestWithParam<int> {};

TEST_P(EngineProperties, AsyncMatchesOracle) {
  const auto p = random_program(static_cast<std::uint64_t>(GetParam()) + 50000);
  const auto d = oracle_diff(p);
  EXPECT_TRUE(d.equal) << p.name << ": " << d.divergence;
  EXPECT_LE(d.candidate.metrics.tasks_launched, d.reference.metrics.tasks_launched);
}

INSTANTIATE_TEST_SUITE_P(Seeds, EngineProperties, ::testing::Range(1, 201));
