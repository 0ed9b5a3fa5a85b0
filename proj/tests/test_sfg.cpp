#include <gtest/gtest.h>

#include <deque>

#include "sparseflow/builder.hpp"
#include "sparseflow/fuzz.hpp"
#include "sparseflow/interpreter.hpp"
#include "sparseflow/sfg.hpp"

using namespace sparseflow;

namespace {

std::vector<Task> lower_schedule(const Program &p) {
  std::vector<Task> out;
  std::int64_t id = 1;
  for (const auto &d : p.schedule) {
    if (d.kind != Directive::Kind::Launch) continue;
    for (auto &t : lower_kernel(p.kernels[d.kernel], *p.layout)) {
      t.launch_id = id++;
      out.push_back(std::move(t));
    }
  }
  return out;
}

StateFlowGraph graph_of(const Program &p) {
  StateFlowGraph g(p.layout.get());
  for (auto &t : lower_schedule(p)) g.insert(std::move(t));
  return g;
}

Task dense_task(const SNodeTree &layout, std::int64_t id, std::vector<Instruction> instrs) {
  TaskBody b;
  b.kind = TaskKind::RangeFor;
  b.begin = 0;
  b.end = 4;
  b.instrs = std::move(instrs);
  return make_task("t" + std::to_string(id), std::move(b), layout, id);
}

std::shared_ptr<const SNodeTree> two_dense_fields() {
  LayoutBuilder lb;
  const SNodeId d = lb.dense(lb.root(), kAxisI, {4});
  lb.place(d, "a");
  lb.place(d, "b");
  return lb.build();
}

bool edges_respected(const StateFlowGraph &g, const std::vector<int> &order) {
  std::vector<int> pos(g.size(), -1);
  pos[StateFlowGraph::kInitial] = -1;
  for (std::size_t k = 0; k < order.size(); ++k) pos[order[k]] = static_cast<int>(k);
  for (const auto &e : g.edges()) {
    if (e.src != StateFlowGraph::kInitial && pos[e.src] >= pos[e.dst]) return false;
  }
  return order.size() == static_cast<std::size_t>(g.num_tasks());
}

}  // namespace

TEST(Sfg, FlowOutputAndAntiEdges) {
  auto layout = two_dense_fields();
  StateFlowGraph g(layout.get());
  // t1: a[i] = 1; t2: b[i] = a[i]; t3: a[i] = 2
  g.insert(dense_task(*layout, 1, {ConstInt{1}, Store{0, {ix::i()}, 0, false}}));
  g.insert(dense_task(*layout, 2, {Load{0, {ix::i()}}, Store{1, {ix::i()}, 0, false}}));
  g.insert(dense_task(*layout, 3, {ConstInt{2}, Store{0, {ix::i()}, 0, false}}));
  const auto a = StateKey::value(0);
  EXPECT_TRUE(g.edges().count({1, 2, a, EdgeKind::RAW}));
  EXPECT_TRUE(g.edges().count({1, 3, a, EdgeKind::WAW}));
  EXPECT_TRUE(g.edges().count({2, 3, a, EdgeKind::WAR}));
  EXPECT_EQ(g.latest_writer().at(a), 3);
  EXPECT_EQ(g.input_source(2, a), 1);
  EXPECT_EQ(g.input_source(1, StateKey::value(1)), StateFlowGraph::kInitial);
  EXPECT_TRUE(g.has_path(1, 3));
  EXPECT_FALSE(g.has_path(3, 1));
  const auto reach = g.transitive_closure();
  EXPECT_TRUE(StateFlowGraph::path_length_ge_2(reach, 1, 3));
  EXPECT_FALSE(StateFlowGraph::path_length_ge_2(reach, 1, 2));
  EXPECT_EQ(g.topo_sort(), (std::vector<int>{1, 2, 3}));
  EXPECT_NE(g.to_dot("w").find("digraph"), std::string::npos);
}

TEST(Sfg, IndependentTasksHaveNoPath) {
  auto layout = two_dense_fields();
  StateFlowGraph g(layout.get());
  g.insert(dense_task(*layout, 1, {ConstInt{1}, Store{0, {ix::i()}, 0, false}}));
  g.insert(dense_task(*layout, 2, {ConstInt{1}, Store{1, {ix::i()}, 0, false}}));
  EXPECT_FALSE(g.has_path(1, 2));
  EXPECT_FALSE(g.has_path(2, 1));
  EXPECT_TRUE(g.in_edges(2).empty() || g.in_edges(2).front().src == StateFlowGraph::kInitial);
}

TEST(Sfg, ListGenerationChainsThroughLists) {
  LayoutBuilder lb;
  const SNodeId leaf = lb.dense(lb.indirection(lb.root(), kAxisI, {4}), kAxisI, {2});
  lb.place(leaf, "x");
  lb.place(leaf, "y");
  auto layout = lb.build();
  KernelBuilder kb = KernelBuilder::struct_for("copy", 0);
  kb.store(1, {ix::i()}, kb.load(0, {ix::i()}));
  Program p;
  p.layout = layout;
  p.kernels = {kb.build()};
  p.schedule = {Directive::launch(0)};
  const auto g = graph_of(p);
  ASSERT_EQ(g.num_tasks(), 3);
  EXPECT_TRUE(g.edges().count({1, 2, StateKey::list(1), EdgeKind::RAW}));
  EXPECT_TRUE(g.edges().count({2, 3, StateKey::list(2), EdgeKind::RAW}));
}

TEST(Sfg, RebuildInSameOrderIsIsomorphic) {
  auto layout = two_dense_fields();
  StateFlowGraph g(layout.get());
  g.insert(dense_task(*layout, 1, {ConstInt{1}, Store{0, {ix::i()}, 0, false}}));
  g.insert(dense_task(*layout, 2, {Load{0, {ix::i()}}, Store{1, {ix::i()}, 0, false}}));
  StateFlowGraph h(layout.get());
  h.rebuild(g.tasks());
  EXPECT_TRUE(isomorphic(g, h));
  StateFlowGraph partial(layout.get());
  partial.insert(g.task(1));
  EXPECT_FALSE(isomorphic(g, partial));
}

class SfgProperties : public ::testing::TestWithParam<int> {};

TEST_P(SfgProperties, AcyclicClosureAndOrderIndependence) {
  FuzzOptions opts;
  opts.max_launches = 12;
  const auto program = random_program(static_cast<std::uint64_t>(GetParam()) * 6151 + 3, opts);
  const auto g = graph_of(program);

  for (const auto &e : g.edges()) EXPECT_LT(e.src, e.dst);
  EXPECT_TRUE(edges_respected(g, g.topo_sort()));

  // Closure against breadth-first search.
  const auto reach = g.transitive_closure();
  for (int a = 0; a < g.size(); ++a) {
    std::vector<bool> seen(g.size(), false);
    std::deque<int> q{a};
    while (!q.empty()) {
      const int n = q.front();
      q.pop_front();
      for (const auto &e : g.out_edges(n)) {
        if (!seen[e.dst]) {
          seen[e.dst] = true;
          q.push_back(e.dst);
        }
      }
    }
    for (int b = 0; b < g.size(); ++b) EXPECT_EQ(reach[a][b], seen[b]) << a << "->" << b;
  }

  // Reinsertion in any topological order yields the same graph and state.
  SparseGrid expected(program.layout);
  for (const auto &c : program.init) expected.write_value(c.field, c.cell, c.value, true);
  SparseGrid start = expected;
  bool trapped = false;
  try {
    for (const auto &t : g.tasks()) interpret_task(*t.body, expected, t.launch_id);
  } catch (const RuntimeTrap &) {
    trapped = true;
  }
  std::mt19937_64 rng(static_cast<std::uint64_t>(GetParam()));
  for (int round = 0; round < 10; ++round) {
    const auto order = g.topo_sort_random(rng);
    ASSERT_TRUE(edges_respected(g, order));
    std::vector<Task> tasks;
    for (int n : order) tasks.push_back(g.task(n));
    StateFlowGraph h(program.layout.get());
    h.rebuild(tasks);
    EXPECT_TRUE(isomorphic(g, h)) << "seed " << GetParam() << " round " << round;
    if (trapped) continue;
    SparseGrid grid = start;
    for (const auto &t : tasks) interpret_task(*t.body, grid, t.launch_id);
    const auto diff = compare_snapshots(*program.layout, expected.snapshot(), grid.snapshot());
    EXPECT_TRUE(diff.equal) << diff.first_divergence;
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, SfgProperties, ::testing::Range(1, 101));
