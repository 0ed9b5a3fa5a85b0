#include <gtest/gtest.h>

#include <limits>

#include "sparseflow/builder.hpp"
#include "sparseflow/dataflow.hpp"
#include "sparseflow/fuzz.hpp"
#include "sparseflow/interpreter.hpp"
#include "sparseflow/meta.hpp"

using namespace sparseflow;

namespace {

// x and y share root -> indirection(i, 4) -> dense(i, 2).
std::shared_ptr<const SNodeTree> shared_leaf() {
  LayoutBuilder lb;
  const SNodeId leaf = lb.dense(lb.indirection(lb.root(), kAxisI, {4}), kAxisI, {2});
  lb.place(leaf, "x");
  lb.place(leaf, "y");
  return lb.build();
}

// d lives under a plain dense node of extent 8.
std::shared_ptr<const SNodeTree> dense_only() {
  LayoutBuilder lb;
  lb.place(lb.dense(lb.root(), kAxisI, {8}), "d");
  return lb.build();
}

TaskBody range_body(std::int64_t begin, std::int64_t end, std::vector<Instruction> instrs) {
  TaskBody b;
  b.kind = TaskKind::RangeFor;
  b.begin = begin;
  b.end = end;
  b.instrs = std::move(instrs);
  return b;
}

int count_if_kind(const TaskBody &b, std::size_t index) {
  int n = 0;
  for (const auto &ins : b.instrs) n += ins.index() == index;
  return n;
}

}  // namespace

TEST(Checked, IntegerArithmetic) {
  std::int64_t out = 0;
  EXPECT_TRUE(checked_int_op(BinOpKind::Div, -7, 2, out));
  EXPECT_EQ(out, -4);
  EXPECT_FALSE(checked_int_op(BinOpKind::Div, 1, 0, out));
  EXPECT_FALSE(checked_int_op(BinOpKind::Add, std::numeric_limits<std::int64_t>::max(), 1, out));
  EXPECT_FALSE(checked_int_op(BinOpKind::Mul, std::int64_t{1} << 40, std::int64_t{1} << 40, out));
  EXPECT_TRUE(checked_int_op(BinOpKind::Min, 3, -2, out));
  EXPECT_EQ(out, -2);
  double d = 0;
  EXPECT_FALSE(checked_float_op(BinOpKind::Div, 1.0, 0.0, d));
  EXPECT_TRUE(checked_float_op(BinOpKind::Mul, 1.5, 2.0, d));
  EXPECT_DOUBLE_EQ(d, 3.0);
}

TEST(Hashing, EqualBodiesShareHandle) {
  const auto a = range_body(0, 8, {ConstInt{1}, Store{0, {ix::i()}, 0, false}});
  auto b = a;
  EXPECT_EQ(hash_body(a), hash_body(b));
  EXPECT_EQ(hash_body(a).hex().size(), 32u);
  b.instrs[0] = ConstInt{2};
  EXPECT_NE(hash_body(a), hash_body(b));
  auto c = a;
  c.end = 4;
  EXPECT_NE(hash_body(a), hash_body(c));
  const auto bytes = serialize_body(a);
  ASSERT_GE(bytes.size(), 3u);
  EXPECT_EQ(bytes[0], 'S');
  EXPECT_EQ(bytes[1], 'F');
  EXPECT_EQ(bytes[2], 1);
}

TEST(Hashing, FloatConstantsHashByBitPattern) {
  TaskBody a;
  a.instrs = {ConstFloat{0.0}};
  TaskBody b;
  b.instrs = {ConstFloat{-0.0}};
  EXPECT_NE(hash_body(a), hash_body(b));
}

TEST(Validation, RejectsMalformedBodies) {
  auto layout = dense_only();
  EXPECT_THROW(validate_body(range_body(0, 8, {Store{0, {ix::i()}, 1, false}, ConstInt{1}}), *layout), IRError);
  EXPECT_THROW(validate_body(range_body(0, 8, {ConstInt{1}, Store{0, {ix::j()}, 0, false}}), *layout), IRError);
  EXPECT_THROW(validate_body(range_body(0, 8, {ConstInt{1}, Store{0, {}, 0, false}}), *layout), IRError);
  EXPECT_THROW(validate_body(range_body(0, 8, {ConstInt{1}, Store{3, {ix::i()}, 0, false}}), *layout), IRError);
  EXPECT_NO_THROW(validate_body(range_body(0, 8, {ConstInt{1}, Store{0, {ix::i()}, 0, false}}), *layout));
}

TEST(Lowering, StructForEmitsListGenerationPerLevel) {
  auto layout = shared_leaf();
  KernelBuilder kb = KernelBuilder::struct_for("copy", 0);
  kb.store(1, {ix::i()}, kb.load(0, {ix::i()}));
  const auto tasks = lower_kernel(kb.build(), *layout);
  ASSERT_EQ(tasks.size(), 3u);
  EXPECT_EQ(tasks[0].kind(), TaskKind::ListGen);
  EXPECT_EQ(tasks[0].snode(), 1);
  EXPECT_EQ(tasks[1].kind(), TaskKind::ListGen);
  EXPECT_EQ(tasks[1].snode(), 2);
  EXPECT_EQ(tasks[2].kind(), TaskKind::StructFor);
  EXPECT_FALSE(has_activating_access(*tasks[2].body));
  EXPECT_TRUE(tasks[2].meta.reads(StateKey::list(2)));
  EXPECT_TRUE(tasks[1].meta.reads(StateKey::list(1)));
  EXPECT_TRUE(tasks[1].meta.writes(StateKey::list(2)));
  EXPECT_TRUE(tasks[1].meta.complete(StateKey::list(2)));
}

TEST(Lowering, OffsetWritesStayActivating) {
  auto layout = shared_leaf();
  KernelBuilder kb = KernelBuilder::struct_for("shift", 0);
  kb.store(1, {ix::i_div(2)}, kb.load(0, {ix::i()}));
  const auto tasks = lower_kernel(kb.build(), *layout);
  EXPECT_TRUE(has_activating_access(*tasks.back().body));
  EXPECT_TRUE(tasks.back().meta.writes(StateKey::mask(1)));
  EXPECT_TRUE(tasks.back().meta.writes(StateKey::allocator()));
}

TEST(Lowering, DenseKernelsNeedNoLists) {
  auto layout = dense_only();
  KernelBuilder kb = KernelBuilder::struct_for("fill", 0);
  kb.store(0, {ix::i()}, kb.const_int(7));
  const auto tasks = lower_kernel(kb.build(), *layout);
  ASSERT_EQ(tasks.size(), 1u);
  EXPECT_FALSE(has_activating_access(*tasks[0].body));
  EXPECT_TRUE(tasks[0].meta.complete(StateKey::value(0)));
  EXPECT_FALSE(tasks[0].meta.reads(StateKey::allocator()));
}

TEST(Lowering, RejectsUnknownField) {
  auto layout = dense_only();
  KernelBuilder kb = KernelBuilder::struct_for("bad", 5);
  kb.const_int(0);
  EXPECT_THROW(lower_kernel(kb.build(), *layout), IRError);
}

TEST(Meta, OverwriteClassification) {
  auto layout = dense_only();
  const auto full = analyze_meta(range_body(0, 8, {ConstInt{0}, Store{0, {ix::i()}, 0, false}}), *layout);
  EXPECT_TRUE(full.complete(StateKey::value(0)));
  const auto part = analyze_meta(range_body(0, 7, {ConstInt{0}, Store{0, {ix::i()}, 0, false}}), *layout);
  EXPECT_FALSE(part.complete(StateKey::value(0)));
  EXPECT_TRUE(part.writes(StateKey::value(0)));
  const auto acc = analyze_meta(range_body(0, 8, {ConstInt{1}, AtomicAdd{0, {ix::i()}, 0, false}}), *layout);
  EXPECT_FALSE(acc.complete(StateKey::value(0)));
  EXPECT_TRUE(acc.reads(StateKey::value(0)));
}

TEST(Meta, ScalarCompleteOnlyWhenLoopRuns) {
  LayoutBuilder lb;
  lb.place(lb.root(), "s");
  auto layout = lb.build();
  TaskBody serial;
  serial.instrs = {ConstInt{1}, Store{0, {}, 0, false}};
  EXPECT_TRUE(analyze_meta(serial, *layout).complete(StateKey::value(0)));
  EXPECT_TRUE(analyze_meta(range_body(0, 2, serial.instrs), *layout).complete(StateKey::value(0)));
  EXPECT_FALSE(analyze_meta(range_body(0, 0, serial.instrs), *layout).complete(StateKey::value(0)));
}

TEST(Access, SameAddressAndInjectivity) {
  auto layout = dense_only();
  const auto body = range_body(0, 4, {Load{0, {ix::i()}}, Store{0, {ix::i_plus(1)}, 0, false}});
  const auto v = access_analysis(body, *layout);
  EXPECT_FALSE(v.at(0).same_address);
  EXPECT_TRUE(v.at(0).injective);
  const auto halved = range_body(0, 8, {ConstInt{1}, AtomicAdd{0, {ix::i_div(2)}, 0, false}});
  EXPECT_FALSE(access_analysis(halved, *layout).at(0).injective);
  EXPECT_TRUE(address_injective({ix::i_mul(2)}, halved, *layout));
  EXPECT_FALSE(address_injective({ix::at(1)}, halved, *layout));
}

TEST(Alias, OnlyDistinctOffsetsAreDisjoint) {
  EXPECT_FALSE(may_alias({ix::i()}, {ix::i_plus(1)}));
  EXPECT_FALSE(may_alias({ix::at(1)}, {ix::at(2)}));
  EXPECT_TRUE(may_alias({ix::i()}, {ix::at(3)}));
  EXPECT_TRUE(may_alias({ix::i()}, {ix::i()}));
  EXPECT_TRUE(may_alias({ix::i_div(2)}, {ix::i()}));
}

TEST(Dataflow, ForwardsStoresAndFoldsConstants) {
  const auto body = range_body(0, 8, {
      ConstInt{1}, Load{0, {ix::i()}}, BinOp{BinOpKind::Add, 1, 0}, Store{0, {ix::i()}, 2, false},
      ConstInt{2}, Load{0, {ix::i()}}, BinOp{BinOpKind::Add, 5, 4}, Store{0, {ix::i()}, 6, false}});
  const auto opt = dataflow_optimize(body);
  EXPECT_EQ(count_if_kind(opt, 4), 1);  // one load
  EXPECT_EQ(count_if_kind(opt, 5), 1);  // one store
  EXPECT_LT(opt.instrs.size(), body.instrs.size());
  bool has_three = false;
  for (const auto &ins : opt.instrs) {
    if (auto *c = std::get_if<ConstInt>(&ins)) has_three |= c->value == 3;
  }
  EXPECT_TRUE(has_three);
}

TEST(Dataflow, KeepsStoresThroughPossibleAliases) {
  const auto body = range_body(0, 8, {
      ConstInt{1}, Store{0, {ix::i()}, 0, false}, Load{0, {ix::at(3)}}, Store{0, {ix::i()}, 2, false}});
  const auto opt = dataflow_optimize(body);
  EXPECT_EQ(count_if_kind(opt, 5), 2);
}

TEST(Dataflow, FoldsArithmeticWithoutLoopIndices) {
  TaskBody body;
  body.instrs = {ConstInt{6}, ConstInt{3}, BinOp{BinOpKind::Mul, 0, 1}, Store{0, {}, 2, false}};
  const auto opt = dataflow_optimize(body);
  ASSERT_EQ(opt.instrs.size(), 2u);
  EXPECT_EQ(std::get<ConstInt>(opt.instrs[0]).value, 18);
}

TEST(Dataflow, DoesNotFoldTrappingOperations) {
  TaskBody body;
  body.instrs = {ConstInt{6}, ConstInt{0}, BinOp{BinOpKind::Div, 0, 1}, Store{0, {}, 2, false}};
  const auto opt = dataflow_optimize(body);
  EXPECT_EQ(count_if_kind(opt, 3), 1);
}

TEST(Demotion, AtomicsBecomeLoadAddStore) {
  auto layout = dense_only();
  const auto body = range_body(0, 8, {ConstInt{1}, AtomicAdd{0, {ix::i()}, 0, false}});
  const auto out = demote_legal_atomics(body, *layout);
  EXPECT_EQ(count_if_kind(out, 6), 0);
  EXPECT_EQ(count_if_kind(out, 4), 1);
  EXPECT_EQ(count_if_kind(out, 5), 1);
  const auto halved = range_body(0, 8, {ConstInt{1}, AtomicAdd{0, {ix::i_div(2)}, 0, false}});
  EXPECT_EQ(demote_legal_atomics(halved, *layout), halved);
  EXPECT_THROW(demote_atomics(halved, access_analysis(halved, *layout), {0}), std::invalid_argument);
}

TEST(StripStores, RemovesWritesAndTheirOperands) {
  const auto body = range_body(0, 8, {
      ConstInt{1}, Load{1, {ix::i()}}, BinOp{BinOpKind::Add, 1, 0}, Store{0, {ix::i()}, 2, false},
      Store{2, {ix::i()}, 0, false}});
  const auto out = strip_stores(body, {0});
  EXPECT_EQ(count_if_kind(out, 5), 1);
  EXPECT_EQ(count_if_kind(out, 4), 0);
}

// Randomized properties over lowered fuzz kernels.
class TaskProperties : public ::testing::TestWithParam<int> {};

TEST_P(TaskProperties, MetaSoundAndDataflowPreservesSemantics) {
  const auto program = random_program(static_cast<std::uint64_t>(GetParam()) * 104729 + 11);
  const auto &layout = *program.layout;
  SparseGrid grid(program.layout);
  for (const auto &c : program.init) grid.write_value(c.field, c.cell, c.value, true);

  for (const auto &d : program.schedule) {
    if (d.kind != Directive::Kind::Launch) continue;
    for (const auto &task : lower_kernel(program.kernels[d.kernel], layout)) {
      const TaskBody &body = *task.body;
      const TaskBody opt = dataflow_optimize(body);
      EXPECT_LE(opt.instrs.size(), body.instrs.size());
      EXPECT_EQ(dataflow_optimize(opt), opt);
      EXPECT_NO_THROW(validate_body(opt, layout));

      SparseGrid other = grid;
      try {
        interpret_task(body, grid, task.launch_id, [&](const StateKey &s, bool is_write) {
          if (is_write) {
            EXPECT_TRUE(task.meta.writes(s)) << to_string(s, &layout) << "\n" << to_string(body, &layout);
          } else {
            EXPECT_TRUE(task.meta.reads(s)) << to_string(s, &layout) << "\n" << to_string(body, &layout);
          }
        });
      } catch (const RuntimeTrap &) {
        return;
      }
      interpret_task(opt, other);
      const auto diff = compare_snapshots(layout, grid.snapshot(), other.snapshot());
      EXPECT_TRUE(diff.equal) << diff.first_divergence << "\n" << to_string(body, &layout);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, TaskProperties, ::testing::Range(1, 201));
