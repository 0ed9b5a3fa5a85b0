#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sparseflow/grid.hpp"
#include "sparseflow/ir_bank.hpp"
#include "sparseflow/optimizer.hpp"
#include "sparseflow/sfg.hpp"
#include "sparseflow/task.hpp"

namespace sparseflow {

enum class ExecMode : std::uint8_t { Sync, Async };

const char *to_string(ExecMode mode);

struct EngineOptions {
  ExecMode mode = ExecMode::Async;
  PassSet passes = PassSet::all();  // Async only
  bool dfo = true;                  // per-task compilation
  int max_rounds = 10;
  bool parallel_compile = true;
};

struct Metrics {
  std::int64_t tasks_launched = 0;
  std::int64_t tasks_compiled = 0;
  std::int64_t instructions_emitted = 0;
  std::int64_t listgen_tasks_launched = 0;
  std::int64_t sync_count = 0;
  std::map<SNodeId, std::int64_t> listgen_by_snode;
};

// One "key value" line per counter, listgen counts as listgen_snode_<id>.
std::string to_string(const Metrics &m);

struct TraceEntry {
  std::int64_t launch_id = 0;
  std::string name;
  TaskKind kind = TaskKind::Serial;
  SNodeId snode = -1;
  IRHandle handle;
  bool activating = false;
  int instructions = 0;
};

// Launches kernels against a grid. Sync mode runs every task as soon as it
// is launched; Async mode records tasks in a state-flow graph and optimizes
// and runs the graph at each sync.
class Engine {
 public:
  explicit Engine(std::shared_ptr<const SNodeTree> layout, EngineOptions options = {});

  void launch(const Kernel &kernel);
  // Flushes pending work. A RuntimeTrap raised by a task drops the rest of
  // the pending window and propagates.
  void sync();

  // Fresh grid, metrics, trace and window; the IR bank and its caches persist.
  void reset();

  SparseGrid &grid() { return *grid_; }
  const SparseGrid &grid() const { return *grid_; }
  const Metrics &metrics() const { return metrics_; }
  const std::vector<TraceEntry> &trace() const { return trace_; }
  const PassReport &pass_report() const { return report_; }
  IRBank &bank() { return bank_; }
  const StateFlowGraph &pending() const { return pending_; }
  const EngineOptions &options() const { return options_; }

  // Called at each non-empty Async flush with the graph before and after optimization.
  std::function<void(const StateFlowGraph &before, const StateFlowGraph &after)> on_flush;

 private:
  void execute(const std::vector<Task> &tasks);

  std::shared_ptr<const SNodeTree> layout_;
  EngineOptions options_;
  IRBank bank_;
  std::unique_ptr<SparseGrid> grid_;
  StateFlowGraph pending_;
  Metrics metrics_;
  std::vector<TraceEntry> trace_;
  PassReport report_;
  std::int64_t next_launch_id_ = 1;
};

struct InitCell {
  FieldId field = 0;
  Coord cell;
  Scalar value = std::int64_t{0};
};

struct Directive {
  enum class Kind : std::uint8_t { Launch, Sync };
  Kind kind = Kind::Launch;
  int kernel = 0;  // index into Program::kernels

  static Directive launch(int k) { return {Kind::Launch, k}; }
  static Directive sync() { return {Kind::Sync, 0}; }
};

struct Program {
  std::string name;
  std::shared_ptr<const SNodeTree> layout;
  std::vector<Kernel> kernels;
  std::vector<Directive> schedule;
  // Fields compared and reported; all fields when unset.
  std::optional<std::set<FieldId>> observed;
  // Cells written (activating) before the schedule starts.
  std::vector<InitCell> init;
};

struct RunResult {
  GridSnapshot snapshot;
  Metrics metrics;
  PassReport report;
  std::vector<TraceEntry> trace;
};

// Runs the schedule, followed by a final sync. With `engine` given, that
// engine is reset and reused so its IR bank carries over between runs.
RunResult run_program(const Program &program, const EngineOptions &options, Engine *engine = nullptr);

struct DiffResult {
  bool equal = true;
  std::string divergence;
  RunResult reference;
  RunResult candidate;
};

// Compares the candidate configuration against synchronous, unoptimized
// execution on the observed fields.
DiffResult oracle_diff(const Program &program, const EngineOptions &candidate = {});

}  // namespace sparseflow
