#include "sparseflow/engine.hpp"

#include <future>
#include <unordered_map>

#include "sparseflow/interpreter.hpp"

namespace sparseflow {

const char *to_string(ExecMode mode) { return mode == ExecMode::Sync ? "sync" : "async"; }

std::string to_string(const Metrics &m) {
  std::string s;
  auto line = [&](const std::string &key, std::int64_t v) { s += key + " " + std::to_string(v) + "\n"; };
  line("tasks_launched", m.tasks_launched);
  line("tasks_compiled", m.tasks_compiled);
  line("instructions_emitted", m.instructions_emitted);
  line("listgen_tasks_launched", m.listgen_tasks_launched);
  line("sync_count", m.sync_count);
  for (const auto &[snode, n] : m.listgen_by_snode) line("listgen_snode_" + std::to_string(snode), n);
  return s;
}

Engine::Engine(std::shared_ptr<const SNodeTree> layout, EngineOptions options)
    : layout_(std::move(layout)),
      options_(options),
      bank_(layout_),
      grid_(std::make_unique<SparseGrid>(layout_)),
      pending_(layout_.get()) {}

void Engine::reset() {
  grid_ = std::make_unique<SparseGrid>(layout_);
  pending_.clear();
  metrics_ = {};
  trace_.clear();
  report_ = {};
  next_launch_id_ = 1;
}

void Engine::launch(const Kernel &kernel) {
  std::vector<Task> tasks = lower_kernel(kernel, *layout_);
  for (auto &t : tasks) {
    bank_.insert(*t.body);
    t.launch_id = next_launch_id_++;
  }
  if (options_.mode == ExecMode::Sync) {
    execute(tasks);
    return;
  }
  for (auto &t : tasks) pending_.insert(std::move(t));
}

void Engine::sync() {
  ++metrics_.sync_count;
  if (options_.mode == ExecMode::Sync || pending_.num_tasks() == 0) return;
  const StateFlowGraph before = pending_;
  pending_.clear();
  StateFlowGraph g = before;
  if (options_.passes.any()) report_ += optimize(g, bank_, options_.passes, options_.max_rounds);
  if (on_flush) on_flush(before, g);
  std::vector<Task> order;
  for (int n : g.topo_sort()) order.push_back(g.task(n));
  execute(order);
}

void Engine::execute(const std::vector<Task> &tasks) {
  std::vector<IRHandle> distinct;
  {
    std::unordered_map<IRHandle, bool> seen;
    for (const auto &t : tasks) {
      if (seen.emplace(t.handle, true).second) distinct.push_back(t.handle);
    }
  }
  std::unordered_map<IRHandle, CompileResult> compiled;
  auto record = [&](const IRHandle &h, CompileResult c) {
    if (c.miss) {
      ++metrics_.tasks_compiled;
      metrics_.instructions_emitted += static_cast<std::int64_t>(c.body->instrs.size());
    }
    compiled.emplace(h, std::move(c));
  };
  if (options_.parallel_compile && distinct.size() > 1) {
    std::vector<std::future<CompileResult>> futures;
    for (const auto &h : distinct)
      futures.push_back(std::async(std::launch::async, [&, h] { return bank_.compile(h, options_.dfo); }));
    for (std::size_t i = 0; i < distinct.size(); ++i) record(distinct[i], futures[i].get());
  } else {
    for (const auto &h : distinct) record(h, bank_.compile(h, options_.dfo));
  }

  for (const auto &t : tasks) {
    const CompileResult &c = compiled.at(t.handle);
    interpret_task(*c.body, *grid_, t.launch_id);
    ++metrics_.tasks_launched;
    if (t.kind() == TaskKind::ListGen) {
      ++metrics_.listgen_tasks_launched;
      ++metrics_.listgen_by_snode[t.snode()];
    }
    trace_.push_back({t.launch_id, t.name, t.kind(), t.snode(), c.handle, has_activating_access(*c.body),
                      static_cast<int>(c.body->instrs.size())});
  }
}

RunResult run_program(const Program &program, const EngineOptions &options, Engine *engine) {
  std::unique_ptr<Engine> owned;
  if (engine) {
    engine->reset();
  } else {
    owned = std::make_unique<Engine>(program.layout, options);
    engine = owned.get();
  }
  for (const auto &c : program.init) engine->grid().write_value(c.field, c.cell, c.value, true);
  for (const auto &d : program.schedule) {
    if (d.kind == Directive::Kind::Sync) {
      engine->sync();
    } else {
      engine->launch(program.kernels.at(d.kernel));
    }
  }
  engine->sync();
  return {engine->grid().snapshot(), engine->metrics(), engine->pass_report(), engine->trace()};
}

DiffResult oracle_diff(const Program &program, const EngineOptions &candidate) {
  EngineOptions reference;
  reference.mode = ExecMode::Sync;
  reference.passes = PassSet::none();
  reference.dfo = false;
  DiffResult d;
  d.reference = run_program(program, reference);
  d.candidate = run_program(program, candidate);
  const SnapshotDiff cmp =
      compare_snapshots(*program.layout, d.reference.snapshot, d.candidate.snapshot, 1e-9, program.observed);
  d.equal = cmp.equal;
  d.divergence = cmp.first_divergence;
  return d;
}

}  // namespace sparseflow
