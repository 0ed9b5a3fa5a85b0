#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include "sparseflow/ir.hpp"
#include "sparseflow/meta.hpp"
#include "sparseflow/task.hpp"

namespace sparseflow {

struct BankStats {
  std::int64_t compile_misses = 0;
  std::int64_t compile_hits = 0;
  std::int64_t instructions_emitted = 0;
  std::int64_t apply_misses = 0;
  std::int64_t apply_hits = 0;
};

struct CompileResult {
  IRHandle handle;
  std::shared_ptr<const TaskBody> body;
  bool miss = false;
};

// Content-addressed store of task bodies with memoized transformations.
// Safe to use from several threads at once.
class IRBank {
 public:
  explicit IRBank(std::shared_ptr<const SNodeTree> layout) : layout_(std::move(layout)) {}

  const SNodeTree &layout() const { return *layout_; }

  IRHandle insert(TaskBody body);
  // Throws std::out_of_range for an unknown handle.
  std::shared_ptr<const TaskBody> get(const IRHandle &handle) const;
  bool contains(const IRHandle &handle) const;
  TaskMeta meta(const IRHandle &handle);

  // Applies `fn` to the body behind `handle` once per (handle, key) and
  // returns the handle of the result on every later call.
  IRHandle cached_apply(const IRHandle &handle, const std::string &key,
                        const std::function<TaskBody(const TaskBody &)> &fn);

  // Legal atomic demotion followed by data-flow optimization; with
  // `optimize` false the body is passed through unchanged. Memoized per
  // (handle, optimize); a miss adds the result length to the emitted count.
  CompileResult compile(const IRHandle &handle, bool optimize = true);

  Task make_task(const std::string &name, const IRHandle &handle, std::int64_t launch_id);

  BankStats stats() const;
  std::size_t size() const;

 private:
  std::shared_ptr<const SNodeTree> layout_;
  mutable std::shared_mutex mu_;
  std::unordered_map<IRHandle, std::shared_ptr<const TaskBody>> bodies_;
  std::unordered_map<IRHandle, TaskMeta> metas_;
  std::map<std::pair<std::string, std::string>, IRHandle> applied_;
  std::map<std::pair<std::string, bool>, IRHandle> compiled_;
  BankStats stats_;
};

}  // namespace sparseflow
