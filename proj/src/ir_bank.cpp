#include "sparseflow/ir_bank.hpp"

#include <stdexcept>

#include "sparseflow/dataflow.hpp"

namespace sparseflow {

IRHandle IRBank::insert(TaskBody body) {
  const IRHandle h = hash_body(body);
  {
    std::shared_lock lock(mu_);
    if (bodies_.count(h)) return h;
  }
  auto ptr = std::make_shared<const TaskBody>(std::move(body));
  std::unique_lock lock(mu_);
  bodies_.emplace(h, std::move(ptr));
  return h;
}

std::shared_ptr<const TaskBody> IRBank::get(const IRHandle &handle) const {
  std::shared_lock lock(mu_);
  auto it = bodies_.find(handle);
  if (it == bodies_.end()) throw std::out_of_range("unknown IR handle " + handle.hex());
  return it->second;
}

bool IRBank::contains(const IRHandle &handle) const {
  std::shared_lock lock(mu_);
  return bodies_.count(handle) > 0;
}

TaskMeta IRBank::meta(const IRHandle &handle) {
  {
    std::shared_lock lock(mu_);
    auto it = metas_.find(handle);
    if (it != metas_.end()) return it->second;
  }
  TaskMeta m = analyze_meta(*get(handle), *layout_);
  std::unique_lock lock(mu_);
  metas_.emplace(handle, m);
  return m;
}

IRHandle IRBank::cached_apply(const IRHandle &handle, const std::string &key,
                              const std::function<TaskBody(const TaskBody &)> &fn) {
  const auto k = std::make_pair(handle.hex(), key);
  {
    std::unique_lock lock(mu_);
    auto it = applied_.find(k);
    if (it != applied_.end()) {
      ++stats_.apply_hits;
      return it->second;
    }
  }
  const IRHandle out = insert(fn(*get(handle)));
  std::unique_lock lock(mu_);
  auto [it, inserted] = applied_.emplace(k, out);
  if (inserted) {
    ++stats_.apply_misses;
  } else {
    ++stats_.apply_hits;
  }
  return it->second;
}

CompileResult IRBank::compile(const IRHandle &handle, bool optimize) {
  const auto k = std::make_pair(handle.hex(), optimize);
  {
    std::unique_lock lock(mu_);
    auto it = compiled_.find(k);
    if (it != compiled_.end()) {
      ++stats_.compile_hits;
      return {it->second, bodies_.at(it->second), false};
    }
  }
  auto src = get(handle);
  TaskBody out = optimize ? dataflow_optimize(demote_legal_atomics(*src, *layout_)) : *src;
  const auto length = static_cast<std::int64_t>(out.instrs.size());
  const IRHandle h = insert(std::move(out));
  std::unique_lock lock(mu_);
  auto [it, inserted] = compiled_.emplace(k, h);
  if (inserted) {
    ++stats_.compile_misses;
    stats_.instructions_emitted += length;
  } else {
    ++stats_.compile_hits;
  }
  return {it->second, bodies_.at(it->second), inserted};
}

Task IRBank::make_task(const std::string &name, const IRHandle &handle, std::int64_t launch_id) {
  Task t;
  t.name = name;
  t.handle = handle;
  t.body = get(handle);
  t.meta = meta(handle);
  t.launch_id = launch_id;
  return t;
}

BankStats IRBank::stats() const {
  std::shared_lock lock(mu_);
  return stats_;
}

std::size_t IRBank::size() const {
  std::shared_lock lock(mu_);
  return bodies_.size();
}

}  // namespace sparseflow
