#include "sparseflow/optimizer.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "sparseflow/dataflow.hpp"

namespace sparseflow {

PassSet PassSet::parse(const std::string &list) {
  if (list == "all") return all();
  if (list == "none" || list.empty()) return none();
  PassSet p = none();
  std::stringstream ss(list);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (name == "listgen") {
      p.listgen = true;
    } else if (name == "demote") {
      p.demote = true;
    } else if (name == "fuse") {
      p.fuse = true;
    } else if (name == "dse") {
      p.dse = true;
    } else {
      throw std::invalid_argument("unknown pass '" + name + "' (expected listgen, demote, fuse, dse, all or none)");
    }
  }
  return p;
}

std::string PassSet::to_string() const {
  std::string s;
  auto add = [&](bool on, const char *name) {
    if (!on) return;
    if (!s.empty()) s += ",";
    s += name;
  };
  add(listgen, "listgen");
  add(demote, "demote");
  add(fuse, "fuse");
  add(dse, "dse");
  return s.empty() ? "none" : s;
}

PassReport &PassReport::operator+=(const PassReport &o) {
  listgens_removed += o.listgens_removed;
  tasks_demoted += o.tasks_demoted;
  fusions += o.fusions;
  outputs_stripped += o.outputs_stripped;
  tasks_eliminated += o.tasks_eliminated;
  rounds += o.rounds;
  return *this;
}

TaskBody concat_bodies(const TaskBody &a, const TaskBody &b) {
  TaskBody out = a;
  const int offset = static_cast<int>(a.instrs.size());
  for (Instruction ins : b.instrs) {
    for_each_operand(ins, [&](int &op) { op += offset; });
    out.instrs.push_back(std::move(ins));
  }
  return out;
}

namespace {

std::vector<Task> tasks_except(const StateFlowGraph &g, const std::set<int> &removed) {
  std::vector<Task> out;
  for (int n = 1; n < g.size(); ++n) {
    if (!removed.count(n)) out.push_back(g.task(n));
  }
  return out;
}

TaskBody clear_activation(const TaskBody &body) {
  TaskBody out = body;
  for (auto &ins : out.instrs) {
    if (auto *s = std::get_if<Store>(&ins)) s->activating = false;
    if (auto *a = std::get_if<AtomicAdd>(&ins)) a->activating = false;
  }
  return out;
}

bool is_parallel(TaskKind k) { return k == TaskKind::RangeFor || k == TaskKind::StructFor; }

std::map<FieldId, std::vector<Address>> addresses_by_field(const TaskBody &body) {
  std::map<FieldId, std::vector<Address>> out;
  for (const auto &ins : body.instrs) {
    if (const auto *l = std::get_if<Load>(&ins)) out[l->field].push_back(l->addr);
    if (const auto *s = std::get_if<Store>(&ins)) out[s->field].push_back(s->addr);
    if (const auto *a = std::get_if<AtomicAdd>(&ins)) out[a->field].push_back(a->addr);
  }
  return out;
}

// Group key for fusion candidates; nullopt for tasks that never fuse.
using FusionKey = std::tuple<int, std::int64_t, std::int64_t, int>;

std::optional<FusionKey> fusion_key(const StateFlowGraph &g, int n) {
  const Task &t = g.task(n);
  const TaskBody &b = *t.body;
  switch (b.kind) {
    case TaskKind::Serial: return FusionKey{0, 0, 0, 0};
    case TaskKind::RangeFor: return FusionKey{1, b.begin, b.end, 0};
    case TaskKind::StructFor: {
      const int src = t.meta.reads(StateKey::list(b.snode)) ? g.input_source(n, StateKey::list(b.snode)) : -1;
      return FusionKey{2, b.snode, src, 0};
    }
    case TaskKind::ListGen: return std::nullopt;
  }
  return std::nullopt;
}

bool per_iteration_compatible(const StateFlowGraph &g, int a, int b, const SNodeTree &layout) {
  const Task &ta = g.task(a);
  const Task &tb = g.task(b);
  for (const auto &e : g.out_edges(a)) {
    if (e.dst == b && e.state.kind == StateKind::Mask) return false;
  }
  const auto va = access_analysis(*ta.body, layout);
  const auto vb = access_analysis(*tb.body, layout);
  const auto aa = addresses_by_field(*ta.body);
  const auto ab = addresses_by_field(*tb.body);
  for (const auto &[f, verdict_a] : va) {
    auto it = vb.find(f);
    if (it == vb.end()) continue;
    const StateKey s = StateKey::value(f);
    if (!ta.meta.writes(s) && !tb.meta.writes(s)) continue;
    const AccessVerdict &verdict_b = it->second;
    if (!verdict_a.same_address || !verdict_a.injective || !verdict_b.same_address || !verdict_b.injective)
      return false;
    const Address &ref = aa.at(f).front();
    for (const auto &addr : ab.at(f)) {
      if (!(addr == ref)) return false;
    }
  }
  return true;
}

bool fusible(const StateFlowGraph &g, int a, int b, const std::vector<boost::dynamic_bitset<>> &reach,
             const SNodeTree &layout) {
  const bool ab = reach[a].test(b);
  const bool ba = reach[b].test(a);
  if (!ab && !ba) return true;
  if (ba) return false;
  if (!g.has_edge(a, b)) return false;
  if (StateFlowGraph::path_length_ge_2(reach, a, b)) return false;
  if (is_parallel(g.task(a).kind()) && !per_iteration_compatible(g, a, b, layout)) return false;
  return true;
}

// Topological order of the graph with node b contracted into node a.
std::vector<int> contracted_order(const StateFlowGraph &g, int a, int b) {
  auto rep = [&](int n) { return n == b ? a : n; };
  std::map<int, std::set<int>> succ;
  std::map<int, int> indegree;
  for (int n = 1; n < g.size(); ++n) {
    if (n != b) indegree[n] = 0;
  }
  for (const auto &e : g.edges()) {
    if (e.src == StateFlowGraph::kInitial) continue;
    const int s = rep(e.src);
    const int d = rep(e.dst);
    if (s == d) continue;
    if (succ[s].insert(d).second) ++indegree[d];
  }
  std::vector<int> order;
  std::set<std::pair<std::int64_t, int>> ready;
  for (const auto &[n, deg] : indegree) {
    if (deg == 0) ready.insert({g.task(n).launch_id, n});
  }
  while (!ready.empty()) {
    const int n = ready.begin()->second;
    ready.erase(ready.begin());
    order.push_back(n);
    for (int s : succ[n]) {
      if (--indegree[s] == 0) ready.insert({g.task(s).launch_id, s});
    }
  }
  return order;
}

// True when a load of f may observe a write of f from the same task. In a
// loop any load can see an earlier iteration's write.
bool reads_own_write(const TaskBody &body, FieldId f) {
  bool written = false;
  bool loaded = false;
  for (const auto &ins : body.instrs) {
    if (const auto *l = std::get_if<Load>(&ins)) {
      if (l->field == f && written) return true;
      loaded |= l->field == f;
    }
    if (const auto *s = std::get_if<Store>(&ins)) written |= s->field == f;
    if (const auto *a = std::get_if<AtomicAdd>(&ins)) written |= a->field == f;
  }
  return body.is_loop() && loaded && written;
}

bool writes_activating(const TaskBody &body, FieldId f) {
  for (const auto &ins : body.instrs) {
    if (const auto *s = std::get_if<Store>(&ins)) {
      if (s->field == f && s->activating) return true;
    }
    if (const auto *a = std::get_if<AtomicAdd>(&ins)) {
      if (a->field == f && a->activating) return true;
    }
  }
  return false;
}

// A version is dead when nothing reads it and it is either replaced by a
// complete overwrite or is a final list version.
bool version_dead(const StateFlowGraph &g, int n, const StateKey &s) {
  if (s.kind == StateKind::Mask || s.kind == StateKind::Allocator) return false;
  std::optional<int> successor;
  for (const auto &e : g.out_edges(n)) {
    if (e.state != s) continue;
    if (e.kind == EdgeKind::RAW) return false;
    if (e.kind == EdgeKind::WAW) successor = e.dst;
  }
  if (successor) return g.task(*successor).meta.complete(s);
  return s.kind == StateKind::List;
}

}  // namespace

PassReport remove_redundant_listgens(StateFlowGraph &g, IRBank &) {
  PassReport r;
  std::map<int, int> alias;
  auto resolve = [&](int n) {
    auto it = alias.find(n);
    return it == alias.end() ? n : it->second;
  };
  std::set<int> removed;
  for (int b = 1; b < g.size(); ++b) {
    const Task &tb = g.task(b);
    if (tb.kind() != TaskKind::ListGen) continue;
    const StateKey list = StateKey::list(tb.snode());
    int prev = StateFlowGraph::kInitial;
    for (const auto &e : g.in_edges(b)) {
      if (e.kind == EdgeKind::WAW && e.state == list) prev = e.src;
    }
    const int a = resolve(prev);
    if (a == StateFlowGraph::kInitial) continue;
    bool same = true;
    for (const auto &s : tb.meta.inputs) {
      if (resolve(g.input_source(b, s)) != resolve(g.input_source(a, s))) same = false;
    }
    if (!same) continue;
    alias[b] = a;
    removed.insert(b);
  }
  if (removed.empty()) return r;
  r.listgens_removed = static_cast<int>(removed.size());
  g.rebuild(tasks_except(g, removed));
  return r;
}

PassReport demote_activations(StateFlowGraph &g, IRBank &bank) {
  PassReport r;
  std::set<std::pair<std::string, int>> seen;
  std::vector<Task> order;
  for (int n = 1; n < g.size(); ++n) {
    Task t = g.task(n);
    if (t.kind() == TaskKind::StructFor) {
      const StateKey list = StateKey::list(t.snode());
      const int src = t.meta.reads(list) ? g.input_source(n, list) : -1;
      const bool repeat = !seen.insert({t.handle.hex(), src}).second;
      if (repeat && has_activating_access(*t.body)) {
        if (!bank.contains(t.handle)) bank.insert(*t.body);
        const IRHandle h = bank.cached_apply(t.handle, "clear-activation", clear_activation);
        t = bank.make_task(t.name, h, t.launch_id);
        ++r.tasks_demoted;
      }
    }
    order.push_back(std::move(t));
  }
  if (r.tasks_demoted) g.rebuild(std::move(order));
  return r;
}

PassReport fuse_tasks(StateFlowGraph &g, IRBank &bank) {
  PassReport r;
  const SNodeTree &layout = bank.layout();
  while (true) {
    const auto reach = g.transitive_closure();
    std::vector<int> nodes;
    for (int n = 1; n < g.size(); ++n) nodes.push_back(n);
    std::sort(nodes.begin(), nodes.end(), [&](int x, int y) { return g.task(x).launch_id < g.task(y).launch_id; });
    std::vector<std::optional<FusionKey>> keys(g.size());
    for (int n : nodes) keys[n] = fusion_key(g, n);

    std::optional<std::pair<int, int>> pick;
    for (std::size_t i = 0; i < nodes.size() && !pick; ++i) {
      const int a = nodes[i];
      if (!keys[a]) continue;
      for (std::size_t j = i + 1; j < nodes.size(); ++j) {
        const int b = nodes[j];
        if (keys[b] != keys[a]) continue;
        const int first = std::min(a, b);
        const int second = std::max(a, b);
        if (fusible(g, first, second, reach, layout)) {
          pick = {first, second};
          break;
        }
      }
    }
    if (!pick) break;

    const auto [a, b] = *pick;
    const Task &ta = g.task(a);
    const Task &tb = g.task(b);
    const IRHandle h = bank.insert(concat_bodies(*ta.body, *tb.body));
    Task fused = bank.make_task(ta.name + "+" + tb.name, h, std::min(ta.launch_id, tb.launch_id));

    std::vector<Task> order;
    for (int n : contracted_order(g, a, b)) order.push_back(n == a ? fused : g.task(n));
    g.rebuild(std::move(order));
    ++r.fusions;
  }
  return r;
}

PassReport eliminate_dead_stores(StateFlowGraph &g, IRBank &bank) {
  PassReport r;
  while (true) {
    std::set<int> removed;
    std::vector<Task> order;
    bool changed = false;
    for (int n = 1; n < g.size(); ++n) {
      Task t = g.task(n);
      if (t.kind() == TaskKind::ListGen) {
        if (version_dead(g, n, StateKey::list(t.snode()))) {
          removed.insert(n);
          continue;
        }
        order.push_back(std::move(t));
        continue;
      }
      std::set<FieldId> strip;
      for (const auto &s : t.meta.outputs) {
        if (s.kind != StateKind::Value || !version_dead(g, n, s)) continue;
        if (writes_activating(*t.body, s.id) || reads_own_write(*t.body, s.id)) continue;
        strip.insert(s.id);
      }
      if (!strip.empty()) {
        std::string key = "strip";
        for (FieldId f : strip) key += ":" + std::to_string(f);
        if (!bank.contains(t.handle)) bank.insert(*t.body);
        const IRHandle h =
            bank.cached_apply(t.handle, key, [&](const TaskBody &body) { return strip_stores(body, strip); });
        t = bank.make_task(t.name, h, t.launch_id);
        r.outputs_stripped += static_cast<int>(strip.size());
        changed = true;
      }
      const bool effect = std::any_of(t.body->instrs.begin(), t.body->instrs.end(),
                                      [](const Instruction &ins) { return has_side_effect(ins); });
      if (!effect) {
        removed.insert(n);
        continue;
      }
      order.push_back(std::move(t));
    }
    r.tasks_eliminated += static_cast<int>(removed.size());
    if (removed.empty() && !changed) break;
    g.rebuild(std::move(order));
  }
  return r;
}

PassReport optimize(StateFlowGraph &g, IRBank &bank, const PassSet &passes, int max_rounds) {
  PassReport total;
  for (int round = 0; round < max_rounds; ++round) {
    PassReport r;
    if (passes.listgen) r += remove_redundant_listgens(g, bank);
    if (passes.demote) r += demote_activations(g, bank);
    if (passes.listgen) r += remove_redundant_listgens(g, bank);
    if (passes.fuse) r += fuse_tasks(g, bank);
    if (passes.dse) r += eliminate_dead_stores(g, bank);
    const bool changed = r.changed();
    total += r;
    ++total.rounds;
    if (!changed) break;
  }
  return total;
}

}  // namespace sparseflow
