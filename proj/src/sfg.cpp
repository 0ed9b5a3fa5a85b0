#include "sparseflow/sfg.hpp"

#include <algorithm>
#include <functional>
#include <sstream>
#include <tuple>

namespace sparseflow {

const char *to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::RAW: return "RAW";
    case EdgeKind::WAW: return "WAW";
    case EdgeKind::WAR: return "WAR";
  }
  return "?";
}

void StateFlowGraph::clear() {
  tasks_.clear();
  edges_.clear();
  in_.assign(1, {});
  out_.assign(1, {});
  latest_writer_.clear();
  readers_.clear();
}

void StateFlowGraph::add_edge(int src, int dst, const StateKey &state, EdgeKind kind) {
  if (src == dst) return;
  Edge e{src, dst, state, kind};
  if (!edges_.insert(e).second) return;
  out_[src].push_back(e);
  in_[dst].push_back(e);
}

int StateFlowGraph::insert(Task task) {
  const int node = size();
  tasks_.push_back(std::move(task));
  in_.emplace_back();
  out_.emplace_back();
  const TaskMeta &meta = tasks_.back().meta;

  auto writer_of = [&](const StateKey &s) {
    auto it = latest_writer_.find(s);
    return it == latest_writer_.end() ? kInitial : it->second;
  };

  for (const auto &s : meta.inputs) add_edge(writer_of(s), node, s, EdgeKind::RAW);
  for (const auto &s : meta.outputs) {
    add_edge(writer_of(s), node, s, EdgeKind::WAW);
    for (int r : readers_[s]) add_edge(r, node, s, EdgeKind::WAR);
    latest_writer_[s] = node;
    readers_[s].clear();
  }
  for (const auto &s : meta.inputs) {
    if (!meta.writes(s)) readers_[s].insert(node);
  }
  return node;
}

void StateFlowGraph::rebuild(std::vector<Task> order) {
  clear();
  for (auto &t : order) insert(std::move(t));
}

bool StateFlowGraph::has_edge(int src, int dst) const {
  for (const auto &e : out_.at(src)) {
    if (e.dst == dst) return true;
  }
  return false;
}

int StateFlowGraph::input_source(int node, const StateKey &state) const {
  for (const auto &e : in_.at(node)) {
    if (e.kind == EdgeKind::RAW && e.state == state) return e.src;
  }
  return kInitial;
}

std::vector<int> StateFlowGraph::kahn(const std::function<int(const std::vector<int> &)> &pick) const {
  std::vector<int> indegree(size(), 0);
  for (int n = 1; n < size(); ++n) {
    std::set<int> preds;
    for (const auto &e : in_[n]) {
      if (e.src != kInitial) preds.insert(e.src);
    }
    indegree[n] = static_cast<int>(preds.size());
  }
  std::vector<int> ready;
  for (int n = 1; n < size(); ++n) {
    if (indegree[n] == 0) ready.push_back(n);
  }
  std::vector<int> order;
  while (!ready.empty()) {
    const int i = pick(ready);
    const int n = ready[i];
    ready.erase(ready.begin() + i);
    order.push_back(n);
    std::set<int> succs;
    for (const auto &e : out_[n]) succs.insert(e.dst);
    for (int s : succs) {
      if (--indegree[s] == 0) ready.push_back(s);
    }
  }
  return order;
}

std::vector<int> StateFlowGraph::topo_sort() const {
  return kahn([&](const std::vector<int> &ready) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(ready.size()); ++i) {
      const auto key = std::make_tuple(task(ready[i]).launch_id, ready[i]);
      if (key < std::make_tuple(task(ready[best]).launch_id, ready[best])) best = i;
    }
    return best;
  });
}

std::vector<int> StateFlowGraph::topo_sort_random(std::mt19937_64 &rng) const {
  return kahn([&](const std::vector<int> &ready) {
    return static_cast<int>(rng() % ready.size());
  });
}

std::vector<boost::dynamic_bitset<>> StateFlowGraph::transitive_closure() const {
  std::vector<boost::dynamic_bitset<>> reach(size(), boost::dynamic_bitset<>(size()));
  for (int n = size() - 1; n >= 0; --n) {
    for (const auto &e : out_[n]) {
      reach[n].set(e.dst);
      reach[n] |= reach[e.dst];
    }
  }
  return reach;
}

bool StateFlowGraph::has_path(int a, int b) const { return transitive_closure()[a].test(b); }

bool StateFlowGraph::path_length_ge_2(const std::vector<boost::dynamic_bitset<>> &reach, int a, int b) {
  for (std::size_t c = reach[a].find_first(); c != boost::dynamic_bitset<>::npos; c = reach[a].find_next(c)) {
    if (static_cast<int>(c) == a || static_cast<int>(c) == b) continue;
    if (reach[c].test(b)) return true;
  }
  return false;
}

std::string StateFlowGraph::to_dot(const std::string &title) const {
  std::ostringstream os;
  os << "digraph \"" << title << "\" {\n";
  os << "  node [shape=box, fontname=\"monospace\"];\n";
  os << "  n0 [label=\"initial\", shape=ellipse];\n";
  for (int n = 1; n < size(); ++n) {
    const Task &t = task(n);
    os << "  n" << n << " [label=\"" << t.name << "\\n#" << t.launch_id << " " << to_string(t.kind())
       << " " << t.handle.short_hex() << "\"];\n";
  }
  for (const auto &e : edges_) {
    const char *style = e.kind == EdgeKind::RAW ? "solid" : (e.kind == EdgeKind::WAW ? "bold" : "dashed");
    os << "  n" << e.src << " -> n" << e.dst << " [label=\"" << to_string(e.kind) << " "
       << to_string(e.state, layout_) << "\", style=" << style << "];\n";
  }
  os << "}\n";
  return os.str();
}

bool isomorphic(const StateFlowGraph &a, const StateFlowGraph &b) {
  if (a.num_tasks() != b.num_tasks()) return false;
  using Key = std::tuple<std::int64_t, std::int64_t, StateKey, EdgeKind>;
  auto label = [](const StateFlowGraph &g, int n) -> std::int64_t {
    return n == StateFlowGraph::kInitial ? -1 : g.task(n).launch_id;
  };
  auto summarize = [&](const StateFlowGraph &g, std::map<std::int64_t, IRHandle> &nodes, std::set<Key> &edges) {
    for (int n = 1; n < g.size(); ++n) {
      if (!nodes.emplace(g.task(n).launch_id, g.task(n).handle).second) return false;
    }
    for (const auto &e : g.edges()) edges.insert({label(g, e.src), label(g, e.dst), e.state, e.kind});
    return true;
  };
  std::map<std::int64_t, IRHandle> na, nb;
  std::set<Key> ea, eb;
  if (!summarize(a, na, ea) || !summarize(b, nb, eb)) return false;
  return na == nb && ea == eb;
}

}  // namespace sparseflow
