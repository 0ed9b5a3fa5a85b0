#pragma once

#include <compare>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <boost/dynamic_bitset.hpp>

#include "sparseflow/meta.hpp"
#include "sparseflow/task.hpp"

namespace sparseflow {

enum class EdgeKind : std::uint8_t { RAW, WAW, WAR };

const char *to_string(EdgeKind kind);

struct Edge {
  int src = 0;
  int dst = 0;
  StateKey state;
  EdgeKind kind = EdgeKind::RAW;

  auto operator<=>(const Edge &) const = default;
  bool operator==(const Edge &) const = default;
};

// Dependency graph over a window of pending tasks. Node 0 stands for the
// state before the window; task nodes are numbered in insertion order, so
// every edge points from a lower to a higher node index.
class StateFlowGraph {
 public:
  static constexpr int kInitial = 0;

  explicit StateFlowGraph(const SNodeTree *layout = nullptr) : layout_(layout) { clear(); }

  void clear();
  // Appends a task and connects it: a flow edge from the latest writer of
  // each input, an output edge from the latest writer of each output and
  // anti edges from every reader of the version being replaced.
  int insert(Task task);
  // Clears the graph and reinserts the tasks in the given order.
  void rebuild(std::vector<Task> order);

  // Number of nodes including the initial node.
  int size() const { return static_cast<int>(tasks_.size()) + 1; }
  int num_tasks() const { return static_cast<int>(tasks_.size()); }
  const Task &task(int node) const { return tasks_.at(node - 1); }
  const std::vector<Task> &tasks() const { return tasks_; }
  const std::set<Edge> &edges() const { return edges_; }
  const std::vector<Edge> &in_edges(int node) const { return in_.at(node); }
  const std::vector<Edge> &out_edges(int node) const { return out_.at(node); }
  bool has_edge(int src, int dst) const;

  // Node holding the final version of each state written in the window.
  const std::map<StateKey, int> &latest_writer() const { return latest_writer_; }
  // Writer of the version a node reads for `state` (kInitial when unwritten).
  int input_source(int node, const StateKey &state) const;

  // Kahn's algorithm; ties go to the lowest launch id. Returns task nodes.
  std::vector<int> topo_sort() const;
  // Kahn's algorithm with uniformly random tie-breaking.
  std::vector<int> topo_sort_random(std::mt19937_64 &rng) const;

  // reach[a][b] is set when a path of length >= 1 leads from a to b.
  std::vector<boost::dynamic_bitset<>> transitive_closure() const;
  bool has_path(int a, int b) const;
  // True when some node c outside {a, b} has a path a -> c and c -> b.
  static bool path_length_ge_2(const std::vector<boost::dynamic_bitset<>> &reach, int a, int b);

  std::string to_dot(const std::string &title = "sfg") const;

 private:
  std::vector<int> kahn(const std::function<int(const std::vector<int> &)> &pick) const;
  void add_edge(int src, int dst, const StateKey &state, EdgeKind kind);

  const SNodeTree *layout_;
  std::vector<Task> tasks_;
  std::set<Edge> edges_;
  std::vector<std::vector<Edge>> in_;
  std::vector<std::vector<Edge>> out_;
  std::map<StateKey, int> latest_writer_;
  std::map<StateKey, std::set<int>> readers_;
};

// Same tasks (by launch id and handle) and same labelled edges.
bool isomorphic(const StateFlowGraph &a, const StateFlowGraph &b);

}  // namespace sparseflow
