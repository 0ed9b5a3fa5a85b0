#pragma once

#include <string>
#include <vector>

#include "sparseflow/ir_bank.hpp"
#include "sparseflow/sfg.hpp"

namespace sparseflow {

struct PassSet {
  bool listgen = true;  // redundant list generation removal
  bool demote = true;   // activation demotion
  bool fuse = true;     // task fusion
  bool dse = true;      // dead store and task elimination

  static PassSet all() { return {}; }
  static PassSet none() { return {false, false, false, false}; }
  // Comma-separated subset of "listgen,demote,fuse,dse", or "all" / "none".
  // Throws std::invalid_argument for an unknown name.
  static PassSet parse(const std::string &list);
  std::string to_string() const;
  bool any() const { return listgen || demote || fuse || dse; }
};

struct PassReport {
  int listgens_removed = 0;
  int tasks_demoted = 0;
  int fusions = 0;
  int outputs_stripped = 0;
  int tasks_eliminated = 0;
  int rounds = 0;

  bool changed() const {
    return listgens_removed || tasks_demoted || fusions || outputs_stripped || tasks_eliminated;
  }
  PassReport &operator+=(const PassReport &o);
};

// Each pass rewrites the graph in place (rebuilding it) and reports what it did.

// Deletes a list generation when the previous generation of the same list
// saw the same mask and the same parent list.
PassReport remove_redundant_listgens(StateFlowGraph &g, IRBank &bank);

// A struct-for that repeats an earlier identical struct-for over the same
// list version cannot activate anything new; its writes are made plain.
PassReport demote_activations(StateFlowGraph &g, IRBank &bank);

// Greedily merges pairs of compatible tasks whose merge keeps the graph
// acyclic and the per-iteration semantics intact.
PassReport fuse_tasks(StateFlowGraph &g, IRBank &bank);

// Strips value versions that are overwritten completely before any read and
// deletes tasks left without effect. Final value versions stay observable.
PassReport eliminate_dead_stores(StateFlowGraph &g, IRBank &bank);

// Runs the enabled passes in the order listgen, demote, listgen, fuse, dse
// until a full round changes nothing or `max_rounds` is reached.
PassReport optimize(StateFlowGraph &g, IRBank &bank, const PassSet &passes = PassSet::all(), int max_rounds = 10);

// Concatenates two bodies of the same loop kind and range.
TaskBody concat_bodies(const TaskBody &a, const TaskBody &b);

}  // namespace sparseflow
