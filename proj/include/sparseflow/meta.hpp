#pragma once

#include <compare>
#include <map>
#include <set>
#include <string>

#include "sparseflow/ir.hpp"
#include "sparseflow/layout.hpp"

namespace sparseflow {

enum class StateKind : std::uint8_t { Value, Mask, List, Allocator };

// Unit of dependency tracking. Ordered by (kind, id).
struct StateKey {
  StateKind kind = StateKind::Value;
  int id = 0;  // field id for Value, snode id for Mask/List, 0 for Allocator

  static StateKey value(FieldId f) { return {StateKind::Value, f}; }
  static StateKey mask(SNodeId s) { return {StateKind::Mask, s}; }
  static StateKey list(SNodeId s) { return {StateKind::List, s}; }
  static StateKey allocator() { return {StateKind::Allocator, 0}; }

  auto operator<=>(const StateKey &) const = default;
  bool operator==(const StateKey &) const = default;
};

std::string to_string(const StateKey &s, const SNodeTree *layout = nullptr);

enum class Overwrite : std::uint8_t { Complete, Partial };

struct TaskMeta {
  std::set<StateKey> inputs;
  std::set<StateKey> outputs;
  // Per output state that has one: Value outputs always, List outputs of
  // list generation (always complete).
  std::map<StateKey, Overwrite> overwrite;

  bool operator==(const TaskMeta &) const = default;
  bool writes(const StateKey &s) const { return outputs.count(s) > 0; }
  bool reads(const StateKey &s) const { return inputs.count(s) > 0; }
  bool complete(const StateKey &s) const {
    auto it = overwrite.find(s);
    return it != overwrite.end() && it->second == Overwrite::Complete;
  }
};

// Input/output state sets of a body. Every access reads the masks covering
// the field; activating writes additionally write those masks and read and
// write the allocator. A Value output is complete when a plain store hits
// the identity address on every axis and the loop covers the whole field.
TaskMeta analyze_meta(const TaskBody &body, const SNodeTree &layout);

struct AccessVerdict {
  bool same_address = true;  // all addresses touching the field are identical
  bool injective = true;     // every address is injective in the loop index
  bool operator==(const AccessVerdict &) const = default;
};

// Injective when every loop axis of the task reaches the address through
// an injective component (identity, +c, *c, /1). Serial bodies run one
// iteration and are always injective.
bool address_injective(const Address &addr, const TaskBody &body, const SNodeTree &layout);

std::map<FieldId, AccessVerdict> access_analysis(const TaskBody &body, const SNodeTree &layout);

// True when the body holds an activating Store or AtomicAdd.
bool has_activating_access(const TaskBody &body);

}  // namespace sparseflow
