#include "sparseflow/program_io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace sparseflow {

using nlohmann::json;

namespace {

const char *kAxisNames = "ijk";

[[noreturn]] void fail(const std::string &path, const std::string &msg) {
  throw ProgramError(path + ": " + msg);
}

const json &member(const json &obj, const std::string &key, const std::string &path) {
  if (!obj.is_object()) fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(path, "missing key '" + key + "'");
  return *it;
}

std::string get_string(const json &obj, const std::string &key, const std::string &path) {
  const json &v = member(obj, key, path);
  if (!v.is_string()) fail(path + "." + key, "expected a string");
  return v.get<std::string>();
}

std::int64_t get_int(const json &v, const std::string &path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<std::int64_t>();
}

std::int64_t get_int(const json &obj, const std::string &key, const std::string &path) {
  return get_int(member(obj, key, path), path + "." + key);
}

const json &get_array(const json &obj, const std::string &key, const std::string &path) {
  const json &v = member(obj, key, path);
  if (!v.is_array()) fail(path + "." + key, "expected an array");
  return v;
}

std::string at(const std::string &path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

SNodeKind parse_kind(const std::string &s, const std::string &path) {
  if (s == "root") return SNodeKind::Root;
  if (s == "dense") return SNodeKind::Dense;
  if (s == "indirection" || s == "pointer") return SNodeKind::Indirection;
  if (s == "bitmasked") return SNodeKind::Bitmasked;
  if (s == "place") return SNodeKind::Place;
  fail(path, "unknown snode kind '" + s + "'");
}

AxisMask parse_axes(const std::string &s, const std::string &path) {
  AxisMask m = 0;
  int last = -1;
  for (char ch : s) {
    const char *p = std::strchr(kAxisNames, ch);
    if (!p || ch == '\0') fail(path, "unknown axis '" + std::string(1, ch) + "'");
    const int a = static_cast<int>(p - kAxisNames);
    if (a <= last) fail(path, "axes must be listed in order i, j, k without repeats");
    last = a;
    m |= static_cast<AxisMask>(1u << a);
  }
  return m;
}

std::string format_axes(AxisMask m) {
  std::string s;
  for (int a = 0; a < kMaxAxes; ++a) {
    if (m & (1u << a)) s += kAxisNames[a];
  }
  return s;
}

ScalarType parse_type(const std::string &s, const std::string &path) {
  if (s == "int64" || s == "i64") return ScalarType::Int64;
  if (s == "float64" || s == "f64") return ScalarType::Float64;
  fail(path, "unknown scalar type '" + s + "'");
}

std::optional<BinOpKind> parse_binop(const std::string &s) {
  static const std::map<std::string, BinOpKind> ops = {
      {"add", BinOpKind::Add}, {"sub", BinOpKind::Sub}, {"mul", BinOpKind::Mul},
      {"div", BinOpKind::Div}, {"min", BinOpKind::Min}, {"max", BinOpKind::Max}};
  auto it = ops.find(s);
  if (it == ops.end()) return std::nullopt;
  return it->second;
}

TaskKind parse_task_kind(const std::string &s, const std::string &path) {
  if (s == "serial") return TaskKind::Serial;
  if (s == "range_for") return TaskKind::RangeFor;
  if (s == "struct_for") return TaskKind::StructFor;
  fail(path, "unknown kernel kind '" + s + "' (expected serial, range_for or struct_for)");
}

std::optional<std::int64_t> parse_integer(std::string_view s) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

FieldId field_ref(const SNodeTree &layout, const json &obj, const std::string &path) {
  const std::string name = get_string(obj, "field", path);
  auto f = layout.find_field(name);
  if (!f) fail(path + ".field", "unknown field '" + name + "'");
  return *f;
}

Address parse_address(const json &obj, const std::string &path) {
  const json &arr = get_array(obj, "index", path);
  Address addr;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_string() && !arr[i].is_number_integer()) fail(at(path + ".index", i), "expected an index expression");
    try {
      addr.push_back(arr[i].is_string() ? parse_index(arr[i].get<std::string>())
                                         : AxisIndex::constant(arr[i].get<std::int64_t>()));
    } catch (const std::invalid_argument &e) {
      fail(at(path + ".index", i), e.what());
    }
  }
  return addr;
}

int operand(const json &obj, const std::string &key, const std::string &path) {
  return static_cast<int>(get_int(obj, key, path));
}

bool activate_flag(const json &obj, const std::string &path) {
  auto it = obj.find("activate");
  if (it == obj.end()) return true;
  if (!it->is_boolean()) fail(path + ".activate", "expected a boolean");
  return it->get<bool>();
}

Instruction parse_instruction(const SNodeTree &layout, const json &obj, const std::string &path) {
  const std::string op = get_string(obj, "op", path);
  if (op == "const_int") return ConstInt{get_int(obj, "value", path)};
  if (op == "const_float") {
    const json &v = member(obj, "value", path);
    if (!v.is_number()) fail(path + ".value", "expected a number");
    return ConstFloat{v.get<double>()};
  }
  if (op == "index") {
    const std::string axis = get_string(obj, "axis", path);
    const AxisMask m = parse_axes(axis, path + ".axis");
    if (axis.size() != 1) fail(path + ".axis", "expected one axis");
    return LoopIndexVal{__builtin_ctz(m)};
  }
  if (auto b = parse_binop(op)) return BinOp{*b, operand(obj, "lhs", path), operand(obj, "rhs", path)};
  if (op == "load") return Load{field_ref(layout, obj, path), parse_address(obj, path)};
  if (op == "store")
    return Store{field_ref(layout, obj, path), parse_address(obj, path), operand(obj, "value", path),
                 activate_flag(obj, path)};
  if (op == "atomic_add")
    return AtomicAdd{field_ref(layout, obj, path), parse_address(obj, path), operand(obj, "value", path),
                     activate_flag(obj, path)};
  fail(path + ".op", "unknown opcode '" + op + "'");
}

json serialize_instruction(const SNodeTree &layout, const Instruction &ins) {
  auto addr_json = [](const Address &addr) {
    json a = json::array();
    for (const auto &x : addr) a.push_back(format_index(x));
    return a;
  };
  json o;
  std::visit(
      [&](const auto &x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ConstInt>) {
          o = {{"op", "const_int"}, {"value", x.value}};
        } else if constexpr (std::is_same_v<T, ConstFloat>) {
          o = {{"op", "const_float"}, {"value", x.value}};
        } else if constexpr (std::is_same_v<T, LoopIndexVal>) {
          o = {{"op", "index"}, {"axis", std::string(1, kAxisNames[x.axis])}};
        } else if constexpr (std::is_same_v<T, BinOp>) {
          o = {{"op", to_string(x.op)}, {"lhs", x.lhs}, {"rhs", x.rhs}};
        } else if constexpr (std::is_same_v<T, Load>) {
          o = {{"op", "load"}, {"field", layout.field(x.field).name}, {"index", addr_json(x.addr)}};
        } else if constexpr (std::is_same_v<T, Store>) {
          o = {{"op", "store"},     {"field", layout.field(x.field).name}, {"index", addr_json(x.addr)},
               {"value", x.value}, {"activate", x.activating}};
        } else {
          o = {{"op", "atomic_add"}, {"field", layout.field(x.field).name}, {"index", addr_json(x.addr)},
               {"value", x.value},  {"activate", x.activating}};
        }
      },
      ins);
  return o;
}

std::shared_ptr<const SNodeTree> parse_layout(const json &doc) {
  const json &layout = member(doc, "layout", "$");
  const json &nodes = get_array(layout, "nodes", "$.layout");
  std::vector<SNodeDesc> descs;
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    const std::string path = at("$.layout.nodes", n);
    const json &node = nodes[n];
    SNodeDesc d;
    d.id = static_cast<SNodeId>(get_int(node, "id", path));
    d.kind = parse_kind(get_string(node, "kind", path), path + ".kind");
    if (node.contains("children")) {
      const json &ch = get_array(node, "children", path);
      for (std::size_t c = 0; c < ch.size(); ++c)
        d.children.push_back(static_cast<SNodeId>(get_int(ch[c], at(path + ".children", c))));
    }
    if (d.kind == SNodeKind::Place) {
      d.field = get_string(node, "field", path);
      d.type = node.contains("type") ? parse_type(get_string(node, "type", path), path + ".type") : ScalarType::Int64;
    } else if (d.kind != SNodeKind::Root) {
      d.axes = parse_axes(get_string(node, "axes", path), path + ".axes");
      const json &ext = get_array(node, "extents", path);
      if (static_cast<int>(ext.size()) != axis_count(d.axes))
        fail(path + ".extents", "expected one extent per axis");
      int k = 0;
      for (int a = 0; a < kMaxAxes; ++a) {
        if (d.axes & (1u << a)) d.extents[a] = get_int(ext[k], at(path + ".extents", k)), ++k;
      }
    }
    descs.push_back(std::move(d));
  }
  try {
    return std::make_shared<const SNodeTree>(SNodeTree::build(std::move(descs)));
  } catch (const LayoutError &e) {
    fail("$.layout", e.what());
  }
}

json serialize_layout(const SNodeTree &layout) {
  json nodes = json::array();
  for (const auto &d : layout.nodes()) {
    json n = {{"id", d.id}, {"kind", to_string(d.kind)}};
    if (d.kind == SNodeKind::Place) {
      n["field"] = d.field;
      n["type"] = to_string(d.type);
    } else if (d.kind != SNodeKind::Root) {
      n["axes"] = format_axes(d.axes);
      json ext = json::array();
      for (int a = 0; a < kMaxAxes; ++a) {
        if (d.axes & (1u << a)) ext.push_back(d.extents[a]);
      }
      n["extents"] = ext;
    }
    if (d.kind != SNodeKind::Place) n["children"] = d.children;
    nodes.push_back(n);
  }
  return {{"nodes", nodes}};
}

}  // namespace

AxisIndex parse_index(const std::string &text) {
  if (auto c = parse_integer(text)) return AxisIndex::constant(*c);
  if (text.empty()) throw std::invalid_argument("empty index expression");
  const char *p = std::strchr(kAxisNames, text[0]);
  if (!p || text[0] == '\0') throw std::invalid_argument("index expression '" + text + "' must start with i, j or k");
  const int axis = static_cast<int>(p - kAxisNames);
  if (text.size() == 1) return AxisIndex::loop(axis);
  const char op = text[1];
  auto c = parse_integer(std::string_view(text).substr(op == '-' ? 1 : 2));
  if (!c) throw std::invalid_argument("bad constant in index expression '" + text + "'");
  switch (op) {
    case '+':
    case '-': return AxisIndex::plus(axis, *c);
    case '*':
      if (*c <= 0) throw std::invalid_argument("multiplier must be positive in '" + text + "'");
      return AxisIndex::times(axis, *c);
    case '/':
      if (*c <= 0) throw std::invalid_argument("divisor must be positive in '" + text + "'");
      return AxisIndex::floordiv(axis, *c);
    default: throw std::invalid_argument("unknown operator in index expression '" + text + "'");
  }
}

std::string format_index(const AxisIndex &index) { return to_string(index); }

Program parse_program(const std::string &text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error &e) {
    throw ProgramError(std::string("$: ") + e.what());
  }
  if (!doc.is_object()) fail("$", "expected an object");
  const std::int64_t format = get_int(doc, "format", "$");
  if (format != kProgramFormat) fail("$.format", "unsupported format " + std::to_string(format));

  Program p;
  if (doc.contains("name")) p.name = get_string(doc, "name", "$");
  p.layout = parse_layout(doc);
  const SNodeTree &layout = *p.layout;

  std::map<std::string, int> kernel_index;
  const json &kernels = doc.contains("kernels") ? get_array(doc, "kernels", "$") : json::array();
  for (std::size_t k = 0; k < kernels.size(); ++k) {
    const std::string path = at("$.kernels", k);
    const json &kj = kernels[k];
    Kernel kernel;
    kernel.name = get_string(kj, "name", path);
    kernel.kind = parse_task_kind(get_string(kj, "kind", path), path + ".kind");
    if (kernel.kind == TaskKind::RangeFor) {
      kernel.begin = get_int(kj, "begin", path);
      kernel.end = get_int(kj, "end", path);
    } else if (kernel.kind == TaskKind::StructFor) {
      const std::string over = get_string(kj, "over", path);
      auto f = layout.find_field(over);
      if (!f) fail(path + ".over", "unknown field '" + over + "'");
      kernel.over = *f;
    }
    const json &body = get_array(kj, "body", path);
    for (std::size_t i = 0; i < body.size(); ++i)
      kernel.instrs.push_back(parse_instruction(layout, body[i], at(path + ".body", i)));
    try {
      lower_kernel(kernel, layout);
    } catch (const IRError &e) {
      fail(path, e.what());
    }
    if (!kernel_index.emplace(kernel.name, static_cast<int>(p.kernels.size())).second)
      fail(path + ".name", "duplicate kernel name '" + kernel.name + "'");
    p.kernels.push_back(std::move(kernel));
  }

  const json &schedule = doc.contains("schedule") ? get_array(doc, "schedule", "$") : json::array();
  for (std::size_t s = 0; s < schedule.size(); ++s) {
    const std::string path = at("$.schedule", s);
    const json &d = schedule[s];
    if (d.is_object() && d.contains("launch")) {
      const std::string name = get_string(d, "launch", path);
      auto it = kernel_index.find(name);
      if (it == kernel_index.end()) fail(path + ".launch", "unknown kernel '" + name + "'");
      p.schedule.push_back(Directive::launch(it->second));
    } else if (d.is_object() && d.contains("sync")) {
      p.schedule.push_back(Directive::sync());
    } else {
      fail(path, "expected {\"launch\": name} or {\"sync\": true}");
    }
  }

  if (doc.contains("observed")) {
    const json &obs = get_array(doc, "observed", "$");
    std::set<FieldId> fields;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      if (!obs[i].is_string()) fail(at("$.observed", i), "expected a field name");
      auto f = layout.find_field(obs[i].get<std::string>());
      if (!f) fail(at("$.observed", i), "unknown field '" + obs[i].get<std::string>() + "'");
      fields.insert(*f);
    }
    p.observed = fields;
  }

  if (doc.contains("init")) {
    const json &init = get_array(doc, "init", "$");
    for (std::size_t i = 0; i < init.size(); ++i) {
      const std::string path = at("$.init", i);
      InitCell c;
      c.field = field_ref(layout, init[i], path);
      const auto &info = layout.field(c.field);
      const json &coord = get_array(init[i], "coord", path);
      if (static_cast<int>(coord.size()) != axis_count(info.axes))
        fail(path + ".coord", "expected " + std::to_string(axis_count(info.axes)) + " coordinates");
      int k = 0;
      for (int a = 0; a < kMaxAxes; ++a) {
        if (info.axes & (1u << a)) c.cell[a] = get_int(coord[k], at(path + ".coord", k)), ++k;
      }
      if (!layout.in_bounds(c.field, c.cell)) fail(path + ".coord", "out of range for field '" + info.name + "'");
      const json &v = member(init[i], "value", path);
      if (info.type == ScalarType::Int64) {
        c.value = get_int(v, path + ".value");
      } else {
        if (!v.is_number()) fail(path + ".value", "expected a number");
        c.value = v.get<double>();
      }
      p.init.push_back(c);
    }
  }
  return p;
}

Program load_program(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ProgramError(path + ": cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_program(ss.str());
}

std::string serialize_program(const Program &program) {
  const SNodeTree &layout = *program.layout;
  json doc;
  doc["format"] = kProgramFormat;
  if (!program.name.empty()) doc["name"] = program.name;
  doc["layout"] = serialize_layout(layout);
  json kernels = json::array();
  for (const auto &k : program.kernels) {
    json kj = {{"name", k.name}, {"kind", to_string(k.kind)}};
    if (k.kind == TaskKind::RangeFor) {
      kj["begin"] = k.begin;
      kj["end"] = k.end;
    } else if (k.kind == TaskKind::StructFor) {
      kj["over"] = layout.field(k.over).name;
    }
    json body = json::array();
    for (const auto &ins : k.instrs) body.push_back(serialize_instruction(layout, ins));
    kj["body"] = body;
    kernels.push_back(kj);
  }
  doc["kernels"] = kernels;
  json schedule = json::array();
  for (const auto &d : program.schedule) {
    if (d.kind == Directive::Kind::Sync) {
      schedule.push_back({{"sync", true}});
    } else {
      schedule.push_back({{"launch", program.kernels.at(d.kernel).name}});
    }
  }
  doc["schedule"] = schedule;
  if (program.observed) {
    json obs = json::array();
    for (FieldId f : *program.observed) obs.push_back(layout.field(f).name);
    doc["observed"] = obs;
  }
  if (!program.init.empty()) {
    json init = json::array();
    for (const auto &c : program.init) {
      const auto &info = layout.field(c.field);
      json coord = json::array();
      for (int a = 0; a < kMaxAxes; ++a) {
        if (info.axes & (1u << a)) coord.push_back(c.cell[a]);
      }
      json v = is_float(c.value) ? json(std::get<double>(c.value)) : json(std::get<std::int64_t>(c.value));
      init.push_back({{"field", info.name}, {"coord", coord}, {"value", v}});
    }
    doc["init"] = init;
  }
  return doc.dump(2) + "\n";
}

}  // namespace sparseflow
