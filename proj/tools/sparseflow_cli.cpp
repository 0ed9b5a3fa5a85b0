#include <cstdio>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sparseflow/bench.hpp"
#include "sparseflow/engine.hpp"
#include "sparseflow/fuzz.hpp"
#include "sparseflow/program_io.hpp"

using namespace sparseflow;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Flags {
  std::string file;
  std::string mode = "async";
  bool no_dfo = false;
  std::string passes = "all";
  std::string observed;
  std::uint64_t seed = 1;
  int count = 500;
  int scale = 1;
  std::string out = "text";
  std::string stage = "post";
  std::string bench = "all";
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

EngineOptions engine_options(const Flags &f) {
  EngineOptions o;
  if (f.mode == "sync") {
    o.mode = ExecMode::Sync;
  } else if (f.mode == "async") {
    o.mode = ExecMode::Async;
  } else {
    throw UsageError("--mode must be sync or async");
  }
  o.dfo = !f.no_dfo;
  try {
    o.passes = PassSet::parse(f.passes);
  } catch (const std::invalid_argument &e) {
    throw UsageError(e.what());
  }
  return o;
}

void apply_observed(Program &p, const std::string &list) {
  if (list.empty()) return;
  std::set<FieldId> fields;
  std::stringstream ss(list);
  std::string name;
  while (std::getline(ss, name, ',')) {
    auto f = p.layout->find_field(name);
    if (!f) throw UsageError("--observed: unknown field '" + name + "'");
    fields.insert(*f);
  }
  p.observed = fields;
}

Program load(const Flags &f) {
  Program p = load_program(f.file);
  apply_observed(p, f.observed);
  return p;
}

json metrics_json(const Metrics &m) {
  json listgens = json::object();
  for (const auto &[s, n] : m.listgen_by_snode) listgens[std::to_string(s)] = n;
  return {{"tasks_launched", m.tasks_launched},
          {"tasks_compiled", m.tasks_compiled},
          {"instructions_emitted", m.instructions_emitted},
          {"listgen_tasks_launched", m.listgen_tasks_launched},
          {"sync_count", m.sync_count},
          {"listgen_by_snode", listgens}};
}

json report_json(const PassReport &r) {
  return {{"listgens_removed", r.listgens_removed}, {"tasks_demoted", r.tasks_demoted},
          {"fusions", r.fusions},                   {"outputs_stripped", r.outputs_stripped},
          {"tasks_eliminated", r.tasks_eliminated}, {"rounds", r.rounds}};
}

int cmd_run(const Flags &f) {
  const Program p = load(f);
  const RunResult r = run_program(p, engine_options(f));
  const std::string digest = snapshot_digest(*p.layout, r.snapshot, p.observed);
  if (f.out == "json") {
    std::cout << json{{"digest", digest}, {"metrics", metrics_json(r.metrics)}, {"passes", report_json(r.report)}}.dump(2)
              << "\n";
  } else {
    std::cout << "digest " << digest << "\n" << to_string(r.metrics);
  }
  return kExitOk;
}

int cmd_diff(const Flags &f) {
  const Program p = load(f);
  const DiffResult d = oracle_diff(p, engine_options(f));
  if (d.equal) {
    std::cout << "equal (sync " << d.reference.metrics.tasks_launched << " tasks, async "
              << d.candidate.metrics.tasks_launched << " tasks)\n";
    return kExitOk;
  }
  std::cout << "divergence: " << d.divergence << "\n";
  return kExitFailure;
}

std::string ratio(std::int64_t a, std::int64_t b) {
  if (b == 0) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << static_cast<double>(a) / static_cast<double>(b) << "x";
  return os.str();
}

int cmd_stats(const Flags &f) {
  const Program p = load(f);
  EngineOptions sync_opts;
  sync_opts.mode = ExecMode::Sync;
  sync_opts.dfo = !f.no_dfo;
  const RunResult s = run_program(p, sync_opts);
  const RunResult a = run_program(p, engine_options(f));
  if (f.out == "json") {
    std::cout << json{{"sync", metrics_json(s.metrics)}, {"async", metrics_json(a.metrics)},
                      {"passes", report_json(a.report)}}
                     .dump(2)
              << "\n";
    return kExitOk;
  }
  auto row = [&](const char *key, std::int64_t sv, std::int64_t av) {
    std::cout << std::left << std::setw(24) << key << std::right << std::setw(10) << sv << std::setw(10) << av
              << std::setw(10) << ratio(sv, av) << "\n";
  };
  std::cout << std::left << std::setw(24) << "metric" << std::right << std::setw(10) << "sync" << std::setw(10)
            << "async" << std::setw(10) << "ratio" << "\n";
  row("tasks_launched", s.metrics.tasks_launched, a.metrics.tasks_launched);
  row("tasks_compiled", s.metrics.tasks_compiled, a.metrics.tasks_compiled);
  row("instructions_emitted", s.metrics.instructions_emitted, a.metrics.instructions_emitted);
  row("listgen_tasks_launched", s.metrics.listgen_tasks_launched, a.metrics.listgen_tasks_launched);
  row("sync_count", s.metrics.sync_count, a.metrics.sync_count);
  const PassReport &r = a.report;
  std::cout << "\npasses: listgens_removed " << r.listgens_removed << ", tasks_demoted " << r.tasks_demoted
            << ", fusions " << r.fusions << ", outputs_stripped " << r.outputs_stripped << ", tasks_eliminated "
            << r.tasks_eliminated << ", rounds " << r.rounds << "\n";
  return kExitOk;
}

int cmd_dot(const Flags &f) {
  if (f.stage != "pre" && f.stage != "post") throw UsageError("--stage must be pre or post");
  const Program p = load(f);
  EngineOptions o = engine_options(f);
  o.mode = ExecMode::Async;
  o.parallel_compile = false;
  Engine engine(p.layout, o);
  int flush = 0;
  engine.on_flush = [&](const StateFlowGraph &before, const StateFlowGraph &after) {
    const StateFlowGraph &g = f.stage == "pre" ? before : after;
    std::cout << g.to_dot((p.name.empty() ? std::string("program") : p.name) + "_flush" + std::to_string(flush++) +
                          "_" + f.stage);
  };
  run_program(p, o, &engine);
  return kExitOk;
}

int cmd_bench(const Flags &f) {
  EngineOptions async_opts = engine_options(f);
  async_opts.mode = ExecMode::Async;
  bool found = false;
  bool all_equal = true;
  std::cout << std::left << std::setw(20) << "case" << std::right << std::setw(8) << "sync" << std::setw(8)
            << "async" << std::setw(10) << "ratio" << std::setw(10) << "listgens" << std::setw(10) << "compiled"
            << std::setw(8) << "oracle" << "\n";
  for (const auto &c : bench_suite()) {
    if (f.bench != "all" && f.bench != c.name) continue;
    found = true;
    Program p = c.make(f.scale);
    apply_observed(p, f.observed);
    const DiffResult d = oracle_diff(p, async_opts);
    all_equal &= d.equal;
    const Metrics &s = d.reference.metrics;
    const Metrics &a = d.candidate.metrics;
    std::cout << std::left << std::setw(20) << c.name << std::right << std::setw(8) << s.tasks_launched
              << std::setw(8) << a.tasks_launched << std::setw(10) << ratio(s.tasks_launched, a.tasks_launched)
              << std::setw(10)
              << (std::to_string(s.listgen_tasks_launched) + "/" + std::to_string(a.listgen_tasks_launched))
              << std::setw(10) << a.tasks_compiled << std::setw(8) << (d.equal ? "ok" : "DIFF") << "\n";
    if (!d.equal) std::cout << "  " << d.divergence << "\n";
  }
  if (!found) throw UsageError("unknown benchmark '" + f.bench + "'");
  return all_equal ? kExitOk : kExitFailure;
}

int cmd_emit(const Flags &f) {
  for (const auto &c : bench_suite()) {
    if (c.name == f.bench) {
      std::cout << serialize_program(c.make(f.scale));
      return kExitOk;
    }
  }
  throw UsageError("unknown benchmark '" + f.bench + "'");
}

int cmd_fuzz(const Flags &f) {
  EngineOptions o = engine_options(f);
  o.mode = ExecMode::Async;
  for (int i = 0; i < f.count; ++i) {
    const std::uint64_t seed = f.seed + static_cast<std::uint64_t>(i);
    const Program p = random_program(seed);
    DiffResult d;
    try {
      d = oracle_diff(p, o);
    } catch (const RuntimeTrap &e) {
      std::cout << "seed " << seed << ": trap: " << e.what() << "\n" << serialize_program(p);
      return kExitFailure;
    }
    if (!d.equal) {
      std::cout << "seed " << seed << ": divergence: " << d.divergence << "\n" << serialize_program(p);
      return kExitFailure;
    }
  }
  std::cout << f.count << " programs equivalent (seeds " << f.seed << ".." << f.seed + f.count - 1 << ")\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"sparseflow: whole-program optimizer and interpreter for sparse grid programs"};
  app.require_subcommand(1);
  Flags f;

  auto add_engine_flags = [&](CLI::App *sub) {
    sub->add_option("--mode", f.mode, "Execution mode: sync or async")->check(CLI::IsMember({"sync", "async"}));
    sub->add_flag("--no-dfo", f.no_dfo, "Disable intra-task data-flow optimization");
    sub->add_option("--passes", f.passes, "Comma-separated passes: listgen,demote,fuse,dse (or all, none)");
    sub->add_option("--observed", f.observed, "Comma-separated fields to compare and report");
  };
  auto add_out = [&](CLI::App *sub) {
    sub->add_option("--out", f.out, "Output format")->check(CLI::IsMember({"text", "json", "dot"}));
  };

  auto *run = app.add_subcommand("run", "Run a program file and print a snapshot digest and metrics");
  run->add_option("file", f.file, "Program file (JSON)")->required();
  add_engine_flags(run);
  add_out(run);

  auto *diff = app.add_subcommand("diff", "Compare a configuration against unoptimized synchronous execution");
  diff->add_option("file", f.file, "Program file (JSON)")->required();
  add_engine_flags(diff);

  auto *stats = app.add_subcommand("stats", "Print sync and async metrics side by side");
  stats->add_option("file", f.file, "Program file (JSON)")->required();
  add_engine_flags(stats);
  add_out(stats);

  auto *dot = app.add_subcommand("dot", "Emit the state-flow graph of each flush in DOT");
  dot->add_option("file", f.file, "Program file (JSON)")->required();
  dot->add_option("--stage", f.stage, "pre or post optimization")->check(CLI::IsMember({"pre", "post"}));
  add_engine_flags(dot);
  add_out(dot);

  auto *bench = app.add_subcommand("bench", "Run the embedded benchmarks in both modes");
  bench->add_option("name", f.bench, "Benchmark name or all");
  bench->add_option("--scale", f.scale, "Problem size multiplier (power of two)");
  add_engine_flags(bench);

  auto *emit = app.add_subcommand("emit", "Print an embedded benchmark as a program file");
  emit->add_option("name", f.bench, "Benchmark name")->required();
  emit->add_option("--scale", f.scale, "Problem size multiplier (power of two)");

  auto *fuzz = app.add_subcommand("fuzz", "Oracle-check seeded random programs");
  fuzz->add_option("--seed", f.seed, "First seed");
  fuzz->add_option("--count", f.count, "Number of programs");
  add_engine_flags(fuzz);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) return cmd_run(f);
    if (*diff) return cmd_diff(f);
    if (*stats) return cmd_stats(f);
    if (*dot) return cmd_dot(f);
    if (*bench) return cmd_bench(f);
    if (*emit) return cmd_emit(f);
    if (*fuzz) return cmd_fuzz(f);
  } catch (const UsageError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ProgramError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const RuntimeTrap &e) {
    std::cerr << "trap: " << e.what() << "\n";
    return kExitFailure;
  } catch (const IRError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
