#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "sparseflow/bench.hpp"
#include "sparseflow/builder.hpp"
#include "sparseflow/engine.hpp"
#include "sparseflow/fuzz.hpp"

using namespace sparseflow;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

EngineOptions sync_options() {
  EngineOptions o;
  o.mode = ExecMode::Sync;
  return o;
}

EngineOptions with_passes(PassSet passes) {
  EngineOptions o;
  o.passes = passes;
  return o;
}

std::int64_t listgens_under(const Program &p, const Metrics &m, FieldId f) {
  std::int64_t n = 0;
  for (SNodeId s : p.layout->field(f).path) {
    auto it = m.listgen_by_snode.find(s);
    if (it != m.listgen_by_snode.end()) n += it->second;
  }
  return n;
}

Outcome chain_copy_lowering() {
  const auto p = bench_chain_copy();
  std::size_t per_kernel_ok = 0;
  for (const auto &k : p.kernels) per_kernel_ok += lower_kernel(k, *p.layout).size() == 3;
  const auto s = run_program(p, sync_options());
  const auto a = run_program(p, {});
  std::ostringstream d;
  d << "tasks per kernel 3 for " << per_kernel_ok << "/" << p.kernels.size() << " kernels, sync "
    << s.metrics.tasks_launched << ", async " << a.metrics.tasks_launched;
  return {per_kernel_ok == p.kernels.size() && s.metrics.tasks_launched == 6 && a.metrics.tasks_launched == 3,
          d.str()};
}

Outcome fill_array_collapse() {
  const auto p = bench_fill_array(10);
  const auto s = run_program(p, sync_options());
  const auto a = run_program(p, {});
  const auto d = oracle_diff(p);
  std::ostringstream o;
  o << "sync " << s.metrics.tasks_launched << ", async " << a.metrics.tasks_launched;
  return {d.equal && s.metrics.tasks_launched == 10 && a.metrics.tasks_launched == 1, o.str()};
}

int single_increment_instructions(const Program &like, std::int64_t k) {
  Program p;
  p.name = "single";
  p.layout = like.layout;
  const std::int64_t n = like.kernels[0].end;
  auto kb = KernelBuilder::range_for("inc", 0, n);
  kb.store(0, {ix::i()}, kb.add(kb.load(0, {ix::i()}), kb.const_int(k)));
  p.kernels = {kb.build()};
  p.schedule = {Directive::launch(0)};
  const auto r = run_program(p, {});
  return r.trace.size() == 1 ? r.trace[0].instructions : -1;
}

Outcome increments_fuse_to_one_kernel() {
  bool ok = true;
  std::ostringstream d;
  for (int kernels : {2, 10}) {
    const auto p = bench_increments(kernels);
    const auto r = run_program(p, {});
    const int fused = r.trace.size() == 1 ? r.trace[0].instructions : -1;
    const int single = single_increment_instructions(p, kernels);
    ok &= fused == single && oracle_diff(p).equal;
    if (kernels != 2) d << "; ";
    d << kernels << " kernels: fused " << fused << " instructions vs single " << single;
  }
  return {ok, d.str()};
}

Outcome autodiff_elimination() {
  const auto p = bench_autodiff(10);
  const FieldId loss = *p.layout->find_field("loss");
  const auto s = run_program(p, sync_options());
  Engine e(p.layout);
  const auto a = run_program(p, {}, &e);
  int loss_atomics = 0;
  for (const auto &t : a.trace) {
    const auto body = e.bank().get(t.handle);
    bool has = false;
    for (const auto &ins : body->instrs) {
      if (auto *aa = std::get_if<AtomicAdd>(&ins)) has |= aa->field == loss;
    }
    loss_atomics += has;
  }
  const bool equal = oracle_diff(p).equal;
  std::ostringstream d;
  d << "sync " << s.metrics.tasks_launched << ", async " << a.metrics.tasks_launched
    << ", tasks accumulating loss " << loss_atomics;
  return {equal && a.metrics.tasks_launched * 10 <= s.metrics.tasks_launched * 6 && loss_atomics == 1, d.str()};
}

Outcome downsample_repeat_reuse() {
  const auto one = bench_downsample_repeat(1);
  const auto many = bench_downsample_repeat(8);
  const FieldId y = *one.layout->find_field("x1");
  const auto single = run_program(one, sync_options());
  const auto a = run_program(many, {});
  const std::int64_t per_run = single.metrics.tasks_launched;
  int late_activating = 0;
  for (const auto &t : a.trace) late_activating += t.launch_id > per_run && t.activating;
  const auto single_lists = listgens_under(one, single.metrics, y);
  const auto many_lists = listgens_under(many, a.metrics, y);
  const bool equal = oracle_diff(many).equal;
  std::ostringstream d;
  d << "coarse list generations " << many_lists << " (single run " << single_lists
    << "), activating tasks after run 1: " << late_activating;
  return {equal && many_lists == single_lists && late_activating == 0, d.str()};
}

Outcome deep_hierarchy_no_fusion() {
  const auto p = bench_deep_hierarchy(5);
  const auto s = run_program(p, sync_options());
  const auto a = run_program(p, {});
  const bool equal = oracle_diff(p).equal;
  std::ostringstream d;
  d << "fusions " << a.report.fusions << ", list generations sync " << s.metrics.listgen_tasks_launched
    << " async " << a.metrics.listgen_tasks_launched;
  return {equal && a.report.fusions == 0 && a.metrics.listgen_tasks_launched < s.metrics.listgen_tasks_launched,
          d.str()};
}

Outcome fuzz_equivalence() {
  const auto start = std::chrono::steady_clock::now();
  int equal = 0, traps = 0;
  std::string first_failure;
  for (std::uint64_t seed = 1; seed <= 500; ++seed) {
    const auto p = random_program(seed);
    try {
      const auto d = oracle_diff(p);
      equal += d.equal;
      if (!d.equal && first_failure.empty()) first_failure = p.name + ": " + d.divergence;
    } catch (const RuntimeTrap &t) {
      ++traps;
      if (first_failure.empty()) first_failure = p.name + ": " + t.what();
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ostringstream d;
  d << equal << "/500 equal, " << traps << " traps, " << secs << " s";
  if (!first_failure.empty()) d << "; first failure " << first_failure;
  return {equal == 500 && traps == 0 && secs < 60.0, d.str()};
}

Outcome graph_properties() {
  int acyclic = 0, iso = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    FuzzOptions opts;
    opts.max_launches = 12;
    const auto p = random_program(seed, opts);
    StateFlowGraph g(p.layout.get());
    std::int64_t id = 1;
    for (const auto &d : p.schedule) {
      if (d.kind != Directive::Kind::Launch) continue;
      for (auto &t : lower_kernel(p.kernels[d.kernel], *p.layout)) {
        t.launch_id = id++;
        g.insert(std::move(t));
      }
    }
    bool ok = true;
    for (const auto &e : g.edges()) ok &= e.src < e.dst;
    const auto reach = g.transitive_closure();
    for (int n = 0; n < g.size(); ++n) ok &= !reach[n][n];
    acyclic += ok;
    std::mt19937_64 rng(seed);
    bool all_iso = true;
    for (int r = 0; r < 10; ++r) {
      std::vector<Task> order;
      for (int n : g.topo_sort_random(rng)) order.push_back(g.task(n));
      StateFlowGraph h(p.layout.get());
      h.rebuild(order);
      all_iso &= isomorphic(g, h);
    }
    iso += all_iso;
  }
  std::ostringstream d;
  d << acyclic << "/100 acyclic, " << iso << "/100 isomorphic under 10 random orders";
  return {acyclic == 100 && iso == 100, d.str()};
}

Outcome compile_cache_reuse() {
  bool ok = true;
  std::ostringstream d;
  for (const auto &bc : bench_suite()) {
    const auto p = bc.make(1);
    Engine e(p.layout);
    const auto first = run_program(p, {}, &e);
    const auto second = run_program(p, {}, &e);
    ok &= first.metrics.tasks_compiled > 0 && second.metrics.tasks_compiled == 0;
    if (second.metrics.tasks_compiled != 0) d << bc.name << " recompiled " << second.metrics.tasks_compiled << "; ";
  }
  d << "second runs compiled 0 tasks in " << (ok ? "every" : "not every") << " benchmark";
  return {ok, d.str()};
}

Outcome pass_ablation() {
  bool sound = true, monotone = true;
  std::ostringstream d;
  const std::vector<PassSet> singles = {PassSet::parse("listgen"), PassSet::parse("demote"), PassSet::parse("fuse"),
                                        PassSet::parse("dse")};
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const auto p = random_program(seed + 900000);
    for (const auto &ps : singles) {
      if (!oracle_diff(p, with_passes(ps)).equal) {
        sound = false;
        d << p.name << " unsound under " << ps.to_string() << "; ";
      }
    }
  }
  for (const auto &bc : bench_suite()) {
    const auto p = bc.make(1);
    const auto all = run_program(p, {});
    for (int mask = 0; mask < 16; ++mask) {
      const PassSet ps{(mask & 1) != 0, (mask & 2) != 0, (mask & 4) != 0, (mask & 8) != 0};
      const auto dr = oracle_diff(p, with_passes(ps));
      if (!dr.equal) {
        sound = false;
        d << bc.name << " unsound under " << ps.to_string() << "; ";
      }
      if (all.metrics.tasks_launched > dr.candidate.metrics.tasks_launched) {
        monotone = false;
        d << bc.name << " launches more with all passes than with " << ps.to_string() << "; ";
      }
    }
  }
  d << "single passes " << (sound ? "sound" : "unsound") << ", all passes "
    << (monotone ? "never launch more than a subset" : "not minimal");
  return {sound && monotone, d.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"chain copy lowering and optimization", chain_copy_lowering},
      {"fill array collapses to one task", fill_array_collapse},
      {"fused increments compile like one kernel", increments_fuse_to_one_kernel},
      {"autodiff dead iterations eliminated", autodiff_elimination},
      {"repeated downsampling reuses lists and activation", downsample_repeat_reuse},
      {"deep hierarchy keeps tasks apart but drops list generation", deep_hierarchy_no_fusion},
      {"random programs match the oracle", fuzz_equivalence},
      {"state-flow graphs are acyclic and order independent", graph_properties},
      {"compiled code is reused across runs", compile_cache_reuse},
      {"every pass subset is sound and all passes are best", pass_ablation},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
  }
  std::fflush(stdout);
  return failures == 0 ? 0 : 1;
}
