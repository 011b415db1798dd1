// Copyright 2026 The parmodel Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "parmodel/paradigms.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace parmodel {

namespace {

constexpr int kMaxGeneratedRanks = 4096;

Expr us(double v) { return Expr::number(v, Unit::kMicros); }
Expr bytes(double v) { return Expr::number(v, Unit::kBytes); }
Expr num(double v) { return Expr::number(v); }

Node make(NodeKind kind, std::string note = {}) {
  Node n;
  n.kind = std::move(kind);
  n.note = std::move(note);
  return n;
}

Node action(std::string name, Expr cost, std::string note = {}) {
  return make(Action{std::move(name), std::move(cost)}, std::move(note));
}

Node send_to(std::string role, Expr size, std::string note = {}) {
  return make(Send{Target{std::move(role), std::nullopt}, std::move(size), true, {}}, std::move(note));
}

Node recv_from(std::string role, Expr size, std::string note = {}) {
  return make(Recv{Target{std::move(role), std::nullopt}, std::move(size)}, std::move(note));
}

Node loop(Expr count, std::vector<Node> body) { return make(Loop{std::move(count), std::move(body)}); }

// Wraps `body` in a loop unless it runs once.
std::vector<Node> repeat(long long times, std::vector<Node> body) {
  if (times == 1) return body;
  std::vector<Node> out;
  out.push_back(loop(num(static_cast<double>(times)), std::move(body)));
  return out;
}

RoleDecl role(std::string name, Rank first, std::optional<Rank> last, std::vector<Node> body) {
  RoleDecl r;
  r.name = std::move(name);
  r.ranks.first = num(first);
  if (last) r.ranks.last = num(*last);
  r.body = std::move(body);
  return r;
}

TopologyDecl topology(TopologyKind kind, std::vector<Expr> args) {
  TopologyDecl t;
  t.kind = kind;
  t.args = std::move(args);
  return t;
}

Model single_rank(std::string name, std::vector<Node> body, const CostModel& costs) {
  Model m;
  m.name = std::move(name);
  m.topology = topology(TopologyKind::kMesh2d, {num(1), num(1)});
  m.costs = costs;
  m.roles.push_back(role("main", 0, std::nullopt, std::move(body)));
  return m;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ModelError(message);
}

void check_non_negative(double v, std::string_view what) {
  require(std::isfinite(v) && v >= 0, fmt::format("{} must be a non-negative number", what));
}

// ---- hybrid helpers --------------------------------------------------------

std::string rank_role(Rank r) { return fmt::format("p{}", r); }

struct Rewriter {
  const Instance& inst;
  Rank me;

  Target absolute(const Target& t, bool drop_self) const {
    std::vector<Rank> ranks = inst.resolve_target(t, me);
    if (drop_self) ranks.erase(std::remove(ranks.begin(), ranks.end(), me), ranks.end());
    if (ranks.size() != 1) {
      throw ModelError(fmt::format(
          "P{}: target '{}' names several ranks and cannot be rewritten for a hybrid model", me,
          to_string(t)));
    }
    return Target{rank_role(ranks[0]), std::nullopt};
  }

  std::vector<Node> body(const std::vector<Node>& nodes) const {
    std::vector<Node> out;
    for (const Node& n : nodes) out.push_back(node(n));
    return out;
  }

  Node node(const Node& n) const {
    Node out = n;
    if (const auto* s = n.as<Send>()) {
      Send copy = *s;
      copy.to = absolute(s->to, false);
      out.kind = copy;
    } else if (const auto* r = n.as<Recv>()) {
      Recv copy = *r;
      copy.from = absolute(r->from, true);
      out.kind = copy;
    } else if (const auto* c = n.as<Collective>()) {
      Collective copy = *c;
      copy.root = rank_role(inst.root_rank(c->root));
      out.kind = copy;
    } else if (const auto* l = n.as<Loop>()) {
      out.kind = Loop{l->count, body(l->body)};
    } else if (const auto* sub = n.as<SubActivity>()) {
      out.kind = SubActivity{sub->name, body(sub->body)};
    }
    return out;
  }
};

bool same_layout(const Instance& a, const Instance& b) {
  if (a.model->roles.size() != b.model->roles.size()) return false;
  for (std::size_t i = 0; i < a.model->roles.size(); ++i) {
    if (a.model->roles[i].name != b.model->roles[i].name) return false;
    if (a.role_ranks[i].first != b.role_ranks[i].first || a.role_ranks[i].last != b.role_ranks[i].last)
      return false;
  }
  return true;
}

}  // namespace

Model gen_master_worker(const MasterWorkerSpec& spec, const CostModel& costs) {
  require(spec.workers >= 1, "master/worker needs at least one worker");
  require(spec.workers < kMaxGeneratedRanks, "too many workers");
  require(!spec.task_costs.empty(), "master/worker needs a non-empty task list");
  for (double c : spec.task_costs) check_non_negative(c, "task cost");
  check_non_negative(spec.payload_bytes, "payload size");
  check_non_negative(spec.result_bytes, "result size");

  TaskPool pool;
  pool.count = num(static_cast<double>(spec.task_costs.size()));
  const bool uniform = std::all_of(spec.task_costs.begin(), spec.task_costs.end(),
                                   [&](double c) { return c == spec.task_costs.front(); });
  if (uniform) {
    pool.costs = {us(spec.task_costs.front())};
  } else {
    pool.cost_list = true;
    for (double c : spec.task_costs) pool.costs.push_back(us(c));
  }
  pool.policy = spec.policy;
  pool.payload = bytes(spec.payload_bytes);
  pool.result = bytes(spec.result_bytes);

  Model m;
  m.name = "master_worker";
  m.topology = topology(TopologyKind::kFarm, {num(spec.workers + 1)});
  m.costs = costs;
  m.roles.push_back(role("master", 0, std::nullopt, {make(pool)}));
  m.roles.push_back(role("worker", 1, spec.workers, {make(WorkerLoop{})}));
  return m;
}

Model gen_spmd(const SpmdSpec& spec, const CostModel& costs) {
  require(spec.p >= 1 && spec.p < kMaxGeneratedRanks, "SPMD process count must be in 1..4095");
  require(spec.steps >= 1, "SPMD needs at least one step");
  require(std::isfinite(spec.n) && spec.n >= spec.p, "SPMD problem size must be at least the process count");
  check_non_negative(spec.element_cost, "element cost");
  check_non_negative(spec.halo_bytes, "halo size");

  const int p = spec.p;
  const double share = std::ceil(spec.n / p);
  Model m;
  m.name = "spmd";
  m.topology = p >= 3 ? topology(TopologyKind::kRing, {num(p)})
                      : topology(TopologyKind::kMesh2d, {num(1), num(p)});
  m.costs = costs;
  for (Rank r = 0; r < p; ++r) {
    std::vector<Node> step;
    step.push_back(action("compute", num(share) * us(spec.element_cost)));
    if (p > 1) {
      // Shift towards the right neighbour; even ranks send first so the
      // blocking chain always has a receiver waiting.
      const std::string right = fmt::format("r{}", (r + 1) % p);
      const std::string left = fmt::format("r{}", (r + p - 1) % p);
      if (r % 2 == 0) {
        step.push_back(send_to(right, bytes(spec.halo_bytes)));
        step.push_back(recv_from(left, bytes(spec.halo_bytes)));
      } else {
        step.push_back(recv_from(left, bytes(spec.halo_bytes)));
        step.push_back(send_to(right, bytes(spec.halo_bytes)));
      }
    }
    m.roles.push_back(role(fmt::format("r{}", r), r, std::nullopt, repeat(spec.steps, std::move(step))));
  }
  return m;
}

Model gen_pipeline(const PipelineSpec& spec, const CostModel& costs) {
  require(spec.stages >= 1 && spec.stages < kMaxGeneratedRanks, "pipeline stage count must be in 1..4095");
  require(spec.items >= 1, "pipeline needs at least one item");
  check_non_negative(spec.stage_cost, "stage cost");
  check_non_negative(spec.item_bytes, "item size");

  Model m;
  m.name = "pipeline";
  m.topology = topology(TopologyKind::kMesh2d, {num(1), num(spec.stages)});
  m.costs = costs;
  for (Rank s = 0; s < spec.stages; ++s) {
    std::vector<Node> item;
    if (s > 0) item.push_back(recv_from(fmt::format("stage{}", s - 1), bytes(spec.item_bytes)));
    item.push_back(action(fmt::format("stage {}", s), us(spec.stage_cost)));
    if (s + 1 < spec.stages) item.push_back(send_to(fmt::format("stage{}", s + 1), bytes(spec.item_bytes)));
    m.roles.push_back(role(fmt::format("stage{}", s), s, std::nullopt, repeat(spec.items, std::move(item))));
  }
  return m;
}

Model gen_divide_conquer(const DivideConquerSpec& spec, const CostModel& costs) {
  require(spec.arity >= 2, "divide and conquer arity must be at least 2");
  require(spec.depth >= 0, "divide and conquer depth must be non-negative");
  check_non_negative(spec.split_cost, "split cost");
  check_non_negative(spec.leaf_cost, "leaf cost");
  check_non_negative(spec.join_cost, "join cost");
  check_non_negative(spec.data_bytes, "data size");
  const TopologySpec shape = TopologySpec::tree(spec.arity, spec.depth);
  require(shape.shape_size() <= kMaxGeneratedRanks,
          fmt::format("tree({}, {}) has too many ranks", spec.arity, spec.depth));
  const int n = static_cast<int>(shape.shape_size());
  const int internal = n - static_cast<int>(std::pow(spec.arity, spec.depth));

  Model m;
  m.name = "divide_conquer";
  m.topology = topology(TopologyKind::kTree, {num(spec.arity), num(spec.depth)});
  m.costs = costs;
  for (Rank r = 0; r < n; ++r) {
    const std::string parent = r > 0 ? fmt::format("n{}", (r - 1) / spec.arity) : "";
    std::vector<Node> body;
    if (r > 0) body.push_back(recv_from(parent, bytes(spec.data_bytes)));
    if (r < internal) {
      body.push_back(action("split", us(spec.split_cost)));
      for (int k = 1; k <= spec.arity; ++k)
        body.push_back(send_to(fmt::format("n{}", r * spec.arity + k), bytes(spec.data_bytes)));
      for (int k = 1; k <= spec.arity; ++k)
        body.push_back(recv_from(fmt::format("n{}", r * spec.arity + k), bytes(spec.data_bytes)));
      body.push_back(action("join", us(spec.join_cost)));
    } else {
      body.push_back(action("leaf", us(spec.leaf_cost)));
    }
    if (r > 0) body.push_back(send_to(parent, bytes(spec.data_bytes)));
    m.roles.push_back(role(fmt::format("n{}", r), r, std::nullopt, std::move(body)));
  }
  return m;
}

Model gen_monte_carlo_pi(const MonteCarloPiSpec& spec, const CostModel& costs) {
  require(spec.p >= 2, "Monte Carlo PI needs P >= 2");
  require(spec.p < kMaxGeneratedRanks, "too many processes");
  require(std::isfinite(spec.n) && spec.n >= 0, "sample count must be non-negative");
  check_non_negative(spec.sample_cost, "sample cost");

  const Expr p = Expr::name("P");
  const Expr n = Expr::name("N");
  Model m;
  m.name = "pi_montecarlo";
  m.topology = topology(TopologyKind::kFarm, {p});
  m.costs = costs;
  m.params.set("P", spec.p);
  m.params.set("N", spec.n);

  const Node bcast = make(Collective{CollectiveKind::kBcast, "master", bytes(8)}, "MPI_Bcast");
  RoleDecl master;
  master.name = "master";
  master.ranks.first = num(0);
  master.body.push_back(bcast);
  master.body.push_back(loop(p - num(1), {recv_from("worker", bytes(8), "MPI_Recv")}));
  master.body.push_back(action("reduce", us(5)));

  RoleDecl worker;
  worker.name = "worker";
  worker.ranks.first = num(1);
  worker.ranks.last = p - num(1);
  worker.body.push_back(bcast);
  worker.body.push_back(action("sample", n / (p - num(1)) * us(spec.sample_cost)));
  worker.body.push_back(send_to("master", bytes(8), "MPI_Send"));

  m.roles.push_back(std::move(master));
  m.roles.push_back(std::move(worker));
  return m;
}

Model compose_hybrid(const std::vector<Model>& phases, const CostModel& costs) {
  require(!phases.empty(), "hybrid model needs at least one phase");
  std::vector<Instance> instances;
  for (const Model& phase : phases) instances.push_back(resolve(phase));
  const int p = instances.front().size();
  for (std::size_t i = 1; i < instances.size(); ++i) {
    require(instances[i].size() == p,
            fmt::format("hybrid phase {} runs on {} ranks, phase 0 on {}", i, instances[i].size(), p));
  }

  Model out;
  out.name = "hybrid";
  out.topology = phases.front().topology;
  out.costs = costs;
  for (const Model& phase : phases) {
    for (const auto& [name, value] : phase.params.entries()) {
      const auto existing = out.params.get(name);
      require(!existing || *existing == value,
              fmt::format("hybrid phases disagree on parameter '{}'", name));
      out.params.set(name, value);
    }
  }

  const bool shared = std::all_of(instances.begin(), instances.end(),
                                  [&](const Instance& i) { return same_layout(i, instances.front()); });
  if (shared) {
    out.roles = phases.front().roles;
    for (std::size_t i = 1; i < phases.size(); ++i)
      for (std::size_t k = 0; k < out.roles.size(); ++k)
        out.roles[k].body.insert(out.roles[k].body.end(), phases[i].roles[k].body.begin(),
                                 phases[i].roles[k].body.end());
    return out;
  }

  // Different layouts: one role per rank, every target made absolute.
  out.topology = topology(instances.front().spec.kind, {});
  const TopologySpec& s = instances.front().spec;
  switch (s.kind) {
    case TopologyKind::kMesh2d: out.topology.args = {num(s.rows), num(s.cols)}; break;
    case TopologyKind::kHypercube: out.topology.args = {num(s.dim)}; break;
    case TopologyKind::kTree: out.topology.args = {num(s.arity), num(s.depth)}; break;
    default: out.topology.args = {num(s.p)}; break;
  }
  for (Rank r = 0; r < p; ++r) {
    std::vector<Node> body;
    for (const Instance& inst : instances) {
      if (inst.role_of[r] < 0) continue;
      const auto part = Rewriter{inst, r}.body(inst.role(r).body);
      body.insert(body.end(), part.begin(), part.end());
    }
    out.roles.push_back(role(rank_role(r), r, std::nullopt, std::move(body)));
  }
  return out;
}

Model generate(const ParadigmSpec& spec) {
  return std::visit(
      [&](const auto& body) -> Model {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, MasterWorkerSpec>) return gen_master_worker(body, spec.costs);
        if constexpr (std::is_same_v<T, SpmdSpec>) return gen_spmd(body, spec.costs);
        if constexpr (std::is_same_v<T, PipelineSpec>) return gen_pipeline(body, spec.costs);
        if constexpr (std::is_same_v<T, DivideConquerSpec>) return gen_divide_conquer(body, spec.costs);
        if constexpr (std::is_same_v<T, MonteCarloPiSpec>) return gen_monte_carlo_pi(body, spec.costs);
        if constexpr (std::is_same_v<T, HybridSpec>) {
          std::vector<Model> phases;
          for (const auto& phase : body.phases) phases.push_back(generate(phase));
          return compose_hybrid(phases, spec.costs);
        }
      },
      spec.body);
}

Model sequential_baseline(const ParadigmSpec& spec) {
  return std::visit(
      [&](const auto& body) -> Model {
        using T = std::decay_t<decltype(body)>;
        std::vector<Node> flow;
        if constexpr (std::is_same_v<T, MasterWorkerSpec>) {
          require(!body.task_costs.empty(), "master/worker needs a non-empty task list");
          flow.push_back(action("tasks", us(std::accumulate(body.task_costs.begin(), body.task_costs.end(), 0.0))));
          return single_rank("master_worker_seq", std::move(flow), spec.costs);
        }
        if constexpr (std::is_same_v<T, SpmdSpec>) {
          require(body.steps >= 1, "SPMD needs at least one step");
          flow = repeat(body.steps, {action("compute", num(body.n) * us(body.element_cost))});
          return single_rank("spmd_seq", std::move(flow), spec.costs);
        }
        if constexpr (std::is_same_v<T, PipelineSpec>) {
          require(body.items >= 1, "pipeline needs at least one item");
          flow = repeat(body.items, {action("stages", num(body.stages) * us(body.stage_cost))});
          return single_rank("pipeline_seq", std::move(flow), spec.costs);
        }
        if constexpr (std::is_same_v<T, DivideConquerSpec>) {
          require(body.arity >= 2 && body.depth >= 0, "invalid divide and conquer shape");
          const double leaves = std::pow(body.arity, body.depth);
          const double internal = static_cast<double>(TopologySpec::tree(body.arity, body.depth).shape_size()) - leaves;
          if (internal > 0) flow.push_back(action("split", num(internal) * us(body.split_cost)));
          flow.push_back(action("leaf", num(leaves) * us(body.leaf_cost)));
          if (internal > 0) flow.push_back(action("join", num(internal) * us(body.join_cost)));
          return single_rank("divide_conquer_seq", std::move(flow), spec.costs);
        }
        if constexpr (std::is_same_v<T, MonteCarloPiSpec>) {
          flow.push_back(action("sample", num(body.n) * us(body.sample_cost)));
          return single_rank("pi_montecarlo_seq", std::move(flow), spec.costs);
        }
        if constexpr (std::is_same_v<T, HybridSpec>) {
          require(!body.phases.empty(), "hybrid model needs at least one phase");
          for (const auto& phase : body.phases) {
            const Model part = sequential_baseline(phase);
            flow.insert(flow.end(), part.roles.front().body.begin(), part.roles.front().body.end());
          }
          return single_rank("hybrid_seq", std::move(flow), spec.costs);
        }
      },
      spec.body);
}

int process_count(const ParadigmSpec& spec) {
  return std::visit(
      [&](const auto& body) -> int {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, MasterWorkerSpec>) return body.workers + 1;
        if constexpr (std::is_same_v<T, SpmdSpec>) return body.p;
        if constexpr (std::is_same_v<T, PipelineSpec>) return body.stages;
        if constexpr (std::is_same_v<T, DivideConquerSpec>)
          return static_cast<int>(TopologySpec::tree(body.arity, body.depth).shape_size());
        if constexpr (std::is_same_v<T, MonteCarloPiSpec>) return body.p;
        if constexpr (std::is_same_v<T, HybridSpec>)
          return body.phases.empty() ? 0 : process_count(body.phases.front());
      },
      spec.body);
}

std::string_view paradigm_name(const ParadigmSpec& spec) {
  static constexpr std::string_view kNames[] = {"master_worker", "spmd", "pipeline",
                                                 "divide_conquer", "pi_montecarlo", "hybrid"};
  return kNames[spec.body.index()];
}

}  // namespace parmodel
