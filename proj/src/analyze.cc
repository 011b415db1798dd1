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

#include "parmodel/analyze.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <future>

#include <fmt/format.h>

#include "parmodel/simulate.h"
#include "parmodel/validate.h"

namespace parmodel {

std::string_view to_string(SweepDimension d) {
  switch (d) {
    case SweepDimension::kProcessCount: return "p";
    case SweepDimension::kProblemSize: return "N";
    case SweepDimension::kStartup: return "t_startup";
  }
  return "?";
}

std::optional<SweepDimension> sweep_dimension_from_string(std::string_view name) {
  if (name == "p" || name == "P" || name == "process_count") return SweepDimension::kProcessCount;
  if (name == "N" || name == "n" || name == "problem_size") return SweepDimension::kProblemSize;
  if (name == "t_startup") return SweepDimension::kStartup;
  return std::nullopt;
}

double speedup(double t_seq, double t_par) {
  if (!(t_seq > 0) || !(t_par > 0))
    throw std::invalid_argument(fmt::format("speedup needs positive times, got {} and {}", t_seq, t_par));
  return t_seq / t_par;
}

namespace {

int as_count(double v, std::string_view what) {
  if (!std::isfinite(v) || v < 0 || v != std::floor(v) || v > 1e9)
    throw SweepError(fmt::format("{} must be a non-negative integer, got {}", what, format_number(v)));
  return static_cast<int>(v);
}

// Applies the swept value to a paradigm spec, recursing into hybrids.
void apply(ParadigmSpec& spec, SweepDimension dimension, double v) {
  if (dimension == SweepDimension::kStartup) spec.costs.t_startup = v;
  std::visit(
      [&](auto& body) {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, HybridSpec>) {
          for (auto& phase : body.phases) apply(phase, dimension, v);
        } else if (dimension == SweepDimension::kProcessCount) {
          if constexpr (std::is_same_v<T, MasterWorkerSpec>) body.workers = as_count(v, "process count") - 1;
          if constexpr (std::is_same_v<T, SpmdSpec>) body.p = as_count(v, "process count");
          if constexpr (std::is_same_v<T, PipelineSpec>) body.stages = as_count(v, "process count");
          if constexpr (std::is_same_v<T, MonteCarloPiSpec>) body.p = as_count(v, "process count");
          if constexpr (std::is_same_v<T, DivideConquerSpec>)
            throw SweepError("divide and conquer models are sized by arity and depth, not process count");
        } else if (dimension == SweepDimension::kProblemSize) {
          if constexpr (std::is_same_v<T, MasterWorkerSpec>) {
            const double cost = body.task_costs.empty() ? 0.0 : body.task_costs.front();
            body.task_costs.assign(as_count(v, "task count"), cost);
          }
          if constexpr (std::is_same_v<T, SpmdSpec>) body.n = v;
          if constexpr (std::is_same_v<T, PipelineSpec>) body.items = as_count(v, "item count");
          if constexpr (std::is_same_v<T, MonteCarloPiSpec>) body.n = v;
          if constexpr (std::is_same_v<T, DivideConquerSpec>)
            throw SweepError("divide and conquer models have no problem-size parameter");
        }
      },
      spec.body);
}

std::string param_for(SweepDimension dimension) {
  return dimension == SweepDimension::kProcessCount ? "P" : "N";
}

Expr literal_us(double v) { return Expr::number(v, Unit::kMicros); }

struct Collapser {
  const Params& params;
  Rank me;
  Rank worker;  // task costs are evaluated as if run by this rank

  void body(const std::vector<Node>& nodes, std::vector<Node>& out) const {
    for (const Node& n : nodes) {
      Node copy;
      copy.note = n.note;
      if (const auto* a = n.as<Action>()) {
        copy.kind = Action{a->name, literal_us(eval_expr(a->cost, params, me))};
      } else if (const auto* l = n.as<Loop>()) {
        Loop loop{Expr::number(static_cast<double>(eval_count(l->count, params, me))), {}};
        body(l->body, loop.body);
        if (loop.body.empty()) continue;
        copy.kind = std::move(loop);
      } else if (const auto* sub = n.as<SubActivity>()) {
        SubActivity s{sub->name, {}};
        body(sub->body, s.body);
        if (s.body.empty()) continue;
        copy.kind = std::move(s);
      } else if (const auto* tp = n.as<TaskPool>()) {
        const long long count = eval_count(tp->count, params, me);
        double total = 0;
        for (long long i = 0; i < count; ++i)
          total += eval_expr(tp->cost_list ? tp->costs.at(i) : tp->costs.front(), params, worker);
        copy.kind = Action{"tasks", literal_us(total)};
      } else {
        continue;  // communication disappears on one rank
      }
      out.push_back(std::move(copy));
    }
  }
};

int ranks_of(const Model& m) { return resolve(m).size(); }

void require_valid(const Model& m, double value) {
  const ValidationReport report = validate(m);
  if (!report.ok()) {
    std::string first;
    for (const auto& d : report.diagnostics) {
      if (d.is_error()) {
        first = d.message;
        break;
      }
    }
    throw SweepError(fmt::format("value {} gives an invalid model: {}", format_number(value), first),
                     report.diagnostics);
  }
}

double makespan_of(const Model& m, double value) {
  require_valid(m, value);
  RunOutcome outcome;
  try {
    outcome = run(m);
  } catch (const SimulationError& err) {
    throw SweepError(fmt::format("value {}: {}", format_number(value), err.what()));
  }
  if (const auto* report = std::get_if<DeadlockReport>(&outcome))
    throw SweepError(fmt::format("value {} deadlocks: {}", format_number(value), report->describe()));
  return std::get<RunResult>(outcome).metrics.makespan;
}

}  // namespace

Model sequentialize(const Model& model, const Params& params) {
  Model bound = model;
  for (const auto& [name, value] : params.entries()) bound.params.set(name, value);
  const Instance inst = resolve(bound);
  Rank worker = -1;
  for (Rank r = 0; r < inst.size() && worker < 0; ++r) {
    if (inst.role_of[r] < 0) continue;
    for_each_node(inst.role(r).body, [&](const Node& n) {
      if (n.as<WorkerLoop>() && worker < 0) worker = r;
    });
  }
  Model out;
  out.name = model.name + "_seq";
  out.topology.kind = TopologyKind::kMesh2d;
  out.topology.args = {Expr::number(1), Expr::number(1)};
  out.costs = model.costs;
  RoleDecl main;
  main.name = "main";
  main.ranks.first = Expr::number(0);
  for (Rank r = 0; r < inst.size(); ++r) {
    if (inst.role_of[r] < 0) continue;
    Collapser{inst.params, r, worker < 0 ? r : worker}.body(inst.role(r).body, main.body);
  }
  out.roles.push_back(std::move(main));
  return out;
}

SweepTemplate template_for(const ParadigmSpec& spec, SweepDimension dimension) {
  SweepTemplate t;
  t.instantiate = [spec, dimension](double v) {
    ParadigmSpec s = spec;
    apply(s, dimension, v);
    return generate(s);
  };
  t.sequential = [spec, dimension](double v) {
    ParadigmSpec s = spec;
    // The baseline problem does not shrink with the process count.
    if (dimension != SweepDimension::kProcessCount) apply(s, dimension, v);
    return sequential_baseline(s);
  };
  return t;
}

SweepTemplate template_for(const Model& model, SweepDimension dimension) {
  if (dimension != SweepDimension::kStartup && !model.params.contains(param_for(dimension))) {
    throw SweepError(fmt::format("model '{}' has no parameter {} to sweep", model.name,
                                 param_for(dimension)));
  }
  auto bind = [model, dimension](double v) {
    Model m = model;
    if (dimension == SweepDimension::kStartup) {
      m.costs.t_startup = v;
    } else {
      m.params.set(param_for(dimension), v);
    }
    return m;
  };
  SweepTemplate t;
  t.instantiate = bind;
  t.sequential = [bind, model, dimension](double v) {
    const Model m = dimension == SweepDimension::kProcessCount ? model : bind(v);
    return sequentialize(m, m.params);
  };
  return t;
}

SweepReport sweep(const SweepTemplate& tmpl, SweepDimension dimension, std::vector<double> values) {
  if (values.empty()) throw SweepError("sweep needs at least one value");
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());

  std::vector<std::future<SweepRow>> jobs;
  for (double v : values) {
    jobs.push_back(std::async(std::launch::async, [&tmpl, v] {
      Model parallel;
      Model sequential;
      try {
        parallel = tmpl.instantiate(v);
        sequential = tmpl.sequential(v);
      } catch (const SweepError&) {
        throw;
      } catch (const std::exception& err) {
        throw SweepError(fmt::format("value {}: {}", format_number(v), err.what()));
      }
      SweepRow row;
      row.value = v;
      row.processes = ranks_of(parallel);
      row.makespan = makespan_of(parallel, v);
      row.baseline = makespan_of(sequential, v);
      row.speedup = speedup(row.baseline, row.makespan);
      row.efficiency = row.speedup / row.processes;
      return row;
    }));
  }
  SweepReport report;
  report.dimension = dimension;
  for (auto& job : jobs) report.rows.push_back(job.get());
  for (const auto& row : report.rows) {
    if (row.speedup > row.processes * (1 + 1e-9)) {
      report.warnings.push_back(fmt::format("superlinear speedup {:.6f} on {} processes at {} = {}",
                                            row.speedup, row.processes, to_string(dimension),
                                            format_number(row.value)));
    }
  }
  return report;
}

std::string render_report(const SweepReport& report, ReportFormat format) {
  if (format == ReportFormat::kCsv) {
    std::string out = "value,makespan_us,speedup,efficiency\n";
    for (const auto& row : report.rows)
      out += fmt::format("{:.6f},{:.6f},{:.6f},{:.6f}\n", row.value, row.makespan, row.speedup, row.efficiency);
    return out;
  }
  std::vector<std::array<std::string, 5>> cells;
  cells.push_back({std::string(to_string(report.dimension)), "procs", "makespan_us", "speedup", "efficiency"});
  for (const auto& row : report.rows) {
    cells.push_back({format_number(row.value), std::to_string(row.processes), fmt::format("{:.3f}", row.makespan),
                     fmt::format("{:.4f}", row.speedup), fmt::format("{:.4f}", row.efficiency)});
  }
  std::array<std::size_t, 5> width{};
  for (const auto& line : cells)
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
  std::string out;
  for (const auto& line : cells) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (i > 0) out += "  ";
      out += fmt::format("{:>{}}", line[i], width[i]);
    }
    out += "\n";
  }
  for (const auto& w : report.warnings) out += "warning: " + w + "\n";
  return out;
}

}  // namespace parmodel
