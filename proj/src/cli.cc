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

#include "parmodel/cli.h"

#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "parmodel/analyze.h"
#include "parmodel/export.h"
#include "parmodel/paradigms.h"
#include "parmodel/parser.h"
#include "parmodel/simulate.h"
#include "parmodel/validate.h"

namespace parmodel {

namespace {

// Ends a subcommand with the given exit code after printing.
struct Exit {
  int code;
};

struct UsageError {
  std::string message;
};

bool use_color(const std::ostream& out) {
  const char* env = std::getenv("PARMODEL_COLOR");
  if (env && std::string_view(env) == "never") return false;
  return &out == &std::cout && isatty(STDOUT_FILENO);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text, std::ostream& out, std::ostream& err) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file || !(file << text)) {
    err << fmt::format("error: cannot write '{}'\n", path);
    throw Exit{kExitFailure};
  }
}

double parse_number(const std::string& text, std::string_view what) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v))
    throw UsageError{fmt::format("invalid {} '{}'", what, text)};
  return v;
}

std::vector<double> parse_list(const std::string& text, std::string_view what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(item, what));
  if (out.empty()) throw UsageError{fmt::format("empty {} list", what)};
  return out;
}

// Parses FILE, reporting diagnostics; throws Exit on failure.
Model load(const std::string& path, std::ostream& err) {
  std::ifstream probe(path);
  if (!probe) {
    err << fmt::format("error: cannot read '{}'\n", path);
    throw Exit{kExitFailure};
  }
  const ParseResult parsed = parse_model(read_file(path));
  for (const auto& d : parsed.diagnostics) err << format_diagnostic(d, path) << "\n";
  if (!parsed.ok()) throw Exit{kExitFailure};
  return *parsed.model;
}

void apply_params(Model& m, const std::vector<std::string>& overrides) {
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError{fmt::format("--param expects K=V, got '{}'", kv)};
    const std::string name = kv.substr(0, eq);
    if (!m.params.contains(name))
      throw UsageError{fmt::format("unknown parameter '{}' (model '{}' declares no such param)", name, m.name)};
    m.params.set(name, parse_number(kv.substr(eq + 1), "parameter value"));
  }
}

// Validates and prints diagnostics; throws Exit when errors were found.
void check(const Model& m, const std::string& path, const ValidateOptions& options, std::ostream& err) {
  const ValidationReport report = validate(m, options);
  for (const auto& d : report.diagnostics) err << format_diagnostic(d, path) << "\n";
  if (!report.ok()) throw Exit{kExitFailure};
}

RunOutcome simulate_or_exit(const Model& m, const std::string& path, std::ostream& err) {
  try {
    return run(m);
  } catch (const SimulationError& e) {
    err << fmt::format("error {}:{}:{} {}\n", path, e.pos().line, e.pos().column, e.what());
    throw Exit{kExitFailure};
  }
}

std::string metrics_table(const Model& m, const RunMetrics& metrics, bool color) {
  const Instance inst = resolve(m);
  std::vector<std::array<std::string, 5>> rows;
  rows.push_back({"rank", "role", "compute_us", "comm_us", "idle_us"});
  for (Rank r = 0; r < inst.size(); ++r) {
    rows.push_back({std::to_string(r), inst.role_of[r] < 0 ? "-" : inst.role(r).name,
                    fmt::format("{:.3f}", metrics.compute_time[r]), fmt::format("{:.3f}", metrics.comm_time[r]),
                    fmt::format("{:.3f}", metrics.idle_time[r])});
  }
  std::array<std::size_t, 5> width{};
  for (const auto& row : rows)
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  std::string out;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    std::string line;
    for (std::size_t i = 0; i < rows[k].size(); ++i) {
      if (i > 0) line += "  ";
      line += i == 1 ? fmt::format("{:<{}}", rows[k][i], width[i]) : fmt::format("{:>{}}", rows[k][i], width[i]);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += (k == 0 && color ? "\x1b[1m" + line + "\x1b[0m" : line) + "\n";
  }
  return out;
}

struct Options {
  std::string file;
  std::vector<std::string> params;
  std::string trace_path;
  bool strict_neighbors = false;
  std::string dim;
  std::string values;
  std::string format = "table";
  std::string view;
  std::string output;

  // template flags
  int workers = 4;
  std::string tasks = "100,100,100,100,100,100,100,100";
  std::string policy = "dynamic";
  double payload = 0;
  double result = 0;
  int p = 4;
  double n = 1e6;
  double cost = 0.1;
  double halo = 0;
  int steps = 1;
  int stages = 4;
  int items = 8;
  double stage_cost = 10;
  double item_bytes = 8;
  int arity = 2;
  int depth = 2;
  double split = 10;
  double leaf = 100;
  double join = 10;
  double data_bytes = 8;
  int pi_p = 5;
  double samples = 1e6;
  double sample_cost = 0.1;
  double t_startup = 0;
  double t_byte = 0;
  bool hop_scaling = false;
  std::string send_mode = "rendezvous";
};

int cmd_validate(const Options& o, std::ostream& out, std::ostream& err) {
  Model m = load(o.file, err);
  apply_params(m, o.params);
  ValidateOptions options;
  options.strict_neighbors = o.strict_neighbors;
  const ValidationReport report = validate(m, options);
  for (const auto& d : report.diagnostics) err << format_diagnostic(d, o.file) << "\n";
  if (!report.ok()) {
    out << fmt::format("{}: invalid\n", o.file);
    return kExitFailure;
  }
  out << fmt::format("{}: ok\n", o.file);
  return kExitOk;
}

int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
  Model m = load(o.file, err);
  apply_params(m, o.params);
  check(m, o.file, {}, err);
  const RunOutcome outcome = simulate_or_exit(m, o.file, err);
  if (const auto* report = std::get_if<DeadlockReport>(&outcome)) {
    if (!o.trace_path.empty()) write_output(o.trace_path, serialize_trace(report->partial), out, err);
    out << report->describe();
    return kExitDeadlock;
  }
  const auto& result = std::get<RunResult>(outcome);
  if (!o.trace_path.empty()) write_output(o.trace_path, serialize_trace(result.trace), out, err);
  out << fmt::format("model: {}\n", m.name);
  out << fmt::format("makespan: {:.3f} us\n", result.metrics.makespan);
  out << fmt::format("messages: {}\n", result.metrics.message_count);
  out << fmt::format("bytes: {}\n", format_number(result.metrics.bytes_sent));
  out << metrics_table(m, result.metrics, use_color(out));
  return kExitOk;
}

int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err) {
  const auto dim = sweep_dimension_from_string(o.dim);
  if (!dim) throw UsageError{fmt::format("unknown sweep dimension '{}' (p, N or t_startup)", o.dim)};
  if (o.format != "csv" && o.format != "table")
    throw UsageError{fmt::format("unknown format '{}' (csv or table)", o.format)};
  const std::vector<double> values = parse_list(o.values, "sweep value");
  Model m = load(o.file, err);
  apply_params(m, o.params);
  check(m, o.file, {}, err);
  try {
    const SweepReport report = sweep(template_for(m, *dim), *dim, values);
    std::string text = render_report(report, o.format == "csv" ? ReportFormat::kCsv : ReportFormat::kTable);
    if (o.format == "csv") {
      for (const auto& w : report.warnings) err << "warning: " << w << "\n";
    } else if (use_color(out)) {
      const auto eol = text.find('\n');
      text = "\x1b[1m" + text.substr(0, eol) + "\x1b[0m" + text.substr(eol);
    }
    out << text;
  } catch (const SweepError& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_export(const Options& o, std::ostream& out, std::ostream& err) {
  Model m = load(o.file, err);
  apply_params(m, o.params);
  check(m, o.file, {}, err);
  std::string text;
  if (o.view == "topology") {
    text = export_topology_dot(m);
  } else if (o.view == "swimlane") {
    text = export_swimlane(m);
  } else if (o.view == "sequence") {
    const RunOutcome outcome = simulate_or_exit(m, o.file, err);
    if (const auto* report = std::get_if<DeadlockReport>(&outcome)) {
      err << report->describe();
      return kExitDeadlock;
    }
    text = export_sequence(std::get<RunResult>(outcome).trace, m);
  } else {
    throw UsageError{fmt::format("unknown view '{}' (topology, swimlane or sequence)", o.view)};
  }
  write_output(o.output, text, out, err);
  return kExitOk;
}

CostModel costs_of(const Options& o) {
  CostModel c;
  if (o.t_startup < 0 || o.t_byte < 0) throw UsageError{"cost parameters must be non-negative"};
  c.t_startup = o.t_startup;
  c.t_byte = o.t_byte;
  c.hop_scaling = o.hop_scaling;
  if (o.send_mode == "rendezvous") {
    c.send_mode = SendMode::kRendezvous;
  } else if (o.send_mode == "buffered") {
    c.send_mode = SendMode::kBuffered;
  } else {
    throw UsageError{fmt::format("unknown send mode '{}'", o.send_mode)};
  }
  return c;
}

int cmd_template(const std::string& kind, const Options& o, std::ostream& out, std::ostream& err) {
  ParadigmSpec spec;
  spec.costs = costs_of(o);
  if (kind == "master_worker") {
    MasterWorkerSpec s;
    s.workers = o.workers;
    s.task_costs = parse_list(o.tasks, "task cost");
    if (o.policy == "static") {
      s.policy = TaskPolicy::kStatic;
    } else if (o.policy == "dynamic") {
      s.policy = TaskPolicy::kDynamic;
    } else {
      throw UsageError{fmt::format("unknown policy '{}'", o.policy)};
    }
    s.payload_bytes = o.payload;
    s.result_bytes = o.result;
    spec.body = s;
  } else if (kind == "spmd") {
    spec.body = SpmdSpec{o.p, o.n, o.cost, o.halo, o.steps};
  } else if (kind == "pipeline") {
    spec.body = PipelineSpec{o.stages, o.items, o.stage_cost, o.item_bytes};
  } else if (kind == "divide_conquer") {
    spec.body = DivideConquerSpec{o.arity, o.depth, o.split, o.leaf, o.join, o.data_bytes};
  } else {
    spec.body = MonteCarloPiSpec{o.pi_p, o.samples, o.sample_cost};
  }
  try {
    write_output(o.output, print_model(generate(spec)), out, err);
  } catch (const ModelError& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Model, simulate and diagram message-passing programs.", "parmodel"};
  app.require_subcommand(1);
  Options o;

  auto* validate_cmd = app.add_subcommand("validate", "Check a model for static errors");
  validate_cmd->add_option("file", o.file, "Model file (.pmod)")->required();
  validate_cmd->add_option("--param", o.params, "Override a parameter, K=V");
  validate_cmd->add_flag("--strict-neighbors", o.strict_neighbors, "Reject messages between non-adjacent ranks");

  auto* simulate_cmd = app.add_subcommand("simulate", "Run the model and print per-rank metrics");
  simulate_cmd->add_option("file", o.file, "Model file (.pmod)")->required();
  simulate_cmd->add_option("--param", o.params, "Override a parameter, K=V");
  simulate_cmd->add_option("--trace", o.trace_path, "Write the event trace to PATH");

  auto* sweep_cmd = app.add_subcommand("sweep", "Speedup and efficiency over a parameter range");
  sweep_cmd->add_option("file", o.file, "Model file (.pmod)")->required();
  sweep_cmd->add_option("--dim", o.dim, "p, N or t_startup")->required();
  sweep_cmd->add_option("--values", o.values, "Comma separated values")->required();
  sweep_cmd->add_option("--format", o.format, "csv or table");
  sweep_cmd->add_option("--param", o.params, "Override a parameter, K=V");

  auto* export_cmd = app.add_subcommand("export", "Write a diagram view");
  export_cmd->add_option("file", o.file, "Model file (.pmod)")->required();
  export_cmd->add_option("--view", o.view, "topology, swimlane or sequence")->required();
  export_cmd->add_option("-o,--output", o.output, "Output path (default stdout)");
  export_cmd->add_option("--param", o.params, "Override a parameter, K=V");

  auto* template_cmd = app.add_subcommand("template", "Generate a model for a common program shape");
  template_cmd->require_subcommand(1);
  auto add_costs = [&](CLI::App* sub) {
    sub->add_option("-o,--output", o.output, "Output path (default stdout)");
    sub->add_option("--t-startup", o.t_startup, "Message startup cost (us)");
    sub->add_option("--t-byte", o.t_byte, "Per-byte cost (us)");
    sub->add_flag("--hop-scaling", o.hop_scaling, "Multiply message cost by hop count");
    sub->add_option("--send-mode", o.send_mode, "rendezvous or buffered");
  };
  auto* mw = template_cmd->add_subcommand("master_worker", "Task farm");
  mw->add_option("--workers", o.workers, "Worker count");
  mw->add_option("--tasks", o.tasks, "Comma separated task costs (us)");
  mw->add_option("--policy", o.policy, "static or dynamic");
  mw->add_option("--payload", o.payload, "Task payload (bytes)");
  mw->add_option("--result", o.result, "Task result (bytes)");
  auto* spmd = template_cmd->add_subcommand("spmd", "Data parallel ring with halo shift");
  spmd->add_option("--p", o.p, "Process count");
  spmd->add_option("--n", o.n, "Problem size (elements)");
  spmd->add_option("--cost", o.cost, "Cost per element (us)");
  spmd->add_option("--halo", o.halo, "Halo size (bytes)");
  spmd->add_option("--steps", o.steps, "Time steps");
  auto* pipe = template_cmd->add_subcommand("pipeline", "Linear pipeline");
  pipe->add_option("--stages", o.stages, "Stage count");
  pipe->add_option("--items", o.items, "Item count");
  pipe->add_option("--stage-cost", o.stage_cost, "Cost per item per stage (us)");
  pipe->add_option("--item-bytes", o.item_bytes, "Item size (bytes)");
  auto* dc = template_cmd->add_subcommand("divide_conquer", "Split, compute and join over a tree");
  dc->add_option("--arity", o.arity, "Children per node");
  dc->add_option("--depth", o.depth, "Tree depth");
  dc->add_option("--split", o.split, "Split cost (us)");
  dc->add_option("--leaf", o.leaf, "Leaf cost (us)");
  dc->add_option("--join", o.join, "Join cost (us)");
  dc->add_option("--data-bytes", o.data_bytes, "Message size (bytes)");
  auto* pi = template_cmd->add_subcommand("pi", "Monte Carlo PI on a master/worker farm");
  pi->add_option("--p", o.pi_p, "Process count");
  pi->add_option("--n", o.samples, "Sample count");
  pi->add_option("--sample-cost", o.sample_cost, "Cost per sample (us)");
  for (auto* sub : {mw, spmd, pipe, dc, pi}) add_costs(sub);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (validate_cmd->parsed()) return cmd_validate(o, out, err);
    if (simulate_cmd->parsed()) return cmd_simulate(o, out, err);
    if (sweep_cmd->parsed()) return cmd_sweep(o, out, err);
    if (export_cmd->parsed()) return cmd_export(o, out, err);
    for (auto* sub : template_cmd->get_subcommands())
      if (sub->parsed()) return cmd_template(sub->get_name(), o, out, err);
  } catch (const Exit& e) {
    return e.code;
  } catch (const UsageError& e) {
    err << "error: " << e.message << "\n\n" << app.help();
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace parmodel
