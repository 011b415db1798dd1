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

#include "parmodel/validate.h"

#include <algorithm>
#include <map>
#include <optional>
#include <set>

#include <fmt/format.h>

namespace parmodel {

void ValidationReport::merge(const ValidationReport& other) {
  for (const auto& d : other.diagnostics) {
    if (std::find(diagnostics.begin(), diagnostics.end(), d) == diagnostics.end())
      diagnostics.push_back(d);
  }
}

namespace {

void add(ValidationReport& report, Severity severity, SourcePos pos, std::string message) {
  report.diagnostics.push_back({severity, std::move(message), pos.line, pos.column});
}

std::optional<Instance> try_resolve(const Model& m, ValidationReport* report) {
  try {
    return resolve(m);
  } catch (const ModelError& err) {
    if (report) add(*report, Severity::kError, err.pos(), err.what());
  } catch (const TopologyError& err) {
    if (report) add(*report, Severity::kError, m.topology.pos, err.what());
  }
  return std::nullopt;
}

std::string rank_run(Rank first, Rank last) {
  return first == last ? fmt::format("rank {}", first) : fmt::format("ranks {}..{}", first, last);
}

bool has_deferred_nodes(const std::vector<Node>& body) {
  bool deferred = false;
  for_each_node(body, [&](const Node& n) {
    if (n.as<Loop>() || n.as<TaskPool>() || n.as<WorkerLoop>()) deferred = true;
  });
  return deferred;
}

struct CollectiveStep {
  CollectiveKind kind;
  Rank root;
  SourcePos pos;
  bool operator==(const CollectiveStep& o) const { return kind == o.kind && root == o.root; }
};

constexpr std::size_t kCollectiveBudget = 100000;

// Appends the collective sequence of `body` for rank `me`, expanding loops.
// Returns false if the expansion exceeds the budget.
bool collect_collectives(const Instance& inst, const std::vector<Node>& body, Rank me,
                         std::vector<CollectiveStep>& out) {
  for (const auto& node : body) {
    if (out.size() > kCollectiveBudget) return false;
    if (const auto* c = node.as<Collective>()) {
      out.push_back({c->kind, inst.root_rank(c->root), node.pos});
    } else if (const auto* sub = node.as<SubActivity>()) {
      if (!collect_collectives(inst, sub->body, me, out)) return false;
    } else if (const auto* loop = node.as<Loop>()) {
      std::vector<CollectiveStep> once;
      if (!collect_collectives(inst, loop->body, me, once)) return false;
      if (once.empty()) continue;
      const long long n = eval_count(loop->count, inst.params, me);
      if (static_cast<double>(n) * once.size() > kCollectiveBudget) return false;
      for (long long i = 0; i < n; ++i) out.insert(out.end(), once.begin(), once.end());
    }
  }
  return true;
}

std::string describe_step(const std::vector<CollectiveStep>& seq, std::size_t i) {
  if (i >= seq.size()) return "none";
  return fmt::format("{}(root P{})", to_string(seq[i].kind), seq[i].root);
}

}  // namespace

ValidationReport check_topology(const Model& m, const ValidateOptions& options) {
  ValidationReport report;
  TopologySpec spec;
  try {
    spec = resolve_topology(m.topology, m.params);
  } catch (const ModelError& err) {
    add(report, Severity::kError, err.pos(), err.what());
    return report;
  }
  if (const auto declared = m.params.get("P")) {
    const long long shape = spec.shape_size();
    if (shape != static_cast<long long>(*declared)) {
      std::string message;
      switch (spec.kind) {
        case TopologyKind::kMesh2d:
          message = fmt::format("mesh2d shape {}×{}={} ≠ process count {}", spec.rows, spec.cols,
                                shape, format_number(*declared));
          break;
        default:
          message = fmt::format("{} has {} ranks ≠ process count {}", describe(spec), shape,
                                format_number(*declared));
      }
      add(report, Severity::kError, m.topology.pos, message);
      return report;
    }
  }
  auto inst = try_resolve(m, &report);
  if (!inst) return report;

  // Coverage: every rank in exactly one role.
  std::vector<std::vector<int>> owners(inst->size());
  for (std::size_t i = 0; i < inst->role_ranks.size(); ++i)
    for (Rank r = inst->role_ranks[i].first; r <= inst->role_ranks[i].last; ++r)
      owners[r].push_back(static_cast<int>(i));
  for (Rank r = 0; r < inst->size();) {
    if (owners[r].empty()) {
      Rank last = r;
      while (last + 1 < inst->size() && owners[last + 1].empty()) ++last;
      add(report, Severity::kError, m.topology.pos, fmt::format("{} unassigned", rank_run(r, last)));
      r = last + 1;
    } else {
      if (owners[r].size() > 1) {
        add(report, Severity::kError, m.roles[owners[r][1]].pos,
            fmt::format("rank {} assigned to both role '{}' and role '{}'", r,
                        m.roles[owners[r][0]].name, m.roles[owners[r][1]].name));
      }
      ++r;
    }
  }

  if (options.strict_neighbors && !m.costs.hop_scaling && !inst->graph.medium()) {
    std::set<std::pair<Rank, Rank>> reported;
    for (std::size_t i = 0; i < m.roles.size(); ++i) {
      const auto& rr = inst->role_ranks[i];
      for (Rank me = rr.first; me <= rr.last; ++me) {
        for_each_node(m.roles[i].body, [&](const Node& node) {
          const auto* send = node.as<Send>();
          if (!send) return;
          std::vector<Rank> dst;
          try {
            dst = inst->resolve_target(send->to, me);
          } catch (const std::exception&) {
            return;  // reported by check_communications
          }
          if (dst.size() != 1 || dst[0] == me) return;
          if (!inst->graph.adjacent(me, dst[0]) && reported.insert({me, dst[0]}).second) {
            add(report, Severity::kError, node.pos,
                fmt::format("send from P{} to P{}: ranks are not neighbors in {}", me, dst[0],
                            describe(inst->spec)));
          }
        });
      }
    }
  }
  return report;
}

ValidationReport check_communications(const Model& m) {
  ValidationReport report;
  auto inst = try_resolve(m, &report);
  if (!inst) return report;
  const int p = inst->size();

  bool any_deferred = false;
  for (const auto& role : m.roles) {
    if (has_deferred_nodes(role.body)) {
      any_deferred = true;
      add(report, Severity::kWarning, role.pos,
          fmt::format("role '{}' contains loops or task pools; {}", role.name, kDeferredMatching));
    }
  }

  // Per ordered pair counts, plus any-source receives keyed by (source role, receiver).
  std::map<std::pair<Rank, Rank>, int> sends;
  std::map<std::pair<Rank, Rank>, int> specific_recvs;
  std::map<std::pair<int, Rank>, int> any_recvs;
  std::map<std::pair<Rank, Rank>, SourcePos> send_pos;
  std::map<std::pair<int, Rank>, SourcePos> recv_pos;

  for (Rank me = 0; me < p; ++me) {
    const int role_idx = inst->role_of[me];
    if (role_idx < 0) continue;
    for_each_node(m.roles[role_idx].body, [&](const Node& node) {
      try {
        if (const auto* send = node.as<Send>()) {
          const auto dst = inst->resolve_target(send->to, me);
          if (dst.size() != 1) {
            add(report, Severity::kError, node.pos,
                fmt::format("send to role '{}' needs a rank index (role has {} ranks)",
                            send->to.role, dst.size()));
          } else if (dst[0] == me) {
            add(report, Severity::kError, node.pos, fmt::format("P{} sends to itself", me));
          } else {
            ++sends[{me, dst[0]}];
            send_pos.emplace(std::make_pair(me, dst[0]), node.pos);
          }
        } else if (const auto* recv = node.as<Recv>()) {
          auto src = inst->resolve_target(recv->from, me);
          src.erase(std::remove(src.begin(), src.end(), me), src.end());
          const int src_role = static_cast<int>(m.find_role(recv->from.role) - m.roles.data());
          if (src.empty()) {
            add(report, Severity::kError, node.pos, fmt::format("P{} receives from itself", me));
          } else if (src.size() == 1 && (recv->from.index || inst->role_ranks[src_role].count() == 1)) {
            ++specific_recvs[{src[0], me}];
            recv_pos.emplace(std::make_pair(src_role, me), node.pos);
          } else {
            ++any_recvs[{src_role, me}];
            recv_pos.emplace(std::make_pair(src_role, me), node.pos);
          }
        }
      } catch (const ModelError& err) {
        add(report, Severity::kError, node.pos, err.what());
      } catch (const EvalError& err) {
        add(report, Severity::kError, node.pos, err.what());
      }
    });
  }

  if (!any_deferred) {
    for (Rank dst = 0; dst < p; ++dst) {
      for (std::size_t role_idx = 0; role_idx < m.roles.size(); ++role_idx) {
        const auto& rr = inst->role_ranks[role_idx];
        int sent = 0;
        int received = 0;
        SourcePos pos = m.roles[role_idx].pos;
        for (Rank src = rr.first; src <= rr.last; ++src) {
          const auto key = std::make_pair(src, dst);
          const int s = sends.count(key) ? sends[key] : 0;
          const int r = specific_recvs.count(key) ? specific_recvs[key] : 0;
          if (r > s) {
            const auto rp = recv_pos.count({static_cast<int>(role_idx), dst})
                                ? recv_pos[{static_cast<int>(role_idx), dst}]
                                : pos;
            add(report, Severity::kError, rp,
                fmt::format("unmatched recv: P{} expects {} message(s) from P{} but {} sent", dst, r,
                            src, s));
          }
          if (s > 0 && send_pos.count(key)) pos = send_pos[key];
          sent += s;
          received += r;
        }
        const auto any_key = std::make_pair(static_cast<int>(role_idx), dst);
        const int any = any_recvs.count(any_key) ? any_recvs[any_key] : 0;
        received += any;
        if (sent > received) {
          const std::string from = rr.count() == 1 ? fmt::format("P{}", rr.first)
                                                   : fmt::format("role '{}'", m.roles[role_idx].name);
          add(report, Severity::kError, pos,
              fmt::format("unmatched send: {} sends {} message(s) to P{} which receives {}", from, sent,
                          dst, received));
        } else if (sent < received && any > 0) {
          add(report, Severity::kError, recv_pos.count(any_key) ? recv_pos[any_key] : pos,
              fmt::format("unmatched recv: P{} expects {} message(s) from role '{}' but {} sent", dst,
                          received, m.roles[role_idx].name, sent));
        }
      }
    }
  }

  // Collective participation: every rank sees the same sequence.
  std::vector<std::vector<CollectiveStep>> sequences(p);
  bool expandable = true;
  for (Rank me = 0; me < p && expandable; ++me) {
    const int role_idx = inst->role_of[me];
    if (role_idx < 0) continue;
    try {
      expandable = collect_collectives(*inst, m.roles[role_idx].body, me, sequences[me]);
    } catch (const std::exception& err) {
      add(report, Severity::kError, m.roles[role_idx].pos, err.what());
      return report;
    }
  }
  if (!expandable) {
    add(report, Severity::kWarning, m.topology.pos,
        fmt::format("collective sequence too long to expand; {}", kDeferredMatching));
    return report;
  }
  for (Rank r = 1; r < p; ++r) {
    const auto& a = sequences[0];
    const auto& b = sequences[r];
    const std::size_t n = std::max(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (i < a.size() && i < b.size() && a[i] == b[i]) continue;
      const SourcePos pos = i < b.size() ? b[i].pos : (i < a.size() ? a[i].pos : SourcePos{});
      add(report, Severity::kError, pos,
          fmt::format("collective participation mismatch: P0 has {} at position {} but P{} has {}",
                      describe_step(a, i), i + 1, r, describe_step(b, i)));
      break;
    }
  }
  return report;
}

ValidationReport check_stereotypes(const Model& m) {
  ValidationReport report;
  auto inst = try_resolve(m, nullptr);
  const int master_role = inst && inst->size() > 0 ? inst->role_of[0] : 0;

  bool any_taskpool = false;
  bool any_workerloop = false;
  SourcePos taskpool_pos;
  SourcePos workerloop_pos;

  for (std::size_t i = 0; i < m.roles.size(); ++i) {
    const auto& role = m.roles[i];
    std::map<std::string, SourcePos> declared;
    std::set<std::string> waited;
    for_each_node(role.body, [&](const Node& node) {
      if (const auto* send = node.as<Send>()) {
        if (!send->blocking && !send->handle.empty()) declared.emplace(send->handle, node.pos);
      } else if (const auto* wait = node.as<Wait>()) {
        if (!declared.count(wait->handle)) {
          add(report, Severity::kError, node.pos,
              fmt::format("wait references undeclared handle '{}'", wait->handle));
        }
        waited.insert(wait->handle);
      } else if (const auto* tp = node.as<TaskPool>()) {
        any_taskpool = true;
        taskpool_pos = node.pos;
        if (static_cast<int>(i) != master_role) {
          add(report, Severity::kError, node.pos,
              fmt::format("taskpool in role '{}': only the master role (holding rank 0) may "
                          "distribute tasks",
                          role.name));
        }
        if (tp->cost_list && inst) {
          try {
            const long long n = eval_count(tp->count, inst->params, inst->role_ranks[i].first);
            if (n != static_cast<long long>(tp->costs.size())) {
              add(report, Severity::kError, node.pos,
                  fmt::format("taskpool count {} does not match {} listed task costs", n,
                              tp->costs.size()));
            }
          } catch (const EvalError& err) {
            add(report, Severity::kError, node.pos, err.what());
          }
        }
      } else if (node.as<WorkerLoop>()) {
        any_workerloop = true;
        workerloop_pos = node.pos;
        if (static_cast<int>(i) == master_role) {
          add(report, Severity::kError, node.pos,
              fmt::format("workerloop in master role '{}'", role.name));
        }
      }
    });
    for (const auto& [handle, pos] : declared) {
      if (!waited.count(handle)) {
        add(report, Severity::kWarning, pos,
            fmt::format("nonblocking send handle '{}' is never waited", handle));
      }
    }
  }
  if (any_taskpool && !any_workerloop)
    add(report, Severity::kError, taskpool_pos, "taskpool has no workerloop partner in any role");
  if (any_workerloop && !any_taskpool)
    add(report, Severity::kError, workerloop_pos, "workerloop has no taskpool partner");
  return report;
}

ValidationReport validate(const Model& m, const ValidateOptions& options) {
  ValidationReport report = check_topology(m, options);
  if (!report.ok()) return report;
  report.merge(check_communications(m));
  report.merge(check_stereotypes(m));
  return report;
}

}  // namespace parmodel
