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

#include "parmodel/model.h"

#include <fmt/format.h>

namespace parmodel {

std::string_view to_string(SendMode mode) {
  return mode == SendMode::kRendezvous ? "rendezvous" : "buffered";
}

std::string_view to_string(CollectiveKind kind) {
  switch (kind) {
    case CollectiveKind::kBcast: return "bcast";
    case CollectiveKind::kReduce: return "reduce";
    case CollectiveKind::kGather: return "gather";
    case CollectiveKind::kScatter: return "scatter";
    case CollectiveKind::kBarrier: return "barrier";
  }
  return "?";
}

std::optional<CollectiveKind> collective_kind_from_string(std::string_view name) {
  for (auto kind : {CollectiveKind::kBcast, CollectiveKind::kReduce, CollectiveKind::kGather,
                    CollectiveKind::kScatter, CollectiveKind::kBarrier}) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

std::string_view to_string(TaskPolicy policy) {
  return policy == TaskPolicy::kStatic ? "static" : "dynamic";
}

std::string to_string(const Target& t) {
  if (!t.index) return t.role;
  if (t.index->is_atom()) return t.role + "." + to_string(*t.index);
  return t.role + ".(" + to_string(*t.index) + ")";
}

bool SubActivity::operator==(const SubActivity& other) const {
  return name == other.name && body == other.body;
}

bool Loop::operator==(const Loop& other) const {
  return count == other.count && body == other.body;
}

int topology_arity(TopologyKind kind) {
  return kind == TopologyKind::kMesh2d || kind == TopologyKind::kTree ? 2 : 1;
}

const RoleDecl* Model::find_role(std::string_view role) const {
  for (const auto& r : roles)
    if (r.name == role) return &r;
  return nullptr;
}

namespace {

int eval_int(const Expr& e, const Params& params, std::string_view what) {
  try {
    const long long v = eval_count(e, params);
    if (v > (1 << 30)) throw ModelError(fmt::format("{} {} is too large", what, v), e.pos());
    return static_cast<int>(v);
  } catch (const EvalError& err) {
    throw ModelError(fmt::format("{}: {}", what, err.what()), err.pos());
  }
}

}  // namespace

TopologySpec resolve_topology(const TopologyDecl& decl, const Params& params) {
  if (static_cast<int>(decl.args.size()) != topology_arity(decl.kind))
    throw ModelError(fmt::format("{} takes {} argument(s), got {}", to_string(decl.kind),
                                 topology_arity(decl.kind), decl.args.size()),
                     decl.pos);
  const std::string what = fmt::format("{} argument", to_string(decl.kind));
  switch (decl.kind) {
    case TopologyKind::kMesh2d:
      return TopologySpec::mesh2d(eval_int(decl.args[0], params, what),
                                  eval_int(decl.args[1], params, what));
    case TopologyKind::kTree:
      return TopologySpec::tree(eval_int(decl.args[0], params, what),
                                eval_int(decl.args[1], params, what));
    case TopologyKind::kHypercube:
      return TopologySpec::hypercube(eval_int(decl.args[0], params, what));
    default:
      return TopologySpec{decl.kind, eval_int(decl.args[0], params, what)};
  }
}

Instance resolve(const Model& model) { return resolve(model, model.params); }

Instance resolve(const Model& model, const Params& params) {
  Instance inst;
  inst.model = &model;
  inst.params = params;
  inst.spec = resolve_topology(model.topology, params);
  inst.graph = build_topology(inst.spec);
  const int p = inst.graph.size();
  inst.role_of.assign(p, -1);
  for (std::size_t i = 0; i < model.roles.size(); ++i) {
    const auto& role = model.roles[i];
    const std::string what = fmt::format("rank range of role '{}'", role.name);
    RoleRanks rr;
    rr.first = eval_int(role.ranks.first, params, what);
    rr.last = role.ranks.last ? eval_int(*role.ranks.last, params, what) : rr.first;
    if (rr.last < rr.first)
      throw ModelError(fmt::format("role '{}' has empty rank range {}..{}", role.name, rr.first, rr.last),
                       role.pos);
    if (rr.last >= p)
      throw ModelError(fmt::format("role '{}' rank {} outside process count {}", role.name, rr.last, p),
                       role.pos);
    inst.role_ranks.push_back(rr);
    for (Rank r = rr.first; r <= rr.last; ++r)
      if (inst.role_of[r] < 0) inst.role_of[r] = static_cast<int>(i);
  }
  return inst;
}

std::vector<Rank> Instance::resolve_target(const Target& t, Rank me) const {
  const auto* role = model->find_role(t.role);
  if (role == nullptr) throw ModelError(fmt::format("unknown role '{}'", t.role));
  const auto& rr = role_ranks.at(role - model->roles.data());
  if (t.index) {
    long long idx = 0;
    try {
      idx = eval_count(*t.index, params, me);
    } catch (const EvalError& err) {
      throw ModelError(fmt::format("index into role '{}': {}", t.role, err.what()), err.pos());
    }
    if (idx >= rr.count())
      throw ModelError(fmt::format("index {} out of range for role '{}' with {} rank(s)", idx, t.role,
                                   rr.count()),
                       t.index->pos());
    return {rr.first + static_cast<Rank>(idx)};
  }
  std::vector<Rank> out;
  for (Rank r = rr.first; r <= rr.last; ++r) out.push_back(r);
  return out;
}

Rank Instance::root_rank(std::string_view role) const {
  const auto* decl = model->find_role(role);
  if (decl == nullptr) throw ModelError(fmt::format("unknown role '{}'", role));
  return role_ranks.at(decl - model->roles.data()).first;
}

}  // namespace parmodel
