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

// Domain types for a parallel program model: the topology declaration, the
// cost parameters, and one activity flow (swimlane) per role. Models are
// plain values; `resolve` binds parameters to produce the concrete process
// graph and rank-to-role assignment used by validation, simulation and
// export.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "parmodel/expr.h"
#include "parmodel/topology.h"

namespace parmodel {

enum class SendMode { kRendezvous, kBuffered };

std::string_view to_string(SendMode mode);

struct CostModel {
  double t_startup = 0;  // µs per message
  double t_byte = 0;     // µs per byte
  bool hop_scaling = false;
  SendMode send_mode = SendMode::kRendezvous;

  /// Point-to-point cost of an L-byte message over `hops` links.
  double message_cost(double bytes, int hops = 1) const {
    const double base = t_startup + bytes * t_byte;
    return hop_scaling ? base * hops : base;
  }

  bool operator==(const CostModel&) const = default;
};

enum class CollectiveKind { kBcast, kReduce, kGather, kScatter, kBarrier };
enum class TaskPolicy { kStatic, kDynamic };

std::string_view to_string(CollectiveKind kind);
std::optional<CollectiveKind> collective_kind_from_string(std::string_view name);
std::string_view to_string(TaskPolicy policy);

/// A role name with an optional rank-in-role index. Without an index the
/// target names the role's only rank, or (for recv) any rank of the role.
struct Target {
  std::string role;
  std::optional<Expr> index;

  bool operator==(const Target&) const = default;
};

std::string to_string(const Target& t);

struct Node;

struct Action {
  std::string name;
  Expr cost;
  bool operator==(const Action&) const = default;
};

struct SubActivity {
  std::string name;
  std::vector<Node> body;
  bool operator==(const SubActivity&) const;
};

struct Send {
  Target to;
  Expr size;
  bool blocking = true;
  std::string handle;  // nonblocking only; may be empty
  bool operator==(const Send&) const = default;
};

struct Recv {
  Target from;
  Expr size;
  bool operator==(const Recv&) const = default;
};

struct Wait {
  std::string handle;
  bool operator==(const Wait&) const = default;
};

struct Collective {
  CollectiveKind kind = CollectiveKind::kBarrier;
  std::string root;
  Expr size;
  bool operator==(const Collective&) const = default;
};

struct Loop {
  Expr count;
  std::vector<Node> body;
  bool operator==(const Loop&) const;
};

/// Master side of a task farm. `costs` holds either one expression applied
/// to every task or exactly `count` per-task expressions.
struct TaskPool {
  Expr count;
  std::vector<Expr> costs;
  bool cost_list = false;
  TaskPolicy policy = TaskPolicy::kStatic;
  Expr payload;
  Expr result;
  bool operator==(const TaskPool&) const = default;
};

struct WorkerLoop {
  bool operator==(const WorkerLoop&) const = default;
};

using NodeKind =
    std::variant<Action, SubActivity, Send, Recv, Wait, Collective, Loop, TaskPool, WorkerLoop>;

struct Node {
  NodeKind kind;
  std::string note;  // trailing comment, rendered as a diagram note
  SourcePos pos;

  template <typename T>
  const T* as() const {
    return std::get_if<T>(&kind);
  }

  /// Structural equality ignores source positions.
  bool operator==(const Node& other) const { return kind == other.kind && note == other.note; }
};

struct RankSpec {
  Expr first;
  std::optional<Expr> last;  // set for `ranks a..b`
  bool operator==(const RankSpec&) const = default;
};

struct RoleDecl {
  std::string name;
  RankSpec ranks;
  std::vector<Node> body;
  SourcePos pos;

  bool operator==(const RoleDecl& other) const {
    return name == other.name && ranks == other.ranks && body == other.body;
  }
};

struct TopologyDecl {
  TopologyKind kind = TopologyKind::kFarm;
  std::vector<Expr> args;
  SourcePos pos;

  bool operator==(const TopologyDecl& other) const {
    return kind == other.kind && args == other.args;
  }
};

/// Number of arguments each topology kind takes in the text form.
int topology_arity(TopologyKind kind);

struct Model {
  std::string name = "unnamed";
  TopologyDecl topology;
  CostModel costs;
  Params params;
  std::vector<RoleDecl> roles;

  const RoleDecl* find_role(std::string_view role) const;
  bool operator==(const Model&) const = default;
};

class ModelError : public std::runtime_error {
 public:
  ModelError(const std::string& message, SourcePos pos = {})
      : std::runtime_error(message), pos_(pos) {}
  SourcePos pos() const { return pos_; }

 private:
  SourcePos pos_;
};

/// Evaluates the topology declaration under `params`.
TopologySpec resolve_topology(const TopologyDecl& decl, const Params& params);

struct RoleRanks {
  Rank first = 0;
  Rank last = 0;  // inclusive
  int count() const { return last - first + 1; }
  bool contains(Rank r) const { return r >= first && r <= last; }
};

/// A model with its parameters bound: concrete graph and role placement.
struct Instance {
  const Model* model = nullptr;
  Params params;
  TopologySpec spec;
  ProcessGraph graph;
  std::vector<RoleRanks> role_ranks;  // parallel to model->roles
  std::vector<int> role_of;           // rank -> role index, -1 if unassigned

  int size() const { return graph.size(); }
  const RoleDecl& role(Rank r) const { return model->roles.at(role_of.at(r)); }

  /// Resolves a send/recv target seen from rank `me`. Returns the candidate
  /// ranks: one for an indexed or single-rank role, the whole role otherwise.
  std::vector<Rank> resolve_target(const Target& t, Rank me) const;
  /// Lowest rank of the named role.
  Rank root_rank(std::string_view role) const;
};

/// Binds `params` (defaults to the model's own). Throws ModelError or
/// TopologyError when the topology or a role range cannot be evaluated, or
/// a role range leaves [0, p). Coverage gaps and overlaps are left to
/// validation and reported there.
Instance resolve(const Model& model, const Params& params);
Instance resolve(const Model& model);

/// Calls `fn(node)` for every node in preorder, descending into loops and
/// subactivities.
template <typename Fn>
void for_each_node(const std::vector<Node>& body, Fn&& fn) {
  for (const auto& node : body) {
    fn(node);
    if (const auto* sub = node.as<SubActivity>()) for_each_node(sub->body, fn);
    if (const auto* loop = node.as<Loop>()) for_each_node(loop->body, fn);
  }
}

}  // namespace parmodel
