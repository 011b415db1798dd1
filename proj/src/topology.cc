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

#include "parmodel/topology.h"

#include <algorithm>
#include <deque>

#include <fmt/format.h>

namespace parmodel {

namespace {

constexpr long long kMaxRanks = 1 << 20;

void link(std::vector<std::vector<Rank>>& adj, Rank u, Rank v) {
  adj[u].push_back(v);
  adj[v].push_back(u);
}

}  // namespace

std::string_view to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::kFarm: return "farm";
    case TopologyKind::kBus: return "bus";
    case TopologyKind::kStar: return "star";
    case TopologyKind::kRing: return "ring";
    case TopologyKind::kMesh2d: return "mesh2d";
    case TopologyKind::kHypercube: return "hypercube";
    case TopologyKind::kTree: return "tree";
  }
  return "?";
}

std::optional<TopologyKind> topology_kind_from_string(std::string_view name) {
  for (auto kind : {TopologyKind::kFarm, TopologyKind::kBus, TopologyKind::kStar,
                    TopologyKind::kRing, TopologyKind::kMesh2d,
                    TopologyKind::kHypercube, TopologyKind::kTree}) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

TopologySpec TopologySpec::mesh2d(int rows, int cols) {
  TopologySpec s{TopologyKind::kMesh2d, rows * cols};
  s.rows = rows;
  s.cols = cols;
  return s;
}

TopologySpec TopologySpec::hypercube(int dim) {
  TopologySpec s{TopologyKind::kHypercube, 1};
  s.dim = dim;
  s.p = static_cast<int>(std::min(s.shape_size(), kMaxRanks + 1));
  return s;
}

TopologySpec TopologySpec::tree(int arity, int depth) {
  TopologySpec s{TopologyKind::kTree, 1};
  s.arity = arity;
  s.depth = depth;
  s.p = static_cast<int>(std::min(s.shape_size(), kMaxRanks + 1));
  return s;
}

long long TopologySpec::shape_size() const {
  switch (kind) {
    case TopologyKind::kMesh2d:
      return static_cast<long long>(rows) * cols;
    case TopologyKind::kHypercube:
      if (dim < 0) return -1;
      return dim > 40 ? kMaxRanks + 1 : (1LL << dim);
    case TopologyKind::kTree: {
      if (arity < 1 || depth < 0) return -1;
      long long total = 0;
      long long level = 1;
      for (int d = 0; d <= depth; ++d) {
        total += level;
        if (total > kMaxRanks) return kMaxRanks + 1;
        level *= arity;
      }
      return total;
    }
    default:
      return p;
  }
}

std::string describe(const TopologySpec& spec) {
  switch (spec.kind) {
    case TopologyKind::kMesh2d:
      return fmt::format("mesh2d({}, {})", spec.rows, spec.cols);
    case TopologyKind::kHypercube:
      return fmt::format("hypercube({})", spec.dim);
    case TopologyKind::kTree:
      return fmt::format("tree({}, {})", spec.arity, spec.depth);
    default:
      return fmt::format("{}({})", to_string(spec.kind), spec.p);
  }
}

ProcessGraph build_topology(const TopologySpec& spec) {
  const std::string name = describe(spec);
  if (spec.p < 1) throw TopologyError(fmt::format("{}: process count {} must be positive", name, spec.p));
  if (spec.p > kMaxRanks) throw TopologyError(fmt::format("{}: process count {} exceeds {}", name, spec.p, kMaxRanks));

  const long long implied = spec.shape_size();
  switch (spec.kind) {
    case TopologyKind::kFarm:
    case TopologyKind::kStar:
      if (spec.p < 2) throw TopologyError(fmt::format("{} needs at least 2 processes", name));
      break;
    case TopologyKind::kRing:
      if (spec.p < 3) throw TopologyError(fmt::format("{} needs at least 3 processes", name));
      break;
    case TopologyKind::kBus:
      break;
    case TopologyKind::kMesh2d:
      if (spec.rows < 1 || spec.cols < 1)
        throw TopologyError(fmt::format("{}: rows and cols must be positive", name));
      if (implied != spec.p)
        throw TopologyError(fmt::format("mesh2d shape {}×{}={} ≠ process count {}", spec.rows,
                                        spec.cols, implied, spec.p));
      break;
    case TopologyKind::kHypercube:
      if (spec.dim < 0) throw TopologyError(fmt::format("{}: dimension must be non-negative", name));
      if (implied != spec.p)
        throw TopologyError(fmt::format("hypercube dimension {} gives {} ranks ≠ process count {}",
                                        spec.dim, implied, spec.p));
      break;
    case TopologyKind::kTree:
      if (spec.arity < 1 || spec.depth < 0)
        throw TopologyError(fmt::format("{}: arity must be ≥ 1 and depth ≥ 0", name));
      if (implied != spec.p)
        throw TopologyError(fmt::format("tree arity {} depth {} gives {} ranks ≠ process count {}",
                                        spec.arity, spec.depth, implied, spec.p));
      break;
  }

  const int p = spec.p;
  ProcessGraph g;
  g.kind_ = spec.kind;
  g.adjacency_.assign(p, {});
  auto& adj = g.adjacency_;

  switch (spec.kind) {
    case TopologyKind::kFarm:
    case TopologyKind::kStar:
      for (Rank r = 1; r < p; ++r) link(adj, 0, r);
      break;
    case TopologyKind::kBus:
      for (Rank u = 0; u < p; ++u)
        for (Rank v = u + 1; v < p; ++v) link(adj, u, v);
      break;
    case TopologyKind::kRing:
      for (Rank r = 0; r < p; ++r) link(adj, r, (r + 1) % p);
      break;
    case TopologyKind::kMesh2d:
      for (int row = 0; row < spec.rows; ++row) {
        for (int col = 0; col < spec.cols; ++col) {
          const Rank r = row * spec.cols + col;
          if (col + 1 < spec.cols) link(adj, r, r + 1);
          if (row + 1 < spec.rows) link(adj, r, r + spec.cols);
        }
      }
      break;
    case TopologyKind::kHypercube:
      for (Rank r = 0; r < p; ++r)
        for (int bit = 0; bit < spec.dim; ++bit) {
          const Rank other = r ^ (1 << bit);
          if (other > r) link(adj, r, other);
        }
      break;
    case TopologyKind::kTree:
      // Breadth-first numbering: children of r are r*a+1 .. r*a+a.
      for (Rank r = 1; r < p; ++r) link(adj, (r - 1) / spec.arity, r);
      break;
  }
  for (auto& list : adj) std::sort(list.begin(), list.end());
  return g;
}

void ProcessGraph::check_rank(Rank u) const {
  if (u < 0 || u >= size())
    throw TopologyError(fmt::format("rank {} out of range [0, {})", u, size()));
}

const std::vector<Rank>& ProcessGraph::neighbors(Rank u) const {
  check_rank(u);
  return adjacency_[u];
}

bool ProcessGraph::adjacent(Rank u, Rank v) const {
  const auto& list = neighbors(u);
  check_rank(v);
  return std::binary_search(list.begin(), list.end(), v);
}

std::size_t ProcessGraph::edge_count() const {
  std::size_t degree_sum = 0;
  for (const auto& list : adjacency_) degree_sum += list.size();
  return degree_sum / 2;
}

std::vector<std::pair<Rank, Rank>> ProcessGraph::edges() const {
  std::vector<std::pair<Rank, Rank>> out;
  for (Rank u = 0; u < size(); ++u)
    for (Rank v : adjacency_[u])
      if (u < v) out.emplace_back(u, v);
  return out;
}

std::vector<int> hop_distances(const ProcessGraph& g, Rank source) {
  g.neighbors(source);  // range check
  std::vector<int> dist(g.size(), -1);
  if (g.medium()) {
    std::fill(dist.begin(), dist.end(), 1);
    dist[source] = 0;
    return dist;
  }
  std::deque<Rank> frontier{source};
  dist[source] = 0;
  while (!frontier.empty()) {
    const Rank u = frontier.front();
    frontier.pop_front();
    for (Rank v : g.neighbors(u)) {
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        frontier.push_back(v);
      }
    }
  }
  return dist;
}

int shortest_hops(const ProcessGraph& g, Rank u, Rank v) {
  g.neighbors(v);
  if (u == v) {
    g.neighbors(u);
    return 0;
  }
  if (g.medium()) {
    g.neighbors(u);
    return 1;
  }
  return hop_distances(g, u)[v];
}

std::vector<Rank> neighbors(const ProcessGraph& g, Rank u) { return g.neighbors(u); }

}  // namespace parmodel
