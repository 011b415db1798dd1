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

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace parmodel {

using Rank = int;

enum class TopologyKind { kFarm, kBus, kStar, kRing, kMesh2d, kHypercube, kTree };

std::string_view to_string(TopologyKind kind);
std::optional<TopologyKind> topology_kind_from_string(std::string_view name);

class TopologyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A regular process interconnection request. `p` is the declared process
/// count; the shape fields are only meaningful for their own kind and must
/// agree with `p` for build_topology to accept the spec.
struct TopologySpec {
  TopologyKind kind = TopologyKind::kFarm;
  int p = 1;
  int rows = 0;
  int cols = 0;
  int dim = 0;
  int arity = 0;
  int depth = 0;

  static TopologySpec farm(int p) { return {TopologyKind::kFarm, p}; }
  static TopologySpec star(int p) { return {TopologyKind::kStar, p}; }
  static TopologySpec bus(int p) { return {TopologyKind::kBus, p}; }
  static TopologySpec ring(int p) { return {TopologyKind::kRing, p}; }
  static TopologySpec mesh2d(int rows, int cols);
  static TopologySpec hypercube(int dim);
  static TopologySpec tree(int arity, int depth);

  /// Process count implied by the shape parameters alone (p for the
  /// single-argument kinds).
  long long shape_size() const;

  bool operator==(const TopologySpec&) const = default;
};

/// Rank-indexed undirected interconnection graph. Immutable once built.
class ProcessGraph {
 public:
  ProcessGraph() = default;

  TopologyKind kind() const { return kind_; }
  int size() const { return static_cast<int>(adjacency_.size()); }
  /// True only for bus: every pair communicates over one shared medium.
  bool medium() const { return kind_ == TopologyKind::kBus; }

  const std::vector<Rank>& neighbors(Rank u) const;
  int degree(Rank u) const { return static_cast<int>(neighbors(u).size()); }
  bool adjacent(Rank u, Rank v) const;
  std::size_t edge_count() const;
  /// Every adjacency pair (u < v), ascending.
  std::vector<std::pair<Rank, Rank>> edges() const;

  bool operator==(const ProcessGraph&) const = default;

 private:
  friend ProcessGraph build_topology(const TopologySpec& spec);

  void check_rank(Rank u) const;

  TopologyKind kind_ = TopologyKind::kFarm;
  std::vector<std::vector<Rank>> adjacency_;
};

ProcessGraph build_topology(const TopologySpec& spec);

/// Length of the shortest path between two ranks; 1 for any distinct pair on
/// a bus.
int shortest_hops(const ProcessGraph& g, Rank u, Rank v);

/// Sorted ascending.
std::vector<Rank> neighbors(const ProcessGraph& g, Rank u);

/// Hop counts from `source` to every rank.
std::vector<int> hop_distances(const ProcessGraph& g, Rank source);

std::string describe(const TopologySpec& spec);

}  // namespace parmodel
