// Copyright 2026 The tiacs Authors
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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tiacs/common.hpp"
#include "tiacs/geo.hpp"

namespace tiacs {

struct Node {
  NodeId id = kNoNode;
  LonLat position;

  friend bool operator==(const Node&, const Node&) = default;
};

struct Edge {
  NodeId from = kNoNode;
  NodeId to = kNoNode;
  double length_m = 0.0;
  double travel_time_s = 0.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Snap {
  NodeId node = kNoNode;
  double distance_m = 0.0;
};

/// Fastest path summary: its travel time and the length of that same path.
struct Route {
  double seconds = 0.0;
  double meters = 0.0;
};

// Reusable Dijkstra scratch space. One per thread; the network itself is
// never mutated by queries.
class SearchWorkspace {
 public:
  void prepare(std::size_t node_count);
  void reset();

  std::vector<double> dist;
  std::vector<double> aux;
  std::vector<std::uint32_t> touched;
};

// Directed road graph with per-edge length and travel time. Immutable after
// construction and safe for concurrent reads.
class RoadNetwork {
 public:
  RoadNetwork() = default;

  /// Validates and indexes the graph. Throws ValidationError on duplicate
  /// node ids, dangling endpoints, self-loops or non-positive weights.
  /// Edges shorter than the great-circle distance between their endpoints
  /// (beyond 1% slack) are reported through warnings().
  RoadNetwork(std::vector<Node> nodes, std::vector<Edge> edges);

  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  bool empty() const noexcept { return nodes_.empty(); }

  /// Nodes ascending by id.
  std::span<const Node> nodes() const noexcept { return nodes_; }
  /// Edges in input order.
  std::span<const Edge> edges() const noexcept { return edges_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  bool contains(NodeId id) const { return index_.contains(id); }
  std::optional<std::uint32_t> index_of(NodeId id) const;
  const Node& node(NodeId id) const;
  const Node& node_at(std::uint32_t index) const { return nodes_[index]; }

  /// Node minimizing great-circle distance to `p`, smallest id on ties.
  Snap nearest_node(LonLat p) const;

  /// Shortest path length (by edge length) from `source` to every node
  /// reachable within max_dist, boundary included.
  std::map<NodeId, double> bounded_distance_search(NodeId source, double max_dist) const;

  /// Index-level bounded search used by bulk builders. Appends (node index,
  /// distance) pairs in settle order. When `targets` is non-empty the search
  /// stops once all of them are settled; `target_mark` must be sized to
  /// node_count() and flag exactly those targets.
  void bounded_search(std::uint32_t source, double max_dist, SearchWorkspace& ws,
                      std::vector<std::pair<std::uint32_t, double>>& out,
                      std::size_t targets = 0, std::span<const char> target_mark = {}) const;

  /// Minimal travel time in seconds; nullopt when no path exists.
  std::optional<double> shortest_travel_time(NodeId origin, NodeId dest) const;

  /// Fastest route from one origin to several destinations with a single search.
  std::vector<std::optional<Route>> fastest_routes(NodeId origin, std::span<const NodeId> dests,
                                                   SearchWorkspace& ws) const;

 private:
  std::uint32_t require_index(NodeId id) const;

  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::unordered_map<NodeId, std::uint32_t> index_;
  std::vector<std::uint32_t> out_start_;
  std::vector<std::uint32_t> out_target_;
  std::vector<double> out_length_;
  std::vector<double> out_time_;
  std::vector<std::int64_t> rank_;
  GeoGrid grid_;
  std::vector<std::string> warnings_;
};

/// Reads the node CSV (node_id,lon,lat) and edge CSV
/// (from,to,length_m,travel_time_s).
RoadNetwork load_network(const std::filesystem::path& nodes_csv, const std::filesystem::path& edges_csv);

void write_network(const RoadNetwork& net, const std::filesystem::path& nodes_csv,
                   const std::filesystem::path& edges_csv);

}  // namespace tiacs
