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

#include "tiacs/road_network.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>

#include "tiacs/csv.hpp"

namespace tiacs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLengthSlack = 0.01;

using HeapItem = std::pair<double, std::uint32_t>;
using MinHeap = std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>>;

}  // namespace

void SearchWorkspace::prepare(std::size_t node_count) {
  if (dist.size() != node_count) {
    dist.assign(node_count, kInf);
    aux.assign(node_count, 0.0);
    touched.clear();
  } else {
    reset();
  }
}

void SearchWorkspace::reset() {
  for (auto i : touched) {
    dist[i] = kInf;
    aux[i] = 0.0;
  }
  touched.clear();
}

RoadNetwork::RoadNetwork(std::vector<Node> nodes, std::vector<Edge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  std::sort(nodes_.begin(), nodes_.end(), [](const Node& a, const Node& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (i > 0 && nodes_[i].id == nodes_[i - 1].id) {
      throw ValidationError("duplicate node id " + std::to_string(nodes_[i].id));
    }
    validate_coordinates(nodes_[i].position);
    index_.emplace(nodes_[i].id, static_cast<std::uint32_t>(i));
  }

  std::string problems;
  std::size_t problem_count = 0;
  auto report = [&](std::size_t i, const Edge& e, const std::string& why) {
    if (++problem_count <= 20) {
      problems += "\n  edge " + std::to_string(i) + " (" + std::to_string(e.from) + "->" + std::to_string(e.to) +
                  "): " + why;
    }
  };
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const auto& e = edges_[i];
    const bool has_from = index_.contains(e.from);
    const bool has_to = index_.contains(e.to);
    if (!has_from) report(i, e, "unknown node " + std::to_string(e.from));
    if (!has_to) report(i, e, "unknown node " + std::to_string(e.to));
    if (e.from == e.to) report(i, e, "self-loop");
    if (!(e.length_m > 0.0)) report(i, e, "length must be > 0");
    if (!(e.travel_time_s > 0.0)) report(i, e, "travel time must be > 0");
    if (has_from && has_to && e.from != e.to) {
      const double gc = great_circle_unchecked(node(e.from).position, node(e.to).position);
      if (e.length_m < gc * (1.0 - kLengthSlack)) {
        warnings_.push_back("edge " + std::to_string(i) + " (" + std::to_string(e.from) + "->" +
                            std::to_string(e.to) + ") length " + format_double(e.length_m) +
                            " m is shorter than great-circle " + format_double(gc) + " m");
      }
    }
  }
  if (problem_count > 0) {
    if (problem_count > 20) problems += "\n  ... (" + std::to_string(problem_count - 20) + " more)";
    throw ValidationError("invalid edges:" + problems);
  }

  const std::size_t n = nodes_.size();
  out_start_.assign(n + 1, 0);
  for (const auto& e : edges_) ++out_start_[index_.at(e.from) + 1];
  for (std::size_t i = 0; i < n; ++i) out_start_[i + 1] += out_start_[i];
  out_target_.resize(edges_.size());
  out_length_.resize(edges_.size());
  out_time_.resize(edges_.size());
  std::vector<std::uint32_t> fill(out_start_.begin(), out_start_.end() - 1);
  for (const auto& e : edges_) {
    const auto k = fill[index_.at(e.from)]++;
    out_target_[k] = index_.at(e.to);
    out_length_[k] = e.length_m;
    out_time_[k] = e.travel_time_s;
  }

  std::vector<LonLat> positions;
  positions.reserve(n);
  rank_.reserve(n);
  for (const auto& node : nodes_) {
    positions.push_back(node.position);
    rank_.push_back(node.id);
  }
  grid_ = GeoGrid(positions);
}

std::optional<std::uint32_t> RoadNetwork::index_of(NodeId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::uint32_t RoadNetwork::require_index(NodeId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw PreconditionError("unknown node " + std::to_string(id));
  return it->second;
}

const Node& RoadNetwork::node(NodeId id) const { return nodes_[require_index(id)]; }

Snap RoadNetwork::nearest_node(LonLat p) const {
  if (nodes_.empty()) throw PreconditionError("nearest_node on an empty network");
  validate_coordinates(p);
  const auto hit = grid_.nearest(p, rank_);
  return {nodes_[hit.index].id, hit.distance_m};
}

void RoadNetwork::bounded_search(std::uint32_t source, double max_dist, SearchWorkspace& ws,
                                 std::vector<std::pair<std::uint32_t, double>>& out, std::size_t targets,
                                 std::span<const char> target_mark) const {
  ws.prepare(nodes_.size());
  MinHeap heap;
  ws.dist[source] = 0.0;
  ws.touched.push_back(source);
  heap.emplace(0.0, source);
  std::size_t remaining = targets;
  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (d > ws.dist[u]) continue;
    out.emplace_back(u, d);
    if (targets > 0 && target_mark[u] && --remaining == 0) break;
    for (auto k = out_start_[u]; k < out_start_[u + 1]; ++k) {
      const auto v = out_target_[k];
      const double nd = d + out_length_[k];
      if (nd <= max_dist && nd < ws.dist[v]) {
        if (ws.dist[v] == kInf) ws.touched.push_back(v);
        ws.dist[v] = nd;
        heap.emplace(nd, v);
      }
    }
  }
}

std::map<NodeId, double> RoadNetwork::bounded_distance_search(NodeId source, double max_dist) const {
  const auto src = require_index(source);
  if (!(max_dist > 0.0)) throw PreconditionError("max_dist must be > 0");
  SearchWorkspace ws;
  std::vector<std::pair<std::uint32_t, double>> reached;
  bounded_search(src, max_dist, ws, reached);
  std::map<NodeId, double> out;
  for (const auto& [i, d] : reached) out.emplace(nodes_[i].id, d);
  return out;
}

std::vector<std::optional<Route>> RoadNetwork::fastest_routes(NodeId origin, std::span<const NodeId> dests,
                                                              SearchWorkspace& ws) const {
  const auto src = require_index(origin);
  std::vector<std::uint32_t> dest_index;
  dest_index.reserve(dests.size());
  for (auto d : dests) dest_index.push_back(require_index(d));

  ws.prepare(nodes_.size());
  std::vector<std::uint32_t> pending = dest_index;
  std::sort(pending.begin(), pending.end());
  pending.erase(std::unique(pending.begin(), pending.end()), pending.end());
  std::size_t remaining = pending.size();

  MinHeap heap;
  ws.dist[src] = 0.0;
  ws.aux[src] = 0.0;
  ws.touched.push_back(src);
  heap.emplace(0.0, src);
  while (!heap.empty() && remaining > 0) {
    const auto [t, u] = heap.top();
    heap.pop();
    if (t > ws.dist[u]) continue;
    if (std::binary_search(pending.begin(), pending.end(), u)) --remaining;
    for (auto k = out_start_[u]; k < out_start_[u + 1]; ++k) {
      const auto v = out_target_[k];
      const double nt = t + out_time_[k];
      if (nt < ws.dist[v]) {
        if (ws.dist[v] == kInf) ws.touched.push_back(v);
        ws.dist[v] = nt;
        ws.aux[v] = ws.aux[u] + out_length_[k];
        heap.emplace(nt, v);
      }
    }
  }

  std::vector<std::optional<Route>> out;
  out.reserve(dest_index.size());
  for (auto d : dest_index) {
    if (ws.dist[d] == kInf) {
      out.emplace_back(std::nullopt);
    } else {
      out.emplace_back(Route{ws.dist[d], ws.aux[d]});
    }
  }
  return out;
}

std::optional<double> RoadNetwork::shortest_travel_time(NodeId origin, NodeId dest) const {
  SearchWorkspace ws;
  const NodeId target[] = {dest};
  auto routes = fastest_routes(origin, target, ws);
  if (!routes[0]) return std::nullopt;
  return routes[0]->seconds;
}

RoadNetwork load_network(const std::filesystem::path& nodes_csv, const std::filesystem::path& edges_csv) {
  std::vector<Node> nodes;
  {
    csv::Reader in(nodes_csv, {"node_id", "lon", "lat"});
    while (in.next()) {
      Node n{in.as_int(0), {in.as_double(1), in.as_double(2)}};
      try {
        validate_coordinates(n.position);
      } catch (const ValidationError& e) {
        in.fail(e.what());
      }
      nodes.push_back(n);
    }
  }
  std::vector<Edge> edges;
  {
    csv::Reader in(edges_csv, {"from", "to", "length_m", "travel_time_s"});
    while (in.next()) edges.push_back({in.as_int(0), in.as_int(1), in.as_double(2), in.as_double(3)});
  }
  return RoadNetwork(std::move(nodes), std::move(edges));
}

void write_network(const RoadNetwork& net, const std::filesystem::path& nodes_csv,
                   const std::filesystem::path& edges_csv) {
  {
    auto out = csv::open_output(nodes_csv);
    out << "node_id,lon,lat\n";
    for (const auto& n : net.nodes()) {
      out << n.id << ',' << format_double(n.position.lon) << ',' << format_double(n.position.lat) << '\n';
    }
  }
  auto out = csv::open_output(edges_csv);
  out << "from,to,length_m,travel_time_s\n";
  for (const auto& e : net.edges()) {
    out << e.from << ',' << e.to << ',' << format_double(e.length_m) << ',' << format_double(e.travel_time_s) << '\n';
  }
}

}  // namespace tiacs
