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

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "tiacs/charging_inventory.hpp"
#include "tiacs/road_network.hpp"
#include "tiacs/trajectory.hpp"

namespace fixture {

// Random directed graph inside a ~4 km box. Lengths never undercut the
// great-circle distance; travel times are independent of lengths.
struct RandomGraph {
  std::vector<tiacs::Node> nodes;
  std::vector<tiacs::Edge> edges;
};

inline RandomGraph random_graph(std::size_t n, std::size_t m, std::uint64_t seed, bool integer_lengths = false) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RandomGraph g;
  for (std::size_t i = 0; i < n; ++i) {
    // Non-contiguous ids exercise the id -> index mapping.
    g.nodes.push_back({static_cast<tiacs::NodeId>(3 * i + 7), {-122.3 + 0.05 * u(gen), 37.7 + 0.04 * u(gen)}});
  }
  for (std::size_t k = 0; k < m; ++k) {
    const auto a = gen() % n;
    auto b = gen() % n;
    if (a == b) b = (b + 1) % n;
    double len = oracle::great_circle(g.nodes[a].position, g.nodes[b].position) * (1.02 + 0.5 * u(gen)) + 1.0;
    if (integer_lengths) len = std::ceil(len);
    g.edges.push_back({g.nodes[a].id, g.nodes[b].id, len, 5.0 + 300.0 * u(gen)});
  }
  return g;
}

inline std::size_t index_in(const RandomGraph& g, tiacs::NodeId id) {
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (g.nodes[i].id == id) return i;
  }
  return g.nodes.size();
}

inline std::vector<oracle::SimpleEdge> simple_edges(const RandomGraph& g, bool by_time) {
  std::vector<oracle::SimpleEdge> out;
  for (const auto& e : g.edges) {
    out.push_back({index_in(g, e.from), index_in(g, e.to), by_time ? e.travel_time_s : e.length_m});
  }
  return out;
}

// Worked example: home 0-180 min with three single-port chargers nearby,
// work 180-480 with none, other 480-600 with two.
struct Toy {
  tiacs::RoadNetwork net;
  std::vector<tiacs::ChargingStation> stations;
  tiacs::Trajectory traj;
};

inline Toy toy() {
  using namespace tiacs;
  std::vector<Node> nodes{{1, {0.0, 0.0}}, {2, {0.1, 0.0}}, {3, {0.2, 0.0}}};
  std::vector<Edge> edges;
  const double north = 0.00135;  // about 150 m
  auto spur = [&](NodeId hub, NodeId id, double lon) {
    nodes.push_back({id, {lon, north * static_cast<double>(id % 10)}});
    edges.push_back({hub, id, 160.0 * static_cast<double>(id % 10), 30});
    edges.push_back({id, hub, 160.0 * static_cast<double>(id % 10), 30});
  };
  spur(1, 11, 0.0);
  spur(1, 12, 0.0);
  spur(1, 13, 0.0);
  spur(3, 14, 0.2);
  spur(3, 15, 0.2);
  Toy t{RoadNetwork(nodes, edges), {}, {}};
  const Date opened{std::chrono::year{2020}, std::chrono::month{1}, std::chrono::day{1}};
  int k = 0;
  for (NodeId id : {11, 12, 13, 14, 15}) {
    ChargingStation s;
    s.station_id = "C" + std::to_string(++k);
    s.position = t.net.node(id).position;
    s.open_date = opened;
    s.l2_ports = 1;
    s.dcfc_ports = 0;
    t.stations.push_back(s);
  }
  snap_stations(t.stations, t.net);
  t.traj.person_id = "toy";
  t.traj.home = t.net.node(1).position;
  t.traj.stays = {{0, 180, StayKind::Home, 1, t.net.node(1).position},
                  {180, 480, StayKind::Work, 2, t.net.node(2).position},
                  {480, 600, StayKind::Other, 3, t.net.node(3).position}};
  t.traj.travel = {0, 0};
  return t;
}

}  // namespace fixture
