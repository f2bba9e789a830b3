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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "tiacs/charging_inventory.hpp"
#include "tiacs/pipeline.hpp"

using namespace tiacs;
using namespace std::chrono;

namespace {

Date ymd(int y, unsigned m, unsigned d) { return year{y} / month{m} / day{d}; }

GeneratedScenario small_scenario(std::uint64_t seed) {
  SyntheticScenario scn;
  scn.grid_rows = 20;
  scn.grid_cols = 20;
  scn.station_count = 40;
  scn.person_count = 30;
  scn.seed = seed;
  return generate_scenario(scn);
}

// Distances from every charger node to every node by Floyd-Warshall.
struct AllPairs {
  std::vector<std::vector<double>> d;
  std::map<NodeId, std::size_t> index;
};

AllPairs all_pairs(const RoadNetwork& net) {
  AllPairs ap;
  for (std::size_t i = 0; i < net.node_count(); ++i) ap.index[net.nodes()[i].id] = i;
  std::vector<oracle::SimpleEdge> edges;
  for (const auto& e : net.edges()) edges.push_back({ap.index[e.from], ap.index[e.to], e.length_m});
  ap.d = oracle::floyd_warshall(net.node_count(), edges);
  return ap;
}

std::vector<NodeId> all_node_ids(const RoadNetwork& net) {
  std::vector<NodeId> ids;
  for (const auto& n : net.nodes()) ids.push_back(n.id);
  return ids;
}

}  // namespace

TEST_CASE("station validation") {
  ChargingStation s;
  s.station_id = "x";
  s.open_date = ymd(2020, 1, 1);
  s.l2_ports = 0;
  s.dcfc_ports = 0;
  CHECK_THROWS_AS(validate_station(s), ValidationError);
  s.l2_ports = -1;
  s.dcfc_ports = 2;
  CHECK_THROWS_AS(validate_station(s), ValidationError);
  s.l2_ports = 1;
  CHECK_NOTHROW(validate_station(s));
  s.open_date = ymd(1989, 12, 31);
  CHECK_THROWS_AS(validate_station(s), ValidationError);
}

TEST_CASE("station file errors are reported per row") {
  oracle::TempDir dir("stations");
  std::ofstream(dir / "s.csv") << "station_id,lon,lat,open_date,l2_ports,dcfc_ports\n"
                                  "a,0,0,2020-01-01,1,0\n"
                                  "b,0,0,2020-02-30,1,0\n"
                                  "c,0,0,2020-01-01,0,0\n";
  try {
    read_stations(dir / "s.csv");
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find(":3") != std::string::npos);
    CHECK(msg.find(":4") != std::string::npos);
  }
}

TEST_CASE("stations snap to the linear-scan nearest node") {
  const auto g = small_scenario(2);
  std::vector<LonLat> pts;
  for (const auto& n : g.network.nodes()) pts.push_back(n.position);
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> lon(-122.41, -122.34), lat(37.69, 37.75);
  std::vector<ChargingStation> stations(200);
  for (std::size_t i = 0; i < stations.size(); ++i) {
    stations[i].station_id = "s" + std::to_string(i);
    stations[i].position = {lon(gen), lat(gen)};
    stations[i].open_date = ymd(2020, 1, 1);
    stations[i].l2_ports = 1;
  }
  stations[0].position = g.network.nodes()[5].position;
  snap_stations(stations, g.network);
  CHECK(stations[0].node == g.network.nodes()[5].id);
  CHECK(stations[0].snap_distance_m == 0.0);
  for (const auto& s : stations) CHECK(s.node == g.network.nodes()[oracle::nearest_linear(pts, s.position)].id);
}

TEST_CASE("snapshots filter by open date and are monotone") {
  const auto g = small_scenario(3);
  Date earliest = g.stations.front().open_date, latest = earliest;
  for (const auto& s : g.stations) {
    earliest = std::min(earliest, s.open_date);
    latest = std::max(latest, s.open_date);
  }
  CHECK(build_snapshot(g.stations, sys_days(earliest) - days(1)).size() == 0);
  CHECK(build_snapshot(g.stations, latest).size() == g.stations.size());
  std::size_t previous = 0;
  for (int y = 2012; y <= 2024; ++y) {
    const auto snap = build_snapshot(g.stations, ymd(y, 12, 31));
    std::size_t expect = 0;
    for (const auto& s : g.stations) expect += s.open_date <= ymd(y, 12, 31) ? 1 : 0;
    CHECK(snap.size() == expect);
    CHECK(snap.size() >= previous);
    previous = snap.size();
  }
}

TEST_CASE("proximity table equals the all-pairs oracle and is independent of prefilter and workers") {
  for (std::uint64_t seed : {1, 7}) {
    const auto g = small_scenario(seed);
    REQUIRE(g.network.node_count() <= 500);
    const auto ap = all_pairs(g.network);
    const auto stay_nodes = all_node_ids(g.network);

    const auto table = build_proximity_table(g.network, stay_nodes, g.stations, {3000.0, true, 1});
    ProximityTableBuilder expect(3000.0, [&] {
      std::vector<std::string> ids;
      for (const auto& s : g.stations) ids.push_back(s.station_id);
      return ids;
    }());
    for (std::uint32_t k = 0; k < g.stations.size(); ++k) {
      const auto from = ap.index.at(g.stations[k].node);
      for (auto stay : stay_nodes) {
        const double d = ap.d[from][ap.index.at(stay)];
        if (d <= 3000.0) expect.add(stay, k, d);
      }
    }
    CHECK(table == std::move(expect).finish());
    CHECK(table == build_proximity_table(g.network, stay_nodes, g.stations, {3000.0, false, 1}));
    CHECK(table == build_proximity_table(g.network, stay_nodes, g.stations, {3000.0, true, 4}));

    for (auto stay : table.stay_nodes()) {
      const auto entries = table.entries_for(stay);
      for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        CHECK(e.distance_m <= 3000.0);
        CHECK(e.distance_m >= great_circle(g.network.node(stay).position,
                                           g.network.node(g.stations[e.station].node).position));
        if (i > 0) {
          const auto& p = entries[i - 1];
          CHECK((p.distance_m < e.distance_m ||
                 (p.distance_m == e.distance_m &&
                  table.station_ids()[p.station] <= table.station_ids()[e.station])));
        }
      }
    }
  }
}

TEST_CASE("proximity table boundary: network distance decides, not great-circle") {
  // Charger 2900 m away as the crow flies but 3100 m by road.
  const double deg = 2900.0 / (kEarthRadiusM * std::numbers::pi / 180.0);
  const RoadNetwork net({{1, {0, 0}}, {2, {deg, 0}}, {3, {0, 0.001}}},
                        {{2, 1, 3100, 100}, {1, 2, 3100, 100}, {3, 1, 500, 20}, {1, 3, 500, 20}});
  ChargingStation far{"far", {deg, 0}, ymd(2020, 1, 1), 1, 0, kNoNode, 0};
  ChargingStation near{"near", {0, 0.001}, ymd(2020, 1, 1), 1, 0, kNoNode, 0};
  std::vector<ChargingStation> stations{far, near};
  snap_stations(stations, net);
  const std::vector<NodeId> stays{1};
  const auto table = build_proximity_table(net, stays, stations);
  REQUIRE(table.entries_for(1).size() == 1);
  CHECK(table.entries_for(1)[0].distance_m == 500.0);
  CHECK(table.station_ids()[table.entries_for(1)[0].station] == "near");
}

TEST_CASE("ports_within: toy stop, missing node, boundary and radius") {
  const auto t = fixture::toy();
  const std::vector<NodeId> stays{1, 2, 3};
  const auto table = build_proximity_table(t.net, stays, t.stations);
  const auto snap = build_snapshot(t.stations, ymd(2024, 1, 1));
  CHECK(ports_within(table, snap, 1, 1000, PortType::L2) == 3);
  CHECK(ports_within(table, snap, 2, 1000, PortType::L2) == 0);
  CHECK(ports_within(table, snap, 3, 1000, PortType::L2) == 2);
  CHECK(ports_within(table, snap, 1, 1000, PortType::DCFC) == 0);
  CHECK(ports_within(table, snap, 12345, 1000, PortType::L2) == 0);
  CHECK(ports_within(table, snap, 1, 320, PortType::L2) == 2);  // boundary included
  CHECK(ports_within(table, snap, 1, 319.999, PortType::L2) == 1);
  CHECK(ports_within(table, build_snapshot(t.stations, ymd(2019, 1, 1)), 1, 1000, PortType::L2) == 0);
  CHECK_THROWS_AS(ports_within(table, snap, 1, 3000.5, PortType::L2), PreconditionError);
}

TEST_CASE("ports_within equals a direct scan with on-the-fly routing") {
  const auto g = small_scenario(11);
  const auto stay_nodes = all_node_ids(g.network);
  const auto table = build_proximity_table(g.network, stay_nodes, g.stations);
  std::mt19937_64 gen(12);
  for (int q = 0; q < 300; ++q) {
    const NodeId stay = stay_nodes[gen() % stay_nodes.size()];
    const double d = static_cast<double>(gen() % 3001);
    const auto type = gen() % 2 ? PortType::L2 : PortType::DCFC;
    const auto cutoff = ymd(2012 + static_cast<int>(gen() % 14), 6, 30);
    const auto snap = build_snapshot(g.stations, cutoff);
    int expect = 0;
    for (const auto& s : g.stations) {
      if (s.open_date > cutoff) continue;
      const auto reach = g.network.bounded_distance_search(s.node, 3000.0);
      auto it = reach.find(stay);
      if (it != reach.end() && it->second <= d) expect += s.ports(type);
    }
    CHECK(ports_within(table, snap, stay, d, type) == expect);
  }
}

TEST_CASE("ports_within is monotone in distance and cutoff") {
  const auto g = small_scenario(5);
  const auto stay_nodes = all_node_ids(g.network);
  const auto table = build_proximity_table(g.network, stay_nodes, g.stations);
  std::vector<Snapshot> snaps;
  for (int y = 2014; y <= 2024; y += 2) snaps.push_back(build_snapshot(g.stations, ymd(y, 12, 31)));
  for (auto stay : stay_nodes) {
    for (auto type : {PortType::L2, PortType::DCFC}) {
      for (std::size_t s = 0; s < snaps.size(); ++s) {
        int prev = 0;
        for (double d : kStandardThresholdsM) {
          const int n = ports_within(table, snaps[s], stay, d, type);
          CHECK(n >= prev);
          prev = n;
          if (s > 0) CHECK(n >= ports_within(table, snaps[s - 1], stay, d, type));
        }
      }
    }
  }
}

TEST_CASE("proximity table CSV round-trips bit-identically") {
  oracle::TempDir dir("table");
  const auto g = small_scenario(6);
  const auto table = build_proximity_table(g.network, all_node_ids(g.network), g.stations);
  write_proximity_table(table, dir / "t.csv");
  const auto back = read_proximity_table(dir / "t.csv", g.stations);
  CHECK(back == table);
  write_proximity_table(back, dir / "t2.csv");
  CHECK(read_file(dir / "t.csv") == read_file(dir / "t2.csv"));

  std::ofstream(dir / "bad.csv") << "stay_node,station_id,distance_m\n1,nope,10\n";
  CHECK_THROWS_AS(read_proximity_table(dir / "bad.csv", g.stations), Error);
}

TEST_CASE("unsnapped stations are rejected by the table builder") {
  const auto t = fixture::toy();
  auto stations = t.stations;
  stations[0].node = kNoNode;
  const std::vector<NodeId> stays{1};
  CHECK_THROWS(build_proximity_table(t.net, stays, stations));
}
