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

#include "tiacs/charging_inventory.hpp"

#include <algorithm>
#include <map>
#include <unordered_set>

#include "tiacs/csv.hpp"
#include "tiacs/parallel.hpp"

namespace tiacs {

namespace {

constexpr Date kEarliestOpenDate{std::chrono::year{1990}, std::chrono::January, std::chrono::day{1}};
constexpr Date kLatestOpenDate{std::chrono::year{2100}, std::chrono::January, std::chrono::day{1}};

}  // namespace

void validate_station(const ChargingStation& s) {
  if (s.l2_ports < 0 || s.dcfc_ports < 0) throw ValidationError("station " + s.station_id + ": negative port count");
  if (s.l2_ports + s.dcfc_ports < 1) throw ValidationError("station " + s.station_id + ": no ports");
  if (s.open_date < kEarliestOpenDate || s.open_date > kLatestOpenDate) {
    throw ValidationError("station " + s.station_id + ": open date " + format_date(s.open_date) +
                          " outside [1990-01-01, 2100-01-01]");
  }
  validate_coordinates(s.position);
}

std::vector<ChargingStation> read_stations(const std::filesystem::path& path) {
  csv::Reader in(path, {"station_id", "lon", "lat", "open_date", "l2_ports", "dcfc_ports"});
  std::vector<ChargingStation> out;
  std::unordered_set<std::string> seen;
  std::string errors;
  std::size_t error_count = 0;
  for (;;) {
    try {
      if (!in.next()) break;
      ChargingStation s;
      s.station_id = std::string(in[0]);
      if (s.station_id.empty()) in.fail("empty station_id");
      s.position = {in.as_double(1), in.as_double(2)};
      s.open_date = parse_date(in[3]);
      s.l2_ports = static_cast<int>(in.as_int(4));
      s.dcfc_ports = static_cast<int>(in.as_int(5));
      validate_station(s);
      if (!seen.insert(s.station_id).second) in.fail("duplicate station_id " + s.station_id);
      out.push_back(std::move(s));
    } catch (const ParseError& e) {
      errors += std::string("\n  ") + e.what();
      ++error_count;
    } catch (const ValidationError& e) {
      errors += "\n  " + path.string() + ":" + std::to_string(in.line()) + ": " + e.what();
      ++error_count;
    }
  }
  if (error_count > 0) throw ValidationError(std::to_string(error_count) + " invalid station row(s):" + errors);
  return out;
}

void snap_stations(std::span<ChargingStation> stations, const RoadNetwork& net) {
  for (auto& s : stations) {
    const auto snap = net.nearest_node(s.position);
    s.node = snap.node;
    s.snap_distance_m = snap.distance_m;
  }
}

std::vector<ChargingStation> load_stations(const std::filesystem::path& path, const RoadNetwork& net) {
  auto stations = read_stations(path);
  if (!stations.empty()) snap_stations(stations, net);
  return stations;
}

void write_stations(const std::filesystem::path& path, std::span<const ChargingStation> stations) {
  auto out = csv::open_output(path);
  out << "station_id,lon,lat,open_date,l2_ports,dcfc_ports\n";
  for (const auto& s : stations) {
    out << s.station_id << ',' << format_double(s.position.lon) << ',' << format_double(s.position.lat) << ','
        << format_date(s.open_date) << ',' << s.l2_ports << ',' << s.dcfc_ports << '\n';
  }
}

Snapshot build_snapshot(std::span<const ChargingStation> inventory, Date cutoff) {
  Snapshot snap;
  snap.cutoff_ = cutoff;
  snap.l2_.assign(inventory.size(), 0);
  snap.dcfc_.assign(inventory.size(), 0);
  for (std::uint32_t i = 0; i < inventory.size(); ++i) {
    if (inventory[i].open_date <= cutoff) {
      snap.members_.push_back(i);
      snap.l2_[i] = inventory[i].l2_ports;
      snap.dcfc_[i] = inventory[i].dcfc_ports;
    }
  }
  return snap;
}

std::span<const ProximityEntry> ProximityTable::entries_for(NodeId stay_node) const {
  auto it = entries_.find(stay_node);
  if (it == entries_.end()) return {};
  return it->second;
}

std::vector<NodeId> ProximityTable::stay_nodes() const {
  std::vector<NodeId> out;
  out.reserve(entries_.size());
  for (const auto& [node, list] : entries_) out.push_back(node);
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t ProximityTable::entry_count() const {
  std::size_t n = 0;
  for (const auto& [node, list] : entries_) n += list.size();
  return n;
}

ProximityTableBuilder::ProximityTableBuilder(double radius_m, std::vector<std::string> station_ids) {
  if (!(radius_m > 0.0)) throw PreconditionError("proximity radius must be > 0");
  table_.radius_m_ = radius_m;
  table_.station_ids_ = std::move(station_ids);
}

void ProximityTableBuilder::add(NodeId stay_node, std::uint32_t station, double distance_m) {
  table_.entries_[stay_node].push_back({station, distance_m});
}

ProximityTable ProximityTableBuilder::finish() && {
  const auto& ids = table_.station_ids_;
  for (auto& [node, list] : table_.entries_) {
    std::sort(list.begin(), list.end(), [&](const ProximityEntry& a, const ProximityEntry& b) {
      if (a.distance_m != b.distance_m) return a.distance_m < b.distance_m;
      return ids[a.station] < ids[b.station];
    });
  }
  return std::move(table_);
}

ProximityTable build_proximity_table(const RoadNetwork& net, std::span<const NodeId> stay_nodes,
                                     std::span<const ChargingStation> stations, const ProximityOptions& options) {
  std::vector<std::string> ids;
  ids.reserve(stations.size());
  // Stations sharing a node share one search.
  std::map<std::uint32_t, std::vector<std::uint32_t>> by_node;
  for (std::uint32_t i = 0; i < stations.size(); ++i) {
    const auto& s = stations[i];
    ids.push_back(s.station_id);
    if (s.node == kNoNode) throw PreconditionError("station " + s.station_id + " has no assigned node");
    const auto idx = net.index_of(s.node);
    if (!idx) throw PreconditionError("station " + s.station_id + " assigned to unknown node " + std::to_string(s.node));
    by_node[*idx].push_back(i);
  }
  ProximityTableBuilder builder(options.radius_m, std::move(ids));

  std::vector<char> stay_mark(net.node_count(), 0);
  std::vector<std::uint32_t> stay_index;
  for (auto node : stay_nodes) {
    const auto idx = net.index_of(node);
    if (!idx) throw PreconditionError("stay node " + std::to_string(node) + " is not in the network");
    if (!stay_mark[*idx]) stay_index.push_back(*idx);
    stay_mark[*idx] = 1;
  }
  std::sort(stay_index.begin(), stay_index.end());

  GeoGrid stay_grid;
  if (options.great_circle_prefilter) {
    std::vector<LonLat> positions;
    positions.reserve(stay_index.size());
    for (auto i : stay_index) positions.push_back(net.node_at(i).position);
    stay_grid = GeoGrid(positions);
  }

  std::vector<std::uint32_t> sources;
  sources.reserve(by_node.size());
  for (const auto& [node, members] : by_node) sources.push_back(node);

  std::vector<std::vector<std::pair<std::uint32_t, double>>> reached(sources.size());
  parallel_for(sources.size(), options.workers, [&](std::size_t k) {
    thread_local SearchWorkspace ws;
    thread_local std::vector<char> mark;
    std::vector<std::pair<std::uint32_t, double>> settled;
    const auto source = sources[k];
    if (options.great_circle_prefilter) {
      if (stay_grid.empty()) return;
      const auto candidates = stay_grid.within(net.node_at(source).position, options.radius_m);
      if (candidates.empty()) return;
      if (mark.size() != net.node_count()) mark.assign(net.node_count(), 0);
      for (auto c : candidates) mark[stay_index[c]] = 1;
      net.bounded_search(source, options.radius_m, ws, settled, candidates.size(), mark);
      for (const auto& [node, d] : settled) {
        if (mark[node]) reached[k].emplace_back(node, d);
      }
      for (auto c : candidates) mark[stay_index[c]] = 0;
    } else {
      net.bounded_search(source, options.radius_m, ws, settled);
      for (const auto& [node, d] : settled) {
        if (stay_mark[node]) reached[k].emplace_back(node, d);
      }
    }
  });

  for (std::size_t k = 0; k < sources.size(); ++k) {
    for (const auto& [node, d] : reached[k]) {
      for (auto station : by_node.at(sources[k])) builder.add(net.node_at(node).id, station, d);
    }
  }
  return std::move(builder).finish();
}

int ports_within(const ProximityTable& table, const Snapshot& snapshot, NodeId stay_node, double d, PortType type) {
  if (!(d >= 0.0)) throw PreconditionError("distance threshold must be >= 0");
  if (d > table.radius_m()) {
    throw PreconditionError("distance threshold " + format_double(d) + " m exceeds proximity table radius " +
                            format_double(table.radius_m()) + " m");
  }
  int total = 0;
  for (const auto& e : table.entries_for(stay_node)) {
    if (e.distance_m > d) break;
    total += snapshot.ports(e.station, type);
  }
  return total;
}

void write_proximity_table(const ProximityTable& table, const std::filesystem::path& path) {
  auto out = csv::open_output(path);
  out << "stay_node,station_id,distance_m\n";
  for (auto node : table.stay_nodes()) {
    for (const auto& e : table.entries_for(node)) {
      out << node << ',' << table.station_ids()[e.station] << ',' << format_double(e.distance_m) << '\n';
    }
  }
}

ProximityTable read_proximity_table(const std::filesystem::path& path, std::span<const ChargingStation> inventory,
                                    double radius_m) {
  std::vector<std::string> ids;
  std::unordered_map<std::string, std::uint32_t> position;
  for (std::uint32_t i = 0; i < inventory.size(); ++i) {
    ids.push_back(inventory[i].station_id);
    position.emplace(inventory[i].station_id, i);
  }
  ProximityTableBuilder builder(radius_m, std::move(ids));
  csv::Reader in(path, {"stay_node", "station_id", "distance_m"});
  while (in.next()) {
    const auto node = in.as_int(0);
    auto it = position.find(std::string(in[1]));
    if (it == position.end()) in.fail("unknown station_id " + std::string(in[1]));
    const double d = in.as_double(2);
    if (d < 0.0 || d > radius_m) in.fail("distance " + std::string(in[2]) + " outside [0, radius]");
    builder.add(node, it->second, d);
  }
  return std::move(builder).finish();
}

}  // namespace tiacs
