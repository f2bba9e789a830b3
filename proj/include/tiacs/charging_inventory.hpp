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

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tiacs/common.hpp"
#include "tiacs/road_network.hpp"

namespace tiacs {

inline constexpr double kProximityRadiusM = 3000.0;
inline constexpr double kDefaultThresholdM = 1000.0;
inline constexpr std::array<double, 4> kStandardThresholdsM{500.0, 1000.0, 2000.0, 3000.0};

struct ChargingStation {
  std::string station_id;
  LonLat position;
  Date open_date;
  int l2_ports = 0;
  int dcfc_ports = 0;
  NodeId node = kNoNode;  // assigned by snapping
  double snap_distance_m = 0.0;

  int ports(PortType type) const { return type == PortType::L2 ? l2_ports : dcfc_ports; }
};

/// Port counts >= 0 with at least one port, open date in [1990-01-01, 2100-01-01].
void validate_station(const ChargingStation& station);

/// Reads the station CSV without snapping. Row problems are collected and
/// reported together in one ParseError/ValidationError.
std::vector<ChargingStation> read_stations(const std::filesystem::path& path);

/// Reads the station CSV and snaps every station to its nearest network node.
std::vector<ChargingStation> load_stations(const std::filesystem::path& path, const RoadNetwork& net);

void snap_stations(std::span<ChargingStation> stations, const RoadNetwork& net);

void write_stations(const std::filesystem::path& path, std::span<const ChargingStation> stations);

// The stations open on or before a cutoff date. Port counts are held per
// inventory position so proximity-table entries index them directly.
class Snapshot {
 public:
  Snapshot() = default;

  Date cutoff() const noexcept { return cutoff_; }
  /// Inventory positions of the member stations, ascending.
  std::span<const std::uint32_t> members() const noexcept { return members_; }
  std::size_t size() const noexcept { return members_.size(); }
  std::size_t inventory_size() const noexcept { return l2_.size(); }

  int ports(std::uint32_t station, PortType type) const {
    return type == PortType::L2 ? l2_[station] : dcfc_[station];
  }

 private:
  friend Snapshot build_snapshot(std::span<const ChargingStation>, Date);

  Date cutoff_{};
  std::vector<std::uint32_t> members_;
  std::vector<int> l2_;
  std::vector<int> dcfc_;
};

Snapshot build_snapshot(std::span<const ChargingStation> inventory, Date cutoff);

struct ProximityEntry {
  std::uint32_t station;  // inventory position
  double distance_m;

  friend bool operator==(const ProximityEntry&, const ProximityEntry&) = default;
};

// Network distances between stay nodes and charger nodes within the build
// radius. Each list is sorted by (distance, station_id).
class ProximityTable {
 public:
  ProximityTable() = default;

  double radius_m() const noexcept { return radius_m_; }
  const std::vector<std::string>& station_ids() const noexcept { return station_ids_; }

  /// Entries for a stay node; empty when the node has no charger in range.
  std::span<const ProximityEntry> entries_for(NodeId stay_node) const;

  /// Stay nodes having at least one entry, ascending.
  std::vector<NodeId> stay_nodes() const;
  std::size_t entry_count() const;

  friend bool operator==(const ProximityTable&, const ProximityTable&) = default;

 private:
  friend class ProximityTableBuilder;

  double radius_m_ = kProximityRadiusM;
  std::vector<std::string> station_ids_;
  std::unordered_map<NodeId, std::vector<ProximityEntry>> entries_;
};

// Assembles a table from raw triples and applies the canonical ordering.
class ProximityTableBuilder {
 public:
  ProximityTableBuilder(double radius_m, std::vector<std::string> station_ids);

  void add(NodeId stay_node, std::uint32_t station, double distance_m);
  ProximityTable finish() &&;

 private:
  ProximityTable table_;
};

struct ProximityOptions {
  double radius_m = kProximityRadiusM;
  bool great_circle_prefilter = true;
  unsigned workers = 1;
};

/// One bounded search per charger node; stay nodes reached within the radius
/// are recorded. With the prefilter, chargers skip stay nodes whose
/// great-circle distance already exceeds the radius, and a search stops once
/// all remaining candidates are settled.
ProximityTable build_proximity_table(const RoadNetwork& net, std::span<const NodeId> stay_nodes,
                                     std::span<const ChargingStation> stations, const ProximityOptions& options = {});

/// Ports of `type` in the snapshot within distance d (inclusive) of a stay node.
/// Throws PreconditionError when d exceeds the table radius.
int ports_within(const ProximityTable& table, const Snapshot& snapshot, NodeId stay_node, double d, PortType type);

/// CSV `stay_node,station_id,distance_m`, sorted by stay node then list order.
void write_proximity_table(const ProximityTable& table, const std::filesystem::path& path);

/// Reads a persisted table; station ids are resolved against the inventory.
ProximityTable read_proximity_table(const std::filesystem::path& path, std::span<const ChargingStation> inventory,
                                    double radius_m = kProximityRadiusM);

}  // namespace tiacs
