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

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tiacs/common.hpp"
#include "tiacs/road_network.hpp"

namespace tiacs {

inline constexpr int kSlotsPerWeek = 1008;
inline constexpr int kSlotMinutes = 10;
inline constexpr int kWeekMinutes = 10080;
inline constexpr int kMinStayMinutes = 5;
inline constexpr int kTravelBufferMinutes = 6;
inline constexpr int kRepairStepMinutes = 5;
inline constexpr int kMaxRepairPasses = 10;

/// A stop as emitted by the mobility simulator: a 10-minute slot index in
/// 1..1008 marking the departure toward this stop.
struct RawStay {
  int slot = 1;
  StayKind kind = StayKind::Home;
  LonLat position;
  NodeId node = kNoNode;
  double snap_distance_m = 0.0;

  friend bool operator==(const RawStay&, const RawStay&) = default;
};

struct PersonRecord {
  std::string person_id;
  std::vector<RawStay> stays;

  friend bool operator==(const PersonRecord&, const PersonRecord&) = default;
};

/// Reads `person_id,slot,kind,lon,lat`, snaps each stay to the network and
/// returns persons sorted by person_id. Slots must strictly increase per
/// person in file order.
std::vector<PersonRecord> ingest_raw(const std::filesystem::path& path, const RoadNetwork& net);

/// Snaps every stay of every person to its nearest network node.
void snap_persons(std::span<PersonRecord> persons, const RoadNetwork& net);

void write_raw(const std::filesystem::path& path, std::span<const PersonRecord> persons);

struct Stay {
  int start = 0;  // minutes since the start of the week; may be > end before repair
  int end = 0;
  StayKind kind = StayKind::Home;
  NodeId node = kNoNode;
  LonLat position;

  int duration() const noexcept { return end - start; }

  friend bool operator==(const Stay&, const Stay&) = default;
};

struct Trajectory {
  std::string person_id;
  LonLat home;
  std::vector<Stay> stays;
  std::vector<int> travel;  // travel[k] = minutes between stays k and k+1

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Empty when the trajectory satisfies its structural invariants; otherwise
/// one message per violation. With `repaired`, also requires every stay to
/// last at least kMinStayMinutes.
std::vector<std::string> check_trajectory(const Trajectory& traj, bool repaired);

/// One trip between consecutive stays.
struct TripLeg {
  std::optional<Route> route;  // fastest route, absent when disconnected
  double great_circle_m = 0.0;
};

std::vector<TripLeg> route_legs(const RoadNetwork& net, const PersonRecord& person, SearchWorkspace& ws);

/// Run-level statistics for trips the network cannot route.
struct FallbackModel {
  double median_speed_mps = 30.0 / 3.6;
  double detour_factor = 1.3;

  /// Medians of length/time and length/great-circle over routed legs.
  static FallbackModel fit(std::span<const TripLeg> legs);
};

/// Routed (or fallback) seconds rounded half-up to whole minutes, plus the
/// fixed parking buffer.
int travel_minutes(const TripLeg& leg, const FallbackModel& fallback);

/// Timeline before repair: stay k starts at the departure slot of stay k
/// plus the preceding travel time (the first stay starts at 0) and ends at
/// the next stay's departure slot (the last stay ends at the week's end).
Trajectory assemble_trajectory(const PersonRecord& person, std::span<const TripLeg> legs,
                               const FallbackModel& fallback);

struct RoutingReport {
  std::size_t trips = 0;
  std::size_t routed = 0;
  std::size_t fallback = 0;
  FallbackModel model;
};

/// Routes every person's trips in parallel, fits the fallback model over the
/// whole run, then assembles trajectories in person order.
std::vector<Trajectory> route_travel(const RoadNetwork& net, std::span<const PersonRecord> persons,
                                     unsigned workers = 1, RoutingReport* report = nullptr);

struct RepairReport {
  std::size_t deficient = 0;             // stays shorter than 5 min on input
  std::size_t resolved_by_donation = 0;  // fixed by neighbor time within the passes
  std::size_t resolved_by_travel = 0;    // fixed by shortening adjacent travel
  std::size_t resolved_by_cascade = 0;   // needed slack from further away
  std::size_t advance_steps = 0;
  std::size_t delay_steps = 0;
  std::size_t passes = 0;

  RepairReport& operator+=(const RepairReport& other);
  double donation_fraction() const;
};

/// Resolves stays shorter than 5 minutes: up to 10 chronological passes
/// moving 5 minutes from the previous stay (preferred) or the next stay when
/// the donor keeps at least 5 minutes; then shortens adjacent travel; then
/// borrows slack from the nearest segments. Throws ValidationError when the
/// week cannot hold 5 minutes per stay.
Trajectory repair_stays(const Trajectory& traj, RepairReport* report = nullptr);

/// Processed CSV `person_id,start_min,end_min,kind,node_id,lon,lat`.
void write_trajectories(const std::filesystem::path& path, std::span<const Trajectory> trajs);

/// Travel times are recovered from the gaps between stays.
std::vector<Trajectory> read_trajectories(const std::filesystem::path& path);

}  // namespace tiacs
