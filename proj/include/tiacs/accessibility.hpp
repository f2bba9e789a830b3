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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tiacs/charging_inventory.hpp"
#include "tiacs/common.hpp"
#include "tiacs/trajectory.hpp"

namespace tiacs {

inline constexpr int kDayMinutes = 1440;

/// Half-open clock window [begin, end) in minutes of the day.
struct TouWindow {
  int begin = 0;
  int end = 0;

  friend bool operator==(const TouWindow&, const TouWindow&) = default;
};

struct TouPeriod {
  std::string name;
  std::vector<TouWindow> windows;

  int daily_minutes() const;
  friend bool operator==(const TouPeriod&, const TouPeriod&) = default;
};

// Named time-of-use periods that partition the 24-hour day.
class TouSchedule {
 public:
  /// Throws ValidationError unless the windows cover every minute of the day
  /// exactly once. At most 32 periods.
  explicit TouSchedule(std::vector<TouPeriod> periods);

  /// super_off_peak 9:00-14:00, off_peak 21:00-9:00 and 14:00-16:00,
  /// peak 16:00-21:00.
  static TouSchedule standard();

  /// Text form, one period per line: `name,HH:MM-HH:MM[;HH:MM-HH:MM...]`.
  static TouSchedule parse(std::string_view text);
  static TouSchedule load(const std::filesystem::path& path);

  std::size_t size() const noexcept { return periods_.size(); }
  const TouPeriod& period(std::size_t i) const { return periods_[i]; }
  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t period_at(int minute_of_day) const { return minute_period_[static_cast<std::size_t>(minute_of_day)]; }
  /// First minute after `minute_of_day` where the period changes (or 1440).
  int run_end(int minute_of_day) const { return run_end_[static_cast<std::size_t>(minute_of_day)]; }

 private:
  std::vector<TouPeriod> periods_;
  std::array<std::uint8_t, kDayMinutes> minute_period_{};
  std::array<std::int16_t, kDayMinutes> run_end_{};
};

struct TouFragment {
  int start = 0;
  int end = 0;
  std::size_t period = 0;

  friend bool operator==(const TouFragment&, const TouFragment&) = default;
};

/// Splits [start, end) into maximal runs that lie in a single period. Works
/// across midnight and over several days. Empty for end <= start.
std::vector<TouFragment> split_interval_by_tou(int start, int end, const TouSchedule& schedule);
std::vector<TouFragment> split_stay_by_tou(const Stay& stay, const TouSchedule& schedule);

inline constexpr std::uint8_t kAllKinds = 0b111;

constexpr std::uint8_t kind_bit(StayKind kind) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(kind)); }

// Which stay kinds and TOU periods a metric integrates over.
struct SegmentSpec {
  std::uint8_t kinds = kAllKinds;
  std::optional<std::uint32_t> periods;  // bit i = schedule period i; nullopt = whole day

  static SegmentSpec all() { return {}; }
  static SegmentSpec of_kind(StayKind kind) { return {kind_bit(kind), std::nullopt}; }
  static SegmentSpec of_period(std::size_t period) { return {kAllKinds, std::uint32_t{1} << period}; }

  /// Parses `kind:tou`, each side `all` or names joined by '+'. A bare
  /// kind or period name is accepted as shorthand.
  static SegmentSpec parse(std::string_view text, const TouSchedule& schedule);

  void validate(const TouSchedule& schedule) const;
  bool matches_kind(StayKind kind) const { return (kinds & kind_bit(kind)) != 0; }
  bool matches_period(std::size_t period) const { return !periods || ((*periods >> period) & 1u) != 0; }

  /// Minutes per week covered by the selected periods (10080 for all).
  int horizon_minutes(const TouSchedule& schedule) const;

  std::string kind_label() const;
  std::string tou_label(const TouSchedule& schedule) const;
  std::string label(const TouSchedule& schedule) const { return kind_label() + ":" + tou_label(schedule); }

  friend bool operator==(const SegmentSpec&, const SegmentSpec&) = default;
};

/// all, home, work, other, then each schedule period.
std::vector<SegmentSpec> standard_segments(const TouSchedule& schedule);

enum class PortsNormalization : std::uint8_t {
  Horizon,   // divide by the segment's horizon (the metric as defined)
  StayTime,  // divide by matched stay minutes (reproduces worked examples that ignore travel)
};

struct AccessResult {
  std::string person_id;
  PortType port_type = PortType::L2;
  double d_m = kDefaultThresholdM;
  Date cutoff{};
  SegmentSpec segment;
  double hours_per_day = 0.0;
  double ports_avg = 0.0;
  std::int64_t accessible_minutes = 0;  // weekly minutes with >= 1 port in range
  std::int64_t port_minutes = 0;        // weekly sum of minutes x ports

  double hours_weekly() const { return static_cast<double>(accessible_minutes) / 60.0; }
};

struct AccessQuery {
  PortType port_type = PortType::L2;
  double d_m = kDefaultThresholdM;
  SegmentSpec segment;
  PortsNormalization normalization = PortsNormalization::Horizon;
};

/// Stay-based evaluation: each matching stay fragment contributes its
/// duration to hours when at least one port is in range, and duration times
/// ports to the ports average. Travel contributes nothing.
AccessResult ti_acs(const Trajectory& traj, const ProximityTable& table, const Snapshot& snapshot,
                    const AccessQuery& query, const TouSchedule& schedule = TouSchedule::standard());

/// Minute-by-minute reference evaluation of the same quantity. O(week) per
/// call; intended for verification.
AccessResult ti_acs_oracle(const Trajectory& traj, const ProximityTable& table, const Snapshot& snapshot,
                           const AccessQuery& query, const TouSchedule& schedule = TouSchedule::standard());

struct BatchSpec {
  std::vector<PortType> port_types{PortType::L2, PortType::DCFC};
  std::vector<double> thresholds{kDefaultThresholdM};
  std::vector<SegmentSpec> segments{SegmentSpec::all()};
  PortsNormalization normalization = PortsNormalization::Horizon;
  unsigned workers = 1;
};

/// Cartesian evaluation. Output is ordered by person (input order), then
/// snapshot, port type, threshold and segment in the given order.
std::vector<AccessResult> batch_compute(std::span<const Trajectory> trajs, const ProximityTable& table,
                                        std::span<const Snapshot> snapshots, const BatchSpec& spec,
                                        const TouSchedule& schedule = TouSchedule::standard());

/// CSV `person_id,port_type,d_m,cutoff,kind_filter,tou_filter,hours_per_day,ports_avg`.
void write_results(const std::filesystem::path& path, std::span<const AccessResult> results,
                   const TouSchedule& schedule);
std::vector<AccessResult> read_results(const std::filesystem::path& path, const TouSchedule& schedule);

}  // namespace tiacs
