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
#include <vector>

#include "tiacs/accessibility.hpp"
#include "tiacs/charging_inventory.hpp"
#include "tiacs/common.hpp"
#include "tiacs/road_network.hpp"
#include "tiacs/spatial_stats.hpp"
#include "tiacs/trajectory.hpp"

namespace tiacs {

// Parameters of a synthetic study area. Everything is derived from `seed`.
struct SyntheticScenario {
  int grid_rows = 40;
  int grid_cols = 40;
  double edge_length_m = 250.0;
  double speed_kmh = 30.0;
  double origin_lon = -122.40;
  double origin_lat = 37.70;
  int island_count = 2;  // small disconnected 3x3 grids east of the main grid

  std::size_t station_count = 60;
  Date open_from{std::chrono::year{2012}, std::chrono::month{1}, std::chrono::day{1}};
  Date open_to{std::chrono::year{2024}, std::chrono::month{6}, std::chrono::day{30}};
  double dcfc_fraction = 0.25;

  std::size_t person_count = 200;
  double non_commuter_fraction = 0.4;
  std::vector<double> other_stops_per_day{0.35, 0.35, 0.2, 0.1};  // P(k other stops), k = 0, 1, ...
  double activity_radius_m = 4000.0;  // other stops and work lie within this distance of home
  double long_travel_fraction = 0.0;  // other stops placed far away with a short dwell

  int tract_rows = 6;
  int tract_cols = 6;
  double missing_income_fraction = 0.0;

  std::uint64_t seed = 1;

  /// Throws ValidationError on infeasible parameters.
  void validate() const;
};

struct GeneratedScenario {
  RoadNetwork network;
  std::vector<ChargingStation> stations;
  std::vector<PersonRecord> persons;
  std::vector<TractRecord> tracts;
};

GeneratedScenario generate_scenario(const SyntheticScenario& scn);

// File names inside a scenario directory.
struct ScenarioFiles {
  std::filesystem::path nodes;
  std::filesystem::path edges;
  std::filesystem::path stations;
  std::filesystem::path trajectories;
  std::filesystem::path tracts;

  static ScenarioFiles in(const std::filesystem::path& dir);
};

void write_scenario(const GeneratedScenario& scenario, const std::filesystem::path& dir);

/// generate_scenario followed by write_scenario.
ScenarioFiles synth(const SyntheticScenario& scn, const std::filesystem::path& dir);

/// Reads either trajectory format, telling them apart by header. Raw stays
/// are snapped, routed and repaired; processed ones are checked against the
/// network and repaired (a no-op on already repaired input).
std::vector<Trajectory> load_trajectories(const std::filesystem::path& path, const RoadNetwork& net,
                                          unsigned workers = 1, RoutingReport* routing = nullptr,
                                          RepairReport* repair = nullptr);

/// Distinct stay nodes across all trajectories, ascending.
std::vector<NodeId> stay_nodes_of(std::span<const Trajectory> trajs);

/// Home tract per person; persons whose home lies outside every tract are omitted.
std::map<std::string, std::string> home_tracts(std::span<const Trajectory> trajs,
                                               std::span<const TractRecord> tracts);

/// Distribution of tract means for one metric series.
struct SummaryRow {
  MetricKey key;
  Metric metric = Metric::Hours;
  DistributionStats dist;  // weighted_mean uses tract population
  double gini = 0.0;
};

std::vector<SummaryRow> summarize(std::span<const TractStats> stats, std::span<const TractRecord> tracts);

/// CSV `port_type,d_m,cutoff,kind_filter,tou_filter,metric,n_tracts,mean,weighted_mean,q25,median,q75,gini`.
void write_summary(const std::filesystem::path& path, std::span<const SummaryRow> rows);

/// Regression fits of one run, labelled by series and tract subset.
struct NamedRegression {
  std::string port_type;
  std::string metric;
  std::string subset;  // "all" or "mud"
  RegressionResult result;
};

/// Writes choropleth.csv, breakdown.csv, gini_trend.csv, cdf_<group>.csv and
/// regression.csv into `dir`. Returns the written paths.
std::vector<std::filesystem::path> emit_plot_data(std::span<const TractStats> stats,
                                                  std::span<const TractRecord> tracts,
                                                  std::span<const NamedRegression> regressions,
                                                  const std::filesystem::path& dir);

struct RunConfig {
  std::filesystem::path nodes_csv;
  std::filesystem::path edges_csv;
  std::filesystem::path stations_csv;
  std::filesystem::path trajectories_csv;
  std::optional<std::filesystem::path> tracts_geojson;
  std::filesystem::path output_dir;
  std::optional<std::filesystem::path> table_cache;  // proximity table reused across runs
  std::optional<std::filesystem::path> tou_schedule;

  std::vector<Date> cutoffs;  // empty: one snapshot holding every station
  std::vector<double> thresholds{kDefaultThresholdM};
  bool allow_custom_threshold = false;
  double radius_m = kProximityRadiusM;
  std::vector<PortType> port_types{PortType::L2, PortType::DCFC};
  std::vector<std::string> segments;  // `kind:tou`; empty: the standard seven
  PortsNormalization normalization = PortsNormalization::Horizon;

  bool regression = true;
  bool regression_mud = true;
  int income_degree = 1;
  bool plot_data = true;
  unsigned workers = 1;

  /// Throws ValidationError on inconsistent settings.
  void validate() const;
};

/// Raised by run_pipeline; names the failing stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& cause, bool validation)
      : Error("stage '" + stage + "' failed: " + cause), stage_(std::move(stage)), validation_(validation) {}

  const std::string& stage() const noexcept { return stage_; }
  /// True when the cause was invalid input rather than an internal failure.
  bool validation() const noexcept { return validation_; }

 private:
  std::string stage_;
  bool validation_;
};

struct RunSummary {
  std::vector<std::filesystem::path> outputs;  // relative to output_dir, sorted
  std::map<std::string, std::string> hashes;   // output -> sha256
  std::filesystem::path manifest;
  bool table_from_cache = false;
  RoutingReport routing;
  RepairReport repair;
  std::size_t persons = 0;
  std::size_t results = 0;
};

/// load, snapshots, proximity table, route+repair, batch evaluation, tract
/// aggregation, summary statistics, regression and plot data. Outputs are
/// staged and moved into output_dir only after every stage succeeded.
RunSummary run_pipeline(const RunConfig& cfg);

/// Fast path and minute-by-minute reference compared on a person sample.
struct VerifyReport {
  std::size_t persons = 0;
  std::size_t comparisons = 0;
  std::vector<std::string> mismatches;
};

VerifyReport verify_sample(std::span<const Trajectory> trajs, const ProximityTable& table,
                           std::span<const Snapshot> snapshots, std::span<const double> thresholds,
                           std::size_t sample_size, const TouSchedule& schedule = TouSchedule::standard());

}  // namespace tiacs
