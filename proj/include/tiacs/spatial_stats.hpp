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

#include <Eigen/Dense>

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tiacs/accessibility.hpp"
#include "tiacs/common.hpp"

namespace tiacs {

using Ring = std::vector<LonLat>;
using Polygon = std::vector<Ring>;  // outer ring first, then holes

struct TractRecord {
  std::string geoid;
  std::vector<Polygon> polygons;  // several parts for multi-polygon tracts
  double population = 0.0;
  double pct_hispanic = 0.0;
  double pct_white = 0.0;
  double pct_black = 0.0;
  double pct_asian = 0.0;
  double median_income = 0.0;  // <= 0 or NaN means missing
  double pct_mud = 0.0;
};

/// Closed rings with >= 4 vertices, percentages within [0, 100].
void validate_tract(const TractRecord& tract);

/// GeoJSON FeatureCollection of Polygon/MultiPolygon features with
/// properties geoid, population, pct_hispanic, pct_white, pct_black,
/// pct_asian, median_income, pct_mud. A null median_income reads as missing.
std::vector<TractRecord> load_tracts(const std::filesystem::path& path);
void write_tracts(const std::filesystem::path& path, std::span<const TractRecord> tracts);

/// Even-odd containment over all rings of the tract.
bool tract_contains(const TractRecord& tract, LonLat p);
/// True when p lies exactly on one of the tract's ring edges.
bool tract_boundary_contains(const TractRecord& tract, LonLat p);

// Point-to-tract lookup. Interior points belong to the containing tract;
// boundary points to the smallest geoid among the touching tracts.
class TractIndex {
 public:
  explicit TractIndex(std::span<const TractRecord> tracts);

  std::optional<std::string> assign(LonLat p) const;

 private:
  struct Box {
    double lon_min, lon_max, lat_min, lat_max;
  };
  std::vector<const TractRecord*> by_geoid_;
  std::vector<Box> boxes_;
};

std::optional<std::string> assign_tract(LonLat p, std::span<const TractRecord> tracts);

// Identifies one metric series: port type, threshold, snapshot, segment.
struct MetricKey {
  PortType port_type = PortType::L2;
  double d_m = kDefaultThresholdM;
  Date cutoff{};
  std::string kind_filter = "all";
  std::string tou_filter = "all";

  friend auto operator<=>(const MetricKey&, const MetricKey&) = default;
  friend bool operator==(const MetricKey&, const MetricKey&) = default;
};

MetricKey key_of(const AccessResult& result, const TouSchedule& schedule);

struct TractStats {
  std::string geoid;
  MetricKey key;
  std::size_t n_residents = 0;
  double mean_hours = 0.0;
  double mean_ports = 0.0;
};

struct AggregationReport {
  std::size_t unassigned_persons = 0;
};

/// Arithmetic mean per (tract, metric) over residents whose home tract is
/// known. Output sorted by geoid, then key.
std::vector<TractStats> aggregate_by_tract(std::span<const AccessResult> results,
                                           const std::map<std::string, std::string>& home_tract,
                                           const TouSchedule& schedule, AggregationReport* report = nullptr);

/// CSV `geoid,n,mean_hours,mean_ports,port_type,d_m,cutoff,kind_filter,tou_filter`.
void write_tract_stats(const std::filesystem::path& path, std::span<const TractStats> stats);
std::vector<TractStats> read_tract_stats(const std::filesystem::path& path);

/// Gini index of nonnegative values (0 when all are zero).
double gini(std::span<const double> values);

/// Type-7 quantile (linear interpolation between order statistics) of an
/// ascending-sorted sample.
double quantile_sorted(std::span<const double> sorted, double p);

struct DistributionStats {
  std::size_t n = 0;
  double mean = 0.0;
  double weighted_mean = 0.0;  // equals mean when no weights are given
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  std::vector<std::pair<double, double>> cdf;  // (value, cumulative fraction), ascending
};

DistributionStats distribution_stats(std::span<const double> values, std::span<const double> weights = {});

enum class Group : std::uint8_t { White, Black, Asian, Hispanic };

std::string_view to_string(Group group);
inline constexpr std::array<Group, 4> kGroups{Group::White, Group::Black, Group::Asian, Group::Hispanic};

/// Group with the strictly largest share when that share is >= 40%.
std::optional<Group> dominant_group(const TractRecord& tract);

/// Tracts where more than half of households live in 2+ unit structures.
std::vector<TractRecord> mud_filter(std::span<const TractRecord> tracts);

struct RegressionResult {
  std::vector<std::string> terms;
  std::vector<double> beta;
  std::vector<double> se;
  std::vector<double> ci_lo;
  std::vector<double> ci_hi;
  std::vector<double> p_value;
  std::vector<bool> significant;  // p < 0.05, two-sided
  std::size_t n = 0;
  double rss = 0.0;
  double r_squared = 0.0;

  double coefficient(std::string_view term) const;
};

/// Ordinary least squares with classic standard errors and Student-t 95%
/// intervals on n - p degrees of freedom. Throws ValidationError when
/// n <= p or X is rank deficient (the message names the dependent columns).
RegressionResult ols_fit(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, std::vector<std::string> names = {});

enum class Metric : std::uint8_t { Hours, Ports };

struct DisparityReport {
  std::size_t used = 0;
  std::size_t dropped_missing_income = 0;
  std::size_t dropped_no_residents = 0;
};

/// Regresses tract means on dominant-group indicators (tracts with no
/// dominant group are the reference class) and (log income)^k for
/// k = 1..income_degree. `stats` must hold a single metric series.
RegressionResult disparity_regression(std::span<const TractStats> stats, std::span<const TractRecord> tracts,
                                      int income_degree, Metric metric = Metric::Hours,
                                      DisparityReport* report = nullptr);

/// CSV `term,beta,se,ci_lo,ci_hi,p`.
void write_regression(const std::filesystem::path& path, const RegressionResult& result);

}  // namespace tiacs
