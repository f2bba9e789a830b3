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
#include <span>
#include <vector>

#include "tiacs/common.hpp"

namespace tiacs {

inline constexpr double kEarthRadiusM = 6'371'000.0;

/// Haversine distance in meters on a sphere of radius kEarthRadiusM.
/// Throws ValidationError for lon outside [-180, 180] or lat outside [-90, 90].
double great_circle(LonLat a, LonLat b);

/// Same as great_circle without the range checks; for inner loops over
/// coordinates that were validated on load.
double great_circle_unchecked(LonLat a, LonLat b);

void validate_coordinates(LonLat p);

// Uniform lon/lat bucket grid over a fixed point set. Queries are exact:
// the grid only prunes cells whose great-circle lower bound already exceeds
// the best (or requested) distance, so results match a linear scan.
class GeoGrid {
 public:
  GeoGrid() = default;
  explicit GeoGrid(std::span<const LonLat> points, double cell_size_m = 1000.0);

  bool empty() const noexcept { return points_.empty(); }

  struct Hit {
    std::uint32_t index;
    double distance_m;
  };

  /// Nearest point; ties go to the smaller `rank[index]` (rank defaults to
  /// the index itself when empty).
  Hit nearest(LonLat query, std::span<const std::int64_t> rank = {}) const;

  /// Every point with great-circle distance <= radius_m, ascending by index.
  std::vector<std::uint32_t> within(LonLat query, double radius_m) const;

 private:
  struct CellRange {
    long row_lo, row_hi, col_lo, col_hi;
  };

  double lower_bound_for_ring(long ring, double query_lat) const;
  long row_of(double lat) const;
  long col_of(double lon) const;

  std::vector<LonLat> points_;
  bool use_grid_ = false;
  double lat_min_ = 0, lon_min_ = 0, lat_max_ = 0;
  double cell_lat_deg_ = 1, cell_lon_deg_ = 1;
  long rows_ = 0, cols_ = 0;
  std::vector<std::uint32_t> cell_start_;  // CSR over cells, size rows*cols + 1
  std::vector<std::uint32_t> cell_items_;
};

}  // namespace tiacs
