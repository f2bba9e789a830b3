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

#include "tiacs/geo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace tiacs {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr std::size_t kLinearScanBelow = 64;
constexpr long kMaxCells = 1L << 22;

}  // namespace

void validate_coordinates(LonLat p) {
  if (!(p.lon >= -180.0 && p.lon <= 180.0) || !(p.lat >= -90.0 && p.lat <= 90.0)) {
    throw ValidationError("coordinate out of range: lon=" + format_double(p.lon) + " lat=" + format_double(p.lat));
  }
}

double great_circle_unchecked(LonLat a, LonLat b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double s_lat = std::sin((phi2 - phi1) / 2.0);
  const double s_lon = std::sin((b.lon - a.lon) * kDegToRad / 2.0);
  const double h = s_lat * s_lat + std::cos(phi1) * std::cos(phi2) * s_lon * s_lon;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

double great_circle(LonLat a, LonLat b) {
  validate_coordinates(a);
  validate_coordinates(b);
  return great_circle_unchecked(a, b);
}

GeoGrid::GeoGrid(std::span<const LonLat> points, double cell_size_m) : points_(points.begin(), points.end()) {
  if (points_.size() < kLinearScanBelow) return;
  double lon_min = points_[0].lon, lon_max = lon_min;
  lat_min_ = lat_max_ = points_[0].lat;
  for (const auto& p : points_) {
    lon_min = std::min(lon_min, p.lon);
    lon_max = std::max(lon_max, p.lon);
    lat_min_ = std::min(lat_min_, p.lat);
    lat_max_ = std::max(lat_max_, p.lat);
  }
  // Longitude pruning below assumes no antimeridian wrap inside the extent.
  if (lon_max - lon_min > 180.0) return;
  lon_min_ = lon_min;

  const double mid_cos = std::max(std::cos((lat_min_ + lat_max_) / 2.0 * kDegToRad), 0.05);
  double cell_m = cell_size_m;
  for (;;) {
    cell_lat_deg_ = cell_m / (kEarthRadiusM * kDegToRad);
    cell_lon_deg_ = cell_lat_deg_ / mid_cos;
    rows_ = static_cast<long>(std::floor((lat_max_ - lat_min_) / cell_lat_deg_)) + 1;
    cols_ = static_cast<long>(std::floor((lon_max - lon_min_) / cell_lon_deg_)) + 1;
    if (rows_ * cols_ <= kMaxCells) break;
    cell_m *= 2.0;
  }

  const auto cells = static_cast<std::size_t>(rows_ * cols_);
  std::vector<std::uint32_t> cell_of(points_.size());
  cell_start_.assign(cells + 1, 0);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const long r = std::clamp(row_of(points_[i].lat), 0L, rows_ - 1);
    const long c = std::clamp(col_of(points_[i].lon), 0L, cols_ - 1);
    cell_of[i] = static_cast<std::uint32_t>(r * cols_ + c);
    ++cell_start_[cell_of[i] + 1];
  }
  for (std::size_t c = 0; c < cells; ++c) cell_start_[c + 1] += cell_start_[c];
  cell_items_.resize(points_.size());
  std::vector<std::uint32_t> fill(cell_start_.begin(), cell_start_.end() - 1);
  for (std::size_t i = 0; i < points_.size(); ++i) cell_items_[fill[cell_of[i]]++] = static_cast<std::uint32_t>(i);
  use_grid_ = true;
}

long GeoGrid::row_of(double lat) const { return static_cast<long>(std::floor((lat - lat_min_) / cell_lat_deg_)); }

long GeoGrid::col_of(double lon) const { return static_cast<long>(std::floor((lon - lon_min_) / cell_lon_deg_)); }

double GeoGrid::lower_bound_for_ring(long ring, double query_lat) const {
  if (ring <= 1) return 0.0;
  // A cell on Chebyshev ring r is at least r-1 whole cells away along one axis.
  // The slack term absorbs floor() rounding at cell borders.
  const double cells = static_cast<double>(ring - 1) - 1e-6;
  const double lat_bound = kEarthRadiusM * cells * cell_lat_deg_ * kDegToRad;
  const double cos_points = std::min(std::cos(lat_min_ * kDegToRad), std::cos(lat_max_ * kDegToRad));
  const double cos_query = std::cos(query_lat * kDegToRad);
  const double scale = std::sqrt(std::max(0.0, cos_points * cos_query));
  const double half_dlon = std::min(std::numbers::pi, cells * cell_lon_deg_ * kDegToRad) / 2.0;
  const double lon_bound = 2.0 * kEarthRadiusM * std::asin(std::min(1.0, scale * std::sin(half_dlon)));
  return std::min(lat_bound, lon_bound) * (1.0 - 1e-9);
}

GeoGrid::Hit GeoGrid::nearest(LonLat query, std::span<const std::int64_t> rank) const {
  if (points_.empty()) throw PreconditionError("nearest-point query on an empty point set");
  auto key = [&](std::uint32_t i) -> std::int64_t { return rank.empty() ? i : rank[i]; };
  Hit best{0, std::numeric_limits<double>::infinity()};
  bool found = false;
  auto consider = [&](std::uint32_t i) {
    const double d = great_circle_unchecked(query, points_[i]);
    if (!found || d < best.distance_m || (d == best.distance_m && key(i) < key(best.index))) {
      best = {i, d};
      found = true;
    }
  };

  if (!use_grid_) {
    for (std::uint32_t i = 0; i < points_.size(); ++i) consider(i);
    return best;
  }

  const long qr = row_of(query.lat);
  const long qc = col_of(query.lon);
  const long max_ring = std::max({std::labs(qr), std::labs(qr - (rows_ - 1)), std::labs(qc), std::labs(qc - (cols_ - 1))});
  for (long ring = 0; ring <= max_ring; ++ring) {
    if (found && lower_bound_for_ring(ring, query.lat) > best.distance_m) break;
    for (long r = std::max(0L, qr - ring); r <= std::min(rows_ - 1, qr + ring); ++r) {
      const bool full_row = std::labs(r - qr) == ring;
      const long step = full_row ? 1 : std::max(1L, 2 * ring);
      for (long c = qc - ring; c <= qc + ring; c += step) {
        if (c < 0 || c >= cols_) continue;
        const auto cell = static_cast<std::size_t>(r * cols_ + c);
        for (auto k = cell_start_[cell]; k < cell_start_[cell + 1]; ++k) consider(cell_items_[k]);
      }
    }
  }
  return best;
}

std::vector<std::uint32_t> GeoGrid::within(LonLat query, double radius_m) const {
  std::vector<std::uint32_t> out;
  if (!use_grid_) {
    for (std::uint32_t i = 0; i < points_.size(); ++i) {
      if (great_circle_unchecked(query, points_[i]) <= radius_m) out.push_back(i);
    }
    return out;
  }
  const long qr = row_of(query.lat);
  const long qc = col_of(query.lon);
  const long max_ring = std::max({std::labs(qr), std::labs(qr - (rows_ - 1)), std::labs(qc), std::labs(qc - (cols_ - 1))});
  for (long ring = 0; ring <= max_ring; ++ring) {
    if (lower_bound_for_ring(ring, query.lat) > radius_m) break;
    for (long r = std::max(0L, qr - ring); r <= std::min(rows_ - 1, qr + ring); ++r) {
      const bool full_row = std::labs(r - qr) == ring;
      const long step = full_row ? 1 : std::max(1L, 2 * ring);
      for (long c = qc - ring; c <= qc + ring; c += step) {
        if (c < 0 || c >= cols_) continue;
        const auto cell = static_cast<std::size_t>(r * cols_ + c);
        for (auto k = cell_start_[cell]; k < cell_start_[cell + 1]; ++k) {
          const auto i = cell_items_[k];
          if (great_circle_unchecked(query, points_[i]) <= radius_m) out.push_back(i);
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace tiacs
