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

// Slow, obviously-correct reference implementations used only by tests.
// None of them call into the library's algorithms.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tiacs/common.hpp"

namespace oracle {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Great-circle distance via the spherical law of cosines in long double
/// (a different formula from the library's haversine).
inline double great_circle(tiacs::LonLat a, tiacs::LonLat b) {
  constexpr long double r = 6371000.0L;
  const long double k = std::numbers::pi_v<long double> / 180.0L;
  const long double p1 = a.lat * k, p2 = b.lat * k, dl = (b.lon - a.lon) * k;
  long double c = std::sin(p1) * std::sin(p2) + std::cos(p1) * std::cos(p2) * std::cos(dl);
  c = std::clamp(c, -1.0L, 1.0L);
  return static_cast<double>(r * std::acos(c));
}

struct SimpleEdge {
  std::size_t from;
  std::size_t to;
  double weight;
};

/// Single-source shortest paths by Bellman-Ford relaxation.
inline std::vector<double> bellman_ford(std::size_t n, const std::vector<SimpleEdge>& edges, std::size_t source) {
  std::vector<double> dist(n, kInf);
  dist[source] = 0.0;
  for (std::size_t round = 0; round + 1 < n; ++round) {
    bool changed = false;
    for (const auto& e : edges) {
      if (dist[e.from] + e.weight < dist[e.to]) {
        dist[e.to] = dist[e.from] + e.weight;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return dist;
}

/// All-pairs shortest paths by Floyd-Warshall.
inline std::vector<std::vector<double>> floyd_warshall(std::size_t n, const std::vector<SimpleEdge>& edges) {
  std::vector<std::vector<double>> d(n, std::vector<double>(n, kInf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0.0;
  for (const auto& e : edges) d[e.from][e.to] = std::min(d[e.from][e.to], e.weight);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      if (d[i][k] == kInf) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
      }
    }
  }
  return d;
}

/// Index of the nearest point, smallest index on ties.
inline std::size_t nearest_linear(const std::vector<tiacs::LonLat>& pts, tiacs::LonLat q) {
  std::size_t best = 0;
  double best_d = kInf;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d = great_circle(pts[i], q);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

/// Winding number of a closed ring around p; nonzero means inside.
inline int winding_number(const std::vector<tiacs::LonLat>& ring, tiacs::LonLat p) {
  int wn = 0;
  auto is_left = [](tiacs::LonLat a, tiacs::LonLat b, tiacs::LonLat c) {
    return (b.lon - a.lon) * (c.lat - a.lat) - (c.lon - a.lon) * (b.lat - a.lat);
  };
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const auto& a = ring[i];
    const auto& b = ring[i + 1];
    if (a.lat <= p.lat) {
      if (b.lat > p.lat && is_left(a, b, p) > 0) ++wn;
    } else {
      if (b.lat <= p.lat && is_left(a, b, p) < 0) --wn;
    }
  }
  return wn;
}

/// Gini as mean absolute difference over twice the mean.
inline double gini_mad(const std::vector<double>& x) {
  const auto n = static_cast<long double>(x.size());
  long double sum = 0.0L, mad = 0.0L;
  for (double a : x) {
    sum += a;
    for (double b : x) mad += std::fabs(static_cast<long double>(a) - b);
  }
  if (sum == 0.0L) return 0.0;
  return static_cast<double>(mad / (2.0L * n * sum));
}

/// OLS coefficients from the normal equations X'X b = X'y, solved by
/// Gauss-Jordan elimination with partial pivoting in long double.
inline std::vector<double> ols_normal(const std::vector<std::vector<double>>& X, const std::vector<double>& y) {
  const std::size_t n = X.size(), p = X.front().size();
  std::vector<std::vector<long double>> a(p, std::vector<long double>(p + 1, 0.0L));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < p; ++r) {
      for (std::size_t c = 0; c < p; ++c) a[r][c] += static_cast<long double>(X[i][r]) * X[i][c];
      a[r][p] += static_cast<long double>(X[i][r]) * y[i];
    }
  }
  for (std::size_t col = 0; col < p; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < p; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    }
    std::swap(a[col], a[piv]);
    for (std::size_t r = 0; r < p; ++r) {
      if (r == col) continue;
      const long double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= p; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::vector<double> beta(p);
  for (std::size_t r = 0; r < p; ++r) beta[r] = static_cast<double>(a[r][p] / a[r][r]);
  return beta;
}

/// Mean per group key, in key order.
template <class Key>
std::map<Key, std::pair<std::size_t, double>> group_mean(const std::vector<std::pair<Key, double>>& rows) {
  std::map<Key, std::pair<std::size_t, double>> acc;
  for (const auto& [k, v] : rows) {
    acc[k].first += 1;
    acc[k].second += v;
  }
  for (auto& [k, v] : acc) v.second /= static_cast<double>(v.first);
  return acc;
}

/// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 gen(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("tiacs_" + tag + "_" + std::to_string(gen()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace oracle
