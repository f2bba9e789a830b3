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

#include "tiacs/spatial_stats.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "tiacs/csv.hpp"

namespace tiacs {

using nlohmann::json;

namespace {

void check_percentage(const TractRecord& t, const char* name, double v) {
  if (!(v >= 0.0 && v <= 100.0)) {
    throw ValidationError("tract " + t.geoid + ": " + name + " = " + format_double(v) + " outside [0, 100]");
  }
}

bool on_segment(LonLat a, LonLat b, LonLat p) {
  const double cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
  if (cross != 0.0) return false;
  return p.lon >= std::min(a.lon, b.lon) && p.lon <= std::max(a.lon, b.lon) && p.lat >= std::min(a.lat, b.lat) &&
         p.lat <= std::max(a.lat, b.lat);
}

Ring parse_ring(const json& coords, const std::string& geoid) {
  Ring ring;
  for (const auto& pt : coords) {
    if (!pt.is_array() || pt.size() < 2) throw ValidationError("tract " + geoid + ": malformed coordinate");
    ring.push_back({pt[0].get<double>(), pt[1].get<double>()});
  }
  return ring;
}

Polygon parse_polygon(const json& coords, const std::string& geoid) {
  Polygon poly;
  for (const auto& ring : coords) poly.push_back(parse_ring(ring, geoid));
  return poly;
}

double number_or_nan(const json& props, const char* key, const std::string& geoid) {
  if (!props.contains(key)) throw ValidationError("tract " + geoid + ": missing property " + key);
  const auto& v = props.at(key);
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!v.is_number()) throw ValidationError("tract " + geoid + ": property " + key + " is not a number");
  return v.get<double>();
}

json ring_json(const Ring& ring) {
  json out = json::array();
  for (const auto& p : ring) out.push_back({p.lon, p.lat});
  return out;
}

double median_of_sorted(std::span<const double> sorted) { return quantile_sorted(sorted, 0.5); }

}  // namespace

void validate_tract(const TractRecord& t) {
  if (t.geoid.empty()) throw ValidationError("tract with empty geoid");
  if (t.polygons.empty()) throw ValidationError("tract " + t.geoid + ": no geometry");
  for (const auto& poly : t.polygons) {
    if (poly.empty()) throw ValidationError("tract " + t.geoid + ": polygon without rings");
    for (const auto& ring : poly) {
      if (ring.size() < 4) throw ValidationError("tract " + t.geoid + ": ring with fewer than 4 vertices");
      if (!(ring.front() == ring.back())) throw ValidationError("tract " + t.geoid + ": ring is not closed");
    }
  }
  if (!(t.population >= 0.0)) throw ValidationError("tract " + t.geoid + ": negative population");
  check_percentage(t, "pct_hispanic", t.pct_hispanic);
  check_percentage(t, "pct_white", t.pct_white);
  check_percentage(t, "pct_black", t.pct_black);
  check_percentage(t, "pct_asian", t.pct_asian);
  check_percentage(t, "pct_mud", t.pct_mud);
}

std::vector<TractRecord> load_tracts(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": invalid JSON: " + e.what());
  }
  if (doc.value("type", "") != "FeatureCollection" || !doc.contains("features")) {
    throw ValidationError(path.string() + ": expected a GeoJSON FeatureCollection");
  }
  std::vector<TractRecord> out;
  try {
    for (const auto& feature : doc.at("features")) {
      const auto& props = feature.at("properties");
      TractRecord t;
      const auto& id = props.at("geoid");
      t.geoid = id.is_string() ? id.get<std::string>() : id.dump();
      t.population = number_or_nan(props, "population", t.geoid);
      t.pct_hispanic = number_or_nan(props, "pct_hispanic", t.geoid);
      t.pct_white = number_or_nan(props, "pct_white", t.geoid);
      t.pct_black = number_or_nan(props, "pct_black", t.geoid);
      t.pct_asian = number_or_nan(props, "pct_asian", t.geoid);
      t.median_income = number_or_nan(props, "median_income", t.geoid);
      t.pct_mud = number_or_nan(props, "pct_mud", t.geoid);
      const auto& geom = feature.at("geometry");
      const auto type = geom.at("type").get<std::string>();
      if (type == "Polygon") {
        t.polygons.push_back(parse_polygon(geom.at("coordinates"), t.geoid));
      } else if (type == "MultiPolygon") {
        for (const auto& poly : geom.at("coordinates")) t.polygons.push_back(parse_polygon(poly, t.geoid));
      } else {
        throw ValidationError("tract " + t.geoid + ": unsupported geometry " + type);
      }
      validate_tract(t);
      out.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": malformed tract feature: " + e.what());
  }
  return out;
}

void write_tracts(const std::filesystem::path& path, std::span<const TractRecord> tracts) {
  json features = json::array();
  for (const auto& t : tracts) {
    json coords = json::array();
    for (const auto& poly : t.polygons) {
      json rings = json::array();
      for (const auto& ring : poly) rings.push_back(ring_json(ring));
      coords.push_back(rings);
    }
    json geometry = t.polygons.size() == 1 ? json{{"type", "Polygon"}, {"coordinates", coords[0]}}
                                           : json{{"type", "MultiPolygon"}, {"coordinates", coords}};
    json props = {{"geoid", t.geoid},           {"population", t.population}, {"pct_hispanic", t.pct_hispanic},
                  {"pct_white", t.pct_white},   {"pct_black", t.pct_black},   {"pct_asian", t.pct_asian},
                  {"pct_mud", t.pct_mud}};
    props["median_income"] = std::isfinite(t.median_income) ? json(t.median_income) : json(nullptr);
    features.push_back({{"type", "Feature"}, {"properties", props}, {"geometry", geometry}});
  }
  auto out = csv::open_output(path);
  out << json{{"type", "FeatureCollection"}, {"features", features}}.dump() << '\n';
}

bool tract_contains(const TractRecord& tract, LonLat p) {
  bool inside = false;
  for (const auto& poly : tract.polygons) {
    for (const auto& ring : poly) {
      for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
        const auto& a = ring[i];
        const auto& b = ring[j];
        if ((a.lat > p.lat) != (b.lat > p.lat) &&
            p.lon < (b.lon - a.lon) * (p.lat - a.lat) / (b.lat - a.lat) + a.lon) {
          inside = !inside;
        }
      }
    }
  }
  return inside;
}

bool tract_boundary_contains(const TractRecord& tract, LonLat p) {
  for (const auto& poly : tract.polygons) {
    for (const auto& ring : poly) {
      for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        if (on_segment(ring[i], ring[i + 1], p)) return true;
      }
    }
  }
  return false;
}

TractIndex::TractIndex(std::span<const TractRecord> tracts) {
  for (const auto& t : tracts) by_geoid_.push_back(&t);
  std::sort(by_geoid_.begin(), by_geoid_.end(), [](auto* a, auto* b) { return a->geoid < b->geoid; });
  for (const auto* t : by_geoid_) {
    Box box{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& poly : t->polygons) {
      for (const auto& p : poly.front()) {
        box.lon_min = std::min(box.lon_min, p.lon);
        box.lon_max = std::max(box.lon_max, p.lon);
        box.lat_min = std::min(box.lat_min, p.lat);
        box.lat_max = std::max(box.lat_max, p.lat);
      }
    }
    boxes_.push_back(box);
  }
}

std::optional<std::string> TractIndex::assign(LonLat p) const {
  for (std::size_t i = 0; i < by_geoid_.size(); ++i) {
    const auto& b = boxes_[i];
    if (p.lon < b.lon_min || p.lon > b.lon_max || p.lat < b.lat_min || p.lat > b.lat_max) continue;
    if (tract_boundary_contains(*by_geoid_[i], p) || tract_contains(*by_geoid_[i], p)) return by_geoid_[i]->geoid;
  }
  return std::nullopt;
}

std::optional<std::string> assign_tract(LonLat p, std::span<const TractRecord> tracts) {
  return TractIndex(tracts).assign(p);
}

MetricKey key_of(const AccessResult& r, const TouSchedule& schedule) {
  return {r.port_type, r.d_m, r.cutoff, r.segment.kind_label(), r.segment.tou_label(schedule)};
}

std::vector<TractStats> aggregate_by_tract(std::span<const AccessResult> results,
                                           const std::map<std::string, std::string>& home_tract,
                                           const TouSchedule& schedule, AggregationReport* report) {
  struct Acc {
    std::size_t n = 0;
    double hours = 0.0;
    double ports = 0.0;
  };
  std::map<std::pair<std::string, MetricKey>, Acc> groups;
  std::map<std::string, bool> unassigned;
  for (const auto& r : results) {
    auto it = home_tract.find(r.person_id);
    if (it == home_tract.end()) {
      unassigned[r.person_id] = true;
      continue;
    }
    auto& acc = groups[{it->second, key_of(r, schedule)}];
    ++acc.n;
    acc.hours += r.hours_per_day;
    acc.ports += r.ports_avg;
  }
  std::vector<TractStats> out;
  out.reserve(groups.size());
  for (const auto& [k, acc] : groups) {
    out.push_back({k.first, k.second, acc.n, acc.hours / static_cast<double>(acc.n),
                   acc.ports / static_cast<double>(acc.n)});
  }
  if (report != nullptr) report->unassigned_persons = unassigned.size();
  return out;
}

void write_tract_stats(const std::filesystem::path& path, std::span<const TractStats> stats) {
  auto out = csv::open_output(path);
  out << "geoid,n,mean_hours,mean_ports,port_type,d_m,cutoff,kind_filter,tou_filter\n";
  for (const auto& s : stats) {
    out << s.geoid << ',' << s.n_residents << ',' << format_double(s.mean_hours) << ','
        << format_double(s.mean_ports) << ',' << to_string(s.key.port_type) << ',' << format_double(s.key.d_m) << ','
        << format_date(s.key.cutoff) << ',' << s.key.kind_filter << ',' << s.key.tou_filter << '\n';
  }
}

std::vector<TractStats> read_tract_stats(const std::filesystem::path& path) {
  csv::Reader in(path, {"geoid", "n", "mean_hours", "mean_ports", "port_type", "d_m", "cutoff", "kind_filter",
                        "tou_filter"});
  std::vector<TractStats> out;
  while (in.next()) {
    TractStats s;
    s.geoid = std::string(in[0]);
    const auto n = in.as_int(1);
    if (n < 0) in.fail("negative resident count");
    s.n_residents = static_cast<std::size_t>(n);
    s.mean_hours = in.as_double(2);
    s.mean_ports = in.as_double(3);
    try {
      s.key.port_type = parse_port_type(in[4]);
      s.key.cutoff = parse_date(in[6]);
    } catch (const ValidationError& e) {
      in.fail(e.what());
    }
    s.key.d_m = in.as_double(5);
    s.key.kind_filter = std::string(in[7]);
    s.key.tou_filter = std::string(in[8]);
    out.push_back(std::move(s));
  }
  return out;
}

double gini(std::span<const double> values) {
  if (values.empty()) throw PreconditionError("gini of an empty sample");
  std::vector<double> x(values.begin(), values.end());
  for (double v : x) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("gini requires finite nonnegative values");
  }
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  const double total = std::accumulate(x.begin(), x.end(), 0.0);
  if (total == 0.0) return 0.0;
  // sum_k (2k - n - 1) x_k with the k-th and (n+1-k)-th terms paired.
  double numerator = 0.0;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    numerator += static_cast<double>(n + 1 - 2 * k) * (x[n - k] - x[k - 1]);
  }
  return numerator / (static_cast<double>(n) * total);
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw PreconditionError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw PreconditionError("quantile level outside [0, 1]");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

DistributionStats distribution_stats(std::span<const double> values, std::span<const double> weights) {
  if (values.empty()) throw PreconditionError("distribution_stats needs at least one value");
  if (!weights.empty() && weights.size() != values.size()) {
    throw PreconditionError("weights length " + std::to_string(weights.size()) + " does not match values length " +
                            std::to_string(values.size()));
  }
  DistributionStats s;
  s.n = values.size();
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
  if (weights.empty()) {
    s.weighted_mean = s.mean;
  } else {
    double wx = 0.0;
    double w = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!(weights[i] >= 0.0)) throw ValidationError("weights must be nonnegative");
      wx += weights[i] * values[i];
      w += weights[i];
    }
    if (w == 0.0) throw ValidationError("weights sum to zero");
    s.weighted_mean = wx / w;
  }
  s.q25 = quantile_sorted(sorted, 0.25);
  s.median = median_of_sorted(sorted);
  s.q75 = quantile_sorted(sorted, 0.75);
  s.cdf.reserve(s.n);
  for (std::size_t i = 0; i < s.n; ++i) {
    s.cdf.emplace_back(sorted[i], static_cast<double>(i + 1) / static_cast<double>(s.n));
  }
  return s;
}

std::string_view to_string(Group group) {
  switch (group) {
    case Group::White: return "white";
    case Group::Black: return "black";
    case Group::Asian: return "asian";
    case Group::Hispanic: return "hispanic";
  }
  return "white";
}

std::optional<Group> dominant_group(const TractRecord& t) {
  const std::array<double, 4> shares{t.pct_white, t.pct_black, t.pct_asian, t.pct_hispanic};
  const auto top = std::max_element(shares.begin(), shares.end());
  if (std::count(shares.begin(), shares.end(), *top) > 1) return std::nullopt;
  if (*top < 40.0) return std::nullopt;
  return kGroups[static_cast<std::size_t>(top - shares.begin())];
}

std::vector<TractRecord> mud_filter(std::span<const TractRecord> tracts) {
  std::vector<TractRecord> out;
  for (const auto& t : tracts) {
    if (t.pct_mud > 50.0) out.push_back(t);
  }
  return out;
}

double RegressionResult::coefficient(std::string_view term) const {
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i] == term) return beta[i];
  }
  throw PreconditionError("no regression term '" + std::string(term) + "'");
}

RegressionResult ols_fit(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, std::vector<std::string> names) {
  const auto n = X.rows();
  const auto p = X.cols();
  if (y.size() != n) throw PreconditionError("response length does not match design rows");
  if (names.empty()) {
    for (Eigen::Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
  }
  if (static_cast<Eigen::Index>(names.size()) != p) throw PreconditionError("term name count does not match columns");
  if (n <= p) {
    throw ValidationError("regression needs more observations than terms (n=" + std::to_string(n) +
                          ", p=" + std::to_string(p) + ")");
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> pivoted(X);
  if (pivoted.rank() < p) {
    std::vector<Eigen::Index> kept;
    std::string dependent;
    for (Eigen::Index j = 0; j < p; ++j) {
      Eigen::MatrixXd sub(n, static_cast<Eigen::Index>(kept.size()) + 1);
      for (std::size_t c = 0; c < kept.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = X.col(kept[c]);
      sub.col(static_cast<Eigen::Index>(kept.size())) = X.col(j);
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sub);
      if (qr.rank() == sub.cols()) {
        kept.push_back(j);
      } else {
        if (!dependent.empty()) dependent += ", ";
        dependent += "'" + names[static_cast<std::size_t>(j)] + "'";
      }
    }
    throw ValidationError("rank-deficient design: column(s) " + dependent + " are linearly dependent on earlier columns");
  }

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
  Eigen::VectorXd beta = qr.solve(y);
  // Iterative refinement with extended-precision residuals: noiseless
  // designs with representable coefficients come back bit-exact.
  std::vector<long double> beta_ext(beta.data(), beta.data() + p);
  for (int iter = 0; iter < 3; ++iter) {
    Eigen::VectorXd residual(n);
    bool zero = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      long double r = y[i];
      for (Eigen::Index j = 0; j < p; ++j) r -= static_cast<long double>(X(i, j)) * beta_ext[static_cast<std::size_t>(j)];
      residual[i] = static_cast<double>(r);
      zero = zero && r == 0.0L;
    }
    if (zero) break;
    const Eigen::VectorXd delta = qr.solve(residual);
    for (Eigen::Index j = 0; j < p; ++j) beta_ext[static_cast<std::size_t>(j)] += delta[j];
  }
  // A coefficient whose largest contribution to any fitted value is below
  // extended precision of the response is indistinguishable from zero.
  const long double y_scale = y.cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j < p; ++j) {
    auto& b = beta_ext[static_cast<std::size_t>(j)];
    const long double reach = std::fabs(b) * static_cast<long double>(X.col(j).cwiseAbs().maxCoeff());
    if (reach < std::numeric_limits<long double>::epsilon() * y_scale) b = 0.0L;
    beta[j] = static_cast<double>(b);
  }

  const Eigen::VectorXd resid = y - X * beta;
  RegressionResult out;
  out.terms = std::move(names);
  out.n = static_cast<std::size_t>(n);
  out.rss = resid.squaredNorm();
  const double mean = y.mean();
  const double tss = (y.array() - mean).square().sum();
  out.r_squared = tss > 0.0 ? 1.0 - out.rss / tss : 1.0;

  const Eigen::MatrixXd r = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd cov_unscaled = r_inv * r_inv.transpose();
  const double dof = static_cast<double>(n - p);
  const double s2 = out.rss / dof;
  const boost::math::students_t dist(dof);
  const double t_crit = boost::math::quantile(dist, 0.975);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double b = beta[j];
    const double se = std::sqrt(s2 * cov_unscaled(j, j));
    double pv = 0.0;
    if (se > 0.0) {
      pv = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(b / se)));
    } else {
      pv = b == 0.0 ? 1.0 : 0.0;
    }
    pv = std::clamp(pv, 0.0, 1.0);
    out.beta.push_back(b);
    out.se.push_back(se);
    out.ci_lo.push_back(b - t_crit * se);
    out.ci_hi.push_back(b + t_crit * se);
    out.p_value.push_back(pv);
    out.significant.push_back(pv < 0.05);
  }
  return out;
}

RegressionResult disparity_regression(std::span<const TractStats> stats, std::span<const TractRecord> tracts,
                                      int income_degree, Metric metric, DisparityReport* report) {
  if (income_degree < 0 || income_degree > 4) throw PreconditionError("income degree must be within 0..4");
  for (const auto& s : stats) {
    if (!(s.key == stats.front().key)) throw PreconditionError("disparity regression needs a single metric series");
  }
  std::unordered_map<std::string, const TractStats*> by_geoid;
  for (const auto& s : stats) by_geoid.emplace(s.geoid, &s);

  std::vector<const TractRecord*> ordered;
  for (const auto& t : tracts) ordered.push_back(&t);
  std::sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->geoid < b->geoid; });

  DisparityReport local;
  std::vector<double> ys;
  std::vector<std::array<double, 4>> indicators;
  std::vector<double> log_income;
  for (const auto* t : ordered) {
    auto it = by_geoid.find(t->geoid);
    if (it == by_geoid.end() || it->second->n_residents == 0) {
      ++local.dropped_no_residents;
      continue;
    }
    if (!(t->median_income > 0.0) || !std::isfinite(t->median_income)) {
      ++local.dropped_missing_income;
      continue;
    }
    std::array<double, 4> row{};
    if (auto g = dominant_group(*t)) row[static_cast<std::size_t>(*g)] = 1.0;
    indicators.push_back(row);
    log_income.push_back(std::log(t->median_income));
    ys.push_back(metric == Metric::Hours ? it->second->mean_hours : it->second->mean_ports);
  }
  local.used = ys.size();

  const auto n = static_cast<Eigen::Index>(ys.size());
  const Eigen::Index p = 5 + income_degree;
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n);
  std::vector<std::string> names{"intercept"};
  for (auto g : kGroups) names.emplace_back(to_string(g));
  for (int k = 1; k <= income_degree; ++k) names.push_back(k == 1 ? "log_income" : "log_income^" + std::to_string(k));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = static_cast<std::size_t>(i);
    y[i] = ys[row];
    X(i, 0) = 1.0;
    for (Eigen::Index g = 0; g < 4; ++g) X(i, 1 + g) = indicators[row][static_cast<std::size_t>(g)];
    for (int k = 1; k <= income_degree; ++k) X(i, 4 + k) = std::pow(log_income[row], k);
  }
  if (report != nullptr) *report = local;
  return ols_fit(y, X, std::move(names));
}

void write_regression(const std::filesystem::path& path, const RegressionResult& r) {
  auto out = csv::open_output(path);
  out << "term,beta,se,ci_lo,ci_hi,p\n";
  for (std::size_t i = 0; i < r.terms.size(); ++i) {
    out << r.terms[i] << ',' << format_double(r.beta[i]) << ',' << format_double(r.se[i]) << ','
        << format_double(r.ci_lo[i]) << ',' << format_double(r.ci_hi[i]) << ',' << format_double(r.p_value[i]) << '\n';
  }
}

}  // namespace tiacs
