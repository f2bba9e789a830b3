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

#include "tiacs/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <tuple>

#include "tiacs/csv.hpp"
#include "tiacs/parallel.hpp"

namespace tiacs {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Portable stream: draws come straight from mt19937_64 bits so a seed gives
// the same scenario with every standard library.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream) : gen_(seed * 0x9E3779B97F4A7C15ull + stream) {}

  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t below(std::uint64_t n) { return gen_() % n; }
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }
  bool chance(double p) { return uniform() < p; }

  std::size_t pick(std::span<const double> weights) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    double u = uniform() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (u < weights[i]) return i;
      u -= weights[i];
    }
    return weights.size() - 1;
  }

 private:
  std::mt19937_64 gen_;
};

constexpr double kDegToRad = std::numbers::pi / 180.0;

struct Grid {
  int rows = 0;
  int cols = 0;
  double dlon = 0.0;
  double dlat = 0.0;
  double lon0 = 0.0;
  double lat0 = 0.0;

  NodeId id(int r, int c) const { return static_cast<NodeId>(r) * cols + c + 1; }
  LonLat at(int r, int c) const { return {lon0 + c * dlon, lat0 + r * dlat}; }
};

LonLat jitter(Rng& rng, LonLat p, const Grid& g, double scale) {
  return {p.lon + rng.uniform(-scale, scale) * g.dlon, p.lat + rng.uniform(-scale, scale) * g.dlat};
}

void add_street(std::vector<Edge>& edges, Rng& rng, const Node& a, const Node& b, double speed_mps) {
  const double length = std::ceil(great_circle_unchecked(a.position, b.position));
  const double seconds = length / (speed_mps * rng.uniform(0.7, 1.3));
  edges.push_back({a.id, b.id, length, seconds});
  edges.push_back({b.id, a.id, length, seconds});
}

void build_grid(std::vector<Node>& nodes, std::vector<Edge>& edges, Rng& rng, const Grid& g, NodeId first_id,
                double speed_mps) {
  const auto base = nodes.size();
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) nodes.push_back({first_id + static_cast<NodeId>(r) * g.cols + c, g.at(r, c)});
  }
  auto node = [&](int r, int c) -> const Node& { return nodes[base + static_cast<std::size_t>(r) * g.cols + c]; };
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      if (c + 1 < g.cols) add_street(edges, rng, node(r, c), node(r, c + 1), speed_mps);
      if (r + 1 < g.rows) add_street(edges, rng, node(r, c), node(r + 1, c), speed_mps);
    }
  }
}

std::string padded(std::size_t value, int width) {
  auto s = std::to_string(value);
  if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
  return s;
}

// Daily other-stop plans: departure minutes within [base, base + 1440).
struct Visit {
  int depart = 0;
  StayKind kind = StayKind::Other;
  LonLat position;
};

std::vector<PersonRecord> generate_persons(const SyntheticScenario& scn, const Grid& g,
                                           std::span<const Node> all_nodes, std::size_t main_nodes) {
  Rng rng(scn.seed, 3);
  const int reach = std::max(1, static_cast<int>(scn.activity_radius_m / scn.edge_length_m / std::numbers::sqrt2));
  auto near = [&](int r, int c) {
    const int nr = std::clamp(r + static_cast<int>(rng.between(-reach, reach)), 0, g.rows - 1);
    const int nc = std::clamp(c + static_cast<int>(rng.between(-reach, reach)), 0, g.cols - 1);
    return jitter(rng, g.at(nr, nc), g, 0.25);
  };
  auto far = [&] {
    const auto& n = all_nodes[rng.below(all_nodes.size())];
    return jitter(rng, n.position, g, 0.25);
  };
  const bool islands = all_nodes.size() > main_nodes;

  std::vector<PersonRecord> persons;
  persons.reserve(scn.person_count);
  for (std::size_t p = 0; p < scn.person_count; ++p) {
    PersonRecord person;
    person.person_id = "P" + padded(p + 1, 6);
    const int hr = static_cast<int>(rng.below(static_cast<std::uint64_t>(g.rows)));
    const int hc = static_cast<int>(rng.below(static_cast<std::uint64_t>(g.cols)));
    const LonLat home = jitter(rng, g.at(hr, hc), g, 0.25);
    const bool commuter = !rng.chance(scn.non_commuter_fraction);
    const LonLat work = near(hr, hc);

    std::vector<Visit> visits{{0, StayKind::Home, home}};
    for (int day = 0; day < 7; ++day) {
      const int base = day * 1440;
      const bool working = commuter && day < 5;
      int t = 0;
      if (working) {
        visits.push_back({base + 450 + static_cast<int>(rng.below(61)), StayKind::Work, work});
        t = base + 990 + static_cast<int>(rng.below(91));
      } else {
        t = base + 570 + static_cast<int>(rng.below(121));
      }
      const auto stops = rng.pick(scn.other_stops_per_day);
      int dwell_hi = working ? 90 : 150;
      for (std::size_t k = 0; k < stops; ++k) {
        if (t > base + 1380) break;
        LonLat where;
        int dwell = 0;
        if (rng.chance(scn.long_travel_fraction)) {
          where = far();
          dwell = 5 + static_cast<int>(rng.below(11));
        } else if (islands && rng.chance(0.01)) {
          where = all_nodes[main_nodes + rng.below(all_nodes.size() - main_nodes)].position;
          dwell = 20 + static_cast<int>(rng.below(41));
        } else {
          where = near(hr, hc);
          dwell = 20 + static_cast<int>(rng.below(static_cast<std::uint64_t>(dwell_hi - 19)));
        }
        visits.push_back({t, StayKind::Other, where});
        t += dwell + 10;
      }
      visits.push_back({std::min(t, base + 1420), StayKind::Home, home});
    }

    int last_slot = 0;
    for (const auto& v : visits) {
      int slot = std::max(v.depart / kSlotMinutes + 1, last_slot + 1);
      if (slot > kSlotsPerWeek) break;
      // A return home right after being home carries no information.
      if (!person.stays.empty() && v.kind == StayKind::Home && person.stays.back().kind == StayKind::Home) continue;
      person.stays.push_back({slot, v.kind, v.position, kNoNode, 0.0});
      last_slot = slot;
    }
    persons.push_back(std::move(person));
  }
  return persons;
}

std::vector<TractRecord> generate_tracts(const SyntheticScenario& scn, const Grid& g) {
  Rng rng(scn.seed, 4);
  const double lon_min = g.lon0 - 0.5 * g.dlon;
  const double lat_min = g.lat0 - 0.5 * g.dlat;
  const double width = g.cols * g.dlon / scn.tract_cols;
  const double height = g.rows * g.dlat / scn.tract_rows;
  std::vector<TractRecord> out;
  for (int i = 0; i < scn.tract_rows; ++i) {
    for (int j = 0; j < scn.tract_cols; ++j) {
      const auto k = static_cast<std::size_t>(i * scn.tract_cols + j);
      TractRecord t;
      t.geoid = "06075" + padded((k + 1) * 100, 6);
      const double x0 = lon_min + j * width;
      const double x1 = lon_min + (j + 1) * width;
      const double y0 = lat_min + i * height;
      const double y1 = lat_min + (i + 1) * height;
      t.polygons.push_back({{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}}});
      t.population = std::round(rng.uniform(2500.0, 8000.0));

      std::array<double, 4> shares{};
      const auto dominant = k % 5;  // 4: no dominant group
      if (dominant < 4) {
        const double top = rng.uniform(50.0, 80.0);
        std::array<double, 3> w{rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0)};
        const double wsum = w[0] + w[1] + w[2];
        std::size_t o = 0;
        for (std::size_t gi = 0; gi < 4; ++gi) {
          shares[gi] = gi == dominant ? top : (100.0 - top) * w[o++] / wsum;
        }
      } else {
        std::array<double, 4> w{};
        for (auto& x : w) x = rng.uniform(0.8, 1.2);
        const double wsum = w[0] + w[1] + w[2] + w[3];
        for (std::size_t gi = 0; gi < 4; ++gi) shares[gi] = 100.0 * w[gi] / wsum;
      }
      t.pct_white = shares[0];
      t.pct_black = shares[1];
      t.pct_asian = shares[2];
      t.pct_hispanic = shares[3];
      t.pct_mud = (k / 5) % 2 == 0 ? rng.uniform(55.0, 90.0) : rng.uniform(10.0, 45.0);
      t.median_income = std::round(std::exp(rng.uniform(10.4, 11.8)));
      if (rng.chance(scn.missing_income_fraction)) t.median_income = std::numeric_limits<double>::quiet_NaN();
      out.push_back(std::move(t));
    }
  }
  return out;
}

bool is_standard_threshold(double d) {
  return std::find(kStandardThresholdsM.begin(), kStandardThresholdsM.end(), d) != kStandardThresholdsM.end();
}

std::string first_line(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
  return line;
}

std::string series_name(const MetricKey& k, Metric m) {
  return std::string(to_string(k.port_type)) + "_" + format_double(k.d_m) + "_" + k.kind_filter + "_" + k.tou_filter +
         "_" + (m == Metric::Hours ? "hours" : "ports");
}

std::string_view metric_name(Metric m) { return m == Metric::Hours ? "hours" : "ports"; }

// MetricKey without the cutoff: one choropleth/trend series.
using SeriesKey = std::tuple<PortType, double, std::string, std::string>;

SeriesKey series_of(const MetricKey& k) { return {k.port_type, k.d_m, k.kind_filter, k.tou_filter}; }

std::string dominant_label(const TractRecord& t) {
  auto g = dominant_group(t);
  return g ? std::string(to_string(*g)) : "none";
}

}  // namespace

void SyntheticScenario::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("invalid scenario: " + what); };
  if (grid_rows < 2 || grid_cols < 2) fail("grid needs at least 2 rows and 2 columns");
  if (static_cast<std::int64_t>(grid_rows) * grid_cols > 5'000'000) fail("grid larger than 5M nodes");
  if (!(edge_length_m > 0.0)) fail("edge length must be positive");
  if (!(speed_kmh > 0.0)) fail("speed must be positive");
  if (island_count < 0) fail("negative island count");
  validate_coordinates({origin_lon, origin_lat});
  const double dlat = edge_length_m / (kEarthRadiusM * kDegToRad);
  if (origin_lat + grid_rows * dlat > 85.0 || std::abs(origin_lat) > 85.0) fail("grid reaches polar latitudes");
  if (!open_from.ok() || !open_to.ok() || open_to < open_from) fail("open-date range is empty");
  if (!(dcfc_fraction >= 0.0 && dcfc_fraction <= 1.0)) fail("dcfc_fraction outside [0, 1]");
  if (person_count == 0) fail("person count must be positive");
  if (!(non_commuter_fraction >= 0.0 && non_commuter_fraction <= 1.0)) fail("non_commuter_fraction outside [0, 1]");
  if (!(long_travel_fraction >= 0.0 && long_travel_fraction <= 1.0)) fail("long_travel_fraction outside [0, 1]");
  if (!(missing_income_fraction >= 0.0 && missing_income_fraction <= 1.0)) {
    fail("missing_income_fraction outside [0, 1]");
  }
  if (other_stops_per_day.empty() || other_stops_per_day.size() > 6) fail("other-stop distribution needs 1..6 weights");
  double total = 0.0;
  for (double w : other_stops_per_day) {
    if (!(w >= 0.0)) fail("negative other-stop weight");
    total += w;
  }
  if (!(total > 0.0)) fail("other-stop weights sum to zero");
  if (!(activity_radius_m >= edge_length_m)) fail("activity radius shorter than one edge");
  if (tract_rows < 1 || tract_cols < 1) fail("tract grid needs at least one tract");
}

GeneratedScenario generate_scenario(const SyntheticScenario& scn) {
  scn.validate();
  Grid g;
  g.rows = scn.grid_rows;
  g.cols = scn.grid_cols;
  g.dlat = scn.edge_length_m / (kEarthRadiusM * kDegToRad);
  g.dlon = g.dlat / std::cos(scn.origin_lat * kDegToRad);
  g.lon0 = scn.origin_lon;
  g.lat0 = scn.origin_lat;
  const double speed = scn.speed_kmh / 3.6;

  Rng net_rng(scn.seed, 1);
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  build_grid(nodes, edges, net_rng, g, 1, speed);
  const auto main_nodes = nodes.size();
  for (int k = 0; k < scn.island_count; ++k) {
    Grid island = g;
    island.rows = 3;
    island.cols = 3;
    island.lon0 = g.lon0 + (g.cols + 5 + 6 * k) * g.dlon;
    build_grid(nodes, edges, net_rng, island, static_cast<NodeId>(nodes.size()) + 1, speed);
  }

  Rng station_rng(scn.seed, 2);
  std::vector<ChargingStation> stations;
  const auto first_day = std::chrono::sys_days(scn.open_from);
  const auto span_days = (std::chrono::sys_days(scn.open_to) - first_day).count();
  for (std::size_t i = 0; i < scn.station_count; ++i) {
    ChargingStation s;
    s.station_id = "S" + padded(i + 1, 5);
    const auto& n = nodes[station_rng.below(main_nodes)];
    s.position = jitter(station_rng, n.position, g, 0.2);
    s.open_date = std::chrono::year_month_day(first_day + std::chrono::days(station_rng.between(0, span_days)));
    if (station_rng.chance(scn.dcfc_fraction)) {
      s.dcfc_ports = static_cast<int>(station_rng.between(1, 8));
      s.l2_ports = static_cast<int>(station_rng.between(0, 2));
    } else {
      s.l2_ports = static_cast<int>(station_rng.between(1, 6));
    }
    stations.push_back(std::move(s));
  }

  GeneratedScenario out;
  out.persons = generate_persons(scn, g, nodes, main_nodes);
  out.tracts = generate_tracts(scn, g);
  out.network = RoadNetwork(std::move(nodes), std::move(edges));
  out.stations = std::move(stations);
  snap_stations(out.stations, out.network);
  snap_persons(out.persons, out.network);
  return out;
}

ScenarioFiles ScenarioFiles::in(const fs::path& dir) {
  return {dir / "nodes.csv", dir / "edges.csv", dir / "stations.csv", dir / "raw_trajectories.csv",
          dir / "tracts.geojson"};
}

void write_scenario(const GeneratedScenario& scenario, const fs::path& dir) {
  const auto files = ScenarioFiles::in(dir);
  write_network(scenario.network, files.nodes, files.edges);
  write_stations(files.stations, scenario.stations);
  write_raw(files.trajectories, scenario.persons);
  write_tracts(files.tracts, scenario.tracts);
}

ScenarioFiles synth(const SyntheticScenario& scn, const fs::path& dir) {
  write_scenario(generate_scenario(scn), dir);
  return ScenarioFiles::in(dir);
}

std::vector<Trajectory> load_trajectories(const fs::path& path, const RoadNetwork& net, unsigned workers,
                                          RoutingReport* routing, RepairReport* repair) {
  std::vector<Trajectory> trajs;
  const auto header = first_line(path);
  if (header == "person_id,start_min,end_min,kind,node_id,lon,lat") {
    trajs = read_trajectories(path);
    for (const auto& t : trajs) {
      for (const auto& s : t.stays) {
        if (!net.contains(s.node)) {
          throw ValidationError(path.string() + ": person " + t.person_id + " stays at unknown node " +
                                std::to_string(s.node));
        }
      }
    }
  } else {
    auto persons = ingest_raw(path, net);
    trajs = route_travel(net, persons, workers, routing);
  }
  std::vector<RepairReport> reports(trajs.size());
  parallel_for(trajs.size(), workers, [&](std::size_t i) { trajs[i] = repair_stays(trajs[i], &reports[i]); });
  if (repair != nullptr) {
    *repair = {};
    for (const auto& r : reports) *repair += r;
  }
  return trajs;
}

std::vector<NodeId> stay_nodes_of(std::span<const Trajectory> trajs) {
  std::vector<NodeId> out;
  for (const auto& t : trajs) {
    for (const auto& s : t.stays) out.push_back(s.node);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::map<std::string, std::string> home_tracts(std::span<const Trajectory> trajs,
                                               std::span<const TractRecord> tracts) {
  const TractIndex index(tracts);
  std::map<std::string, std::string> out;
  for (const auto& t : trajs) {
    if (auto geoid = index.assign(t.home)) out.emplace(t.person_id, *geoid);
  }
  return out;
}

std::vector<SummaryRow> summarize(std::span<const TractStats> stats, std::span<const TractRecord> tracts) {
  std::map<std::string, double> population;
  for (const auto& t : tracts) population.emplace(t.geoid, t.population);
  std::map<MetricKey, std::vector<const TractStats*>> series;
  for (const auto& s : stats) series[s.key].push_back(&s);

  std::vector<SummaryRow> out;
  for (const auto& [key, rows] : series) {
    std::vector<double> weights;
    for (const auto* r : rows) {
      auto it = population.find(r->geoid);
      weights.push_back(it == population.end() ? 0.0 : it->second);
    }
    const bool weighted = std::accumulate(weights.begin(), weights.end(), 0.0) > 0.0;
    for (Metric m : {Metric::Hours, Metric::Ports}) {
      std::vector<double> values;
      for (const auto* r : rows) values.push_back(m == Metric::Hours ? r->mean_hours : r->mean_ports);
      SummaryRow row;
      row.key = key;
      row.metric = m;
      row.dist = distribution_stats(values, weighted ? std::span<const double>(weights) : std::span<const double>());
      row.gini = gini(values);
      out.push_back(std::move(row));
    }
  }
  return out;
}

void write_summary(const fs::path& path, std::span<const SummaryRow> rows) {
  auto out = csv::open_output(path);
  out << "port_type,d_m,cutoff,kind_filter,tou_filter,metric,n_tracts,mean,weighted_mean,q25,median,q75,gini\n";
  for (const auto& r : rows) {
    out << to_string(r.key.port_type) << ',' << format_double(r.key.d_m) << ',' << format_date(r.key.cutoff) << ','
        << r.key.kind_filter << ',' << r.key.tou_filter << ',' << metric_name(r.metric) << ',' << r.dist.n << ','
        << format_double(r.dist.mean) << ',' << format_double(r.dist.weighted_mean) << ','
        << format_double(r.dist.q25) << ',' << format_double(r.dist.median) << ',' << format_double(r.dist.q75)
        << ',' << format_double(r.gini) << '\n';
  }
}

std::vector<fs::path> emit_plot_data(std::span<const TractStats> stats, std::span<const TractRecord> tracts,
                                     std::span<const NamedRegression> regressions, const fs::path& dir) {
  if (tracts.empty()) throw PreconditionError("plot data needs tract records");
  std::vector<fs::path> written;
  std::set<Date> cutoff_set;
  for (const auto& s : stats) cutoff_set.insert(s.key.cutoff);
  const std::vector<Date> cutoffs(cutoff_set.begin(), cutoff_set.end());

  // geoid -> metric per year
  {
    std::map<std::pair<std::string, SeriesKey>, std::map<Date, const TractStats*>> cells;
    for (const auto& s : stats) cells[{s.geoid, series_of(s.key)}][s.key.cutoff] = &s;
    const auto path = dir / "choropleth.csv";
    auto out = csv::open_output(path);
    out << "geoid,port_type,d_m,kind_filter,tou_filter,metric";
    for (auto c : cutoffs) out << ',' << format_date(c);
    out << '\n';
    for (const auto& [k, by_cutoff] : cells) {
      const auto& [port, d, kind, tou] = k.second;
      for (Metric m : {Metric::Hours, Metric::Ports}) {
        out << k.first << ',' << to_string(port) << ',' << format_double(d) << ',' << kind << ',' << tou << ','
            << metric_name(m);
        for (auto c : cutoffs) {
          out << ',';
          auto it = by_cutoff.find(c);
          if (it != by_cutoff.end()) out << format_double(m == Metric::Hours ? it->second->mean_hours : it->second->mean_ports);
        }
        out << '\n';
      }
    }
    written.push_back(path);
  }

  const auto summary = summarize(stats, tracts);
  {
    const auto path = dir / "breakdown.csv";
    auto out = csv::open_output(path);
    out << "port_type,d_m,cutoff,kind_filter,tou_filter,metric,n_tracts,mean,q25,median,q75\n";
    for (const auto& r : summary) {
      out << to_string(r.key.port_type) << ',' << format_double(r.key.d_m) << ',' << format_date(r.key.cutoff)
          << ',' << r.key.kind_filter << ',' << r.key.tou_filter << ',' << metric_name(r.metric) << ',' << r.dist.n
          << ',' << format_double(r.dist.mean) << ',' << format_double(r.dist.q25) << ','
          << format_double(r.dist.median) << ',' << format_double(r.dist.q75) << '\n';
    }
    written.push_back(path);
  }

  {
    std::map<std::pair<SeriesKey, Metric>, std::map<Date, double>> trend;
    for (const auto& r : summary) trend[{series_of(r.key), r.metric}][r.key.cutoff] = r.gini;
    const auto path = dir / "gini_trend.csv";
    auto out = csv::open_output(path);
    out << "cutoff";
    for (const auto& [k, v] : trend) {
      const auto& [port, d, kind, tou] = k.first;
      out << ',' << series_name({port, d, {}, kind, tou}, k.second);
    }
    out << '\n';
    for (auto c : cutoffs) {
      out << format_date(c);
      for (const auto& [k, v] : trend) {
        out << ',';
        auto it = v.find(c);
        if (it != v.end()) out << format_double(it->second);
      }
      out << '\n';
    }
    written.push_back(path);
  }

  {
    std::map<std::string, const TractRecord*> by_geoid;
    for (const auto& t : tracts) by_geoid.emplace(t.geoid, &t);
    std::map<std::string, std::map<MetricKey, std::vector<const TractStats*>>> grouped;
    for (const auto& s : stats) {
      auto it = by_geoid.find(s.geoid);
      if (it != by_geoid.end()) grouped[dominant_label(*it->second)][s.key].push_back(&s);
    }
    std::vector<std::string> labels;
    for (auto g : kGroups) labels.emplace_back(to_string(g));
    labels.emplace_back("none");
    for (const auto& label : labels) {
      const auto path = dir / ("cdf_" + label + ".csv");
      auto out = csv::open_output(path);
      out << "port_type,d_m,cutoff,kind_filter,tou_filter,metric,value,cum_fraction\n";
      for (const auto& [key, rows] : grouped[label]) {
        for (Metric m : {Metric::Hours, Metric::Ports}) {
          std::vector<double> values;
          for (const auto* r : rows) values.push_back(m == Metric::Hours ? r->mean_hours : r->mean_ports);
          for (const auto& [value, frac] : distribution_stats(values).cdf) {
            out << to_string(key.port_type) << ',' << format_double(key.d_m) << ',' << format_date(key.cutoff) << ','
                << key.kind_filter << ',' << key.tou_filter << ',' << metric_name(m) << ',' << format_double(value)
                << ',' << format_double(frac) << '\n';
          }
        }
      }
      written.push_back(path);
    }
  }

  {
    const auto path = dir / "regression.csv";
    auto out = csv::open_output(path);
    out << "port_type,metric,subset,term,beta,se,ci_lo,ci_hi,p,significant\n";
    for (const auto& reg : regressions) {
      const auto& r = reg.result;
      for (std::size_t i = 0; i < r.terms.size(); ++i) {
        out << reg.port_type << ',' << reg.metric << ',' << reg.subset << ',' << r.terms[i] << ','
            << format_double(r.beta[i]) << ',' << format_double(r.se[i]) << ',' << format_double(r.ci_lo[i]) << ','
            << format_double(r.ci_hi[i]) << ',' << format_double(r.p_value[i]) << ','
            << (r.significant[i] ? "true" : "false") << '\n';
      }
    }
    written.push_back(path);
  }
  return written;
}

void RunConfig::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("invalid configuration: " + what); };
  if (nodes_csv.empty() || edges_csv.empty()) fail("network node and edge files are required");
  if (stations_csv.empty()) fail("station file is required");
  if (trajectories_csv.empty()) fail("trajectory file is required");
  if (output_dir.empty()) fail("output directory is required");
  if (!(radius_m > 0.0)) fail("proximity radius must be positive");
  if (thresholds.empty()) fail("at least one distance threshold is required");
  for (double d : thresholds) {
    if (!(d > 0.0)) fail("threshold " + format_double(d) + " is not positive");
    if (d > radius_m) fail("threshold " + format_double(d) + " exceeds the proximity radius " + format_double(radius_m));
    if (!allow_custom_threshold && !is_standard_threshold(d)) {
      fail("threshold " + format_double(d) + " is not one of 500, 1000, 2000, 3000 (use allow_custom_threshold)");
    }
  }
  if (port_types.empty()) fail("at least one port type is required");
  for (auto c : cutoffs) {
    if (!c.ok()) fail("invalid cutoff date");
  }
  if (income_degree < 0 || income_degree > 4) fail("income_degree must be within 0..4");
}

namespace {

using Clock = std::chrono::steady_clock;

class StageRunner {
 public:
  template <class Fn>
  void operator()(const std::string& name, Fn&& fn) {
    const auto start = Clock::now();
    try {
      fn();
    } catch (const StageError&) {
      throw;
    } catch (const ParseError& e) {
      throw StageError(name, e.what(), true);
    } catch (const ValidationError& e) {
      throw StageError(name, e.what(), true);
    } catch (const std::exception& e) {
      throw StageError(name, e.what(), false);
    }
    timings.emplace_back(name, std::chrono::duration<double>(Clock::now() - start).count());
  }

  std::vector<std::pair<std::string, double>> timings;
};

// Removes the staging directory unless released.
class StagingGuard {
 public:
  explicit StagingGuard(fs::path dir) : dir_(std::move(dir)) {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~StagingGuard() {
    std::error_code ec;
    fs::remove_all(dir_, ec);
  }
  StagingGuard(const StagingGuard&) = delete;
  StagingGuard& operator=(const StagingGuard&) = delete;

  const fs::path& dir() const noexcept { return dir_; }

 private:
  fs::path dir_;
};

std::string cache_key(const RunConfig& cfg, const fs::path& processed) {
  return "radius=" + format_double(cfg.radius_m) + "\nnodes=" + sha256_file(cfg.nodes_csv) +
         "\nedges=" + sha256_file(cfg.edges_csv) + "\nstations=" + sha256_file(cfg.stations_csv) +
         "\ntrajectories=" + sha256_file(processed) + "\n";
}

json config_json(const RunConfig& cfg, std::span<const Date> cutoffs, std::span<const SegmentSpec> segments,
                 const TouSchedule& schedule) {
  json c;
  c["radius_m"] = cfg.radius_m;
  c["thresholds"] = cfg.thresholds;
  json ports = json::array();
  for (auto p : cfg.port_types) ports.push_back(std::string(to_string(p)));
  c["port_types"] = ports;
  json dates = json::array();
  for (auto d : cutoffs) dates.push_back(format_date(d));
  c["cutoffs"] = dates;
  json segs = json::array();
  for (const auto& s : segments) segs.push_back(s.label(schedule));
  c["segments"] = segs;
  c["normalization"] = cfg.normalization == PortsNormalization::Horizon ? "horizon" : "stay_time";
  c["regression"] = cfg.regression;
  c["regression_mud"] = cfg.regression_mud;
  c["income_degree"] = cfg.income_degree;
  c["workers"] = cfg.workers;
  return c;
}

}  // namespace

RunSummary run_pipeline(const RunConfig& cfg) {
  StageRunner stage;
  RunSummary summary;
  const unsigned workers = resolve_workers(cfg.workers);

  TouSchedule schedule = TouSchedule::standard();
  std::vector<SegmentSpec> segments;
  stage("config", [&] {
    cfg.validate();
    if (cfg.tou_schedule) schedule = TouSchedule::load(*cfg.tou_schedule);
    if (cfg.segments.empty()) {
      segments = standard_segments(schedule);
    } else {
      for (const auto& s : cfg.segments) segments.push_back(SegmentSpec::parse(s, schedule));
    }
    fs::create_directories(cfg.output_dir);
  });
  StagingGuard staging(cfg.output_dir / ".staging");
  const auto& out = staging.dir();

  RoadNetwork net;
  std::vector<ChargingStation> stations;
  std::vector<TractRecord> tracts;
  stage("load", [&] {
    net = load_network(cfg.nodes_csv, cfg.edges_csv);
    if (net.empty()) throw ValidationError("road network has no nodes");
    stations = load_stations(cfg.stations_csv, net);
    if (cfg.tracts_geojson) tracts = load_tracts(*cfg.tracts_geojson);
  });

  std::vector<Date> cutoffs = cfg.cutoffs;
  std::vector<Snapshot> snapshots;
  stage("snapshots", [&] {
    if (cutoffs.empty()) {
      Date latest{std::chrono::year{2100}, std::chrono::month{1}, std::chrono::day{1}};
      if (!stations.empty()) {
        latest = std::max_element(stations.begin(), stations.end(), [](const auto& a, const auto& b) {
                   return a.open_date < b.open_date;
                 })->open_date;
      }
      cutoffs.push_back(latest);
    }
    std::sort(cutoffs.begin(), cutoffs.end());
    cutoffs.erase(std::unique(cutoffs.begin(), cutoffs.end()), cutoffs.end());
    for (auto c : cutoffs) snapshots.push_back(build_snapshot(stations, c));
  });

  std::vector<Trajectory> trajs;
  stage("route_repair", [&] {
    trajs = load_trajectories(cfg.trajectories_csv, net, workers, &summary.routing, &summary.repair);
    for (const auto& t : trajs) {
      auto problems = check_trajectory(t, true);
      if (!problems.empty()) throw Error("person " + t.person_id + " after repair: " + problems.front());
    }
    write_trajectories(out / "trajectories.csv", trajs);
    summary.persons = trajs.size();
  });

  ProximityTable table;
  stage("proximity_table", [&] {
    std::string key;
    if (cfg.table_cache) {
      key = cache_key(cfg, out / "trajectories.csv");
      fs::path key_file = *cfg.table_cache;
      key_file += ".key";
      if (fs::exists(*cfg.table_cache) && fs::exists(key_file) && read_file(key_file) == key) {
        table = read_proximity_table(*cfg.table_cache, stations, cfg.radius_m);
        summary.table_from_cache = true;
      }
    }
    if (!summary.table_from_cache) {
      const auto nodes = stay_nodes_of(trajs);
      table = build_proximity_table(net, nodes, stations, {cfg.radius_m, true, workers});
    }
    write_proximity_table(table, out / "proximity_table.csv");
    if (cfg.table_cache && !summary.table_from_cache) {
      fs::path key_file = *cfg.table_cache;
      key_file += ".key";
      if (cfg.table_cache->has_parent_path()) fs::create_directories(cfg.table_cache->parent_path());
      fs::copy_file(out / "proximity_table.csv", *cfg.table_cache, fs::copy_options::overwrite_existing);
      csv::open_output(key_file) << key;
    }
  });

  std::vector<AccessResult> results;
  stage("batch", [&] {
    BatchSpec spec;
    spec.port_types = cfg.port_types;
    spec.thresholds = cfg.thresholds;
    spec.segments = segments;
    spec.normalization = cfg.normalization;
    spec.workers = workers;
    results = batch_compute(trajs, table, snapshots, spec, schedule);
    write_results(out / "results.csv", results, schedule);
    summary.results = results.size();
  });

  std::vector<TractStats> stats;
  std::vector<NamedRegression> regressions;
  if (!tracts.empty()) {
    stage("aggregate", [&] {
      stats = aggregate_by_tract(results, home_tracts(trajs, tracts), schedule);
      write_tract_stats(out / "tract_stats.csv", stats);
    });
    stage("stats", [&] {
      if (!stats.empty()) write_summary(out / "summary.csv", summarize(stats, tracts));
    });
    if (cfg.regression && !stats.empty()) {
      stage("regression", [&] {
        const double d = std::find(cfg.thresholds.begin(), cfg.thresholds.end(), kDefaultThresholdM) !=
                                 cfg.thresholds.end()
                             ? kDefaultThresholdM
                             : cfg.thresholds.front();
        const auto all_segment = std::find(segments.begin(), segments.end(), SegmentSpec::all());
        const auto& segment = all_segment != segments.end() ? *all_segment : segments.front();
        const auto mud = mud_filter(tracts);
        for (auto port : cfg.port_types) {
          const MetricKey key{port, d, cutoffs.back(), segment.kind_label(), segment.tou_label(schedule)};
          std::vector<TractStats> series;
          for (const auto& s : stats) {
            if (s.key == key) series.push_back(s);
          }
          for (Metric m : {Metric::Hours, Metric::Ports}) {
            const std::string base = "regression_" + std::string(to_string(port)) + "_" + std::string(metric_name(m));
            auto fit = disparity_regression(series, tracts, cfg.income_degree, m);
            write_regression(out / (base + ".csv"), fit);
            regressions.push_back({std::string(to_string(port)), std::string(metric_name(m)), "all", std::move(fit)});
            if (cfg.regression_mud) {
              auto mud_fit = disparity_regression(series, mud, cfg.income_degree, m);
              write_regression(out / (base + "_mud.csv"), mud_fit);
              regressions.push_back(
                  {std::string(to_string(port)), std::string(metric_name(m)), "mud", std::move(mud_fit)});
            }
          }
        }
      });
    }
    if (cfg.plot_data && !stats.empty()) {
      stage("plot_data", [&] {
        fs::create_directories(out / "plots");
        emit_plot_data(stats, tracts, regressions, out / "plots");
      });
    }
  }

  stage("manifest", [&] {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(out)) {
      if (entry.is_regular_file()) files.push_back(fs::relative(entry.path(), out));
    }
    std::sort(files.begin(), files.end());
    json outputs = json::array();
    for (const auto& f : files) {
      const auto hash = sha256_file(out / f);
      summary.hashes[f.generic_string()] = hash;
      outputs.push_back({{"path", f.generic_string()}, {"sha256", hash}, {"bytes", fs::file_size(out / f)}});
    }
    json inputs = json::array();
    auto add_input = [&](const char* role, const fs::path& p) {
      inputs.push_back({{"role", role}, {"path", p.string()}, {"sha256", sha256_file(p)}});
    };
    add_input("nodes", cfg.nodes_csv);
    add_input("edges", cfg.edges_csv);
    add_input("stations", cfg.stations_csv);
    add_input("trajectories", cfg.trajectories_csv);
    if (cfg.tracts_geojson) add_input("tracts", *cfg.tracts_geojson);
    if (cfg.tou_schedule) add_input("tou_schedule", *cfg.tou_schedule);

    json timings = json::object();
    for (const auto& [name, secs] : stage.timings) timings[name] = secs;
    json counts = {{"nodes", net.node_count()},
                   {"edges", net.edge_count()},
                   {"stations", stations.size()},
                   {"persons", summary.persons},
                   {"results", summary.results},
                   {"tracts", tracts.size()},
                   {"trips", summary.routing.trips},
                   {"trips_fallback", summary.routing.fallback},
                   {"repair_deficient", summary.repair.deficient},
                   {"repair_by_donation", summary.repair.resolved_by_donation},
                   {"repair_by_travel", summary.repair.resolved_by_travel},
                   {"repair_by_cascade", summary.repair.resolved_by_cascade}};
    json manifest = {{"tool", "tiacs"},
                     {"config", config_json(cfg, cutoffs, segments, schedule)},
                     {"inputs", inputs},
                     {"outputs", outputs},
                     {"timings_s", timings},
                     {"counts", counts},
                     {"table_from_cache", summary.table_from_cache},
                     {"warnings", net.warnings()}};
    csv::open_output(out / "manifest.json") << manifest.dump(2) << '\n';
    files.push_back("manifest.json");

    for (const auto& f : files) {
      const auto dest = cfg.output_dir / f;
      if (dest.has_parent_path()) fs::create_directories(dest.parent_path());
      fs::rename(out / f, dest);
    }
    summary.outputs = files;
    summary.manifest = cfg.output_dir / "manifest.json";
  });
  return summary;
}

VerifyReport verify_sample(std::span<const Trajectory> trajs, const ProximityTable& table,
                           std::span<const Snapshot> snapshots, std::span<const double> thresholds,
                           std::size_t sample_size, const TouSchedule& schedule) {
  VerifyReport report;
  if (trajs.empty() || sample_size == 0) return report;
  const std::size_t step = std::max<std::size_t>(1, trajs.size() / sample_size);
  const auto segments = standard_segments(schedule);
  for (std::size_t i = 0; i < trajs.size() && report.persons < sample_size; i += step) {
    ++report.persons;
    for (const auto& snap : snapshots) {
      for (auto port : {PortType::L2, PortType::DCFC}) {
        for (double d : thresholds) {
          for (const auto& seg : segments) {
            for (auto norm : {PortsNormalization::Horizon, PortsNormalization::StayTime}) {
              const AccessQuery q{port, d, seg, norm};
              const auto fast = ti_acs(trajs[i], table, snap, q, schedule);
              const auto slow = ti_acs_oracle(trajs[i], table, snap, q, schedule);
              ++report.comparisons;
              if (fast.hours_per_day != slow.hours_per_day || fast.ports_avg != slow.ports_avg ||
                  fast.accessible_minutes != slow.accessible_minutes || fast.port_minutes != slow.port_minutes) {
                report.mismatches.push_back(trajs[i].person_id + " " + std::string(to_string(port)) + " d=" +
                                            format_double(d) + " " + seg.label(schedule) + " cutoff " +
                                            format_date(snap.cutoff()));
              }
            }
          }
        }
      }
    }
  }
  return report;
}

}  // namespace tiacs
