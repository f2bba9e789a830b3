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

// Python bindings (module tiacs._core).

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tiacs/accessibility.hpp"
#include "tiacs/charging_inventory.hpp"
#include "tiacs/pipeline.hpp"
#include "tiacs/road_network.hpp"
#include "tiacs/spatial_stats.hpp"
#include "tiacs/trajectory.hpp"

namespace py = pybind11;
using namespace tiacs;

namespace {

PortType port_of(const std::string& text) { return parse_port_type(text); }

std::vector<Date> dates_of(const std::vector<std::string>& text) {
  std::vector<Date> out;
  for (const auto& t : text) out.push_back(parse_date(t));
  return out;
}

py::dict result_dict(const AccessResult& r, const TouSchedule& schedule) {
  py::dict d;
  d["person_id"] = r.person_id;
  d["port_type"] = std::string(to_string(r.port_type));
  d["d_m"] = r.d_m;
  d["cutoff"] = format_date(r.cutoff);
  d["kind_filter"] = r.segment.kind_label();
  d["tou_filter"] = r.segment.tou_label(schedule);
  d["hours_per_day"] = r.hours_per_day;
  d["hours_weekly"] = r.hours_weekly();
  d["ports_avg"] = r.ports_avg;
  d["accessible_minutes"] = r.accessible_minutes;
  d["port_minutes"] = r.port_minutes;
  return d;
}

py::dict repair_dict(const RepairReport& r) {
  py::dict d;
  d["deficient"] = r.deficient;
  d["resolved_by_donation"] = r.resolved_by_donation;
  d["resolved_by_travel"] = r.resolved_by_travel;
  d["resolved_by_cascade"] = r.resolved_by_cascade;
  d["passes"] = r.passes;
  d["donation_fraction"] = r.donation_fraction();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Trajectory-integrated public charging accessibility";

  // Translators run newest first, so derived types are registered last.
  auto& error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  auto& validation = py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", validation.ptr());
  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
  py::register_exception<StageError>(m, "StageError", error.ptr());

  py::class_<RoadNetwork>(m, "RoadNetwork")
      .def_property_readonly("node_count", &RoadNetwork::node_count)
      .def_property_readonly("edge_count", &RoadNetwork::edge_count)
      .def_property_readonly("warnings", &RoadNetwork::warnings)
      .def("nearest_node",
           [](const RoadNetwork& net, double lon, double lat) {
             const auto s = net.nearest_node({lon, lat});
             return py::make_tuple(s.node, s.distance_m);
           })
      .def("shortest_travel_time", &RoadNetwork::shortest_travel_time, py::arg("origin"), py::arg("dest"))
      .def(
          "distances_from",
          [](const RoadNetwork& net, NodeId source, double max_dist) {
            return net.bounded_distance_search(source, max_dist);
          },
          py::arg("source"), py::arg("max_dist"));
  m.def("load_network", &load_network, py::arg("nodes_csv"), py::arg("edges_csv"));

  py::class_<ChargingStation>(m, "ChargingStation")
      .def_readonly("station_id", &ChargingStation::station_id)
      .def_readonly("l2_ports", &ChargingStation::l2_ports)
      .def_readonly("dcfc_ports", &ChargingStation::dcfc_ports)
      .def_readonly("node", &ChargingStation::node)
      .def_property_readonly("open_date", [](const ChargingStation& s) { return format_date(s.open_date); });
  m.def("load_stations", &load_stations, py::arg("path"), py::arg("network"));

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("person_id", &Trajectory::person_id)
      .def_readonly("travel", &Trajectory::travel)
      .def_property_readonly("stays",
                             [](const Trajectory& t) {
                               py::list out;
                               for (const auto& s : t.stays) {
                                 out.append(py::make_tuple(s.start, s.end, std::string(to_string(s.kind)), s.node));
                               }
                               return out;
                             })
      .def("problems", [](const Trajectory& t) { return check_trajectory(t, true); });
  m.def(
      "load_trajectories",
      [](const std::filesystem::path& path, const RoadNetwork& net, unsigned workers) {
        RepairReport repair;
        auto trajs = load_trajectories(path, net, workers, nullptr, &repair);
        return py::make_tuple(std::move(trajs), repair_dict(repair));
      },
      py::arg("path"), py::arg("network"), py::arg("workers") = 1,
      "Reads raw or processed trajectories; returns (trajectories, repair report).");
  m.def("write_trajectories",
        [](const std::filesystem::path& path, const std::vector<Trajectory>& trajs) { write_trajectories(path, trajs); });

  py::class_<ProximityTable>(m, "ProximityTable")
      .def_property_readonly("radius_m", &ProximityTable::radius_m)
      .def_property_readonly("entry_count", &ProximityTable::entry_count)
      .def("stay_nodes", &ProximityTable::stay_nodes)
      .def("entries_for",
           [](const ProximityTable& t, NodeId node) {
             py::list out;
             for (const auto& e : t.entries_for(node)) out.append(py::make_tuple(t.station_ids()[e.station], e.distance_m));
             return out;
           })
      .def("write", [](const ProximityTable& t, const std::filesystem::path& p) { write_proximity_table(t, p); });
  m.def(
      "build_proximity_table",
      [](const RoadNetwork& net, const std::vector<Trajectory>& trajs, const std::vector<ChargingStation>& stations,
         double radius_m, bool prefilter, unsigned workers) {
        return build_proximity_table(net, stay_nodes_of(trajs), stations, {radius_m, prefilter, workers});
      },
      py::arg("network"), py::arg("trajectories"), py::arg("stations"), py::arg("radius_m") = kProximityRadiusM,
      py::arg("prefilter") = true, py::arg("workers") = 1);

  py::class_<Snapshot>(m, "Snapshot")
      .def_property_readonly("cutoff", [](const Snapshot& s) { return format_date(s.cutoff()); })
      .def("__len__", &Snapshot::size);
  m.def(
      "build_snapshot",
      [](const std::vector<ChargingStation>& stations, const std::string& cutoff) {
        return build_snapshot(stations, parse_date(cutoff));
      },
      py::arg("stations"), py::arg("cutoff"));

  m.def(
      "ti_acs",
      [](const Trajectory& traj, const ProximityTable& table, const Snapshot& snap, const std::string& port_type,
         double d_m, const std::string& segment, bool toy_mode, bool reference) {
        const auto schedule = TouSchedule::standard();
        const AccessQuery q{port_of(port_type), d_m, SegmentSpec::parse(segment, schedule),
                            toy_mode ? PortsNormalization::StayTime : PortsNormalization::Horizon};
        const auto r = reference ? ti_acs_oracle(traj, table, snap, q, schedule) : ti_acs(traj, table, snap, q, schedule);
        return result_dict(r, schedule);
      },
      py::arg("trajectory"), py::arg("table"), py::arg("snapshot"), py::arg("port_type") = "L2",
      py::arg("d_m") = kDefaultThresholdM, py::arg("segment") = "all:all", py::arg("toy_mode") = false,
      py::arg("reference") = false,
      "Accessibility of one trajectory. reference=True uses the minute-by-minute evaluator.");

  m.def(
      "split_by_tou",
      [](int start, int end) {
        const auto schedule = TouSchedule::standard();
        py::list out;
        for (const auto& f : split_interval_by_tou(start, end, schedule)) {
          out.append(py::make_tuple(f.start, f.end, schedule.period(f.period).name));
        }
        return out;
      },
      py::arg("start"), py::arg("end"), "Splits [start, end) minutes of the week into standard TOU fragments.");

  m.def(
      "repair",
      [](const Trajectory& t) {
        RepairReport rep;
        auto r = repair_stays(t, &rep);
        return py::make_tuple(std::move(r), repair_dict(rep));
      },
      py::arg("trajectory"));

  m.def(
      "gini", [](const std::vector<double>& v) { return gini(v); }, py::arg("values"));
  m.def(
      "ols",
      [](const Eigen::VectorXd& y, const Eigen::MatrixXd& X, std::vector<std::string> names) {
        const auto r = ols_fit(y, X, std::move(names));
        py::dict d;
        d["terms"] = r.terms;
        d["beta"] = r.beta;
        d["se"] = r.se;
        d["ci_lo"] = r.ci_lo;
        d["ci_hi"] = r.ci_hi;
        d["p"] = r.p_value;
        d["rss"] = r.rss;
        d["r_squared"] = r.r_squared;
        d["n"] = r.n;
        return d;
      },
      py::arg("y"), py::arg("X"), py::arg("names") = std::vector<std::string>{});

  m.def(
      "synth",
      [](const std::filesystem::path& out, std::uint64_t seed, int rows, int cols, std::size_t stations,
         std::size_t persons, int islands, double long_travel_fraction) {
        SyntheticScenario scn;
        scn.seed = seed;
        scn.grid_rows = rows;
        scn.grid_cols = cols;
        scn.station_count = stations;
        scn.person_count = persons;
        scn.island_count = islands;
        scn.long_travel_fraction = long_travel_fraction;
        const auto f = synth(scn, out);
        py::dict d;
        d["nodes"] = f.nodes;
        d["edges"] = f.edges;
        d["stations"] = f.stations;
        d["trajectories"] = f.trajectories;
        d["tracts"] = f.tracts;
        return d;
      },
      py::arg("out"), py::arg("seed") = 1, py::arg("rows") = 40, py::arg("cols") = 40, py::arg("stations") = 60,
      py::arg("persons") = 200, py::arg("islands") = 2, py::arg("long_travel_fraction") = 0.0,
      "Writes a synthetic scenario; returns the file paths.");

  m.def(
      "run",
      [](const std::filesystem::path& nodes, const std::filesystem::path& edges,
         const std::filesystem::path& stations, const std::filesystem::path& trajectories,
         const std::filesystem::path& out, std::optional<std::filesystem::path> tracts,
         std::vector<std::string> cutoffs, std::vector<double> thresholds, std::vector<std::string> port_types,
         std::vector<std::string> segments, bool toy_mode, bool regression, bool plots, unsigned workers,
         std::optional<std::filesystem::path> table_cache) {
        RunConfig cfg;
        cfg.nodes_csv = nodes;
        cfg.edges_csv = edges;
        cfg.stations_csv = stations;
        cfg.trajectories_csv = trajectories;
        cfg.output_dir = out;
        cfg.tracts_geojson = std::move(tracts);
        cfg.table_cache = std::move(table_cache);
        cfg.cutoffs = dates_of(cutoffs);
        cfg.thresholds = std::move(thresholds);
        cfg.port_types.clear();
        for (const auto& p : port_types) cfg.port_types.push_back(port_of(p));
        cfg.segments = std::move(segments);
        cfg.normalization = toy_mode ? PortsNormalization::StayTime : PortsNormalization::Horizon;
        cfg.regression = regression;
        cfg.plot_data = plots;
        cfg.workers = workers;
        RunSummary s;
        {
          py::gil_scoped_release release;
          s = run_pipeline(cfg);
        }
        py::dict d;
        std::vector<std::string> outputs;
        for (const auto& o : s.outputs) outputs.push_back(o.generic_string());
        d["outputs"] = outputs;
        d["hashes"] = s.hashes;
        d["manifest"] = s.manifest;
        d["persons"] = s.persons;
        d["results"] = s.results;
        d["table_from_cache"] = s.table_from_cache;
        d["repair"] = repair_dict(s.repair);
        return d;
      },
      py::arg("nodes"), py::arg("edges"), py::arg("stations"), py::arg("trajectories"), py::arg("out"),
      py::arg("tracts") = py::none(), py::arg("cutoffs") = std::vector<std::string>{},
      py::arg("thresholds") = std::vector<double>{kDefaultThresholdM},
      py::arg("port_types") = std::vector<std::string>{"L2", "DCFC"},
      py::arg("segments") = std::vector<std::string>{}, py::arg("toy_mode") = false, py::arg("regression") = true,
      py::arg("plots") = true, py::arg("workers") = 1, py::arg("table_cache") = py::none(),
      "Runs the full pipeline; returns a summary with output hashes.");

  m.attr("__version__") = "0.1.0";
}
