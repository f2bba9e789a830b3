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

// tiacs: command-line front end. Exit codes: 0 ok, 2 invalid input, 3 stage failure.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "tiacs/accessibility.hpp"
#include "tiacs/charging_inventory.hpp"
#include "tiacs/parallel.hpp"
#include "tiacs/pipeline.hpp"
#include "tiacs/road_network.hpp"
#include "tiacs/spatial_stats.hpp"
#include "tiacs/trajectory.hpp"

namespace {

using namespace tiacs;
namespace fs = std::filesystem;

constexpr int kExitValidation = 2;
constexpr int kExitStage = 3;

std::vector<Date> parse_dates(const std::vector<std::string>& text) {
  std::vector<Date> out;
  for (const auto& t : text) out.push_back(parse_date(t));
  return out;
}

std::vector<PortType> parse_ports(const std::vector<std::string>& text) {
  std::vector<PortType> out;
  for (const auto& t : text) out.push_back(parse_port_type(t));
  return out;
}

void check_thresholds(const std::vector<double>& thresholds, double radius, bool allow_custom) {
  RunConfig probe;
  probe.nodes_csv = probe.edges_csv = probe.stations_csv = probe.trajectories_csv = probe.output_dir = ".";
  probe.thresholds = thresholds;
  probe.radius_m = radius;
  probe.allow_custom_threshold = allow_custom;
  probe.validate();
}

TouSchedule schedule_from(const std::string& path) {
  return path.empty() ? TouSchedule::standard() : TouSchedule::load(path);
}

std::vector<SegmentSpec> segments_from(const std::vector<std::string>& text, const TouSchedule& schedule) {
  if (text.empty()) return standard_segments(schedule);
  std::vector<SegmentSpec> out;
  for (const auto& t : text) out.push_back(SegmentSpec::parse(t, schedule));
  return out;
}

std::vector<Snapshot> snapshots_from(std::span<const ChargingStation> stations, std::vector<Date> cutoffs) {
  if (cutoffs.empty()) {
    Date latest{std::chrono::year{2100}, std::chrono::month{1}, std::chrono::day{1}};
    if (!stations.empty()) {
      latest = stations.front().open_date;
      for (const auto& s : stations) latest = std::max(latest, s.open_date);
    }
    cutoffs.push_back(latest);
  }
  std::sort(cutoffs.begin(), cutoffs.end());
  cutoffs.erase(std::unique(cutoffs.begin(), cutoffs.end()), cutoffs.end());
  std::vector<Snapshot> out;
  for (auto c : cutoffs) out.push_back(build_snapshot(stations, c));
  return out;
}

// Fills options the command line left unset from a key/value file. Keys are
// option names without the leading dashes ('_' and '-' both accepted),
// optionally inside a [run] section.
void apply_config(CLI::App& cmd, const std::string& path) {
  for (const auto& item : CLI::ConfigINI().from_file(path)) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == cmd.get_name())) {
      throw ValidationError(path + ": unknown section for key '" + item.fullname() + "'");
    }
    std::string name = item.name;
    std::replace(name.begin(), name.end(), '_', '-');
    auto* opt = name == "config" ? nullptr : cmd.get_option_no_throw("--" + name);
    if (opt == nullptr) throw ValidationError(path + ": unknown key '" + item.name + "'");
    if (opt->count() > 0) continue;
    opt->add_result(item.inputs);
    opt->run_callback();
  }
}

void print_repair(const RepairReport& r) {
  std::cout << "repair: deficient=" << r.deficient << " donation=" << r.resolved_by_donation
            << " travel=" << r.resolved_by_travel << " cascade=" << r.resolved_by_cascade << " passes=" << r.passes
            << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory-integrated public charging accessibility"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "tiacs 0.1.0");

  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  auto add_workers = [&](CLI::App* cmd) {
    cmd->add_option("--workers", workers, "Worker threads (TIACS_WORKERS overrides)")->capture_default_str();
  };

  // synth
  SyntheticScenario scn;
  std::string synth_out;
  std::vector<std::string> open_range;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic scenario");
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--seed", scn.seed)->capture_default_str();
  synth_cmd->add_option("--rows", scn.grid_rows)->capture_default_str();
  synth_cmd->add_option("--cols", scn.grid_cols)->capture_default_str();
  synth_cmd->add_option("--edge-length", scn.edge_length_m)->capture_default_str();
  synth_cmd->add_option("--speed-kmh", scn.speed_kmh)->capture_default_str();
  synth_cmd->add_option("--islands", scn.island_count)->capture_default_str();
  synth_cmd->add_option("--stations", scn.station_count)->capture_default_str();
  synth_cmd->add_option("--open-range", open_range, "First and last open date")->expected(2);
  synth_cmd->add_option("--dcfc-fraction", scn.dcfc_fraction)->capture_default_str();
  synth_cmd->add_option("--persons", scn.person_count)->capture_default_str();
  synth_cmd->add_option("--non-commuter-fraction", scn.non_commuter_fraction)->capture_default_str();
  synth_cmd->add_option("--other-stops", scn.other_stops_per_day, "Weights of 0, 1, ... other stops per day");
  synth_cmd->add_option("--activity-radius", scn.activity_radius_m)->capture_default_str();
  synth_cmd->add_option("--long-travel-fraction", scn.long_travel_fraction)->capture_default_str();
  synth_cmd->add_option("--tract-rows", scn.tract_rows)->capture_default_str();
  synth_cmd->add_option("--tract-cols", scn.tract_cols)->capture_default_str();
  synth_cmd->add_option("--missing-income-fraction", scn.missing_income_fraction)->capture_default_str();

  // Options shared by several stages.
  std::string nodes, edges, stations_path, trajectories, tracts_path, table_path, out_path, tou_path;
  std::vector<std::string> cutoffs_text, ports_text{"L2", "DCFC"}, segments_text;
  std::vector<double> thresholds{kDefaultThresholdM};
  double radius = kProximityRadiusM;
  bool allow_custom = false;
  bool toy_mode = false;

  auto add_network = [&](CLI::App* cmd) {
    cmd->add_option("--nodes", nodes, "Node CSV")->required()->check(CLI::ExistingFile);
    cmd->add_option("--edges", edges, "Edge CSV")->required()->check(CLI::ExistingFile);
  };
  auto add_selection = [&](CLI::App* cmd) {
    cmd->add_option("--cutoff", cutoffs_text, "Snapshot cutoff date (repeatable)");
    cmd->add_option("--threshold", thresholds, "Distance threshold in meters (repeatable)")->capture_default_str();
    cmd->add_option("--port-type", ports_text, "L2 and/or DCFC")->capture_default_str();
    cmd->add_option("--segment", segments_text, "Segment kind:tou (repeatable; default: standard seven)");
    cmd->add_option("--tou", tou_path, "TOU schedule file")->check(CLI::ExistingFile);
    cmd->add_option("--radius", radius, "Proximity table radius in meters")->capture_default_str();
    cmd->add_flag("--allow-custom-threshold", allow_custom);
    cmd->add_flag("--toy-mode", toy_mode, "Normalize ports by matched stay time");
  };

  // build-table
  bool no_prefilter = false;
  auto* table_cmd = app.add_subcommand("build-table", "Build the stay-node/charger proximity table");
  add_network(table_cmd);
  table_cmd->add_option("--stations", stations_path)->required()->check(CLI::ExistingFile);
  table_cmd->add_option("--trajectories", trajectories, "Raw or processed trajectories")
      ->required()
      ->check(CLI::ExistingFile);
  table_cmd->add_option("--out", out_path)->required();
  table_cmd->add_option("--radius", radius)->capture_default_str();
  table_cmd->add_flag("--no-prefilter", no_prefilter);
  add_workers(table_cmd);

  // repair
  auto* repair_cmd = app.add_subcommand("repair", "Route raw stays and repair short stays");
  add_network(repair_cmd);
  repair_cmd->add_option("--trajectories", trajectories)->required()->check(CLI::ExistingFile);
  repair_cmd->add_option("--out", out_path, "Processed trajectory CSV")->required();
  add_workers(repair_cmd);

  // compute
  auto* compute_cmd = app.add_subcommand("compute", "Evaluate accessibility for processed trajectories");
  compute_cmd->add_option("--stations", stations_path)->required()->check(CLI::ExistingFile);
  compute_cmd->add_option("--table", table_path)->required()->check(CLI::ExistingFile);
  compute_cmd->add_option("--trajectories", trajectories, "Processed trajectories")
      ->required()
      ->check(CLI::ExistingFile);
  compute_cmd->add_option("--out", out_path, "Results CSV")->required();
  add_selection(compute_cmd);
  add_workers(compute_cmd);

  // aggregate
  std::string results_path;
  auto* aggregate_cmd = app.add_subcommand("aggregate", "Average results per home tract");
  aggregate_cmd->add_option("--results", results_path)->required()->check(CLI::ExistingFile);
  aggregate_cmd->add_option("--trajectories", trajectories, "Processed trajectories")
      ->required()
      ->check(CLI::ExistingFile);
  aggregate_cmd->add_option("--tracts", tracts_path)->required()->check(CLI::ExistingFile);
  aggregate_cmd->add_option("--tou", tou_path)->check(CLI::ExistingFile);
  aggregate_cmd->add_option("--out", out_path, "Tract statistics CSV")->required();

  // stats
  std::string stats_path, plots_dir;
  auto* stats_cmd = app.add_subcommand("stats", "Gini, quantiles and CDFs over tract means");
  stats_cmd->add_option("--tract-stats", stats_path)->required()->check(CLI::ExistingFile);
  stats_cmd->add_option("--tracts", tracts_path)->required()->check(CLI::ExistingFile);
  stats_cmd->add_option("--out", out_path, "Summary CSV")->required();
  stats_cmd->add_option("--plots", plots_dir, "Also write plot tables here");

  // regress
  std::string metric_text = "hours";
  std::string port_text = "L2";
  std::string segment_text = "all:all";
  std::string cutoff_text;
  double threshold = kDefaultThresholdM;
  int income_degree = 1;
  bool mud_only = false;
  auto* regress_cmd = app.add_subcommand("regress", "Group-disparity regression on tract means");
  regress_cmd->add_option("--tract-stats", stats_path)->required()->check(CLI::ExistingFile);
  regress_cmd->add_option("--tracts", tracts_path)->required()->check(CLI::ExistingFile);
  regress_cmd->add_option("--out", out_path, "Regression CSV")->required();
  regress_cmd->add_option("--port-type", port_text)->capture_default_str();
  regress_cmd->add_option("--threshold", threshold)->capture_default_str();
  regress_cmd->add_option("--cutoff", cutoff_text, "Snapshot (default: latest)");
  regress_cmd->add_option("--segment", segment_text)->capture_default_str();
  regress_cmd->add_option("--tou", tou_path)->check(CLI::ExistingFile);
  regress_cmd->add_option("--metric", metric_text, "hours or ports")
      ->check(CLI::IsMember({"hours", "ports"}))
      ->capture_default_str();
  regress_cmd->add_option("--income-degree", income_degree)->check(CLI::Range(0, 4))->capture_default_str();
  regress_cmd->add_flag("--mud-only", mud_only, "Restrict to multi-unit-dwelling tracts");

  // run
  RunConfig cfg;
  std::string cache_path;
  bool no_regression = false, no_mud = false, no_plots = false;
  auto* run_cmd = app.add_subcommand("run", "Run every stage end to end");
  std::string config_path;
  run_cmd->add_option("--config", config_path, "Key/value config file (flags win)")->check(CLI::ExistingFile);
  add_network(run_cmd);
  run_cmd->add_option("--stations", stations_path)->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--trajectories", trajectories, "Raw or processed trajectories")
      ->required()
      ->check(CLI::ExistingFile);
  run_cmd->add_option("--tracts", tracts_path, "Tract GeoJSON")->check(CLI::ExistingFile);
  run_cmd->add_option("--out", out_path, "Output directory")->required();
  run_cmd->add_option("--table-cache", cache_path, "Proximity table cache file");
  add_selection(run_cmd);
  run_cmd->add_option("--income-degree", income_degree)->check(CLI::Range(0, 4))->capture_default_str();
  run_cmd->add_flag("--no-regression", no_regression);
  run_cmd->add_flag("--no-mud-regression", no_mud);
  run_cmd->add_flag("--no-plots", no_plots);
  add_workers(run_cmd);
  // Inputs may come from the config file; RunConfig::validate reports gaps.
  for (auto* opt : run_cmd->get_options()) opt->required(false);

  // verify
  std::size_t sample = 100;
  auto* verify_cmd = app.add_subcommand("verify", "Compare the fast evaluator with the reference on a sample");
  verify_cmd->add_option("--stations", stations_path)->required()->check(CLI::ExistingFile);
  verify_cmd->add_option("--table", table_path)->required()->check(CLI::ExistingFile);
  verify_cmd->add_option("--trajectories", trajectories, "Processed trajectories")
      ->required()
      ->check(CLI::ExistingFile);
  verify_cmd->add_option("--cutoff", cutoffs_text);
  verify_cmd->add_option("--threshold", thresholds)->capture_default_str();
  verify_cmd->add_option("--radius", radius)->capture_default_str();
  verify_cmd->add_option("--tou", tou_path)->check(CLI::ExistingFile);
  verify_cmd->add_option("--sample", sample)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    workers = resolve_workers(workers);
    if (synth_cmd->parsed()) {
      if (!open_range.empty()) {
        scn.open_from = parse_date(open_range[0]);
        scn.open_to = parse_date(open_range[1]);
      }
      synth(scn, synth_out);
      std::cout << "wrote scenario to " << synth_out << '\n';
    } else if (table_cmd->parsed()) {
      const auto net = load_network(nodes, edges);
      const auto stations = load_stations(stations_path, net);
      const auto trajs = load_trajectories(trajectories, net, workers);
      const auto table =
          build_proximity_table(net, stay_nodes_of(trajs), stations, {radius, !no_prefilter, workers});
      write_proximity_table(table, out_path);
      std::cout << "proximity table: " << table.stay_nodes().size() << " stay nodes, " << table.entry_count()
                << " entries\n";
    } else if (repair_cmd->parsed()) {
      const auto net = load_network(nodes, edges);
      RoutingReport routing;
      RepairReport repair;
      const auto trajs = load_trajectories(trajectories, net, workers, &routing, &repair);
      write_trajectories(out_path, trajs);
      std::cout << "routing: trips=" << routing.trips << " routed=" << routing.routed
                << " fallback=" << routing.fallback << '\n';
      print_repair(repair);
    } else if (compute_cmd->parsed()) {
      check_thresholds(thresholds, radius, allow_custom);
      const auto schedule = schedule_from(tou_path);
      const auto stations = read_stations(stations_path);
      const auto table = read_proximity_table(table_path, stations, radius);
      const auto trajs = read_trajectories(trajectories);
      BatchSpec spec;
      spec.port_types = parse_ports(ports_text);
      spec.thresholds = thresholds;
      spec.segments = segments_from(segments_text, schedule);
      spec.normalization = toy_mode ? PortsNormalization::StayTime : PortsNormalization::Horizon;
      spec.workers = workers;
      const auto snapshots = snapshots_from(stations, parse_dates(cutoffs_text));
      const auto results = batch_compute(trajs, table, snapshots, spec, schedule);
      write_results(out_path, results, schedule);
      std::cout << "wrote " << results.size() << " results\n";
    } else if (aggregate_cmd->parsed()) {
      const auto schedule = schedule_from(tou_path);
      const auto results = read_results(results_path, schedule);
      const auto trajs = read_trajectories(trajectories);
      const auto tracts = load_tracts(tracts_path);
      AggregationReport report;
      const auto stats = aggregate_by_tract(results, home_tracts(trajs, tracts), schedule, &report);
      write_tract_stats(out_path, stats);
      std::cout << "aggregated " << stats.size() << " tract rows; unassigned persons: " << report.unassigned_persons
                << '\n';
    } else if (stats_cmd->parsed()) {
      const auto stats = read_tract_stats(stats_path);
      const auto tracts = load_tracts(tracts_path);
      write_summary(out_path, summarize(stats, tracts));
      if (!plots_dir.empty()) emit_plot_data(stats, tracts, {}, plots_dir);
    } else if (regress_cmd->parsed()) {
      const auto schedule = schedule_from(tou_path);
      const auto segment = SegmentSpec::parse(segment_text, schedule);
      const auto stats = read_tract_stats(stats_path);
      auto tracts = load_tracts(tracts_path);
      if (mud_only) tracts = mud_filter(tracts);
      MetricKey key{parse_port_type(port_text), threshold, {}, segment.kind_label(), segment.tou_label(schedule)};
      if (cutoff_text.empty()) {
        bool any = false;
        for (const auto& s : stats) {
          if (s.key.port_type == key.port_type && s.key.d_m == key.d_m && s.key.kind_filter == key.kind_filter &&
              s.key.tou_filter == key.tou_filter && (!any || key.cutoff < s.key.cutoff)) {
            key.cutoff = s.key.cutoff;
            any = true;
          }
        }
        if (!any) throw ValidationError("no tract statistics for the requested series");
      } else {
        key.cutoff = parse_date(cutoff_text);
      }
      std::vector<TractStats> series;
      for (const auto& s : stats) {
        if (s.key == key) series.push_back(s);
      }
      if (series.empty()) throw ValidationError("no tract statistics for the requested series");
      DisparityReport report;
      const auto fit = disparity_regression(series, tracts, income_degree,
                                            metric_text == "hours" ? Metric::Hours : Metric::Ports, &report);
      write_regression(out_path, fit);
      std::cout << "regression on " << report.used << " tracts (dropped: " << report.dropped_missing_income
                << " missing income, " << report.dropped_no_residents << " without residents); R^2 = "
                << fit.r_squared << '\n';
    } else if (run_cmd->parsed()) {
      if (!config_path.empty()) {
        apply_config(*run_cmd, config_path);
        workers = resolve_workers(workers);
      }
      cfg.nodes_csv = nodes;
      cfg.edges_csv = edges;
      cfg.stations_csv = stations_path;
      cfg.trajectories_csv = trajectories;
      if (!tracts_path.empty()) cfg.tracts_geojson = tracts_path;
      cfg.output_dir = out_path;
      if (!cache_path.empty()) cfg.table_cache = cache_path;
      if (!tou_path.empty()) cfg.tou_schedule = tou_path;
      cfg.cutoffs = parse_dates(cutoffs_text);
      cfg.thresholds = thresholds;
      cfg.allow_custom_threshold = allow_custom;
      cfg.radius_m = radius;
      cfg.port_types = parse_ports(ports_text);
      cfg.segments = segments_text;
      cfg.normalization = toy_mode ? PortsNormalization::StayTime : PortsNormalization::Horizon;
      cfg.regression = !no_regression;
      cfg.regression_mud = !no_mud;
      cfg.income_degree = income_degree;
      cfg.plot_data = !no_plots;
      cfg.workers = workers;
      const auto summary = run_pipeline(cfg);
      std::cout << "persons=" << summary.persons << " results=" << summary.results
                << " table_from_cache=" << (summary.table_from_cache ? "yes" : "no") << '\n';
      print_repair(summary.repair);
      std::cout << "manifest: " << summary.manifest.string() << '\n';
    } else if (verify_cmd->parsed()) {
      const auto schedule = schedule_from(tou_path);
      const auto stations = read_stations(stations_path);
      const auto table = read_proximity_table(table_path, stations, radius);
      const auto trajs = read_trajectories(trajectories);
      const auto snapshots = snapshots_from(stations, parse_dates(cutoffs_text));
      const auto report = verify_sample(trajs, table, snapshots, thresholds, sample, schedule);
      std::cout << "verified " << report.persons << " persons, " << report.comparisons << " comparisons, "
                << report.mismatches.size() << " mismatches\n";
      for (const auto& m : report.mismatches) std::cout << "  mismatch: " << m << '\n';
      if (!report.mismatches.empty()) return kExitStage;
    }
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.validation() ? kExitValidation : kExitStage;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStage;
  }
  return 0;
}
