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

#include "tiacs/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "tiacs/csv.hpp"
#include "tiacs/parallel.hpp"

namespace tiacs {

namespace {

double median(std::vector<double> values) {
  const auto n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return (lower + upper) / 2.0;
}

LonLat home_of(const std::vector<Stay>& stays) {
  for (const auto& s : stays) {
    if (s.kind == StayKind::Home) return s.position;
  }
  return stays.empty() ? LonLat{} : stays.front().position;
}

}  // namespace

std::vector<PersonRecord> ingest_raw(const std::filesystem::path& path, const RoadNetwork& net) {
  csv::Reader in(path, {"person_id", "slot", "kind", "lon", "lat"});
  std::map<std::string, PersonRecord> by_person;
  while (in.next()) {
    const std::string id(in[0]);
    if (id.empty()) in.fail("empty person_id");
    RawStay stay;
    const auto slot = in.as_int(1);
    if (slot < 1 || slot > kSlotsPerWeek) in.fail("slot " + std::to_string(slot) + " outside 1..1008");
    stay.slot = static_cast<int>(slot);
    try {
      stay.kind = parse_stay_kind(in[2]);
      stay.position = {in.as_double(3), in.as_double(4)};
      validate_coordinates(stay.position);
    } catch (const ValidationError& e) {
      in.fail(e.what());
    }
    auto& person = by_person[id];
    person.person_id = id;
    if (!person.stays.empty() && person.stays.back().slot >= stay.slot) {
      in.fail("person " + id + ": slot " + std::to_string(stay.slot) + " does not follow slot " +
              std::to_string(person.stays.back().slot));
    }
    person.stays.push_back(stay);
  }
  std::vector<PersonRecord> out;
  out.reserve(by_person.size());
  for (auto& [id, person] : by_person) out.push_back(std::move(person));
  snap_persons(out, net);
  return out;
}

void snap_persons(std::span<PersonRecord> persons, const RoadNetwork& net) {
  for (auto& p : persons) {
    for (auto& s : p.stays) {
      const auto snap = net.nearest_node(s.position);
      s.node = snap.node;
      s.snap_distance_m = snap.distance_m;
    }
  }
}

void write_raw(const std::filesystem::path& path, std::span<const PersonRecord> persons) {
  auto out = csv::open_output(path);
  out << "person_id,slot,kind,lon,lat\n";
  for (const auto& p : persons) {
    for (const auto& s : p.stays) {
      out << p.person_id << ',' << s.slot << ',' << to_string(s.kind) << ',' << format_double(s.position.lon) << ','
          << format_double(s.position.lat) << '\n';
    }
  }
}

std::vector<std::string> check_trajectory(const Trajectory& traj, bool repaired) {
  std::vector<std::string> problems;
  const auto& stays = traj.stays;
  if (stays.empty()) {
    problems.push_back("no stays");
    return problems;
  }
  if (traj.travel.size() + 1 != stays.size()) problems.push_back("travel count does not match stay count");
  if (stays.front().start != 0) problems.push_back("first stay does not start at minute 0");
  if (stays.back().end > kWeekMinutes) problems.push_back("timeline exceeds one week");
  for (std::size_t k = 0; k < stays.size(); ++k) {
    const auto& s = stays[k];
    if (repaired && s.duration() < kMinStayMinutes) {
      problems.push_back("stay " + std::to_string(k) + " lasts " + std::to_string(s.duration()) + " min");
    }
    if (k + 1 < stays.size() && k < traj.travel.size()) {
      const int gap = stays[k + 1].start - s.end;
      if (traj.travel[k] < 0) problems.push_back("negative travel after stay " + std::to_string(k));
      if (gap != traj.travel[k]) problems.push_back("gap after stay " + std::to_string(k) + " != travel time");
    }
  }
  return problems;
}

std::vector<TripLeg> route_legs(const RoadNetwork& net, const PersonRecord& person, SearchWorkspace& ws) {
  const auto& stays = person.stays;
  if (stays.size() < 2) return {};
  std::vector<TripLeg> legs(stays.size() - 1);
  // One search per distinct origin serves all trips leaving it.
  std::map<NodeId, std::vector<std::size_t>> by_origin;
  for (std::size_t k = 0; k + 1 < stays.size(); ++k) {
    legs[k].great_circle_m = great_circle_unchecked(net.node(stays[k].node).position, net.node(stays[k + 1].node).position);
    by_origin[stays[k].node].push_back(k);
  }
  for (const auto& [origin, trips] : by_origin) {
    std::vector<NodeId> dests;
    dests.reserve(trips.size());
    for (auto k : trips) dests.push_back(stays[k + 1].node);
    const auto routes = net.fastest_routes(origin, dests, ws);
    for (std::size_t i = 0; i < trips.size(); ++i) legs[trips[i]].route = routes[i];
  }
  return legs;
}

FallbackModel FallbackModel::fit(std::span<const TripLeg> legs) {
  std::vector<double> speeds;
  std::vector<double> detours;
  for (const auto& leg : legs) {
    if (!leg.route) continue;
    if (leg.route->seconds > 0.0 && leg.route->meters > 0.0) speeds.push_back(leg.route->meters / leg.route->seconds);
    if (leg.great_circle_m > 0.0 && leg.route->meters > 0.0) detours.push_back(leg.route->meters / leg.great_circle_m);
  }
  FallbackModel model;
  if (!speeds.empty()) model.median_speed_mps = median(std::move(speeds));
  if (!detours.empty()) model.detour_factor = median(std::move(detours));
  return model;
}

int travel_minutes(const TripLeg& leg, const FallbackModel& fallback) {
  const double seconds =
      leg.route ? leg.route->seconds : leg.great_circle_m * fallback.detour_factor / fallback.median_speed_mps;
  return static_cast<int>(std::floor(seconds / 60.0 + 0.5)) + kTravelBufferMinutes;
}

Trajectory assemble_trajectory(const PersonRecord& person, std::span<const TripLeg> legs,
                               const FallbackModel& fallback) {
  const auto& raw = person.stays;
  if (raw.empty()) throw ValidationError("person " + person.person_id + " has no stays");
  if (legs.size() + 1 != raw.size()) throw PreconditionError("person " + person.person_id + ": leg count mismatch");
  Trajectory traj;
  traj.person_id = person.person_id;
  traj.travel.reserve(legs.size());
  for (const auto& leg : legs) traj.travel.push_back(travel_minutes(leg, fallback));
  traj.stays.reserve(raw.size());
  for (std::size_t k = 0; k < raw.size(); ++k) {
    Stay s;
    s.kind = raw[k].kind;
    s.node = raw[k].node;
    s.position = raw[k].position;
    s.start = k == 0 ? 0 : kSlotMinutes * (raw[k].slot - 1) + traj.travel[k - 1];
    s.end = k + 1 == raw.size() ? kWeekMinutes : kSlotMinutes * (raw[k + 1].slot - 1);
    traj.stays.push_back(s);
  }
  traj.home = home_of(traj.stays);
  return traj;
}

std::vector<Trajectory> route_travel(const RoadNetwork& net, std::span<const PersonRecord> persons, unsigned workers,
                                     RoutingReport* report) {
  std::vector<std::vector<TripLeg>> legs(persons.size());
  parallel_for(persons.size(), workers, [&](std::size_t i) {
    thread_local SearchWorkspace ws;
    legs[i] = route_legs(net, persons[i], ws);
  });

  std::vector<TripLeg> all;
  for (const auto& l : legs) all.insert(all.end(), l.begin(), l.end());
  const auto model = FallbackModel::fit(all);

  std::vector<Trajectory> out(persons.size());
  parallel_for(persons.size(), workers, [&](std::size_t i) { out[i] = assemble_trajectory(persons[i], legs[i], model); });

  if (report != nullptr) {
    report->trips = all.size();
    report->routed = static_cast<std::size_t>(std::count_if(all.begin(), all.end(), [](const TripLeg& l) { return l.route.has_value(); }));
    report->fallback = report->trips - report->routed;
    report->model = model;
  }
  return out;
}

RepairReport& RepairReport::operator+=(const RepairReport& o) {
  deficient += o.deficient;
  resolved_by_donation += o.resolved_by_donation;
  resolved_by_travel += o.resolved_by_travel;
  resolved_by_cascade += o.resolved_by_cascade;
  advance_steps += o.advance_steps;
  delay_steps += o.delay_steps;
  passes = std::max(passes, o.passes);
  return *this;
}

double RepairReport::donation_fraction() const {
  return deficient == 0 ? 1.0 : static_cast<double>(resolved_by_donation) / static_cast<double>(deficient);
}

Trajectory repair_stays(const Trajectory& traj, RepairReport* report) {
  if (traj.stays.empty()) return traj;
  const std::size_t n = traj.stays.size();
  if (traj.travel.size() + 1 != n) throw PreconditionError("person " + traj.person_id + ": travel/stay count mismatch");

  // Work on durations and gaps; the timeline is their prefix sum, so moving
  // minutes between segments shifts everything in between automatically.
  std::vector<int> dur(n);
  std::vector<int> gap(traj.travel);
  for (std::size_t k = 0; k < n; ++k) dur[k] = traj.stays[k].duration();
  const long span = static_cast<long>(traj.stays.back().end) - traj.stays.front().start;
  if (static_cast<long>(kMinStayMinutes) * static_cast<long>(n) > span) {
    throw ValidationError("person " + traj.person_id + ": " + std::to_string(n) + " stays cannot fit in " +
                          std::to_string(span) + " minutes at 5 minutes each");
  }

  RepairReport local;
  std::vector<char> initially_deficient(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    if (dur[k] < kMinStayMinutes) {
      initially_deficient[k] = 1;
      ++local.deficient;
    }
  }

  auto can_donate = [&](std::size_t j) { return dur[j] - kRepairStepMinutes >= kMinStayMinutes; };
  for (int pass = 0; pass < kMaxRepairPasses; ++pass) {
    bool any = false;
    for (std::size_t k = 0; k < n; ++k) {
      if (dur[k] >= kMinStayMinutes) continue;
      any = true;
      if (k > 0 && can_donate(k - 1)) {
        dur[k - 1] -= kRepairStepMinutes;
        dur[k] += kRepairStepMinutes;
        ++local.advance_steps;
      } else if (k + 1 < n && can_donate(k + 1)) {
        dur[k + 1] -= kRepairStepMinutes;
        dur[k] += kRepairStepMinutes;
        ++local.delay_steps;
      }
    }
    if (!any) break;
    ++local.passes;
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (initially_deficient[k] && dur[k] >= kMinStayMinutes) ++local.resolved_by_donation;
  }

  for (std::size_t k = 0; k < n; ++k) {
    if (dur[k] >= kMinStayMinutes) continue;
    int need = kMinStayMinutes - dur[k];
    auto take = [&](int& slack_holder, int floor) {
      const int x = std::min(need, std::max(0, slack_holder - floor));
      slack_holder -= x;
      dur[k] += x;
      need -= x;
    };
    if (k > 0) take(gap[k - 1], 0);
    if (need > 0 && k + 1 < n) take(gap[k], 0);
    if (need == 0) {
      ++local.resolved_by_travel;
      continue;
    }
    // Nearest slack first, left before right at equal distance. Segment
    // order to the left: stay k-1, gap k-2, stay k-2, ...; to the right:
    // stay k+1, gap k+1, stay k+2, ...
    for (std::size_t step = 1; need > 0 && step <= 2 * n; ++step) {
      const std::size_t hop = (step + 1) / 2;
      const bool is_stay = step % 2 == 1;
      if (k >= hop) {
        const std::size_t j = k - hop;
        if (is_stay) {
          take(dur[j], kMinStayMinutes);
        } else if (j >= 1) {
          take(gap[j - 1], 0);
        }
      }
      if (need > 0 && k + hop < n) {
        const std::size_t j = k + hop;
        if (is_stay) {
          take(dur[j], kMinStayMinutes);
        } else if (j + 1 < n) {
          take(gap[j], 0);
        }
      }
    }
    if (need > 0) throw ValidationError("person " + traj.person_id + ": cannot repair stay " + std::to_string(k));
    ++local.resolved_by_cascade;
  }

  Trajectory out = traj;
  int t = traj.stays.front().start;
  for (std::size_t k = 0; k < n; ++k) {
    out.stays[k].start = t;
    out.stays[k].end = t + dur[k];
    t = out.stays[k].end;
    if (k + 1 < n) {
      out.travel[k] = gap[k];
      t += gap[k];
    }
  }
  if (report != nullptr) *report += local;
  return out;
}

void write_trajectories(const std::filesystem::path& path, std::span<const Trajectory> trajs) {
  auto out = csv::open_output(path);
  out << "person_id,start_min,end_min,kind,node_id,lon,lat\n";
  for (const auto& t : trajs) {
    for (const auto& s : t.stays) {
      out << t.person_id << ',' << s.start << ',' << s.end << ',' << to_string(s.kind) << ',' << s.node << ','
          << format_double(s.position.lon) << ',' << format_double(s.position.lat) << '\n';
    }
  }
}

std::vector<Trajectory> read_trajectories(const std::filesystem::path& path) {
  csv::Reader in(path, {"person_id", "start_min", "end_min", "kind", "node_id", "lon", "lat"});
  std::map<std::string, Trajectory> by_person;
  while (in.next()) {
    const std::string id(in[0]);
    if (id.empty()) in.fail("empty person_id");
    Stay s;
    s.start = static_cast<int>(in.as_int(1));
    s.end = static_cast<int>(in.as_int(2));
    try {
      s.kind = parse_stay_kind(in[3]);
    } catch (const ValidationError& e) {
      in.fail(e.what());
    }
    s.node = in.as_int(4);
    s.position = {in.as_double(5), in.as_double(6)};
    if (s.start < 0 || s.end > kWeekMinutes || s.start >= s.end) {
      in.fail("stay [" + std::to_string(s.start) + ", " + std::to_string(s.end) + ") is not a valid interval");
    }
    auto& traj = by_person[id];
    traj.person_id = id;
    if (!traj.stays.empty()) {
      const int gap = s.start - traj.stays.back().end;
      if (gap < 0) in.fail("person " + id + ": stay overlaps the previous one");
      traj.travel.push_back(gap);
    } else if (s.start != 0) {
      in.fail("person " + id + ": first stay must start at minute 0");
    }
    traj.stays.push_back(s);
  }
  std::vector<Trajectory> out;
  out.reserve(by_person.size());
  for (auto& [id, traj] : by_person) {
    traj.home = home_of(traj.stays);
    out.push_back(std::move(traj));
  }
  return out;
}

}  // namespace tiacs
