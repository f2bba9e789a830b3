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

#include "tiacs/accessibility.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "tiacs/csv.hpp"
#include "tiacs/parallel.hpp"

namespace tiacs {

namespace {

constexpr int kDaysPerWeek = 7;

int parse_clock(std::string_view text) {
  auto bad = [&] { return ValidationError("malformed clock time '" + std::string(text) + "' (expected HH:MM)"); };
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw bad();
  int h = 0;
  int m = 0;
  auto h_part = text.substr(0, colon);
  auto m_part = text.substr(colon + 1);
  auto [p1, e1] = std::from_chars(h_part.data(), h_part.data() + h_part.size(), h);
  auto [p2, e2] = std::from_chars(m_part.data(), m_part.data() + m_part.size(), m);
  if (e1 != std::errc{} || e2 != std::errc{} || p1 != h_part.data() + h_part.size() ||
      p2 != m_part.data() + m_part.size() || h < 0 || h > 24 || m < 0 || m > 59 || (h == 24 && m != 0)) {
    throw bad();
  }
  return h * 60 + m;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

void check_threshold(const ProximityTable& table, double d) {
  if (!(d >= 0.0) || d > table.radius_m()) {
    throw PreconditionError("distance threshold " + format_double(d) + " m outside [0, " +
                            format_double(table.radius_m()) + "] m covered by the proximity table");
  }
}

void finalize(AccessResult& r, std::int64_t accessible, std::int64_t port_minutes, std::int64_t stay_minutes,
              PortsNormalization norm, int horizon) {
  r.accessible_minutes = accessible;
  r.port_minutes = port_minutes;
  r.hours_per_day = static_cast<double>(accessible) / (60.0 * kDaysPerWeek);
  if (norm == PortsNormalization::StayTime) {
    r.ports_avg = stay_minutes > 0 ? static_cast<double>(port_minutes) / static_cast<double>(stay_minutes) : 0.0;
  } else {
    r.ports_avg = static_cast<double>(port_minutes) / static_cast<double>(horizon);
  }
}

AccessResult make_result(const Trajectory& traj, const Snapshot& snapshot, const AccessQuery& q) {
  AccessResult r;
  r.person_id = traj.person_id;
  r.port_type = q.port_type;
  r.d_m = q.d_m;
  r.cutoff = snapshot.cutoff();
  r.segment = q.segment;
  return r;
}

}  // namespace

int TouPeriod::daily_minutes() const {
  int total = 0;
  for (const auto& w : windows) total += w.end - w.begin;
  return total;
}

TouSchedule::TouSchedule(std::vector<TouPeriod> periods) : periods_(std::move(periods)) {
  if (periods_.empty() || periods_.size() > 32) throw ValidationError("a TOU schedule needs 1..32 periods");
  std::set<std::string> names;
  std::array<int, kDayMinutes> cover{};
  for (std::size_t p = 0; p < periods_.size(); ++p) {
    const auto& period = periods_[p];
    if (period.name.empty() || period.name == "all") throw ValidationError("invalid TOU period name '" + period.name + "'");
    if (!names.insert(period.name).second) throw ValidationError("duplicate TOU period " + period.name);
    for (const auto& w : period.windows) {
      if (w.begin < 0 || w.end > kDayMinutes || w.begin >= w.end) {
        throw ValidationError("TOU period " + period.name + " has an invalid window");
      }
      for (int m = w.begin; m < w.end; ++m) {
        ++cover[static_cast<std::size_t>(m)];
        minute_period_[static_cast<std::size_t>(m)] = static_cast<std::uint8_t>(p);
      }
    }
  }
  for (int m = 0; m < kDayMinutes; ++m) {
    if (cover[static_cast<std::size_t>(m)] != 1) {
      throw ValidationError("TOU periods must cover every minute of the day exactly once (minute " +
                            std::to_string(m) + " covered " + std::to_string(cover[static_cast<std::size_t>(m)]) +
                            " times)");
    }
  }
  run_end_[kDayMinutes - 1] = kDayMinutes;
  for (int m = kDayMinutes - 2; m >= 0; --m) {
    const auto i = static_cast<std::size_t>(m);
    run_end_[i] = minute_period_[i] == minute_period_[i + 1] ? run_end_[i + 1] : static_cast<std::int16_t>(m + 1);
  }
}

TouSchedule TouSchedule::standard() {
  return TouSchedule({
      {"super_off_peak", {{9 * 60, 14 * 60}}},
      {"off_peak", {{21 * 60, 24 * 60}, {0, 9 * 60}, {14 * 60, 16 * 60}}},
      {"peak", {{16 * 60, 21 * 60}}},
  });
}

TouSchedule TouSchedule::parse(std::string_view text) {
  std::vector<TouPeriod> periods;
  for (auto line : csv::split(text, '\n')) {
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string_view::npos) throw ValidationError("TOU line '" + std::string(line) + "' lacks a comma");
    TouPeriod period;
    period.name = std::string(trim(line.substr(0, comma)));
    for (auto window : csv::split(line.substr(comma + 1), ';')) {
      window = trim(window);
      const auto dash = window.find('-');
      if (dash == std::string_view::npos) throw ValidationError("TOU window '" + std::string(window) + "' lacks '-'");
      period.windows.push_back({parse_clock(trim(window.substr(0, dash))), parse_clock(trim(window.substr(dash + 1)))});
    }
    periods.push_back(std::move(period));
  }
  return TouSchedule(std::move(periods));
}

TouSchedule TouSchedule::load(const std::filesystem::path& path) { return parse(read_file(path)); }

std::optional<std::size_t> TouSchedule::find(std::string_view name) const {
  for (std::size_t i = 0; i < periods_.size(); ++i) {
    if (periods_[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<TouFragment> split_interval_by_tou(int start, int end, const TouSchedule& schedule) {
  std::vector<TouFragment> out;
  if (end <= start) return out;
  int t = start;
  while (t < end) {
    const int day_start = t - ((t % kDayMinutes) + kDayMinutes) % kDayMinutes;
    const int minute = t - day_start;
    const auto period = schedule.period_at(minute);
    const int stop = std::min(end, day_start + schedule.run_end(minute));
    if (!out.empty() && out.back().period == period && out.back().end == t) {
      out.back().end = stop;
    } else {
      out.push_back({t, stop, period});
    }
    t = stop;
  }
  return out;
}

std::vector<TouFragment> split_stay_by_tou(const Stay& stay, const TouSchedule& schedule) {
  return split_interval_by_tou(stay.start, stay.end, schedule);
}

SegmentSpec SegmentSpec::parse(std::string_view text, const TouSchedule& schedule) {
  auto bad = [&](const std::string& why) { return ValidationError("segment '" + std::string(text) + "': " + why); };
  auto parse_kinds = [&](std::string_view part) -> std::optional<std::uint8_t> {
    if (part == "all") return kAllKinds;
    std::uint8_t mask = 0;
    for (auto name : csv::split(part, '+')) {
      if (name == "home") mask |= kind_bit(StayKind::Home);
      else if (name == "work") mask |= kind_bit(StayKind::Work);
      else if (name == "other") mask |= kind_bit(StayKind::Other);
      else return std::nullopt;
    }
    return mask;
  };
  auto parse_periods = [&](std::string_view part) -> std::optional<std::optional<std::uint32_t>> {
    if (part == "all") return std::optional<std::uint32_t>{};
    std::uint32_t mask = 0;
    for (auto name : csv::split(part, '+')) {
      const auto p = schedule.find(name);
      if (!p) return std::nullopt;
      mask |= std::uint32_t{1} << *p;
    }
    return std::optional<std::uint32_t>{mask};
  };

  SegmentSpec spec;
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    if (auto kinds = parse_kinds(text)) {
      spec.kinds = *kinds;
    } else if (auto periods = parse_periods(text)) {
      spec.periods = *periods;
    } else {
      throw bad("unknown stay kind or TOU period");
    }
  } else {
    auto kinds = parse_kinds(text.substr(0, colon));
    if (!kinds) throw bad("unknown stay kind");
    auto periods = parse_periods(text.substr(colon + 1));
    if (!periods) throw bad("unknown TOU period");
    spec.kinds = *kinds;
    spec.periods = *periods;
  }
  spec.validate(schedule);
  return spec;
}

void SegmentSpec::validate(const TouSchedule& schedule) const {
  if (kinds == 0 || (kinds & ~kAllKinds) != 0) throw ValidationError("segment kind filter must be a non-empty subset");
  if (periods) {
    if (*periods == 0) throw ValidationError("segment TOU filter must be non-empty");
    if (schedule.size() < 32 && (*periods >> schedule.size()) != 0) {
      throw ValidationError("segment TOU filter names a period the schedule lacks");
    }
  }
}

int SegmentSpec::horizon_minutes(const TouSchedule& schedule) const {
  if (!periods) return kWeekMinutes;
  int daily = 0;
  for (std::size_t p = 0; p < schedule.size(); ++p) {
    if (matches_period(p)) daily += schedule.period(p).daily_minutes();
  }
  return daily * kDaysPerWeek;
}

std::string SegmentSpec::kind_label() const {
  if (kinds == kAllKinds) return "all";
  std::string out;
  for (auto kind : {StayKind::Home, StayKind::Work, StayKind::Other}) {
    if (!matches_kind(kind)) continue;
    if (!out.empty()) out += '+';
    out += to_string(kind);
  }
  return out;
}

std::string SegmentSpec::tou_label(const TouSchedule& schedule) const {
  if (!periods) return "all";
  std::string out;
  for (std::size_t p = 0; p < schedule.size(); ++p) {
    if (!matches_period(p)) continue;
    if (!out.empty()) out += '+';
    out += schedule.period(p).name;
  }
  return out;
}

std::vector<SegmentSpec> standard_segments(const TouSchedule& schedule) {
  std::vector<SegmentSpec> out{SegmentSpec::all(), SegmentSpec::of_kind(StayKind::Home),
                               SegmentSpec::of_kind(StayKind::Work), SegmentSpec::of_kind(StayKind::Other)};
  for (std::size_t p = 0; p < schedule.size(); ++p) out.push_back(SegmentSpec::of_period(p));
  return out;
}

AccessResult ti_acs(const Trajectory& traj, const ProximityTable& table, const Snapshot& snapshot,
                    const AccessQuery& q, const TouSchedule& schedule) {
  check_threshold(table, q.d_m);
  q.segment.validate(schedule);
  std::int64_t accessible = 0;
  std::int64_t port_minutes = 0;
  std::int64_t stay_minutes = 0;
  for (const auto& stay : traj.stays) {
    if (!q.segment.matches_kind(stay.kind) || stay.duration() <= 0) continue;
    std::int64_t matched = 0;
    if (!q.segment.periods) {
      matched = stay.duration();
    } else {
      for (const auto& f : split_stay_by_tou(stay, schedule)) {
        if (q.segment.matches_period(f.period)) matched += f.end - f.start;
      }
    }
    if (matched == 0) continue;
    const int ports = ports_within(table, snapshot, stay.node, q.d_m, q.port_type);
    if (ports >= 1) accessible += matched;
    port_minutes += matched * ports;
    stay_minutes += matched;
  }
  auto r = make_result(traj, snapshot, q);
  finalize(r, accessible, port_minutes, stay_minutes, q.normalization, q.segment.horizon_minutes(schedule));
  return r;
}

AccessResult ti_acs_oracle(const Trajectory& traj, const ProximityTable& table, const Snapshot& snapshot,
                           const AccessQuery& q, const TouSchedule& schedule) {
  check_threshold(table, q.d_m);
  q.segment.validate(schedule);
  std::vector<int> ports_cache(traj.stays.size(), -1);
  std::int64_t accessible = 0;
  std::int64_t port_minutes = 0;
  std::int64_t stay_minutes = 0;
  std::size_t k = 0;
  for (int t = 0; t < kWeekMinutes; ++t) {
    // Location at minute t: the stay covering [t, t+1), or moving.
    while (k < traj.stays.size() && traj.stays[k].end <= t) ++k;
    if (k == traj.stays.size() || traj.stays[k].start > t) continue;
    const auto& stay = traj.stays[k];
    if (!q.segment.matches_kind(stay.kind)) continue;
    if (!q.segment.matches_period(schedule.period_at(t % kDayMinutes))) continue;
    if (ports_cache[k] < 0) ports_cache[k] = ports_within(table, snapshot, stay.node, q.d_m, q.port_type);
    const int ports = ports_cache[k];
    if (ports >= 1) ++accessible;
    port_minutes += ports;
    ++stay_minutes;
  }
  auto r = make_result(traj, snapshot, q);
  finalize(r, accessible, port_minutes, stay_minutes, q.normalization, q.segment.horizon_minutes(schedule));
  return r;
}

std::vector<AccessResult> batch_compute(std::span<const Trajectory> trajs, const ProximityTable& table,
                                        std::span<const Snapshot> snapshots, const BatchSpec& spec,
                                        const TouSchedule& schedule) {
  for (double d : spec.thresholds) check_threshold(table, d);
  std::vector<int> horizons;
  for (const auto& seg : spec.segments) {
    seg.validate(schedule);
    horizons.push_back(seg.horizon_minutes(schedule));
  }
  const std::size_t per_person = snapshots.size() * spec.port_types.size() * spec.thresholds.size() * spec.segments.size();

  std::vector<std::vector<AccessResult>> per(trajs.size());
  parallel_for(trajs.size(), spec.workers, [&](std::size_t i) {
    const auto& traj = trajs[i];
    const std::size_t n = traj.stays.size();
    const std::size_t periods = schedule.size();
    // Stay minutes per TOU period, computed once and shared by all segments.
    std::vector<std::int64_t> minutes(n * periods, 0);
    for (std::size_t k = 0; k < n; ++k) {
      for (const auto& f : split_stay_by_tou(traj.stays[k], schedule)) minutes[k * periods + f.period] += f.end - f.start;
    }
    std::vector<std::int64_t> matched(n * spec.segments.size(), 0);
    for (std::size_t s = 0; s < spec.segments.size(); ++s) {
      const auto& seg = spec.segments[s];
      for (std::size_t k = 0; k < n; ++k) {
        const auto& stay = traj.stays[k];
        if (!seg.matches_kind(stay.kind) || stay.duration() <= 0) continue;
        std::int64_t m = 0;
        if (!seg.periods) {
          m = stay.duration();
        } else {
          for (std::size_t p = 0; p < periods; ++p) {
            if (seg.matches_period(p)) m += minutes[k * periods + p];
          }
        }
        matched[s * n + k] = m;
      }
    }

    auto& out = per[i];
    out.reserve(per_person);
    std::vector<int> ports(n);
    for (const auto& snapshot : snapshots) {
      for (auto type : spec.port_types) {
        for (double d : spec.thresholds) {
          for (std::size_t k = 0; k < n; ++k) ports[k] = ports_within(table, snapshot, traj.stays[k].node, d, type);
          for (std::size_t s = 0; s < spec.segments.size(); ++s) {
            std::int64_t accessible = 0;
            std::int64_t port_minutes = 0;
            std::int64_t stay_minutes = 0;
            for (std::size_t k = 0; k < n; ++k) {
              const auto m = matched[s * n + k];
              if (m == 0) continue;
              if (ports[k] >= 1) accessible += m;
              port_minutes += m * ports[k];
              stay_minutes += m;
            }
            const AccessQuery q{type, d, spec.segments[s], spec.normalization};
            auto r = make_result(traj, snapshot, q);
            finalize(r, accessible, port_minutes, stay_minutes, spec.normalization, horizons[s]);
            out.push_back(std::move(r));
          }
        }
      }
    }
  });

  std::vector<AccessResult> results;
  results.reserve(trajs.size() * per_person);
  for (auto& v : per) {
    std::move(v.begin(), v.end(), std::back_inserter(results));
    v = {};
  }
  return results;
}

void write_results(const std::filesystem::path& path, std::span<const AccessResult> results,
                   const TouSchedule& schedule) {
  auto out = csv::open_output(path);
  out << "person_id,port_type,d_m,cutoff,kind_filter,tou_filter,hours_per_day,ports_avg\n";
  for (const auto& r : results) {
    out << r.person_id << ',' << to_string(r.port_type) << ',' << format_double(r.d_m) << ','
        << format_date(r.cutoff) << ',' << r.segment.kind_label() << ',' << r.segment.tou_label(schedule) << ','
        << format_double(r.hours_per_day) << ',' << format_double(r.ports_avg) << '\n';
  }
}

std::vector<AccessResult> read_results(const std::filesystem::path& path, const TouSchedule& schedule) {
  csv::Reader in(path, {"person_id", "port_type", "d_m", "cutoff", "kind_filter", "tou_filter", "hours_per_day",
                        "ports_avg"});
  std::vector<AccessResult> out;
  while (in.next()) {
    AccessResult r;
    r.person_id = std::string(in[0]);
    try {
      r.port_type = parse_port_type(in[1]);
      r.cutoff = parse_date(in[3]);
      r.segment = SegmentSpec::parse(std::string(in[4]) + ":" + std::string(in[5]), schedule);
    } catch (const ValidationError& e) {
      in.fail(e.what());
    }
    r.d_m = in.as_double(2);
    r.hours_per_day = in.as_double(6);
    r.ports_avg = in.as_double(7);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace tiacs
