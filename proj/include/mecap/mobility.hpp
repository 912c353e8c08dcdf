#pragma once

// Time-indexed vehicle positions inside a bounded square: a synthetic
// random-waypoint generator and a CSV trace replayer behind one query
// interface. Either way a trajectory is a piecewise-linear sequence of
// (time, position) knots.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "mecap/config.hpp"
#include "mecap/engine.hpp"
#include "mecap/errors.hpp"

namespace mecap {

struct Position {
  double x_m = 0.0;
  double y_m = 0.0;
};

inline double distance_m(const Position& a, const Position& b) {
  return std::hypot(a.x_m - b.x_m, a.y_m - b.y_m);
}

namespace detail {

struct Knot {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
};

inline Position interpolate(const std::vector<Knot>& knots, double t) {
  if (t <= knots.front().t) {
    return {knots.front().x, knots.front().y};
  }
  if (t >= knots.back().t) {
    return {knots.back().x, knots.back().y};
  }
  const auto it = std::upper_bound(
      knots.begin(), knots.end(), t,
      [](double value, const Knot& k) { return value < k.t; });
  const Knot& hi = *it;
  const Knot& lo = *(it - 1);
  const double span = hi.t - lo.t;
  if (span <= 0.0) {
    return {hi.x, hi.y};
  }
  const double w = (t - lo.t) / span;
  return {lo.x + w * (hi.x - lo.x), lo.y + w * (hi.y - lo.y)};
}

}  // namespace detail

// Parsed trace file: one knot sequence per vehicle id as it appears in the
// file. Immutable once loaded.
struct Trace {
  std::unordered_map<std::uint64_t, std::vector<detail::Knot>> by_vehicle;

  std::size_t vehicle_count() const { return by_vehicle.size(); }
};

namespace detail {

inline double parse_trace_number(const std::string& field,
                                 const std::string& context) {
  double v = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw ParseError(context + ": bad number '" + field + "'");
  }
  return v;
}

inline std::uint64_t parse_trace_id(const std::string& field,
                                    const std::string& context) {
  std::uint64_t v = 0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw ParseError(context + ": bad vehicle id '" + field + "'");
  }
  return v;
}

}  // namespace detail

// Reads `t_s,vehicle_id,x_m,y_m` rows. Timestamps must be nondecreasing per
// vehicle; the header row is mandatory and checked verbatim.
inline Trace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open trace file: " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(path + ": empty file, no vehicles");
  }
  if (!line.empty() && line.back() == '\r') {
    line.pop_back();
  }
  if (line != "t_s,vehicle_id,x_m,y_m") {
    throw ParseError(path + ":1: expected header 't_s,vehicle_id,x_m,y_m'");
  }
  Trace trace;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    const std::string context = path + ":" + std::to_string(line_no);
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) {
        break;
      }
      start = comma + 1;
    }
    if (fields.size() != 4) {
      throw ParseError(context + ": expected 4 fields, got " +
                       std::to_string(fields.size()));
    }
    const double t = detail::parse_trace_number(fields[0], context);
    const std::uint64_t id = detail::parse_trace_id(fields[1], context);
    const double x = detail::parse_trace_number(fields[2], context);
    const double y = detail::parse_trace_number(fields[3], context);
    auto& knots = trace.by_vehicle[id];
    if (!knots.empty() && t < knots.back().t) {
      throw ValidationError(context + ": decreasing timestamp for vehicle " +
                            std::to_string(id));
    }
    knots.push_back({t, x, y});
  }
  if (trace.by_vehicle.empty()) {
    throw ParseError(path + ": no vehicles");
  }
  return trace;
}

// Position source for one run. Random-waypoint trajectories are generated
// lazily, each vehicle from its own random stream, so the generation order
// across vehicles cannot change anyone's path. Trace queries clamp into the
// configured area; waypoints are sampled inside it to begin with.
class Mobility {
 public:
  // Random-waypoint field over vehicles 0..n-1.
  Mobility(const MobilityModel& model, std::uint64_t n_vehicles,
           std::uint64_t root_seed, std::uint64_t repetition)
      : model_(model), n_(n_vehicles) {
    model_.validate();
    if (model_.kind != MobilityKind::RandomWaypoint) {
      throw ValidationError(
          "mobility: this constructor is for random_waypoint");
    }
    knots_.resize(n_);
    streams_.reserve(n_);
    for (std::uint64_t v = 0; v < n_; ++v) {
      streams_.emplace_back(
          root_seed, StreamKey{repetition, v, stream_purpose::kMobility});
      const double x = streams_[v].sample_uniform(0.0, model_.area_side_m);
      const double y = streams_[v].sample_uniform(0.0, model_.area_side_m);
      knots_[v].push_back({0.0, x, y});
    }
  }

  // Trace replay; vehicles 0..n-1 must all appear in the trace.
  Mobility(const MobilityModel& model, std::uint64_t n_vehicles, Trace trace)
      : model_(model), n_(n_vehicles), from_trace_(true) {
    if (!(model_.area_side_m > 0.0)) {
      throw ValidationError("mobility.area_side_m: must be > 0");
    }
    knots_.resize(n_);
    for (std::uint64_t v = 0; v < n_; ++v) {
      const auto it = trace.by_vehicle.find(v);
      if (it == trace.by_vehicle.end()) {
        throw LookupError("trace has no vehicle " + std::to_string(v) +
                          " (need ids 0.." + std::to_string(n_ - 1) + ")");
      }
      knots_[v] = std::move(it->second);
    }
  }

  std::uint64_t vehicle_count() const { return n_; }

  Position position_at(std::uint64_t vehicle, double t) {
    if (vehicle >= n_) {
      throw LookupError("unknown vehicle " + std::to_string(vehicle));
    }
    if (!from_trace_) {
      extend_vehicle(vehicle, t);
    }
    Position p = detail::interpolate(knots_[vehicle], t);
    p.x_m = std::clamp(p.x_m, 0.0, model_.area_side_m);
    p.y_m = std::clamp(p.y_m, 0.0, model_.area_side_m);
    return p;
  }

  // All vehicles other than center within the given distance of it,
  // inclusive, by pairwise scan.
  std::vector<std::uint64_t> neighbors_within(std::uint64_t center,
                                              double radius_m, double t) {
    if (!(radius_m >= 0.0)) {
      throw ValidationError("neighbors_within: radius must be >= 0");
    }
    const Position c = position_at(center, t);
    std::vector<std::uint64_t> out;
    for (std::uint64_t v = 0; v < n_; ++v) {
      if (v == center) {
        continue;
      }
      if (distance_m(c, position_at(v, t)) <= radius_m) {
        out.push_back(v);
      }
    }
    return out;
  }

  // Pre-generates trajectories up to t for every vehicle. Purely an
  // amortization hook; queries extend on demand anyway.
  void extend_to(double t) {
    if (from_trace_) {
      return;
    }
    for (std::uint64_t v = 0; v < n_; ++v) {
      extend_vehicle(v, t);
    }
  }

 private:
  void extend_vehicle(std::uint64_t v, double t) {
    auto& knots = knots_[v];
    auto& stream = streams_[v];
    while (knots.back().t < t) {
      const detail::Knot& cur = knots.back();
      const double dest_x = stream.sample_uniform(0.0, model_.area_side_m);
      const double dest_y = stream.sample_uniform(0.0, model_.area_side_m);
      const double speed =
          stream.sample_uniform(model_.v_min_mps, model_.v_max_mps);
      const double pause = stream.sample_uniform(0.0, model_.pause_max_s);
      if (speed <= 0.0) {
        // Stationary model (v_min = v_max = 0): hold position forever.
        knots.push_back({cur.t + 1e18, cur.x, cur.y});
        break;
      }
      const double travel =
          std::hypot(dest_x - cur.x, dest_y - cur.y) / speed;
      knots.push_back({cur.t + travel, dest_x, dest_y});
      if (pause > 0.0) {
        knots.push_back({cur.t + travel + pause, dest_x, dest_y});
      }
    }
  }

  MobilityModel model_;
  std::uint64_t n_ = 0;
  bool from_trace_ = false;
  std::vector<std::vector<detail::Knot>> knots_;
  std::vector<RngStream> streams_;
};

}  // namespace mecap
