#pragma once

// Run and sweep configuration: link abstraction parameters, mobility model
// selection, per-cell experiment settings, and the JSON config file schema
// with strict validation (unknown keys are errors, every violation names the
// offending field path).

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mecap/errors.hpp"
#include "mecap/scenario.hpp"

namespace mecap {

// Stand-in for the radio stack: each direction is a fixed total capacity
// split evenly across the configured vehicles, plus a constant one-way
// latency on every transmission. Defaults are configuration choices.
struct LinkModel {
  double uplink_capacity_bps = 4e8;
  double downlink_capacity_bps = 4e8;
  double base_latency_s = 1e-3;

  void validate(const std::string& path = "link") const {
    if (!(uplink_capacity_bps > 0.0)) {
      throw ValidationError(path + ".uplink_capacity_bps: must be > 0");
    }
    if (!(downlink_capacity_bps > 0.0)) {
      throw ValidationError(path + ".downlink_capacity_bps: must be > 0");
    }
    if (!(base_latency_s >= 0.0)) {
      throw ValidationError(path + ".base_latency_s: must be >= 0");
    }
  }

  bool operator==(const LinkModel&) const = default;
};

enum class MobilityKind : std::uint8_t {
  RandomWaypoint,
  Trace,
};

inline const char* to_string(MobilityKind k) {
  return k == MobilityKind::RandomWaypoint ? "random_waypoint" : "trace";
}

struct MobilityModel {
  MobilityKind kind = MobilityKind::RandomWaypoint;
  double area_side_m = 1000.0;
  // Random-waypoint parameters; urban-ish defaults, freely configurable.
  double v_min_mps = 5.0;
  double v_max_mps = 14.0;
  double pause_max_s = 5.0;
  // Cadence of position bookkeeping events during a run.
  double update_period_s = 1.0;
  // Trace source; required iff kind == Trace.
  std::string trace_path;

  void validate(const std::string& path = "mobility") const {
    if (!(area_side_m > 0.0)) {
      throw ValidationError(path + ".area_side_m: must be > 0");
    }
    if (!(update_period_s > 0.0)) {
      throw ValidationError(path + ".update_period_s: must be > 0");
    }
    if (kind == MobilityKind::RandomWaypoint) {
      if (!(v_min_mps >= 0.0)) {
        throw ValidationError(path + ".v_min_mps: must be >= 0");
      }
      if (!(v_max_mps >= v_min_mps)) {
        throw ValidationError(path + ".v_max_mps: must be >= v_min_mps");
      }
      if (!(pause_max_s >= 0.0)) {
        throw ValidationError(path + ".pause_max_s: must be >= 0");
      }
      if (!trace_path.empty()) {
        throw ValidationError(path +
                              ".path: only valid when kind is 'trace'");
      }
    } else {
      if (trace_path.empty()) {
        throw ValidationError(path + ".path: required when kind is 'trace'");
      }
    }
  }

  bool operator==(const MobilityModel&) const = default;
};

// How dissemination reliability is counted: one sample per delivered copy,
// or one all-or-nothing sample per request across its whole recipient set.
enum class Accounting : std::uint8_t {
  PerCopy,
  PerRequest,
};

inline const char* to_string(Accounting a) {
  return a == Accounting::PerCopy ? "per_copy" : "per_request";
}

// Everything one simulation run needs. The event encoding packs vehicle ids
// into 20 bits, hence the hard ceiling on n_vehicles.
inline constexpr std::uint64_t kMaxVehicles = (1ULL << 20) - 1;

struct ExperimentConfig {
  ServiceSpec spec;
  Processor processor;
  std::uint64_t n_vehicles = 1;
  std::uint64_t seed = 1;
  double duration_s = 180.0;
  double warmup_s = 10.0;
  LinkModel link;
  MobilityModel mobility;
  Accounting accounting = Accounting::PerCopy;

  void validate() const {
    spec.validate("service");
    processor.validate("processor");
    if (n_vehicles < 1) {
      throw ValidationError("n_vehicles: must be >= 1");
    }
    if (n_vehicles > kMaxVehicles) {
      throw ValidationError("n_vehicles: must be <= " +
                            std::to_string(kMaxVehicles));
    }
    if (!(duration_s > 0.0)) {
      throw ValidationError("duration_s: must be > 0");
    }
    if (!(warmup_s >= 0.0)) {
      throw ValidationError("warmup_s: must be >= 0");
    }
    // Equality is allowed; such a run completes and reports "no data".
    if (!(duration_s >= warmup_s)) {
      throw ValidationError("duration_s: must be >= warmup_s");
    }
    link.validate("link");
    mobility.validate("mobility");
  }
};

// A config file describes a whole grid; a single run is the 1x1x1 case.
struct ExperimentPlan {
  ServiceSpec spec;
  std::vector<Processor> processors;
  std::vector<std::uint64_t> vehicle_counts;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  double duration_s = 180.0;
  double warmup_s = 10.0;
  LinkModel link;
  MobilityModel mobility;
  Accounting accounting = Accounting::PerCopy;

  void validate() const {
    spec.validate("service");
    if (processors.empty()) {
      throw ValidationError("processors: must be non-empty");
    }
    for (std::size_t i = 0; i < processors.size(); ++i) {
      processors[i].validate("processors[" + std::to_string(i) + "]");
    }
    if (vehicle_counts.empty()) {
      throw ValidationError("vehicle_counts: must be non-empty");
    }
    for (std::size_t i = 0; i < vehicle_counts.size(); ++i) {
      if (vehicle_counts[i] < 1 || vehicle_counts[i] > kMaxVehicles) {
        throw ValidationError("vehicle_counts[" + std::to_string(i) +
                              "]: must be in [1, " +
                              std::to_string(kMaxVehicles) + "]");
      }
    }
    if (seeds.empty()) {
      throw ValidationError("seeds: must be non-empty");
    }
    // Reuse the per-cell checks for the scalar settings.
    cell(0, 0, 0).validate();
  }

  ExperimentConfig cell(std::size_t proc_idx, std::size_t count_idx,
                        std::size_t seed_idx) const {
    ExperimentConfig cfg;
    cfg.spec = spec;
    cfg.processor = processors.at(proc_idx);
    cfg.n_vehicles = vehicle_counts.at(count_idx);
    cfg.seed = seeds.at(seed_idx);
    cfg.duration_s = duration_s;
    cfg.warmup_s = warmup_s;
    cfg.link = link;
    cfg.mobility = mobility;
    cfg.accounting = accounting;
    return cfg;
  }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j,
                                std::initializer_list<const char*> allowed,
                                const std::string& path) {
  for (const auto& item : j.items()) {
    const bool known =
        std::any_of(allowed.begin(), allowed.end(),
                    [&](const char* k) { return item.key() == k; });
    if (!known) {
      throw ValidationError(path.empty()
                                ? "unknown key '" + item.key() + "'"
                                : path + ": unknown key '" + item.key() + "'");
    }
  }
}

template <typename T>
T get_as(const nlohmann::json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(path + ": wrong type (" +
                          std::string(j.type_name()) + ")");
  }
}

inline double get_number(const nlohmann::json& j,
                                  const std::string& path) {
  if (!j.is_number()) {
    throw ValidationError(path + ": must be a number");
  }
  return j.get<double>();
}

}  // namespace detail

inline LinkModel parse_link(const nlohmann::json& j,
                            const std::string& path = "link") {
  if (!j.is_object()) {
    throw ValidationError(path + ": must be an object");
  }
  detail::reject_unknown_keys(
      j, {"uplink_capacity_bps", "downlink_capacity_bps", "base_latency_s"},
      path);
  LinkModel link;
  if (j.contains("uplink_capacity_bps")) {
    link.uplink_capacity_bps = detail::get_number(
        j.at("uplink_capacity_bps"), path + ".uplink_capacity_bps");
  }
  if (j.contains("downlink_capacity_bps")) {
    link.downlink_capacity_bps = detail::get_number(
        j.at("downlink_capacity_bps"), path + ".downlink_capacity_bps");
  }
  if (j.contains("base_latency_s")) {
    link.base_latency_s = detail::get_number(
        j.at("base_latency_s"), path + ".base_latency_s");
  }
  link.validate(path);
  return link;
}

inline MobilityModel parse_mobility(const nlohmann::json& j,
                                    const std::string& path = "mobility") {
  if (!j.is_object()) {
    throw ValidationError(path + ": must be an object");
  }
  detail::reject_unknown_keys(j,
                              {"kind", "area_side_m", "v_min_mps", "v_max_mps",
                               "pause_max_s", "update_period_s", "path"},
                              path);
  MobilityModel m;
  if (j.contains("kind")) {
    const auto kind = detail::get_as<std::string>(j.at("kind"), path + ".kind");
    if (kind == "random_waypoint") {
      m.kind = MobilityKind::RandomWaypoint;
    } else if (kind == "trace") {
      m.kind = MobilityKind::Trace;
    } else {
      throw ValidationError(path + ".kind: must be 'random_waypoint' or "
                            "'trace', got '" + kind + "'");
    }
  }
  if (j.contains("area_side_m")) {
    m.area_side_m = detail::get_number(j.at("area_side_m"),
                                                path + ".area_side_m");
  }
  if (j.contains("v_min_mps")) {
    m.v_min_mps =
        detail::get_number(j.at("v_min_mps"), path + ".v_min_mps");
  }
  if (j.contains("v_max_mps")) {
    m.v_max_mps =
        detail::get_number(j.at("v_max_mps"), path + ".v_max_mps");
  }
  if (j.contains("pause_max_s")) {
    m.pause_max_s = detail::get_number(j.at("pause_max_s"),
                                                path + ".pause_max_s");
  }
  if (j.contains("update_period_s")) {
    m.update_period_s = detail::get_number(
        j.at("update_period_s"), path + ".update_period_s");
  }
  if (j.contains("path")) {
    m.trace_path = detail::get_as<std::string>(j.at("path"), path + ".path");
  }
  m.validate(path);
  return m;
}

inline ServiceSpec parse_service(const nlohmann::json& j,
                                 const std::string& path = "service") {
  if (j.is_string()) {
    return load_service(j.get<std::string>());
  }
  if (!j.is_object()) {
    throw ValidationError(path + ": must be a catalog name or an object");
  }
  detail::reject_unknown_keys(
      j,
      {"name", "behavior", "uplink_rate_hz", "uplink_payload_mean_bytes",
       "downlink_payload_bytes", "ipr_mean_mi", "dissemination_radius_max_m",
       "requirement"},
      path);
  ServiceSpec spec;
  try {
    spec = j.get<ServiceSpec>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  spec.validate(path);
  return spec;
}

inline Processor parse_processor(const nlohmann::json& j,
                                 const std::string& path = "processor") {
  if (j.is_string()) {
    return load_processor(j.get<std::string>());
  }
  if (!j.is_object()) {
    throw ValidationError(path + ": must be a catalog id or an object");
  }
  detail::reject_unknown_keys(j, {"id", "name", "mips"}, path);
  Processor proc;
  try {
    proc = j.get<Processor>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  proc.validate(path);
  return proc;
}

// Parses and fully validates a config document. Scalar and list spellings
// are both accepted for the grid axes ("processor"/"processors" etc.); the
// singular forms are for one-off runs.
inline ExperimentPlan validate_config(const nlohmann::json& raw) {
  if (!raw.is_object()) {
    throw ValidationError("config root must be an object");
  }
  detail::reject_unknown_keys(
      raw,
      {"service", "processor", "processors", "n_vehicles", "vehicle_counts",
       "seed", "seeds", "duration_s", "warmup_s", "link", "mobility",
       "accounting"},
      "");
  ExperimentPlan plan;
  if (!raw.contains("service")) {
    throw ValidationError("service: required");
  }
  plan.spec = parse_service(raw.at("service"));

  if (raw.contains("processor") == raw.contains("processors")) {
    throw ValidationError(
        "config needs exactly one of 'processor' or 'processors'");
  }
  if (raw.contains("processor")) {
    plan.processors.push_back(parse_processor(raw.at("processor")));
  } else {
    const auto& arr = raw.at("processors");
    if (!arr.is_array() || arr.empty()) {
      throw ValidationError("processors: must be a non-empty list");
    }
    for (std::size_t i = 0; i < arr.size(); ++i) {
      plan.processors.push_back(parse_processor(
          arr[i], "processors[" + std::to_string(i) + "]"));
    }
  }

  if (raw.contains("n_vehicles") && raw.contains("vehicle_counts")) {
    throw ValidationError(
        "config takes either 'n_vehicles' or 'vehicle_counts', not both");
  }
  if (raw.contains("n_vehicles")) {
    plan.vehicle_counts = {
        detail::get_as<std::uint64_t>(raw.at("n_vehicles"), "n_vehicles")};
  } else if (raw.contains("vehicle_counts")) {
    plan.vehicle_counts = detail::get_as<std::vector<std::uint64_t>>(
        raw.at("vehicle_counts"), "vehicle_counts");
  } else {
    throw ValidationError("config needs 'n_vehicles' or 'vehicle_counts'");
  }

  if (raw.contains("seed") && raw.contains("seeds")) {
    throw ValidationError("config takes either 'seed' or 'seeds', not both");
  }
  if (raw.contains("seed")) {
    plan.seeds = {detail::get_as<std::uint64_t>(raw.at("seed"), "seed")};
  } else if (raw.contains("seeds")) {
    plan.seeds =
        detail::get_as<std::vector<std::uint64_t>>(raw.at("seeds"), "seeds");
  }

  if (raw.contains("duration_s")) {
    plan.duration_s =
        detail::get_number(raw.at("duration_s"), "duration_s");
  }
  if (raw.contains("warmup_s")) {
    plan.warmup_s =
        detail::get_number(raw.at("warmup_s"), "warmup_s");
  }
  if (raw.contains("link")) {
    plan.link = parse_link(raw.at("link"));
  }
  if (raw.contains("mobility")) {
    plan.mobility = parse_mobility(raw.at("mobility"));
  }
  if (raw.contains("accounting")) {
    const auto acc =
        detail::get_as<std::string>(raw.at("accounting"), "accounting");
    if (acc == "per_copy") {
      plan.accounting = Accounting::PerCopy;
    } else if (acc == "per_request") {
      plan.accounting = Accounting::PerRequest;
    } else {
      throw ValidationError(
          "accounting: must be 'per_copy' or 'per_request', got '" + acc +
          "'");
    }
  }
  plan.validate();
  return plan;
}

inline ExperimentPlan load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open config file: " + path);
  }
  nlohmann::json raw;
  try {
    raw = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return validate_config(raw);
}

// Serializers for the metadata echo written next to sweep outputs.
inline void to_json(nlohmann::json& j, const LinkModel& link) {
  j = {{"uplink_capacity_bps", link.uplink_capacity_bps},
       {"downlink_capacity_bps", link.downlink_capacity_bps},
       {"base_latency_s", link.base_latency_s}};
}

inline void to_json(nlohmann::json& j, const MobilityModel& m) {
  j = {{"kind", to_string(m.kind)},
       {"area_side_m", m.area_side_m},
       {"update_period_s", m.update_period_s}};
  if (m.kind == MobilityKind::RandomWaypoint) {
    j["v_min_mps"] = m.v_min_mps;
    j["v_max_mps"] = m.v_max_mps;
    j["pause_max_s"] = m.pause_max_s;
  } else {
    j["path"] = m.trace_path;
  }
}

inline void to_json(nlohmann::json& j, const ExperimentPlan& plan) {
  j = {{"service", plan.spec},
       {"processors", plan.processors},
       {"vehicle_counts", plan.vehicle_counts},
       {"seeds", plan.seeds},
       {"duration_s", plan.duration_s},
       {"warmup_s", plan.warmup_s},
       {"link", plan.link},
       {"mobility", plan.mobility},
       {"accounting", to_string(plan.accounting)}};
}

}  // namespace mecap
