#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mecap/errors.hpp"

// Domain types and built-in catalogs: the four connected-vehicle services
// (latency/reliability requirement plus workload laws) and the edge
// processor list. Units are fixed globally: seconds, bytes, meters,
// MI (million instructions), MIPS.

namespace mecap {

// End-to-end latency threshold and the probability of meeting it.
struct Requirement {
  double d_req_s = 0.0;
  double r_req = 0.0;

  void validate(const std::string& path = "requirement") const {
    if (!(d_req_s > 0.0)) {
      throw ValidationError(path + ".d_req_s: must be > 0");
    }
    // r_req == 1 would demand an infinite service rate.
    if (!(r_req >= 0.0 && r_req < 1.0)) {
      throw ValidationError(path + ".r_req: must be in [0, 1)");
    }
  }

  friend bool operator==(const Requirement&, const Requirement&) = default;
};

enum class Behavior : std::uint8_t {
  Dissemination,  // response unicast to every vehicle in the sampled circle
  ClientServer,   // single response back to the sender
};

inline const char* to_string(Behavior b) {
  return b == Behavior::Dissemination ? "dissemination" : "client_server";
}

// One service's workload description: Poisson uplink at uplink_rate_hz,
// exponential payload and instruction demand, constant downlink payload,
// and (for dissemination) a uniform radius law.
struct ServiceSpec {
  std::string name;
  Behavior behavior = Behavior::ClientServer;
  double uplink_rate_hz = 0.0;
  double uplink_payload_mean_bytes = 0.0;
  std::uint64_t downlink_payload_bytes = 0;
  double ipr_mean_mi = 0.0;
  std::optional<double> dissemination_radius_max_m;
  Requirement requirement;

  void validate(const std::string& path = "service") const {
    if (name.empty()) {
      throw ValidationError(path + ".name: must be non-empty");
    }
    if (!(uplink_rate_hz > 0.0)) {
      throw ValidationError(path + ".uplink_rate_hz: must be > 0");
    }
    if (!(uplink_payload_mean_bytes > 0.0)) {
      throw ValidationError(path + ".uplink_payload_mean_bytes: must be > 0");
    }
    if (downlink_payload_bytes == 0) {
      throw ValidationError(path + ".downlink_payload_bytes: must be >= 1");
    }
    if (!(ipr_mean_mi > 0.0)) {
      throw ValidationError(path + ".ipr_mean_mi: must be > 0");
    }
    if (behavior == Behavior::ClientServer && dissemination_radius_max_m) {
      throw ValidationError(path +
                            ".dissemination_radius_max_m: client_server "
                            "services take no dissemination radius");
    }
    if (behavior == Behavior::Dissemination) {
      if (!dissemination_radius_max_m) {
        throw ValidationError(path +
                              ".dissemination_radius_max_m: required for "
                              "dissemination services");
      }
      if (!(*dissemination_radius_max_m > 0.0)) {
        throw ValidationError(path +
                              ".dissemination_radius_max_m: must be > 0");
      }
    }
    requirement.validate(path + ".requirement");
  }

  friend bool operator==(const ServiceSpec&, const ServiceSpec&) = default;
};

struct Processor {
  std::string id;
  std::string name;
  double mips = 0.0;

  void validate(const std::string& path = "processor") const {
    if (id.empty()) {
      throw ValidationError(path + ".id: must be non-empty");
    }
    if (!(mips > 0.0)) {
      throw ValidationError(path + ".mips: must be > 0");
    }
  }

  friend bool operator==(const Processor&, const Processor&) = default;
};

// --------------------------------------------------------------------------
// Built-in catalogs
// --------------------------------------------------------------------------

inline const std::vector<ServiceSpec>& service_catalog() {
  static const std::vector<ServiceSpec> catalog = {
      {"remote_driving", Behavior::ClientServer, 100.0, 40000.0, 313, 500.0,
       std::nullopt, {0.020, 0.99}},
      {"cooperative_sensing", Behavior::Dissemination, 100.0, 12500.0, 313,
       200.0, 200.0, {0.010, 0.95}},
      {"cooperative_maneuver", Behavior::Dissemination, 10.0, 16250.0, 313,
       500.0, 500.0, {0.100, 0.99}},
      {"cooperative_awareness", Behavior::Dissemination, 10.0, 1500.0, 313,
       200.0, 500.0, {0.100, 0.95}},
  };
  return catalog;
}

inline const std::vector<Processor>& processor_catalog() {
  static const std::vector<Processor> catalog = {
      {"id1", "AMD Ryzen Threadripper", 2356230.0},
      {"id2", "AMD Ryzen 9", 749070.0},
      {"id3", "Intel Core i9-9900K", 412090.0},
      {"id4", "Intel Core i5-11600K", 346350.0},
  };
  return catalog;
}

inline ServiceSpec load_service(std::string_view name) {
  for (const auto& s : service_catalog()) {
    if (s.name == name) {
      return s;
    }
  }
  throw LookupError("unknown service '" + std::string(name) +
                    "' (catalog: remote_driving, cooperative_sensing, "
                    "cooperative_maneuver, cooperative_awareness)");
}

inline Processor load_processor(std::string_view id) {
  for (const auto& p : processor_catalog()) {
    if (p.id == id) {
      return p;
    }
  }
  throw LookupError("unknown processor '" + std::string(id) +
                    "' (catalog: id1, id2, id3, id4)");
}

// --------------------------------------------------------------------------
// JSON serialization
// --------------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const Requirement& r) {
  j = nlohmann::json{{"d_req_s", r.d_req_s}, {"r_req", r.r_req}};
}

inline void from_json(const nlohmann::json& j, Requirement& r) {
  j.at("d_req_s").get_to(r.d_req_s);
  j.at("r_req").get_to(r.r_req);
}

inline void to_json(nlohmann::json& j, const ServiceSpec& s) {
  j = nlohmann::json{
      {"name", s.name},
      {"behavior", to_string(s.behavior)},
      {"uplink_rate_hz", s.uplink_rate_hz},
      {"uplink_payload_mean_bytes", s.uplink_payload_mean_bytes},
      {"downlink_payload_bytes", s.downlink_payload_bytes},
      {"ipr_mean_mi", s.ipr_mean_mi},
      {"requirement", s.requirement},
  };
  if (s.dissemination_radius_max_m) {
    j["dissemination_radius_max_m"] = *s.dissemination_radius_max_m;
  }
}

inline void from_json(const nlohmann::json& j, ServiceSpec& s) {
  j.at("name").get_to(s.name);
  const std::string behavior = j.at("behavior").get<std::string>();
  if (behavior == "dissemination") {
    s.behavior = Behavior::Dissemination;
  } else if (behavior == "client_server") {
    s.behavior = Behavior::ClientServer;
  } else {
    throw ValidationError(
        "service.behavior: must be 'dissemination' or 'client_server', got '" +
        behavior + "'");
  }
  j.at("uplink_rate_hz").get_to(s.uplink_rate_hz);
  j.at("uplink_payload_mean_bytes").get_to(s.uplink_payload_mean_bytes);
  j.at("downlink_payload_bytes").get_to(s.downlink_payload_bytes);
  j.at("ipr_mean_mi").get_to(s.ipr_mean_mi);
  if (j.contains("dissemination_radius_max_m")) {
    s.dissemination_radius_max_m =
        j.at("dissemination_radius_max_m").get<double>();
  } else {
    s.dissemination_radius_max_m.reset();
  }
  j.at("requirement").get_to(s.requirement);
}

inline void to_json(nlohmann::json& j, const Processor& p) {
  j = nlohmann::json{{"id", p.id}, {"name", p.name}, {"mips", p.mips}};
}

inline void from_json(const nlohmann::json& j, Processor& p) {
  j.at("id").get_to(p.id);
  p.name = j.value("name", std::string{});
  j.at("mips").get_to(p.mips);
}

}  // namespace mecap
