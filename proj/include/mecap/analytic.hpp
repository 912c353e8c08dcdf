#pragma once

// Closed-form capacity planning for a single service instance modeled as an
// M/M/1 queue: request arrivals at lambda, exponentially distributed work,
// sojourn time (waiting plus service) distributed Exp(mu - lambda) when the
// queue is stable. From a deadline d and a target probability r of meeting
// it we can solve for the minimum service rate, and from the mean work per
// request in machine instructions, for the minimum CPU share.

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mecap/errors.hpp"
#include "mecap/scenario.hpp"

namespace mecap {

struct Mm1Params {
  double lambda_hz = 0.0;
  double mu_hz = 0.0;

  void validate() const {
    if (!(lambda_hz >= 0.0)) {
      throw ValidationError("mm1.lambda_hz must be >= 0");
    }
    if (!(mu_hz > 0.0)) {
      throw ValidationError("mm1.mu_hz must be > 0");
    }
  }

  bool stable() const { return lambda_hz < mu_hz; }
};

struct Reliability {
  double value = 0.0;
  // True when lambda >= mu: the queue has no stationary distribution and no
  // finite deadline is met with positive steady-state probability.
  bool unstable = false;
};

// P(sojourn <= d) in steady state. Unstable queues report zero.
inline Reliability mm1_reliability(const Mm1Params& params, double d_s) {
  params.validate();
  if (!(d_s >= 0.0)) {
    throw ValidationError("mm1 deadline must be >= 0");
  }
  if (!params.stable()) {
    return {0.0, true};
  }
  return {1.0 - std::exp(-(params.mu_hz - params.lambda_hz) * d_s), false};
}

// Smallest mu with P(sojourn <= d_req) >= r_req, i.e. the inverse of the
// reliability curve at the target: mu = lambda - ln(1 - r) / d.
inline double required_service_rate(double lambda_hz, const Requirement& req) {
  if (!(lambda_hz >= 0.0)) {
    throw ValidationError("lambda_hz must be >= 0");
  }
  req.validate();
  return lambda_hz - std::log(1.0 - req.r_req) / req.d_req_s;
}

// Minimum CPU share for one instance of the service, in MIPS, full precision.
inline double cpu_min_mips(const ServiceSpec& spec) {
  spec.validate();
  return required_service_rate(spec.uplink_rate_hz, spec.requirement) *
         spec.ipr_mean_mi;
}

// Integer MIPS figure for reports. Fractional capacity cannot be provisioned
// so we round up, but only past genuine shortfall: a raw value within one
// part in 1e12 of an integer is that integer, not the next one. Without the
// nudge, values like 28025.850929940457 whose exact algebra lands on an
// integer could tip over it through floating-point noise.
inline long long display_mips(double raw_mips) {
  return static_cast<long long>(std::ceil(raw_mips - raw_mips * 1e-12));
}

// How many instances fit on the processor when its capacity is split evenly:
// the largest n with mips / n >= cpu_min.
inline long long feasible_vehicle_count(const Processor& proc,
                                        const ServiceSpec& spec) {
  proc.validate();
  const double need = cpu_min_mips(spec);
  return static_cast<long long>(std::floor(proc.mips / need));
}

struct PlanResult {
  double cpu_min_mips = 0.0;
  double mu_min_hz = 0.0;
  std::vector<std::pair<Processor, long long>> max_vehicles;
};

inline PlanResult plan(const ServiceSpec& spec,
                       const std::vector<Processor>& procs) {
  PlanResult result;
  result.mu_min_hz = required_service_rate(spec.uplink_rate_hz,
                                           spec.requirement);
  result.cpu_min_mips = result.mu_min_hz * spec.ipr_mean_mi;
  result.max_vehicles.reserve(procs.size());
  for (const auto& proc : procs) {
    result.max_vehicles.emplace_back(proc, feasible_vehicle_count(proc, spec));
  }
  return result;
}

}  // namespace mecap
