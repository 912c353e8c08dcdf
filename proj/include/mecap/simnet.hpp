#pragma once

// The packet pipeline: per-vehicle uplink, per-vehicle MEC application queue
// under an equal CPU split, and per-vehicle downlink. Client-server services
// answer the sender; dissemination services answer every vehicle inside a
// per-request circle around the sender. Each delivered copy carries a full
// delay decomposition.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "mecap/analytic.hpp"
#include "mecap/config.hpp"
#include "mecap/engine.hpp"
#include "mecap/errors.hpp"
#include "mecap/mobility.hpp"
#include "mecap/scenario.hpp"

namespace mecap {

// One delivered downlink copy, fully decomposed. e2e_s is defined as the sum
// of the four components, so the conservation identity holds bit-exactly.
struct DelayRecord {
  std::uint64_t request_id = 0;
  std::uint64_t source_vehicle = 0;
  std::uint64_t dest_vehicle = 0;
  double created_at = 0.0;
  double uplink_s = 0.0;
  double mec_queue_s = 0.0;
  double mec_processing_s = 0.0;
  double downlink_s = 0.0;
  double e2e_s = 0.0;
  bool deadline_met = false;
};

// Per-request bookkeeping, exposed for diagnostics and verification.
struct RequestRecord {
  std::uint64_t id = 0;
  std::uint64_t source_vehicle = 0;
  double created_at = 0.0;
  double payload_bytes = 0.0;
  double ipr_mi = 0.0;
  double uplink_s = 0.0;
  double mec_queue_s = 0.0;
  double mec_processing_s = 0.0;
  // Dissemination radius drawn for this request; NaN for client-server.
  double radius_m = std::numeric_limits<double>::quiet_NaN();
  // Service completion time; NaN while the request never reached dispatch.
  double dispatch_t = std::numeric_limits<double>::quiet_NaN();
  std::uint32_t recipients = 0;
  std::uint32_t delivered = 0;
  bool any_deadline_miss = false;

  bool dispatched() const { return recipients > 0; }
};

struct RunSummary {
  std::uint64_t n_requests = 0;
  std::uint64_t n_served = 0;
  std::uint64_t n_copies_delivered = 0;
  // Reliability sample counts after warm-up exclusion, including requests
  // and copies judged failed at the horizon.
  std::uint64_t n_samples = 0;
  std::uint64_t n_met = 0;
  bool has_data = false;
  double reliability = std::numeric_limits<double>::quiet_NaN();
  // Delay statistics over delivered post-warm-up copies only.
  std::uint64_t n_e2e = 0;
  double mean_e2e_s = std::numeric_limits<double>::quiet_NaN();
  double p99_e2e_s = std::numeric_limits<double>::quiet_NaN();
  // Per-app provisioning actually used in the run.
  double alloc_mips = 0.0;
  double mu_hz = 0.0;
  bool unstable = false;
  // Work conservation counters.
  double total_mec_busy_s = 0.0;
  double total_ipr_served_mi = 0.0;
  std::uint64_t events_dispatched = 0;
  // Order-sensitive digest of every delivery, for replay comparisons.
  std::uint64_t state_hash = 0;
};

struct RunResult {
  RunSummary summary;
  // Populated only when records are requested; deliveries in delivery order,
  // warm-up included (consumers filter on created_at).
  std::vector<DelayRecord> records;
  std::vector<RequestRecord> requests;
};

namespace detail {

// Busy-server bookkeeping shared by links and MEC apps: FIFO, known service
// time at arrival, so start = max(now, previous end).
struct FifoServer {
  double free_at = 0.0;

  // Returns the occupation interval and advances the server.
  std::pair<double, double> enqueue(double now, double service_s) {
    const double start = std::max(now, free_at);
    const double end = start + service_s;
    free_at = end;
    return {start, end};
  }
};

inline void fnv1a_fold(std::uint64_t& h, std::uint64_t bits) {
  for (int i = 0; i < 8; ++i) {
    h ^= (bits >> (8 * i)) & 0xffULL;
    h *= 1099511628211ULL;
  }
}

inline void fnv1a_fold(std::uint64_t& h, double value) {
  fnv1a_fold(h, std::bit_cast<std::uint64_t>(value));
}

}  // namespace detail

// One deterministic run of the pipeline for a fixed configuration.
class Simulation {
 public:
  explicit Simulation(const ExperimentConfig& cfg)
      : cfg_(cfg), mobility_(make_mobility(cfg)) {
    const auto n = cfg_.n_vehicles;
    alloc_mips_ = cfg_.processor.mips / static_cast<double>(n);
    mu_hz_ = alloc_mips_ / cfg_.spec.ipr_mean_mi;
    uplink_rate_bps_ =
        cfg_.link.uplink_capacity_bps / static_cast<double>(n);
    downlink_rate_bps_ =
        cfg_.link.downlink_capacity_bps / static_cast<double>(n);
    uplink_.resize(n);
    downlink_.resize(n);
    mec_.resize(n);
    for (std::uint64_t v = 0; v < n; ++v) {
      interarrival_.emplace_back(
          cfg_.seed, StreamKey{0, v, stream_purpose::kInterarrival});
      payload_.emplace_back(cfg_.seed,
                            StreamKey{0, v, stream_purpose::kUplinkPayload});
      instructions_.emplace_back(
          cfg_.seed, StreamKey{0, v, stream_purpose::kInstructions});
      radius_.emplace_back(cfg_.seed,
                           StreamKey{0, v, stream_purpose::kRadius});
    }
  }

  RunResult run(bool keep_records = false) {
    if (ran_) {
      throw SimulationError("Simulation::run may only be called once");
    }
    ran_ = true;
    keep_records_ = keep_records;
    for (std::uint64_t v = 0; v < cfg_.n_vehicles; ++v) {
      loop_.schedule(interarrival_[v].sample_poisson_interarrival(
                         cfg_.spec.uplink_rate_hz),
                     EventKind::PacketGenerated, v);
    }
    loop_.schedule(0.0, EventKind::MobilityUpdate);
    loop_.schedule(cfg_.duration_s, EventKind::SimEnd);
    const std::uint64_t dispatched =
        loop_.run_until(cfg_.duration_s, [this](const Event& e) {
          handle(e);
        });
    return finalize(dispatched);
  }

  // The position source, exposed so verification can re-derive neighbor
  // sets against the same trajectories.
  Mobility& mobility() { return mobility_; }

 private:
  static Mobility make_mobility(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.mobility.kind == MobilityKind::Trace) {
      return Mobility(cfg.mobility, cfg.n_vehicles,
                      load_trace(cfg.mobility.trace_path));
    }
    return Mobility(cfg.mobility, cfg.n_vehicles, cfg.seed, 0);
  }

  void handle(const Event& e) {
    switch (e.kind) {
      case EventKind::PacketGenerated: on_packet_generated(e); break;
      case EventKind::UplinkDone: on_uplink_done(e); break;
      case EventKind::ServiceStart: break;  // bookkeeping marker only
      case EventKind::ServiceDone: on_service_done(e); break;
      case EventKind::DownlinkDone: on_downlink_done(e); break;
      case EventKind::MobilityUpdate: on_mobility_update(e); break;
      case EventKind::SimEnd: break;
    }
  }

  void on_packet_generated(const Event& e) {
    const std::uint64_t v = e.payload;
    const double now = e.time;

    RequestRecord req;
    req.id = requests_.size();
    req.source_vehicle = v;
    req.created_at = now;
    // Whole bytes, at least one; the exponential law produces sub-byte
    // fractions.
    req.payload_bytes = std::max(
        1.0,
        std::ceil(payload_[v].sample_exp(cfg_.spec.uplink_payload_mean_bytes)));
    req.ipr_mi = instructions_[v].sample_exp(cfg_.spec.ipr_mean_mi);
    requests_.push_back(req);

    const double tx_s = req.payload_bytes * 8.0 / uplink_rate_bps_;
    const auto [start, end] = uplink_[v].enqueue(now, tx_s);
    (void)start;
    const double arrival = end + cfg_.link.base_latency_s;
    requests_.back().uplink_s = arrival - now;
    loop_.schedule(arrival, EventKind::UplinkDone, req.id);

    loop_.schedule(now + interarrival_[v].sample_poisson_interarrival(
                             cfg_.spec.uplink_rate_hz),
                   EventKind::PacketGenerated, v);
  }

  void on_uplink_done(const Event& e) {
    RequestRecord& req = requests_[e.payload];
    const double now = e.time;
    const double service_s = req.ipr_mi / alloc_mips_;
    const auto [start, end] = mec_[req.source_vehicle].enqueue(now, service_s);
    req.mec_queue_s = start - now;
    req.mec_processing_s = service_s;
    loop_.schedule(start, EventKind::ServiceStart, req.id);
    loop_.schedule(end, EventKind::ServiceDone, req.id);
  }

  void on_service_done(const Event& e) {
    RequestRecord& req = requests_[e.payload];
    const double now = e.time;
    req.dispatch_t = now;
    total_mec_busy_s_ += req.mec_processing_s;
    total_ipr_served_mi_ += req.ipr_mi;
    ++n_served_;

    std::vector<std::uint64_t> destinations{req.source_vehicle};
    if (cfg_.spec.behavior == Behavior::Dissemination) {
      req.radius_m = radius_[req.source_vehicle].sample_uniform(
          0.0, *cfg_.spec.dissemination_radius_max_m);
      const auto neighbors =
          mobility_.neighbors_within(req.source_vehicle, req.radius_m, now);
      destinations.insert(destinations.end(), neighbors.begin(),
                          neighbors.end());
    }
    req.recipients = static_cast<std::uint32_t>(destinations.size());

    const double tx_s =
        static_cast<double>(cfg_.spec.downlink_payload_bytes) * 8.0 /
        downlink_rate_bps_;
    for (const std::uint64_t dest : destinations) {
      const auto [start, end] = downlink_[dest].enqueue(now, tx_s);
      (void)start;
      const double delivery = end + cfg_.link.base_latency_s;
      loop_.schedule(delivery, EventKind::DownlinkDone,
                     (req.id << 20) | dest);
    }
  }

  void on_downlink_done(const Event& e) {
    const std::uint64_t dest = e.payload & ((1ULL << 20) - 1);
    RequestRecord& req = requests_[e.payload >> 20];
    ++req.delivered;
    ++n_copies_delivered_;

    DelayRecord rec;
    rec.request_id = req.id;
    rec.source_vehicle = req.source_vehicle;
    rec.dest_vehicle = dest;
    rec.created_at = req.created_at;
    rec.uplink_s = req.uplink_s;
    rec.mec_queue_s = req.mec_queue_s;
    rec.mec_processing_s = req.mec_processing_s;
    rec.downlink_s = e.time - req.dispatch_t;
    rec.e2e_s =
        rec.uplink_s + rec.mec_queue_s + rec.mec_processing_s + rec.downlink_s;
    rec.deadline_met = rec.e2e_s <= cfg_.spec.requirement.d_req_s;
    if (!rec.deadline_met) {
      req.any_deadline_miss = true;
    }

    detail::fnv1a_fold(state_hash_, rec.request_id);
    detail::fnv1a_fold(state_hash_, static_cast<std::uint64_t>(dest));
    detail::fnv1a_fold(state_hash_, rec.e2e_s);

    if (rec.created_at >= cfg_.warmup_s) {
      ++post_warmup_delivered_;
      if (rec.deadline_met) {
        ++post_warmup_met_;
      }
      e2e_post_warmup_.push_back(rec.e2e_s);
    }
    if (keep_records_) {
      records_.push_back(rec);
    }
  }

  void on_mobility_update(const Event& e) {
    const double next = e.time + cfg_.mobility.update_period_s;
    mobility_.extend_to(std::min(next, cfg_.duration_s));
    if (next <= cfg_.duration_s) {
      loop_.schedule(next, EventKind::MobilityUpdate);
    }
  }

  RunResult finalize(std::uint64_t events_dispatched) {
    RunResult out;
    RunSummary& s = out.summary;
    s.n_requests = requests_.size();
    s.n_served = n_served_;
    s.n_copies_delivered = n_copies_delivered_;
    s.alloc_mips = alloc_mips_;
    s.mu_hz = mu_hz_;
    s.unstable = !(cfg_.spec.uplink_rate_hz < mu_hz_);
    s.total_mec_busy_s = total_mec_busy_s_;
    s.total_ipr_served_mi = total_ipr_served_mi_;
    s.events_dispatched = events_dispatched;

    const double d_req = cfg_.spec.requirement.d_req_s;
    // A record still in flight at the horizon is a failure only if its
    // deadline already passed; otherwise it is excluded as unobserved.
    const auto horizon_failure = [&](const RequestRecord& req) {
      return req.created_at + d_req < cfg_.duration_s;
    };

    std::uint64_t samples = 0;
    std::uint64_t met = 0;
    if (cfg_.accounting == Accounting::PerCopy) {
      samples = post_warmup_delivered_;
      met = post_warmup_met_;
      for (const RequestRecord& req : requests_) {
        if (req.created_at < cfg_.warmup_s) {
          continue;
        }
        if (!req.dispatched()) {
          // Never reached dispatch: exactly one pending copy, the sender's.
          if (horizon_failure(req)) {
            ++samples;
          }
        } else if (req.delivered < req.recipients && horizon_failure(req)) {
          samples += req.recipients - req.delivered;
        }
      }
    } else {
      for (const RequestRecord& req : requests_) {
        if (req.created_at < cfg_.warmup_s) {
          continue;
        }
        if (req.dispatched() && req.delivered == req.recipients) {
          ++samples;
          if (!req.any_deadline_miss) {
            ++met;
          }
        } else if (horizon_failure(req)) {
          ++samples;  // incomplete and past deadline: a failure
        }
      }
    }
    s.n_samples = samples;
    s.n_met = met;
    s.has_data = samples > 0;
    if (s.has_data) {
      s.reliability =
          static_cast<double>(met) / static_cast<double>(samples);
    }

    s.n_e2e = e2e_post_warmup_.size();
    if (s.n_e2e > 0) {
      double acc = 0.0;
      for (const double x : e2e_post_warmup_) {
        acc += x;
      }
      s.mean_e2e_s = acc / static_cast<double>(s.n_e2e);
      std::vector<double> sorted = e2e_post_warmup_;
      std::sort(sorted.begin(), sorted.end());
      // Nearest-rank p99.
      const std::size_t rank = static_cast<std::size_t>(
          std::ceil(0.99 * static_cast<double>(sorted.size())));
      s.p99_e2e_s = sorted[std::max<std::size_t>(rank, 1) - 1];
    }

    detail::fnv1a_fold(state_hash_, s.n_samples);
    detail::fnv1a_fold(state_hash_, s.n_met);
    s.state_hash = state_hash_;

    if (keep_records_) {
      out.records = std::move(records_);
      out.requests = std::move(requests_);
    }
    return out;
  }

  ExperimentConfig cfg_;
  Mobility mobility_;
  EventLoop loop_;

  double alloc_mips_ = 0.0;
  double mu_hz_ = 0.0;
  double uplink_rate_bps_ = 0.0;
  double downlink_rate_bps_ = 0.0;

  std::vector<detail::FifoServer> uplink_;
  std::vector<detail::FifoServer> downlink_;
  std::vector<detail::FifoServer> mec_;
  std::vector<RngStream> interarrival_;
  std::vector<RngStream> payload_;
  std::vector<RngStream> instructions_;
  std::vector<RngStream> radius_;

  std::vector<RequestRecord> requests_;
  std::vector<DelayRecord> records_;
  std::vector<double> e2e_post_warmup_;
  std::uint64_t n_served_ = 0;
  std::uint64_t n_copies_delivered_ = 0;
  std::uint64_t post_warmup_delivered_ = 0;
  std::uint64_t post_warmup_met_ = 0;
  double total_mec_busy_s_ = 0.0;
  double total_ipr_served_mi_ = 0.0;
  std::uint64_t state_hash_ = 14695981039346656037ULL;
  bool keep_records_ = false;
  bool ran_ = false;
};

}  // namespace mecap
