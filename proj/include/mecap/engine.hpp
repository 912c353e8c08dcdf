#pragma once

// Discrete-event kernel and seeded random streams. One kernel instance backs
// one simulation run and is strictly single-threaded; parallelism across runs
// is the caller's business.

#include <cmath>
#include <cstdint>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mecap/errors.hpp"

namespace mecap {

enum class EventKind : uint8_t {
  PacketGenerated,
  UplinkDone,
  ServiceStart,
  ServiceDone,
  DownlinkDone,
  MobilityUpdate,
  SimEnd,
};

inline const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::PacketGenerated: return "PacketGenerated";
    case EventKind::UplinkDone: return "UplinkDone";
    case EventKind::ServiceStart: return "ServiceStart";
    case EventKind::ServiceDone: return "ServiceDone";
    case EventKind::DownlinkDone: return "DownlinkDone";
    case EventKind::MobilityUpdate: return "MobilityUpdate";
    case EventKind::SimEnd: return "SimEnd";
  }
  return "?";
}

struct Event {
  double time = 0.0;
  uint64_t sequence = 0;
  EventKind kind = EventKind::SimEnd;
  // Meaning depends on kind; packing is owned by the scheduler of the event.
  uint64_t payload = 0;
};

namespace detail {

// splitmix64 step, used to spread seed material before it reaches the
// Mersenne Twister. Public-domain constants (Vigna).
inline uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

struct StreamKey {
  uint64_t repetition = 0;
  uint64_t vehicle = 0;
  uint64_t purpose = 0;
};

// Purpose tags for StreamKey so independent draws never share a stream.
namespace stream_purpose {
inline constexpr uint64_t kInterarrival = 1;
inline constexpr uint64_t kUplinkPayload = 2;
inline constexpr uint64_t kInstructions = 3;
inline constexpr uint64_t kRadius = 4;
inline constexpr uint64_t kMobility = 5;
}  // namespace stream_purpose

// A deterministic random stream isolated by (root seed, repetition, vehicle,
// purpose). Adding vehicles or purposes never perturbs other streams. The
// generator and the sample transforms below are fully specified, so the same
// key yields the same sequence on any platform.
class RngStream {
 public:
  RngStream(uint64_t root_seed, const StreamKey& key) {
    uint64_t s = root_seed;
    detail::splitmix64(s);
    s ^= key.repetition;
    detail::splitmix64(s);
    s ^= key.vehicle;
    detail::splitmix64(s);
    s ^= key.purpose;
    gen_.seed(detail::splitmix64(s));
  }

  uint64_t next_raw() { return gen_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double sample_uniform(double lo, double hi) {
    if (!(lo <= hi)) {
      throw ValidationError("sample_uniform: lo must be <= hi");
    }
    if (lo == hi) {
      return lo;
    }
    return lo + (hi - lo) * uniform01();
  }

  // Strictly positive exponential draw. The offset keeps u away from both 0
  // and 1, so the log never sees either endpoint.
  double sample_exp(double mean) {
    if (!(mean > 0.0)) {
      throw ValidationError("sample_exp: mean must be > 0");
    }
    const double u = (static_cast<double>(gen_() >> 12) + 0.5) * 0x1.0p-52;
    return -mean * std::log(u);
  }

  // Gap to the next arrival of a Poisson process with the given rate.
  double sample_poisson_interarrival(double rate_hz) {
    if (!(rate_hz > 0.0)) {
      throw ValidationError("sample_poisson_interarrival: rate must be > 0");
    }
    return sample_exp(1.0 / rate_hz);
  }

 private:
  std::mt19937_64 gen_;
};

// Min-heap event loop. Equal timestamps dispatch in scheduling order via the
// per-run sequence counter, so replays are exact.
class EventLoop {
 public:
  double clock() const { return clock_; }

  void schedule(double time, EventKind kind, uint64_t payload = 0) {
    if (!(time >= clock_)) {
      throw SimulationError("schedule into the past: " +
                            std::string(to_string(kind)) + " at t=" +
                            std::to_string(time) + " with clock=" +
                            std::to_string(clock_));
    }
    heap_.push(Event{time, next_sequence_++, kind, payload});
  }

  // Dispatches every event with time <= t_end to the handler, leaves the
  // clock at t_end, and returns the number of events dispatched. A throwing
  // handler aborts the run with the offending event's kind and time attached.
  template <typename Handler>
  uint64_t run_until(double t_end, Handler&& handler) {
    if (!(t_end >= clock_)) {
      throw SimulationError("run_until into the past");
    }
    uint64_t dispatched = 0;
    while (!heap_.empty() && heap_.top().time <= t_end) {
      const Event e = heap_.top();
      heap_.pop();
      clock_ = e.time;
      try {
        handler(e);
      } catch (const std::exception& ex) {
        throw SimulationError("event " + std::string(to_string(e.kind)) +
                              " at t=" + std::to_string(e.time) + ": " +
                              ex.what());
      }
      ++dispatched;
    }
    clock_ = t_end;
    return dispatched;
  }

  std::size_t pending() const { return heap_.size(); }
  uint64_t scheduled_total() const { return next_sequence_; }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time != b.time) {
        return a.time > b.time;
      }
      return a.sequence > b.sequence;
    }
  };

  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  double clock_ = 0.0;
  uint64_t next_sequence_ = 0;
};

}  // namespace mecap
