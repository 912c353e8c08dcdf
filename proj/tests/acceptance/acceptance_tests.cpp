// Acceptance gate for the planner and simulator. Each criterion prints one
// "[acceptance] criterion N: PASS|FAIL" line; the binary exits nonzero when
// any criterion fails. Criteria 1 and 5 drive the installed CLI binary
// (path injected as MECAP_CLI_PATH), the rest use the library directly.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mecap/analytic.hpp"
#include "mecap/config.hpp"
#include "mecap/engine.hpp"
#include "mecap/harness.hpp"
#include "mecap/mobility.hpp"
#include "mecap/scenario.hpp"
#include "support/stats.hpp"

#ifndef MECAP_CLI_PATH
#error "MECAP_CLI_PATH must point at the built CLI binary"
#endif

namespace {

struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void expect(bool cond, const std::string& what) {
  if (!cond) {
    throw CheckFailure(what);
  }
}

struct CliResult {
  int exit_code = -1;
  std::string out;
};

// Runs the CLI and captures stdout. Stderr stays on the console so genuine
// diagnostics are visible in the test log.
CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(MECAP_CLI_PATH) + " " + args;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  expect(pipe != nullptr, "popen failed for: " + cmd);
  CliResult result;
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0) {
    result.out.append(buf, n);
  }
  const int status = ::pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("mecap_accept_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  expect(static_cast<bool>(in), "cannot open " + p.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

const std::vector<std::string>& service_names() {
  static const std::vector<std::string> names = {
      "remote_driving", "cooperative_sensing", "cooperative_maneuver",
      "cooperative_awareness"};
  return names;
}

// ---- criterion 1: minimum-CPU figures from the CLI planner ----

void criterion_min_cpu() {
  const std::vector<long long> expected = {165130, 79915, 28026, 7992};
  for (std::size_t i = 0; i < service_names().size(); ++i) {
    const auto& name = service_names()[i];
    const CliResult r = run_cli("plan --service " + name + " --csv");
    expect(r.exit_code == 0, "plan exited with " + std::to_string(r.exit_code));
    std::istringstream lines(r.out);
    std::string line;
    expect(static_cast<bool>(std::getline(lines, line)), "empty plan output");
    const auto header = testsupport::split_csv_line(line);
    expect(header.size() >= 2 && header[1] == "cpu_min_mips",
           "unexpected plan header: " + line);
    expect(static_cast<bool>(std::getline(lines, line)), "plan has no rows");
    const auto row = testsupport::split_csv_line(line);
    const long long got = std::stoll(row[1]);
    expect(std::llabs(got - expected[i]) <= 1,
           name + ": cpu_min_mips " + std::to_string(got) + " not within 1 of " +
               std::to_string(expected[i]));
  }
}

// ---- criterion 2: supported-vehicle counts per processor ----

void criterion_red_line() {
  const std::vector<std::vector<long long>> expected = {
      {14, 4, 2, 2},     // remote_driving
      {29, 9, 5, 4},     // cooperative_sensing
      {84, 26, 14, 12},  // cooperative_maneuver
      {294, 93, 51, 43}  // cooperative_awareness
  };
  const auto& procs = mecap::processor_catalog();
  expect(procs.size() == 4, "processor catalog size changed");
  for (std::size_t s = 0; s < service_names().size(); ++s) {
    const auto spec = mecap::load_service(service_names()[s]);
    for (std::size_t p = 0; p < procs.size(); ++p) {
      const long long got = mecap::feasible_vehicle_count(procs[p], spec);
      expect(got == expected[s][p],
             service_names()[s] + " on " + procs[p].id + ": got " +
                 std::to_string(got) + ", expected " +
                 std::to_string(expected[s][p]));
    }
  }
}

// ---- criterion 3: simulated sojourn matches the closed-form law ----

void criterion_queue_law() {
  const std::vector<std::uint64_t> seeds = {101, 102, 103, 104};
  for (std::size_t i = 0; i < service_names().size(); ++i) {
    const auto start = std::chrono::steady_clock::now();

    mecap::ExperimentConfig cfg;
    cfg.spec = mecap::load_service(service_names()[i]);
    const double need = mecap::cpu_min_mips(cfg.spec);
    cfg.processor = {"exact_min", "synthetic", need};
    cfg.n_vehicles = 1;
    cfg.seed = seeds[i];
    cfg.duration_s = 600.0;
    cfg.warmup_s = 10.0;
    // Push the radio legs out of the picture so the end-to-end delay is the
    // queueing sojourn alone.
    cfg.link.uplink_capacity_bps = 1e15;
    cfg.link.downlink_capacity_bps = 1e15;
    cfg.link.base_latency_s = 0.0;

    const mecap::RunResult run = mecap::run_experiment(cfg, true);
    expect(run.summary.has_data, "no samples");
    expect(!run.summary.unstable, "run at cpu_min must be stable");

    std::vector<double> sojourn;
    sojourn.reserve(run.records.size());
    for (const auto& rec : run.records) {
      sojourn.push_back(rec.mec_queue_s + rec.mec_processing_s);
    }
    expect(sojourn.size() > 4000, "too few sojourn samples");

    const double lambda = cfg.spec.uplink_rate_hz;
    const double mu = run.summary.mu_hz;
    const double rate = mu - lambda;
    const auto ks = testsupport::ks_test(sojourn, [rate](double x) {
      return testsupport::exponential_cdf(x, rate);
    });
    expect(ks.p_value > 0.01,
           service_names()[i] + ": KS p=" + std::to_string(ks.p_value) +
               " (D=" + std::to_string(ks.statistic) + ")");

    const double r_req = cfg.spec.requirement.r_req;
    expect(std::abs(run.summary.reliability - r_req) <= 0.01,
           service_names()[i] + ": reliability " +
               std::to_string(run.summary.reliability) + " vs target " +
               std::to_string(r_req));

    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    expect(elapsed < 10.0, service_names()[i] + ": took " +
                               std::to_string(elapsed) + " s (budget 10 s)");
  }
}

// ---- criterion 4: provisioning inverts the reliability law exactly ----

void criterion_inverse_identity() {
  std::mt19937_64 gen(20240916);
  std::uniform_real_distribution<double> lambda_d(0.5, 500.0);
  std::uniform_real_distribution<double> deadline_d(0.005, 0.5);
  std::uniform_real_distribution<double> target_d(0.5, 0.999);
  for (int i = 0; i < 1000; ++i) {
    const double lambda = lambda_d(gen);
    mecap::Requirement req{deadline_d(gen), target_d(gen)};
    const double mu = mecap::required_service_rate(lambda, req);
    const auto rel = mecap::mm1_reliability({lambda, mu}, req.d_req_s);
    expect(!rel.unstable, "provisioned rate must be stable");
    expect(std::abs(rel.value - req.r_req) <= 1e-12 * req.r_req,
           "triple " + std::to_string(i) + ": got " +
               std::to_string(rel.value) + ", want " +
               std::to_string(req.r_req));
  }
}

// ---- criterion 5: sweep output is byte-stable across executions ----

void criterion_determinism() {
  const TempDir work("det");
  const auto cfg_path = work.path() / "config.json";
  {
    std::ofstream cfg(cfg_path);
    cfg << R"({
      "service": "remote_driving",
      "processors": ["id3", "id4"],
      "vehicle_counts": [1, 2],
      "seeds": [1, 2],
      "duration_s": 30,
      "warmup_s": 5
    })";
  }
  const auto out_a = work.path() / "a";
  const auto out_b = work.path() / "b";
  for (const auto& out : {out_a, out_b}) {
    const CliResult r = run_cli("sweep --config " + cfg_path.string() +
                                " --out " + out.string() + " --jobs 2");
    expect(r.exit_code == 0,
           "sweep exited with " + std::to_string(r.exit_code));
  }
  expect(read_file(out_a / "cells.csv") == read_file(out_b / "cells.csv"),
         "cells.csv differs between executions");
  expect(read_file(out_a / "heatmap.csv") == read_file(out_b / "heatmap.csv"),
         "heatmap.csv differs between executions");
}

// ---- criterion 6: capacity-grid trends ----

void criterion_grid_trends() {
  const auto start = std::chrono::steady_clock::now();

  mecap::ExperimentPlan plan;
  plan.spec = mecap::load_service("remote_driving");
  plan.processors = mecap::processor_catalog();
  plan.vehicle_counts = {1, 2, 3, 4, 5, 6, 7};
  plan.seeds = {1, 2, 3, 4, 5};
  plan.duration_s = 180.0;
  plan.warmup_s = 10.0;

  const mecap::SweepResult result = mecap::run_sweep(plan);
  const std::size_t n_counts = plan.vehicle_counts.size();
  expect(result.cells.size() == plan.processors.size() * n_counts,
         "unexpected cell count");

  for (const auto& cell : result.cells) {
    for (const auto& rep : cell.repetitions) {
      expect(rep.ok(), cell.processor.id + " n=" +
                           std::to_string(cell.n_vehicles) +
                           " failed: " + rep.error);
      expect(rep.summary.has_data, "repetition produced no samples");
    }
  }

  std::size_t fastest_passing = 0;
  std::size_t slowest_passing = 0;
  for (std::size_t p = 0; p < plan.processors.size(); ++p) {
    const auto& proc = plan.processors[p];
    std::vector<double> mean_rel(n_counts, 0.0);
    std::size_t passing = 0;
    for (std::size_t c = 0; c < n_counts; ++c) {
      const auto& cell = result.cells[p * n_counts + c];
      double acc = 0.0;
      for (const auto& rep : cell.repetitions) {
        acc += rep.summary.reliability;
      }
      mean_rel[c] = acc / static_cast<double>(cell.repetitions.size());

      // (a) an overloaded queue (service rate at or below arrival rate)
      // can never meet the target.
      const double mu =
          proc.mips / static_cast<double>(cell.n_vehicles) /
          plan.spec.ipr_mean_mi;
      if (mu <= plan.spec.uplink_rate_hz) {
        expect(cell.success_rate_pct == 0.0,
               proc.id + " n=" + std::to_string(cell.n_vehicles) +
                   ": overloaded cell has success " +
                   std::to_string(cell.success_rate_pct));
      }
      if (cell.success_rate_pct == 100.0) {
        ++passing;
      }
    }

    // (b) reliability falls as load rises; one small bump per row is
    // tolerated as sampling noise.
    int inversions = 0;
    for (std::size_t c = 0; c + 1 < n_counts; ++c) {
      if (mean_rel[c + 1] > mean_rel[c] + 0.005) {
        ++inversions;
      }
    }
    expect(inversions <= 1, proc.id + ": " + std::to_string(inversions) +
                                " reliability inversions along the row");

    if (p == 0) fastest_passing = passing;
    if (p + 1 == plan.processors.size()) slowest_passing = passing;
  }

  // (c) more CPU never supports fewer cells.
  expect(fastest_passing >= slowest_passing,
         "fastest processor passes " + std::to_string(fastest_passing) +
             " cells, slowest passes " + std::to_string(slowest_passing));

  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  expect(elapsed < 300.0,
         "grid took " + std::to_string(elapsed) + " s (budget 300 s)");
}

// ---- criterion 7: delay bookkeeping and fan-out counting ----

void criterion_delay_accounting() {
  mecap::ExperimentConfig cfg;
  cfg.spec = mecap::load_service("cooperative_awareness");
  cfg.processor = mecap::load_processor("id1");
  cfg.n_vehicles = 50;
  cfg.seed = 7;
  cfg.duration_s = 60.0;
  cfg.warmup_s = 5.0;

  const mecap::RunResult run = mecap::run_experiment(cfg, true);
  expect(!run.records.empty(), "no delay records");
  for (const auto& rec : run.records) {
    const double sum =
        rec.uplink_s + rec.mec_queue_s + rec.mec_processing_s + rec.downlink_s;
    expect(rec.e2e_s == sum, "end-to-end delay != component sum");
    expect(rec.deadline_met == (rec.e2e_s <= cfg.spec.requirement.d_req_s),
           "deadline flag disagrees with the delay");
  }

  // Re-derive every recipient set from an independent copy of the same
  // trajectories.
  mecap::Mobility mobility(cfg.mobility, cfg.n_vehicles, cfg.seed, 0);
  std::uint64_t dispatched = 0;
  std::uint64_t delivered_total = 0;
  for (const auto& req : run.requests) {
    delivered_total += req.delivered;
    expect(req.delivered <= req.recipients, "delivered more than addressed");
    if (!req.dispatched()) {
      expect(req.recipients == 0, "undispatched request has recipients");
      continue;
    }
    ++dispatched;
    const auto neighbors =
        mobility.neighbors_within(req.source_vehicle, req.radius_m,
                                  req.dispatch_t);
    expect(req.recipients == 1 + neighbors.size(),
           "request " + std::to_string(req.id) + ": " +
               std::to_string(req.recipients) + " recipients vs 1+" +
               std::to_string(neighbors.size()) + " by brute force");
  }
  expect(dispatched > 10000, "too few dispatched requests to be meaningful");
  expect(delivered_total == run.summary.n_copies_delivered,
         "per-request delivery totals disagree with the summary");
}

// ---- criterion 8: sampler distributions ----

void criterion_samplers() {
  constexpr std::size_t n = 1000000;

  // Exponential: mean 500, standard error 500/sqrt(n).
  {
    mecap::RngStream s(99, {0, 0, mecap::stream_purpose::kInstructions});
    double acc = 0.0;
    std::vector<double> head;
    head.reserve(100000);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = s.sample_exp(500.0);
      acc += x;
      if (head.size() < head.capacity()) {
        head.push_back(x);
      }
    }
    const double mean = acc / static_cast<double>(n);
    expect(std::abs(mean - 500.0) <= 1.5,
           "exponential mean " + std::to_string(mean));
    const auto ks = testsupport::ks_test(head, [](double x) {
      return testsupport::exponential_cdf(x, 1.0 / 500.0);
    });
    expect(ks.p_value > 0.01,
           "exponential KS p=" + std::to_string(ks.p_value));
  }

  // Uniform(0, 400): mean 200, sd 400/sqrt(12).
  {
    mecap::RngStream s(99, {0, 1, mecap::stream_purpose::kRadius});
    double acc = 0.0;
    std::vector<double> head;
    head.reserve(100000);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = s.sample_uniform(0.0, 400.0);
      acc += x;
      if (head.size() < head.capacity()) {
        head.push_back(x);
      }
    }
    const double mean = acc / static_cast<double>(n);
    const double tol = 3.0 * (400.0 / std::sqrt(12.0)) / std::sqrt(double(n));
    expect(std::abs(mean - 200.0) <= tol,
           "uniform mean " + std::to_string(mean));
    const auto ks = testsupport::ks_test(
        head, [](double x) { return std::clamp(x / 400.0, 0.0, 1.0); });
    expect(ks.p_value > 0.01, "uniform KS p=" + std::to_string(ks.p_value));
  }

  // Poisson process at 100 Hz: arrivals in [0, 10000 s) should number
  // 1e6 give or take 3*sqrt(1e6).
  {
    mecap::RngStream s(99, {0, 2, mecap::stream_purpose::kInterarrival});
    const double horizon = 10000.0;
    double t = 0.0;
    std::uint64_t count = 0;
    while (true) {
      t += s.sample_poisson_interarrival(100.0);
      if (t >= horizon) {
        break;
      }
      ++count;
    }
    expect(std::llabs(static_cast<long long>(count) - 1000000LL) <= 3000,
           "Poisson count " + std::to_string(count));
  }
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* label;
    std::function<void()> fn;
  };
  const std::vector<Criterion> criteria = {
      {1, "minimum CPU figures", criterion_min_cpu},
      {2, "supported-vehicle red line", criterion_red_line},
      {3, "queueing-law equivalence", criterion_queue_law},
      {4, "provisioning inverse identity", criterion_inverse_identity},
      {5, "byte-stable sweep output", criterion_determinism},
      {6, "capacity-grid trends", criterion_grid_trends},
      {7, "delay accounting and fan-out", criterion_delay_accounting},
      {8, "sampler distributions", criterion_samplers},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    std::string detail;
    bool pass = false;
    try {
      c.fn();
      pass = true;
    } catch (const std::exception& e) {
      detail = e.what();
    }
    std::cout << "[acceptance] criterion " << c.id << ": "
              << (pass ? "PASS" : "FAIL") << std::endl;
    if (!pass) {
      ++failures;
      std::cout << "    " << c.label << ": " << detail << std::endl;
    }
  }
  return failures == 0 ? 0 : 1;
}
