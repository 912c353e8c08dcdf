#pragma once

// Experiment orchestration: runs single experiments, sweeps a grid of
// (processor x vehicle-count) cells over seeded repetitions, reduces the
// per-repetition reliabilities to success rates, and writes the CSV and
// metadata artifacts.

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mecap/analytic.hpp"
#include "mecap/config.hpp"
#include "mecap/errors.hpp"
#include "mecap/simnet.hpp"
#include "mecap/version.hpp"

namespace mecap {

inline RunResult run_experiment(const ExperimentConfig& cfg,
                                bool keep_records = false) {
  Simulation sim(cfg);
  return sim.run(keep_records);
}

// Fraction of records delivered within the deadline; nullopt marks "no data"
// rather than pretending an empty set is perfectly reliable.
inline std::optional<double> compute_reliability(
    const std::vector<DelayRecord>& records, double d_req_s) {
  if (records.empty()) {
    return std::nullopt;
  }
  std::uint64_t met = 0;
  for (const DelayRecord& r : records) {
    if (r.e2e_s <= d_req_s) {
      ++met;
    }
  }
  return static_cast<double>(met) / static_cast<double>(records.size());
}

// Percentage of repetitions whose reliability reached the target. NaN
// reliabilities (runs without data) count as not meeting it.
inline double success_rate(const std::vector<double>& reliabilities,
                           double r_req) {
  if (reliabilities.empty()) {
    throw ValidationError("success_rate: no repetitions");
  }
  std::uint64_t met = 0;
  for (const double r : reliabilities) {
    if (r >= r_req) {
      ++met;
    }
  }
  return 100.0 * static_cast<double>(met) /
         static_cast<double>(reliabilities.size());
}

struct RepetitionOutcome {
  std::uint64_t seed = 0;
  RunSummary summary;
  // Non-empty when the run raised instead of completing.
  std::string error;

  bool ok() const { return error.empty(); }
};

struct CellResult {
  Processor processor;
  std::uint64_t n_vehicles = 0;
  std::vector<RepetitionOutcome> repetitions;  // in the plan's seed order
  double success_rate_pct = std::numeric_limits<double>::quiet_NaN();
};

struct SweepResult {
  ExperimentPlan plan;
  // Processor-major, vehicle-count-minor, matching the plan's axis order.
  std::vector<CellResult> cells;
  // Analytic feasibility threshold per processor, in plan order.
  std::vector<std::pair<Processor, long long>> red_line;
};

// Runs every (processor, count, seed) combination. Repetitions execute on a
// small worker pool; results land in preassigned slots so the outcome is
// identical no matter how the pool schedules them. A failing run is recorded
// in its slot and the sweep continues.
inline SweepResult run_sweep(const ExperimentPlan& plan, unsigned jobs = 0) {
  plan.validate();
  const std::size_t n_proc = plan.processors.size();
  const std::size_t n_counts = plan.vehicle_counts.size();
  const std::size_t n_seeds = plan.seeds.size();
  const std::size_t total = n_proc * n_counts * n_seeds;

  std::vector<RepetitionOutcome> slots(total);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= total) {
        return;
      }
      const std::size_t proc_idx = i / (n_counts * n_seeds);
      const std::size_t count_idx = (i / n_seeds) % n_counts;
      const std::size_t seed_idx = i % n_seeds;
      RepetitionOutcome& slot = slots[i];
      slot.seed = plan.seeds[seed_idx];
      try {
        const ExperimentConfig cfg = plan.cell(proc_idx, count_idx, seed_idx);
        slot.summary = run_experiment(cfg).summary;
      } catch (const std::exception& e) {
        slot.error = e.what();
      }
    }
  };

  unsigned pool = jobs != 0 ? jobs : std::thread::hardware_concurrency();
  pool = std::max(1u, std::min<unsigned>(pool, total));
  if (pool == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(pool);
    for (unsigned t = 0; t < pool; ++t) {
      threads.emplace_back(worker);
    }
    for (auto& t : threads) {
      t.join();
    }
  }

  SweepResult result;
  result.plan = plan;
  result.cells.reserve(n_proc * n_counts);
  for (std::size_t p = 0; p < n_proc; ++p) {
    for (std::size_t c = 0; c < n_counts; ++c) {
      CellResult cell;
      cell.processor = plan.processors[p];
      cell.n_vehicles = plan.vehicle_counts[c];
      std::vector<double> reliabilities;
      for (std::size_t s = 0; s < n_seeds; ++s) {
        const std::size_t i = (p * n_counts + c) * n_seeds + s;
        cell.repetitions.push_back(slots[i]);
        if (slots[i].ok()) {
          reliabilities.push_back(slots[i].summary.reliability);
        }
      }
      if (!reliabilities.empty()) {
        cell.success_rate_pct =
            success_rate(reliabilities, plan.spec.requirement.r_req);
      }
      result.cells.push_back(std::move(cell));
    }
  }
  for (const Processor& proc : plan.processors) {
    result.red_line.emplace_back(proc,
                                 feasible_vehicle_count(proc, plan.spec));
  }
  return result;
}

namespace detail {

// Shortest decimal form that parses back to the identical double, fixed
// notation, so CSV readers recover in-memory values exactly.
inline std::string format_double(double v) {
  if (std::isnan(v)) {
    return "nan";
  }
  char buf[400];
  const auto res =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed);
  return std::string(buf, res.ptr);
}

class OutputFile {
 public:
  explicit OutputFile(const std::filesystem::path& path)
      : path_(path.string()), out_(path, std::ios::binary) {
    if (!out_) {
      throw IoError("cannot open for writing: " + path_);
    }
  }

  template <typename T>
  OutputFile& operator<<(const T& value) {
    out_ << value;
    return *this;
  }

  void close() {
    out_.close();
    if (!out_) {
      throw IoError("write failed: " + path_);
    }
  }

 private:
  std::string path_;
  std::ofstream out_;
};

}  // namespace detail

// Writes cells.csv, heatmap.csv, redline.csv, a gnuplot helper, and the
// run_meta.json echo into dir. Returns the paths written. Output is
// deterministic: same result, same bytes.
inline std::vector<std::string> emit_outputs(const SweepResult& result,
                                             const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create output dir " + dir.string() + ": " +
                  ec.message());
  }
  std::vector<std::string> written;
  const std::size_t n_seeds = result.plan.seeds.size();

  {
    detail::OutputFile out(dir / "cells.csv");
    out << "service,processor_mips,n_vehicles,seed,reliability,mean_e2e_ms,"
           "p99_e2e_ms\n";
    for (const CellResult& cell : result.cells) {
      for (std::size_t s = 0; s < n_seeds; ++s) {
        const RepetitionOutcome& rep = cell.repetitions[s];
        const double reliability =
            rep.ok() ? rep.summary.reliability
                     : std::numeric_limits<double>::quiet_NaN();
        const double mean_ms =
            rep.ok() ? rep.summary.mean_e2e_s * 1e3
                     : std::numeric_limits<double>::quiet_NaN();
        const double p99_ms =
            rep.ok() ? rep.summary.p99_e2e_s * 1e3
                     : std::numeric_limits<double>::quiet_NaN();
        out << result.plan.spec.name << ','
            << detail::format_double(cell.processor.mips) << ','
            << cell.n_vehicles << ',' << rep.seed << ','
            << detail::format_double(reliability) << ','
            << detail::format_double(mean_ms) << ','
            << detail::format_double(p99_ms) << '\n';
      }
    }
    out.close();
    written.push_back((dir / "cells.csv").string());
  }

  {
    detail::OutputFile out(dir / "heatmap.csv");
    out << "processor_mips,n_vehicles,success_rate_pct\n";
    for (const CellResult& cell : result.cells) {
      out << detail::format_double(cell.processor.mips) << ','
          << cell.n_vehicles << ','
          << detail::format_double(cell.success_rate_pct) << '\n';
    }
    out.close();
    written.push_back((dir / "heatmap.csv").string());
  }

  {
    detail::OutputFile out(dir / "redline.csv");
    out << "processor_mips,max_vehicles\n";
    for (const auto& [proc, count] : result.red_line) {
      out << detail::format_double(proc.mips) << ',' << count << '\n';
    }
    out.close();
    written.push_back((dir / "redline.csv").string());
  }

  {
    // Convenience plot: success-rate grid plus the feasibility line. Not a
    // tested surface; the CSVs are the real artifact.
    detail::OutputFile out(dir / "heatmap.gp");
    out << "set datafile separator ','\n"
        << "set view map\n"
        << "set xlabel 'vehicles'\n"
        << "set ylabel 'processor MIPS'\n"
        << "set cblabel 'success rate %'\n"
        << "splot 'heatmap.csv' skip 1 using 2:1:3 with points pt 5 ps 4 "
           "palette notitle\n";
    out.close();
    written.push_back((dir / "heatmap.gp").string());
  }

  {
    nlohmann::json meta;
    meta["tool_version"] = kVersion;
    meta["config"] = result.plan;
    nlohmann::json errors = nlohmann::json::array();
    for (const CellResult& cell : result.cells) {
      for (const RepetitionOutcome& rep : cell.repetitions) {
        if (!rep.ok()) {
          errors.push_back({{"processor_id", cell.processor.id},
                            {"n_vehicles", cell.n_vehicles},
                            {"seed", rep.seed},
                            {"message", rep.error}});
        }
      }
    }
    meta["errors"] = errors;
    detail::OutputFile out(dir / "run_meta.json");
    out << meta.dump(2) << '\n';
    out.close();
    written.push_back((dir / "run_meta.json").string());
  }

  return written;
}

}  // namespace mecap
