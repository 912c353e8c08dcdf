// Command-line front end: analytic planning, single runs, and sweep grids.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mecap/analytic.hpp"
#include "mecap/config.hpp"
#include "mecap/harness.hpp"
#include "mecap/scenario.hpp"
#include "mecap/version.hpp"

namespace {

std::string fmt(double v) { return mecap::detail::format_double(v); }

int cmd_plan(const std::string& service_name,
             const std::vector<std::string>& processor_ids, bool csv) {
  const mecap::ServiceSpec spec = mecap::load_service(service_name);
  std::vector<mecap::Processor> procs;
  if (processor_ids.empty()) {
    procs = mecap::processor_catalog();
  } else {
    for (const auto& id : processor_ids) {
      procs.push_back(mecap::load_processor(id));
    }
  }
  const mecap::PlanResult result = mecap::plan(spec, procs);
  const long long cpu_min = mecap::display_mips(result.cpu_min_mips);
  if (csv) {
    std::cout << "service,cpu_min_mips,mu_min_hz,processor_id,processor_mips,"
                 "max_vehicles\n";
    for (const auto& [proc, count] : result.max_vehicles) {
      std::cout << spec.name << ',' << cpu_min << ',' << fmt(result.mu_min_hz)
                << ',' << proc.id << ',' << fmt(proc.mips) << ',' << count
                << '\n';
    }
  } else {
    std::cout << "service:      " << spec.name << '\n'
              << "cpu_min_mips: " << cpu_min << '\n'
              << "mu_min_hz:    " << fmt(result.mu_min_hz) << '\n';
    if (!result.max_vehicles.empty()) {
      std::cout << "max vehicles per processor (equal CPU split):\n";
      for (const auto& [proc, count] : result.max_vehicles) {
        std::cout << "  " << proc.id << " (" << fmt(proc.mips)
                  << " MIPS): " << count << '\n';
      }
    }
  }
  return 0;
}

int cmd_run(const std::string& config_path, std::int64_t seed_override) {
  mecap::ExperimentPlan plan = mecap::load_config_file(config_path);
  if (plan.processors.size() != 1 || plan.vehicle_counts.size() != 1) {
    throw mecap::ValidationError(
        "run needs a single-cell config (one processor, one vehicle count); "
        "use sweep for grids");
  }
  if (seed_override >= 0) {
    plan.seeds = {static_cast<std::uint64_t>(seed_override)};
  }
  const mecap::ExperimentConfig cfg = plan.cell(0, 0, 0);
  const mecap::RunResult result = mecap::run_experiment(cfg);
  const mecap::RunSummary& s = result.summary;

  std::cout << "service:          " << cfg.spec.name << '\n'
            << "processor:        " << cfg.processor.id << " ("
            << fmt(cfg.processor.mips) << " MIPS)\n"
            << "n_vehicles:       " << cfg.n_vehicles << '\n'
            << "seed:             " << cfg.seed << '\n'
            << "alloc_mips:       " << fmt(s.alloc_mips) << '\n'
            << "mu_hz:            " << fmt(s.mu_hz) << '\n'
            << "lambda_hz:        " << fmt(cfg.spec.uplink_rate_hz) << '\n'
            << "stable:           " << (s.unstable ? "no" : "yes") << '\n'
            << "requests:         " << s.n_requests << '\n'
            << "served:           " << s.n_served << '\n'
            << "copies_delivered: " << s.n_copies_delivered << '\n'
            << "samples:          " << s.n_samples << '\n';
  if (s.has_data) {
    std::cout << "reliability:      " << fmt(s.reliability) << '\n'
              << "mean_e2e_ms:      " << fmt(s.mean_e2e_s * 1e3) << '\n'
              << "p99_e2e_ms:       " << fmt(s.p99_e2e_s * 1e3) << '\n';
  } else {
    std::cout << "reliability:      no data (0 samples)\n";
  }
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(s.state_hash));
  std::cout << "state_hash:       " << hash << '\n';
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir,
              unsigned jobs) {
  const mecap::ExperimentPlan plan = mecap::load_config_file(config_path);
  const mecap::SweepResult result = mecap::run_sweep(plan, jobs);
  const auto files = mecap::emit_outputs(result, out_dir);
  std::size_t failures = 0;
  for (const auto& cell : result.cells) {
    for (const auto& rep : cell.repetitions) {
      if (!rep.ok()) {
        ++failures;
      }
    }
  }
  for (const auto& f : files) {
    std::cout << "wrote " << f << '\n';
  }
  if (failures > 0) {
    std::cerr << failures << " repetition(s) failed; see run_meta.json\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edge capacity planner and pipeline simulator"};
  app.set_version_flag("--version", std::string(mecap::kVersion));
  app.require_subcommand(1);

  std::string service_name;
  std::vector<std::string> processor_ids;
  bool plan_csv = false;
  CLI::App* plan_cmd =
      app.add_subcommand("plan", "Analytic minimum-CPU plan for a service");
  plan_cmd->add_option("--service", service_name, "catalog service name")
      ->required();
  plan_cmd
      ->add_option("--processors", processor_ids,
                   "catalog processor ids (default: all)")
      ->delimiter(',');
  plan_cmd->add_flag("--csv", plan_csv, "emit CSV instead of text");

  std::string run_config;
  std::int64_t run_seed = -1;
  CLI::App* run_cmd =
      app.add_subcommand("run", "Simulate one experiment cell");
  run_cmd->add_option("--config", run_config, "config file (JSON)")
      ->required();
  run_cmd->add_option("--seed", run_seed, "override the config's seed");

  std::string sweep_config;
  std::string sweep_out;
  unsigned sweep_jobs = 0;
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "Run a full grid and write CSV artifacts");
  sweep_cmd->add_option("--config", sweep_config, "config file (JSON)")
      ->required();
  sweep_cmd->add_option("--out", sweep_out, "output directory")->required();
  sweep_cmd->add_option("--jobs", sweep_jobs,
                        "worker threads (default: hardware)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (plan_cmd->parsed()) {
      return cmd_plan(service_name, processor_ids, plan_csv);
    }
    if (run_cmd->parsed()) {
      return cmd_run(run_config, run_seed);
    }
    return cmd_sweep(sweep_config, sweep_out, sweep_jobs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
