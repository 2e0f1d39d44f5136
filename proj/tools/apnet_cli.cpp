#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "apnet/errors.hpp"
#include "apnet/metrics.hpp"
#include "apnet/scenario.hpp"
#include "apnet/simulation.hpp"

#ifdef APNET_WITH_SERVICE
#include "apnet/service.hpp"
#endif

namespace {

int exit_code(apnet::ErrorKind kind) {
  switch (kind) {
    case apnet::ErrorKind::kInvalidConfig:
    case apnet::ErrorKind::kInvalidEdge:
    case apnet::ErrorKind::kDisconnectedGraph:
    case apnet::ErrorKind::kAllZeroK:
    case apnet::ErrorKind::kDimensionMismatch: return 2;
    case apnet::ErrorKind::kIoError: return 3;
    default: return 4;
  }
}

struct RunOptions {
  std::string config;
  std::string out;
  long long seed = -1;
  double duration = -1.0;
  bool headless = false;
};

apnet::ScenarioConfig load(const RunOptions& o, apnet::ScenarioConfig cfg) {
  if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
  if (o.duration > 0.0) cfg.duration = o.duration;
  if (!o.out.empty()) cfg.output.dir = o.out;
  cfg.validate();
  return cfg;
}

apnet::RunReport run(apnet::Simulation& sim, bool quiet) {
  const auto t0 = std::chrono::steady_clock::now();
  const long total = sim.total_steps();
  long next = total / 10;
  while (!sim.finished()) {
    sim.step();
    if (!quiet && total >= 10 && sim.step_index() >= next) {
      std::fprintf(stderr, "  t = %.1f s (%ld%%)\n", sim.time(), 100 * sim.step_index() / total);
      next += total / 10;
    }
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  apnet::RunReport rep = apnet::evaluate_run(sim);
  apnet::export_metrics(sim, rep, sim.config().output.dir, wall);
  std::printf("%s: %ld steps, %.1f s simulated, %.2f s wall, output in %s\n", rep.scenario.c_str(), rep.steps,
              rep.sim_time, wall, sim.config().output.dir.c_str());
  return rep;
}

void print_checks(const apnet::RunReport& rep) {
  for (const auto& c : rep.channels) {
    for (const auto& chk : c.checks) {
      std::printf("  %-6s %-14s bound %-12.6g observed %-12.6g cutoff %-8s %s\n", c.channel.c_str(),
                  chk.name.c_str(), chk.bound, chk.observed_max,
                  chk.cutoff ? std::to_string(*chk.cutoff).c_str() : "none", chk.satisfied ? "ok" : "VIOLATED");
    }
    if (c.bounds && c.outside_samples > 0) {
      std::printf("  %-6s dV/dt < 0 on %.4f of %ld samples outside the compact set\n", c.channel.c_str(),
                  c.outside_fraction(), c.outside_samples);
    }
  }
  for (const auto& d : rep.dwells) {
    std::printf("  dwell (%.1f, %.1f) %.1f-%.1f s: %d sensors within %.1f m, H %.4g -> peak %.4g -> %.4g, H/M %.4g -> %.4g\n",
                d.position.x(), d.position.y(), d.start, d.end, d.sensors_within, rep.dwell_radius, d.cost_start,
                d.cost_peak, d.cost_end, d.normalized_start, d.normalized_end);
  }
}

void add_run_options(CLI::App* cmd, RunOptions& o, bool need_config) {
  auto* opt = cmd->add_option("--config", o.config, "Scenario JSON file");
  if (need_config) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Override the scenario seed");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--duration", o.duration, "Override the simulated duration (s)");
  cmd->add_flag("--headless", o.headless, "Suppress progress output");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active-passive adaptive consensus network with coverage control"};
  app.require_subcommand(1);

  RunOptions sim_opts, verify_opts, sec5_opts;
  auto* simulate = app.add_subcommand("simulate", "Run a scenario and write trace.csv and summary.json");
  add_run_options(simulate, sim_opts, true);

  auto* verify = app.add_subcommand("verify-bounds", "Run a scenario and check the ultimate-bound monitors");
  add_run_options(verify, verify_opts, true);

  std::string write_config;
  auto* sec5 = app.add_subcommand("replicate-sec5", "Run the 25-agent field experiment");
  add_run_options(sec5, sec5_opts, false);
  sec5->add_option("--write-config", write_config, "Write the default scenario JSON and exit");

#ifdef APNET_WITH_SERVICE
  apnet::ServiceOptions svc;
  auto* serve = app.add_subcommand("serve", "Host live sessions over HTTP and WebSocket");
  serve->add_option("--bind", svc.bind_address, "Bind address");
  serve->add_option("--port", svc.port, "TCP port (0 picks a free port)");
  serve->add_option("--snapshot-rate", svc.snapshot_rate, "Snapshots per second");
  serve->add_option("--realtime", svc.realtime_ratio, "Simulated seconds per wall second (0 = as fast as possible)");
  serve->add_option("--v-max", svc.v_max, "Target speed clamp (m/s), overrides scenario files");
  serve->add_option("--max-sessions", svc.max_sessions, "Concurrent session limit");
  serve->add_option("--log-dir", svc.log_dir, "Directory for command logs and traces");
#endif

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      apnet::Simulation sim(load(sim_opts, apnet::load_scenario(sim_opts.config)));
      const auto rep = run(sim, sim_opts.headless);
      print_checks(rep);
      return 0;
    }
    if (verify->parsed()) {
      apnet::Simulation sim(load(verify_opts, apnet::load_scenario(verify_opts.config)));
      const auto rep = run(sim, verify_opts.headless);
      print_checks(rep);
      std::printf("%s\n", rep.bounds_satisfied ? "all bounds satisfied" : "bound violation");
      return rep.bounds_satisfied ? 0 : 1;
    }
    if (sec5->parsed()) {
      apnet::ScenarioConfig base = sec5_opts.config.empty() ? apnet::sec5_default_scenario()
                                                            : apnet::load_scenario(sec5_opts.config);
      if (!write_config.empty()) {
        std::FILE* f = std::fopen(write_config.c_str(), "w");
        if (!f) apnet::fail(apnet::ErrorKind::kIoError, "cannot write " + write_config);
        std::fprintf(f, "%s\n", apnet::scenario_to_json(base).dump(2).c_str());
        std::fclose(f);
        return 0;
      }
      apnet::Simulation sim(load(sec5_opts, base));
      const auto rep = run(sim, sec5_opts.headless);
      print_checks(rep);
      return 0;
    }
#ifdef APNET_WITH_SERVICE
    if (serve->parsed()) return apnet::run_service(svc);
#endif
  } catch (const apnet::Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", std::string(apnet::to_string(e.kind())).c_str(), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
  return 0;
}
