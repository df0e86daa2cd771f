#include "podrom/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace podrom;

namespace
{

struct CommonOptions
{
  std::string              config;
  std::string              out_dir;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<double>        alpha;

  void attach(CLI::App &app, bool config_required = true, bool with_alpha = false)
  {
    auto *c = app.add_option("--config", config, "experiment configuration (JSON)");
    if (config_required)
      c->required()->check(CLI::ExistingFile);
    app.add_option("--out-dir", out_dir, "output directory (overrides report.out_dir)");
    app.add_option("--override", overrides, "dotted.key=value, may be repeated");
    app.add_option("--seed", seed, "random seed (overrides seed)");
    if (with_alpha)
      app.add_option("--alpha", alpha, "pressure-indicator constant in [0, 1] (overrides rom.alpha)");
  }

  ExperimentConfig load() const
  {
    std::vector<std::string> all = overrides;
    if (!out_dir.empty())
      all.push_back("report.out_dir=\"" + out_dir + "\"");
    if (seed)
      all.push_back("seed=" + std::to_string(*seed));
    if (alpha)
      {
        std::ostringstream a;
        a.precision(17);
        a << "rom.alpha=" << *alpha;
        all.push_back(a.str());
      }
    return load_config(config, all);
  }
};

bool has_pod_outputs(const fs::path &dir)
{
  for (const char *f : {"velocity_snapshots.bin", "pressure_snapshots.bin", "velocity_basis.bin", "pressure_basis.bin"})
    if (!fs::exists(dir / f))
      return false;
  return true;
}

void print_summary(const PipelineSummary &s)
{
  std::printf("r = %d, rp = %d, mu = %.6g\n", s.r, s.rp, s.mu);
  std::printf("velocity error (rel. l2(L2)):           %.6e\n", s.velocity_error);
  std::printf("velocity error vs projection:           %.6e\n", s.velocity_error_projected);
  std::printf("pressure error (rel. l2(L2)):           %.6e\n", s.pressure_error);
  std::printf("velocity / pressure indicator:          %.6e / %.6e\n", s.velocity_indicator, s.pressure_indicator);
  std::printf("max weak divergence FOM / ROM:          %.3e / %.3e\n", s.max_weak_divergence_fom, s.max_weak_divergence_rom);
  std::printf("max |E_kin diff|:                       %.6e\n", s.max_abs_energy_difference);
  std::printf("adaptation events: %d, blew up: %s\n", s.adaptation_events, s.blew_up ? "yes" : "no");
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"POD reduced-order models for stabilized incompressible flow"};
  app.require_subcommand(1);

  CommonOptions fom_o, pod_o, rom_o, run_o, lh_o;
  auto         *fom = app.add_subcommand("fom", "run the full-order model and store snapshots");
  fom_o.attach(*fom);
  auto *pod = app.add_subcommand("pod", "compute POD bases from stored snapshots");
  pod_o.attach(*pod);
  auto *rom = app.add_subcommand("rom", "run the reduced model against stored bases");
  rom_o.attach(*rom, true, true);
  auto *run = app.add_subcommand("run", "fom, pod, rom and report in one go");
  run_o.attach(*run, true, true);

  std::string report_dir;
  auto       *report = app.add_subcommand("report", "summarize an output directory and write plot scripts");
  report->add_option("--out-dir", report_dir, "output directory of a previous run")->required();

  auto *study = app.add_subcommand("study", "parameter studies");
  study->require_subcommand(1);

  ConvergenceStudyConfig conv;
  std::string            conv_scheme = "graddiv", conv_out = "convergence";
  auto                  *convergence = study->add_subcommand("convergence", "Taylor-Green mesh convergence");
  convergence->add_option("--scheme", conv_scheme, "lps or graddiv");
  convergence->add_option("--nu", conv.nu, "viscosity");
  convergence->add_option("--base", conv.base_cells, "cells per side on the coarsest level");
  convergence->add_option("--levels", conv.levels, "number of mesh levels (>= 3)");
  convergence->add_option("--dt-factor", conv.dt_factor, "dt = factor * h^2");
  convergence->add_option("--t-final", conv.t_final, "final time");
  convergence->add_option("--mu", conv.mu, "grad-div parameter");
  convergence->add_flag("--interpolation", conv.interpolation_only, "measure the nodal interpolant only");
  convergence->add_option("--out-dir", conv_out, "output directory");

  double multiple = 10.0;
  auto  *longhorizon = study->add_subcommand("longhorizon", "constant versus adaptive mu over an extended window");
  lh_o.attach(*longhorizon);
  longhorizon->add_option("--multiple", multiple, "horizon as a multiple of the snapshot window");

  try
    {
      app.parse(argc, argv);
    }
  catch (const CLI::CallForHelp &e)
    {
      return app.exit(e);
    }
  catch (const CLI::ParseError &e)
    {
      app.exit(e);
      return 1;
    }

  try
    {
      if (*fom)
        {
          const auto cfg = fom_o.load();
          auto       disc = make_discretization(cfg);
          const auto r = run_fom_stage(cfg, cfg.report.out_dir, disc);
          std::printf("stored %d snapshots in %s\n", r.run.velocity.size(), cfg.report.out_dir.c_str());
        }
      else if (*pod)
        {
          const auto cfg = pod_o.load();
          const auto disc = make_discretization(cfg);
          const auto r = run_pod_stage(cfg, cfg.report.out_dir, disc);
          std::printf("velocity rank %d (working r %d), pressure rank %d, identities %s\n", r.velocity.rank, r.velocity.r,
                      r.pressure.rank, r.identities.passed ? "hold" : "FAIL");
        }
      else if (*rom)
        {
          const auto cfg = rom_o.load();
          const auto disc = make_discretization(cfg);
          print_summary(run_rom_stage(cfg, cfg.report.out_dir, disc).summary);
        }
      else if (*run)
        {
          const auto cfg = run_o.load();
          print_summary(run_pipeline(cfg).rom.summary);
        }
      else if (*report)
        std::cout << run_report_stage(report_dir);
      else if (*convergence)
        {
          conv.scheme = scheme_from_string(conv_scheme);
          const auto res = convergence_study(conv);
          fs::create_directories(conv_out);
          write_convergence_csv(res, fs::path(conv_out) / "convergence.csv");
          std::printf("%6s %12s %12s %8s %14s %8s\n", "cells", "h", "dt", "steps", "L2 error", "order");
          for (const auto &row : res.rows)
            std::printf("%6d %12.4e %12.4e %8d %14.6e %8.3f\n", row.cells, row.h, row.dt, row.steps, row.error, row.order);
          if (!res.monotone)
            std::fprintf(stderr, "warning: errors are not monotonically decreasing\n");
        }
      else if (*longhorizon)
        {
          const auto     cfg = lh_o.load();
          const fs::path out = cfg.report.out_dir;
          if (!has_pod_outputs(out))
            run_pipeline(cfg, out);
          auto       disc = make_discretization(cfg);
          const auto res = long_horizon_study(cfg, multiple, out, disc);
          write_long_horizon_csv(res, out);
          std::printf("window [%g, %g], mu_bar = %g\n", res.t_start, res.t_end, res.mu_bar);
          for (const auto *v : {&res.constant, &res.adaptive})
            std::printf("%-9s max |E_diff| = %.6e, adaptations = %d, blew up = %s\n", v->adaptive ? "adaptive" : "constant",
                        v->max_abs_energy_difference, v->adaptation_events, v->blew_up ? "yes" : "no");
        }
    }
  catch (const ValidationError &e)
    {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 1;
    }
  catch (const std::exception &e)
    {
      std::fprintf(stderr, "failure: %s\n", e.what());
      return 2;
    }
  return 0;
}
