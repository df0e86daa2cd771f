#include "podrom/harness.hpp"

#include "podrom/io.hpp"

#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <map>
#include <sstream>

namespace podrom
{

namespace fs = std::filesystem;

namespace
{

std::string num(double v)
{
  if (std::isnan(v))
    return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10e", v);
  return buf;
}

class Csv
{
public:
  explicit Csv(std::initializer_list<std::string> header) { row(std::vector<std::string>(header)); }

  void row(const std::vector<std::string> &cells)
  {
    for (std::size_t k = 0; k < cells.size(); ++k)
      text_ << (k ? "," : "") << cells[k];
    text_ << '\n';
  }

  void save(const fs::path &path) const
  {
    std::ofstream f = open_output(path);
    f << text_.str();
  }

private:
  std::ostringstream text_;
};

const char *const velocity_snapshot_file = "velocity_snapshots.bin";
const char *const pressure_snapshot_file = "pressure_snapshots.bin";
const char *const velocity_basis_file = "velocity_basis.bin";
const char *const pressure_basis_file = "pressure_basis.bin";

SnapshotSet load_snapshots(const fs::path &path, std::shared_ptr<const FESpace> space)
{
  std::ifstream in = open_input(path, true);
  return read_snapshots(std::move(space), in);
}

PODBasis load_basis(const fs::path &path, std::shared_ptr<const FESpace> space)
{
  std::ifstream in = open_input(path, true);
  return read_basis(std::move(space), in);
}

std::vector<std::map<std::string, double>> read_csv(const fs::path &path)
{
  std::ifstream                              in = open_input(path);
  std::string                                line;
  std::vector<std::string>                   header;
  std::vector<std::map<std::string, double>> rows;
  auto split = [](const std::string &s) {
    std::vector<std::string> out;
    std::stringstream        ss(s);
    std::string              cell;
    while (std::getline(ss, cell, ','))
      out.push_back(cell);
    return out;
  };
  if (std::getline(in, line))
    header = split(line);
  while (std::getline(in, line))
    {
      const auto                    cells = split(line);
      std::map<std::string, double> row;
      for (std::size_t k = 0; k < cells.size() && k < header.size(); ++k)
        row[header[k]] = std::strtod(cells[k].c_str(), nullptr);
      rows.push_back(std::move(row));
    }
  return rows;
}

int velocity_modes(const ExperimentConfig &cfg, const PODBasis &basis)
{
  const int r = cfg.rom.r > 0 ? cfg.rom.r : basis.r;
  if (r < 1 || r > basis.rank)
    throw ValidationError("rom: r = " + std::to_string(r) + " is outside [1, " + std::to_string(basis.rank) + "]");
  return r;
}

int pressure_modes(const ExperimentConfig &cfg, const PODBasis &pressure, int r)
{
  int rp = cfg.rom.rp > 0 ? cfg.rom.rp : (cfg.pod.pressure_r > 0 ? cfg.pod.pressure_r : r);
  return std::min(rp, pressure.rank);
}

// Pressure modes needed when only energies are wanted: the LPS model is
// coupled, the grad-div one runs without pressure.
int energy_only_pressure_modes(const ExperimentConfig &cfg, const PODBasis &pressure, int r)
{
  return cfg.rom.scheme == Scheme::lps ? pressure_modes(cfg, pressure, r) : 0;
}

SparseMatrix pressure_stiffness(const Discretization &disc)
{
  return assemble_stiffness(disc.model->pressure_space());
}

LoadFunction load_of(const Discretization &disc)
{
  if (!disc.model->problem().forcing)
    return {};
  const FullOrderModel *m = disc.model.get();
  return [m](double t) { return m->load(t); };
}

// Reduced operators and pressure recovery for one (r, rp) choice.
struct ReducedModel
{
  ROMOperators                    ops;
  std::optional<SupremizerSpace>  supremizers;
  std::optional<PressureRecovery> recovery;
  double                          beta_r = 0.0;
};

ReducedModel build_reduced(const ExperimentConfig &cfg, const Discretization &disc, const PODBasis &vel, const PODBasis &pres,
                           int r, int rp)
{
  const auto   &fom = *disc.model;
  ReducedModel  rm;
  ROMBuildInput in;
  in.spaces = &fom.spaces();
  in.ops = &fom.operators();
  in.scheme = cfg.rom.scheme;
  in.velocity = &vel;
  in.r = r;
  const bool want_pressure = cfg.rom.scheme == Scheme::lps || cfg.rom.pressure_recovery;
  // A grad-div ROM fed by LPS snapshots has equal-order pressure modes that
  // do not match its own pressure space; recovery is then skipped.
  const bool pressure_matches = cfg.rom.scheme == cfg.fom.scheme;
  if (want_pressure && pressure_matches && rp > 0)
    {
      in.pressure = &pres;
      in.rp = rp;
    }
  in.load = load_of(disc);
  if (disc.drag_fields)
    {
      in.drag_fields = &*disc.drag_fields;
      in.drag = cfg.drag_config();
    }
  rm.ops = build_rom_operators(in);

  if (cfg.rom.scheme == Scheme::graddiv && in.pressure)
    {
      const auto &ops = fom.operators();
      rm.supremizers = build_supremizers(fom.velocity_space(), ops.stiffness, ops.divergence, rm.ops.Psi);
      rm.recovery = build_pressure_recovery(*rm.supremizers, pres, rp, rm.ops, fom.spaces(), ops);
      rm.beta_r = compute_beta_r(rm.supremizers->zeta, rm.ops.Psi, ops.divergence, ops.stiffness, ops.mass, ops.pressure_mass);
    }
  return rm;
}

// Snapshots, bases and the energy table the ROM stages read back.
struct Offline
{
  SnapshotSet         vs;
  SnapshotSet         ps;
  PODBasis            vel;
  PODBasis            pres;
  SparseMatrix        pressure_stiffness;
  std::vector<double> table;
};

Offline load_offline(const fs::path &out, const Discretization &disc)
{
  const auto &fom = *disc.model;
  Offline     o{load_snapshots(out / velocity_snapshot_file, fom.spaces().velocity),
            load_snapshots(out / pressure_snapshot_file, fom.spaces().pressure),
            load_basis(out / velocity_basis_file, fom.spaces().velocity),
            load_basis(out / pressure_basis_file, fom.spaces().pressure),
            pressure_stiffness(disc),
            {}};
  o.table = periodic_energy_table(snapshot_energies(o.vs, fom.operators().mass));
  return o;
}

Eigen::VectorXd initial_coefficients(const Offline &off, const SparseMatrix &mass, int r)
{
  return project_L2(off.vel, mass, off.vs.field(0), r);
}

ROMEvaluation evaluate_rom(const ExperimentConfig &cfg, const Discretization &disc, const Offline &off, int r,
                           const ROMConfig &rcfg, ReducedModel *keep)
{
  const auto  &fops = disc.model->operators();
  const auto  &M = fops.mass;
  const auto  &Mp = fops.pressure_mass;
  ReducedModel rm = build_reduced(cfg, disc, off.vel, off.pres, r, pressure_modes(cfg, off.pres, r));

  ROMRunOptions opt;
  opt.energy_table = &off.table;
  opt.recovery = rm.recovery ? &*rm.recovery : nullptr;

  ROMEvaluation ev;
  ev.r = r;
  ev.rp = rm.ops.rp;
  ev.mu = rcfg.adaptive.enabled ? rcfg.adaptive.mu_init : rcfg.mu;
  ev.beta_r = rm.beta_r;
  ev.run = run_rom(rm.ops, rcfg, initial_coefficients(off, M, r), opt);

  const SpectralDiagnostics diag = spectral_diagnostics(off.vel, fops.stiffness, r, &off.pres, &off.pressure_stiffness);
  if (cfg.rom.alpha)
    ev.alpha = *cfg.rom.alpha;
  else if (rm.supremizers)
    ev.alpha = principal_angle_cosine(rm.ops.Phi, rm.supremizers->zeta, M);
  ev.indicator = error_indicators(diag, ev.alpha, cfg.rom.scheme);

  const Eigen::MatrixXd &Phi = rm.ops.Phi;
  const bool             has_pressure = rm.ops.rp > 0 && (cfg.rom.scheme == Scheme::lps || rm.recovery);
  const int              n = std::min<int>(static_cast<int>(ev.run.a.size()), off.vs.size());
  const double           nan = std::numeric_limits<double>::quiet_NaN();
  auto sq = [](const Eigen::VectorXd &v, const SparseMatrix &m) { return std::max(0.0, v.dot(m * v)); };
  double ref_u = 0.0, ref_up = 0.0, ref_p = 0.0, ref_pp = 0.0, eu = 0.0, eup = 0.0, ep = 0.0, epp = 0.0;
  for (int j = 0; j < n; ++j)
    {
      const Eigen::VectorXd uh = off.vs.field(j);
      const Eigen::VectorXd ur = rm.ops.velocity(ev.run.a[j]);
      const Eigen::VectorXd pu = rm.ops.lift + Phi * (Phi.transpose() * (M * (uh - rm.ops.lift)));
      ErrorSample           e;
      e.t = off.vs.times[j];
      const double du = sq(ur - uh, M), dup = sq(ur - pu, M);
      e.velocity = std::sqrt(du);
      e.velocity_projected = std::sqrt(dup);
      eu += du;
      eup += dup;
      ref_u += sq(uh, M);
      ref_up += sq(pu, M);
      e.pressure = e.pressure_projected = nan;
      if (has_pressure && j > 0)
        {
          const Eigen::VectorXd ph = off.ps.field(j);
          const Eigen::VectorXd pr = rm.ops.Psi * ev.run.b[j];
          const Eigen::VectorXd pp = rm.ops.Psi * (rm.ops.Psi.transpose() * (Mp * ph));
          const double          dp = sq(pr - ph, Mp), dpp = sq(pr - pp, Mp);
          e.pressure = std::sqrt(dp);
          e.pressure_projected = std::sqrt(dpp);
          ep += dp;
          epp += dpp;
          ref_p += sq(ph, Mp);
          ref_pp += sq(pp, Mp);
        }
      ev.errors.push_back(e);
    }
  auto ratio = [](double num_sq, double den_sq) { return den_sq > 0.0 ? std::sqrt(num_sq / den_sq) : std::sqrt(num_sq); };
  ev.velocity_error = std::sqrt(rcfg.dt * eu);
  ev.velocity_error_relative = ratio(eu, ref_u);
  ev.velocity_error_projected = ratio(eup, ref_up);
  ev.pressure_error = has_pressure ? std::sqrt(rcfg.dt * ep) : nan;
  ev.pressure_error_relative = has_pressure ? ratio(ep, ref_p) : nan;
  ev.pressure_error_projected = has_pressure ? ratio(epp, ref_pp) : nan;
  for (const auto &a : ev.run.a)
    ev.max_weak_divergence_rom = std::max(ev.max_weak_divergence_rom, weak_divergence(fops.divergence, rm.ops.velocity(a)));
  if (keep)
    *keep = std::move(rm);
  return ev;
}

void write_plot_script(const fs::path &path, const std::string &csv, const std::string &x, const std::vector<std::string> &ys,
                       const std::string &ylabel)
{
  std::ofstream f = open_output(path);
  f << "import sys\nimport pandas as pd\nimport matplotlib\nmatplotlib.use('Agg')\nimport matplotlib.pyplot as plt\n\n";
  f << "d = pd.read_csv('" << csv << "')\nfig, ax = plt.subplots()\n";
  for (const auto &y : ys)
    f << "ax.plot(d['" << x << "'], d['" << y << "'], label='" << y << "')\n";
  f << "ax.set_xlabel('" << x << "')\nax.set_ylabel('" << ylabel << "')\nax.legend()\n";
  f << "fig.savefig(sys.argv[1] if len(sys.argv) > 1 else '" << fs::path(csv).stem().string() << ".png', dpi=150)\n";
}

} // namespace

Discretization make_discretization(const ExperimentConfig &cfg)
{
  Discretization d;
  d.mesh = std::make_shared<const Mesh>(build_mesh(cfg.geometry));
  d.exact = manufactured_of(cfg);
  d.model = std::make_unique<FullOrderModel>(d.mesh, cfg.fom, build_problem(cfg));
  if (d.mesh->has_tag(BoundaryTag::obstacle))
    d.drag_fields = build_drag_lift_fields(d.model->velocity_space(), d.model->operators().scalar_stiffness);
  return d;
}

std::vector<double> snapshot_energies(const SnapshotSet &velocity, const SparseMatrix &mass)
{
  std::vector<double> e;
  for (int j = 0; j < velocity.size(); ++j)
    e.push_back(kinetic_energy(velocity.field(j), mass));
  return e;
}

FOMStageResult run_fom_stage(const ExperimentConfig &cfg, const fs::path &out, Discretization &disc)
{
  return run_stage("fom", [&] {
    fs::create_directories(out);
    {
      std::ofstream f = open_output(out / "config.json");
      f << to_json_text(cfg);
    }
    {
      std::ofstream f = open_output(out / "mesh.txt");
      write_mesh(*disc.mesh, f);
    }
    FullOrderModel &model = *disc.model;
    const auto     &ops = model.operators();
    const auto      dcfg = cfg.drag_config();
    FOMStageResult  res;
    auto observer = [&](const FOMState &s) {
      if (!cfg.fom.window.records(s.step, cfg.fom.dt))
        return;
      FOMSample smp;
      smp.t = s.t;
      smp.E_kin = kinetic_energy(s.u, ops.mass);
      smp.weak_divergence = weak_divergence(ops.divergence, s.u);
      if (disc.drag_fields && s.step > 0)
        {
          const DragLift dl = drag_lift(model.velocity_space(), ops, *disc.drag_fields, s.u, s.u_prev, s.p, cfg.fom.dt, dcfg);
          smp.c_D = dl.c_D;
          smp.c_L = dl.c_L;
        }
      res.samples.push_back(smp);
    };
    res.run = record_snapshots(model, cfg.pod.center, observer);
    {
      std::ofstream f = open_output(out / velocity_snapshot_file, true);
      write_snapshots(res.run.velocity, f);
    }
    {
      std::ofstream f = open_output(out / pressure_snapshot_file, true);
      write_snapshots(res.run.pressure, f);
    }
    Csv csv{"t", "E_kin", "c_D", "c_L", "weak_div"};
    for (const auto &s : res.samples)
      csv.row({num(s.t), num(s.E_kin), num(s.c_D), num(s.c_L), num(s.weak_divergence)});
    csv.save(out / "fom.csv");
    return res;
  });
}

PODStageResult run_pod_stage(const ExperimentConfig &cfg, const fs::path &out, const Discretization &disc)
{
  return run_stage("pod", [&] {
    const auto       &fom = *disc.model;
    const auto       &ops = fom.operators();
    const SnapshotSet vs = load_snapshots(out / velocity_snapshot_file, fom.spaces().velocity);
    const SnapshotSet ps = load_snapshots(out / pressure_snapshot_file, fom.spaces().pressure);

    PODOptions vopt;
    vopt.r = cfg.pod.r;
    vopt.energy_threshold = cfg.pod.energy_threshold;
    PODStageResult res;
    res.velocity = compute_basis(vs, ops.mass, vopt);
    PODOptions popt;
    res.pressure = compute_basis(ps, ops.pressure_mass, popt);

    const int          r = velocity_modes(cfg, res.velocity);
    const SparseMatrix Ap = pressure_stiffness(disc);
    res.identities = verify_spectral_identities(res.velocity, vs, ops.mass, ops.stiffness, r, static_cast<unsigned>(cfg.seed));
    res.diagnostics = spectral_diagnostics(res.velocity, ops.stiffness, r, &res.pressure, &Ap);

    {
      std::ofstream f = open_output(out / velocity_basis_file, true);
      write_basis(res.velocity, mode_diagnostics(res.velocity, ops.stiffness, r), f);
    }
    {
      std::ofstream f = open_output(out / pressure_basis_file, true);
      write_basis(res.pressure, mode_diagnostics(res.pressure, Ap, std::min(r, res.pressure.rank)), f);
    }
    if (cfg.report.wants("spectrum"))
      {
        Csv csv{"k", "lambda_velocity", "lambda_pressure"};
        const auto n = std::max(res.velocity.eigenvalues.size(), res.pressure.eigenvalues.size());
        for (Eigen::Index k = 0; k < n; ++k)
          csv.row({std::to_string(k + 1), num(k < res.velocity.eigenvalues.size() ? res.velocity.eigenvalues[k] : 0.0),
                   num(k < res.pressure.eigenvalues.size() ? res.pressure.eigenvalues[k] : 0.0)});
        csv.save(out / "spectrum.csv");
      }
    const auto &id = res.identities;
    Csv         csv{"r", "l2_residual", "h1_residual", "S_norm", "inverse_samples", "inverse_violations", "inverse_max_ratio", "passed"};
    csv.row({std::to_string(id.r), num(id.l2_residual), num(id.h1_residual), num(id.S_norm), std::to_string(id.inverse_samples),
             std::to_string(id.inverse_violations), num(id.inverse_max_ratio), id.passed ? "1" : "0"});
    csv.save(out / "identities.csv");
    return res;
  });
}

ROMStageResult run_rom_stage(const ExperimentConfig &cfg, const fs::path &out, const Discretization &disc)
{
  return run_stage("rom", [&] {
    const auto   &fops = disc.model->operators();
    const Offline off = load_offline(out, disc);
    const int     r = velocity_modes(cfg, off.vel);

    ROMConfig             rcfg = cfg.rom_config();
    ROMStageResult        res;
    const auto           &candidates = cfg.rom.mu_bar_candidates;
    if (!candidates.empty())
      {
        ExperimentConfig c = cfg;
        c.rom.pressure_recovery = false;
        const ReducedModel rm = build_reduced(c, disc, off.vel, off.pres, r, energy_only_pressure_modes(cfg, off.pres, r));
        res.mu_selection = select_mu_bar(rm.ops, rcfg, initial_coefficients(off, fops.mass, r), off.table, candidates);
        rcfg.mu = res.mu_selection->mu_bar;
        rcfg.adaptive.mu_init = res.mu_selection->mu_bar;
      }

    ReducedModel rm;
    res.main = evaluate_rom(cfg, disc, off, r, rcfg, &rm);
    {
      std::ofstream f = open_output(out / "rom_operators.bin", true);
      write_rom_operators(rm.ops, off.vel.signature(), f);
    }
    std::vector<int> rs = cfg.rom.r_values.empty() ? std::vector<int>{r} : cfg.rom.r_values;
    for (int rk : rs)
      {
        if (rk < 1 || rk > off.vel.rank)
          throw ValidationError("rom: r_values entry " + std::to_string(rk) + " is outside [1, " + std::to_string(off.vel.rank) + "]");
        ROMEvaluation e = rk == r ? res.main : evaluate_rom(cfg, disc, off, rk, rcfg, nullptr);
        e.run = {};
        e.errors.clear();
        res.sweep.push_back(std::move(e));
      }

    const ROMEvaluation &m = res.main;
    auto                &s = res.summary;
    s.r = m.r;
    s.rp = m.rp;
    s.mu = m.mu;
    s.velocity_error = m.velocity_error_relative;
    s.velocity_error_projected = m.velocity_error_projected;
    s.pressure_error = m.pressure_error_relative;
    s.pressure_error_projected = m.pressure_error_projected;
    s.velocity_indicator = m.indicator.velocity;
    s.pressure_indicator = m.indicator.pressure;
    s.alpha = m.alpha;
    for (int j = 0; j < off.vs.size(); ++j)
      s.max_weak_divergence_fom = std::max(s.max_weak_divergence_fom, weak_divergence(fops.divergence, off.vs.field(j)));
    s.max_weak_divergence_rom = m.max_weak_divergence_rom;
    s.max_abs_energy_difference = m.run.max_abs_energy_difference();
    s.adaptation_events = static_cast<int>(m.run.adaptation_steps.size());
    s.blew_up = m.run.blew_up;
    s.beta_r = m.beta_r;

    const auto &records = m.run.records;
    if (cfg.report.wants("rom"))
      {
        Csv csv{"t", "mu", "E_kin", "E_diff", "c_D", "c_L", "a_norm"};
        for (const auto &q : records)
          csv.row({num(q.t), num(q.mu), num(q.E_kin), num(q.E_diff), num(q.c_D), num(q.c_L), num(q.a_norm)});
        csv.save(out / "rom.csv");
      }
    if (cfg.report.wants("mu"))
      {
        Csv         csv{"t", "mu", "E_diff", "step", "adapted"};
        std::size_t next = 0;
        for (std::size_t j = 0; j < records.size(); ++j)
          {
            const bool adapted = next < m.run.adaptation_steps.size() && m.run.adaptation_steps[next] == static_cast<int>(j);
            if (adapted)
              ++next;
            csv.row({num(records[j].t), num(records[j].mu), num(records[j].E_diff), std::to_string(j), adapted ? "1" : "0"});
          }
        csv.save(out / "mu.csv");
      }
    if (cfg.report.wants("qoi"))
      {
        Csv csv{"t", "E_kin", "c_D", "c_L", "weak_div"};
        for (std::size_t j = 0; j < records.size(); ++j)
          {
            const auto  &q = records[j];
            const double wd = j < m.run.a.size() ? weak_divergence(fops.divergence, rm.ops.velocity(m.run.a[j]))
                                                 : std::numeric_limits<double>::quiet_NaN();
            csv.row({num(q.t), num(q.E_kin), num(q.c_D), num(q.c_L), num(wd)});
          }
        csv.save(out / "qoi.csv");
      }
    if (cfg.report.wants("errors"))
      {
        Csv csv{"r", "vel_error", "pres_error", "vel_indicator", "pres_indicator", "rp", "vel_error_rel", "pres_error_rel",
                "vel_error_proj", "pres_error_proj", "alpha", "beta_r"};
        for (const auto &e : res.sweep)
          csv.row({std::to_string(e.r), num(e.velocity_error), num(e.pressure_error), num(e.indicator.velocity),
                   num(e.indicator.pressure), std::to_string(e.rp), num(e.velocity_error_relative), num(e.pressure_error_relative),
                   num(e.velocity_error_projected), num(e.pressure_error_projected), num(e.alpha), num(e.beta_r)});
        csv.save(out / "errors.csv");
        Csv per{"t", "velocity", "velocity_projected", "pressure", "pressure_projected"};
        for (const auto &e : m.errors)
          per.row({num(e.t), num(e.velocity), num(e.velocity_projected), num(e.pressure), num(e.pressure_projected)});
        per.save(out / "errors_time.csv");
      }
    Csv summary{"key", "value"};
    summary.row({"r", std::to_string(s.r)});
    summary.row({"rp", std::to_string(s.rp)});
    summary.row({"mu", num(s.mu)});
    summary.row({"velocity_error", num(s.velocity_error)});
    summary.row({"velocity_error_projected", num(s.velocity_error_projected)});
    summary.row({"pressure_error", num(s.pressure_error)});
    summary.row({"pressure_error_projected", num(s.pressure_error_projected)});
    summary.row({"velocity_indicator", num(s.velocity_indicator)});
    summary.row({"pressure_indicator", num(s.pressure_indicator)});
    summary.row({"alpha", num(s.alpha)});
    summary.row({"max_weak_divergence_fom", num(s.max_weak_divergence_fom)});
    summary.row({"max_weak_divergence_rom", num(s.max_weak_divergence_rom)});
    summary.row({"max_abs_energy_difference", num(s.max_abs_energy_difference)});
    summary.row({"adaptation_events", std::to_string(s.adaptation_events)});
    summary.row({"blew_up", s.blew_up ? "1" : "0"});
    summary.row({"beta_r", num(s.beta_r)});
    summary.save(out / "summary.csv");
    return res;
  });
}

std::string run_report_stage(const fs::path &out)
{
  return run_stage("report", [&] {
    const fs::path summary = out / "summary.csv";
    std::ifstream  in = open_input(summary);
    std::ostringstream text;
    std::string        line;
    std::getline(in, line);
    while (std::getline(in, line))
      {
        const auto comma = line.find(',');
        char       buf[64];
        std::snprintf(buf, sizeof buf, "%-28s", line.substr(0, comma).c_str());
        text << buf << line.substr(comma + 1) << '\n';
      }
    if (fs::exists(out / "qoi.csv"))
      {
        write_plot_script(out / "plot_energy.py", "qoi.csv", "t", {"E_kin"}, "kinetic energy");
        write_plot_script(out / "plot_drag.py", "qoi.csv", "t", {"c_D"}, "drag coefficient");
        write_plot_script(out / "plot_lift.py", "qoi.csv", "t", {"c_L"}, "lift coefficient");
      }
    if (fs::exists(out / "errors.csv"))
      write_plot_script(out / "plot_errors.py", "errors.csv", "r", {"vel_error", "vel_indicator"}, "error / indicator");
    if (fs::exists(out / "mu.csv"))
      write_plot_script(out / "plot_mu.py", "mu.csv", "t", {"mu"}, "grad-div parameter");
    if (fs::exists(out / "spectrum.csv"))
      write_plot_script(out / "plot_spectrum.py", "spectrum.csv", "k", {"lambda_velocity", "lambda_pressure"}, "eigenvalue");
    std::ofstream f = open_output(out / "report.txt");
    f << text.str();
    return text.str();
  });
}

PipelineResult run_pipeline(const ExperimentConfig &cfg, std::optional<fs::path> out)
{
  cfg.validate();
  const fs::path dir = out.value_or(fs::path(cfg.report.out_dir));
  Discretization disc = run_stage("setup", [&] { return make_discretization(cfg); });
  PipelineResult res;
  res.fom = run_fom_stage(cfg, dir, disc);
  res.pod = run_pod_stage(cfg, dir, disc);
  res.rom = run_rom_stage(cfg, dir, disc);
  run_report_stage(dir);
  return res;
}

ConvergenceResult convergence_study(const ConvergenceStudyConfig &cfg)
{
  if (cfg.levels < 3)
    throw ValidationError("convergence study: at least 3 mesh levels are required");
  if (cfg.base_cells < 1 || !(cfg.dt_factor > 0.0) || !(cfg.t_final > 0.0))
    throw ValidationError("convergence study: base_cells, dt_factor and t_final must be positive");
  const ManufacturedSolution tg = taylor_green(cfg.nu);

  auto level = [&](int k) {
    ConvergenceRow row;
    row.cells = cfg.base_cells << k;
    row.h = 1.0 / row.cells;
    auto mesh = std::make_shared<const Mesh>(build_rect_mesh(1.0, 1.0, row.cells, row.cells));
    if (cfg.interpolation_only)
      {
        const FESpace V(mesh, 2, 2);
        row.error = l2_error(V, interpolate(V, tg.velocity_at(cfg.t_final)), tg.velocity_at(cfg.t_final));
        return row;
      }
    FOMConfig f;
    f.scheme = cfg.scheme;
    f.nu = cfg.nu;
    row.steps = std::max(1, static_cast<int>(std::ceil(cfg.t_final / (cfg.dt_factor * row.h * row.h) - 1e-9)));
    f.dt = cfg.t_final / row.steps;
    row.dt = f.dt;
    f.t_final = cfg.t_final;
    f.stabilization.mu = cfg.scheme == Scheme::graddiv ? cfg.mu : 0.0;
    f.window = {cfg.t_final, cfg.t_final, 1};
    FullOrderModel model(mesh, f, tg.problem());
    FOMState       s = model.initial_state();
    while (s.step < row.steps)
      model.step(s);
    row.error = l2_error(model.velocity_space(), s.u, tg.velocity_at(s.t));
    return row;
  };

  std::vector<std::future<ConvergenceRow>> jobs;
  for (int k = 0; k < cfg.levels; ++k)
    jobs.push_back(std::async(std::launch::async, level, k));
  ConvergenceResult res;
  for (auto &j : jobs)
    res.rows.push_back(j.get());
  res.min_order = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < res.rows.size(); ++k)
    {
      res.rows[k].order = std::log2(res.rows[k - 1].error / res.rows[k].error);
      res.min_order = std::min(res.min_order, res.rows[k].order);
      if (!(res.rows[k].error < res.rows[k - 1].error))
        res.monotone = false;
    }
  return res;
}

void write_convergence_csv(const ConvergenceResult &r, const fs::path &path)
{
  Csv csv{"cells", "h", "dt", "steps", "error", "order"};
  for (const auto &row : r.rows)
    csv.row({std::to_string(row.cells), num(row.h), num(row.dt), std::to_string(row.steps), num(row.error), num(row.order)});
  csv.save(path);
}

LongHorizonResult long_horizon_study(const ExperimentConfig &cfg, double multiple, const fs::path &out, const Discretization &disc)
{
  return run_stage("longhorizon", [&] {
    if (!(multiple >= 1.0))
      throw ValidationError("long-horizon study: the horizon multiple must be >= 1");
    const auto       &fom = *disc.model;
    const auto       &fops = fom.operators();
    const Offline     off = load_offline(out, disc);
    const int         r = velocity_modes(cfg, off.vel);
    const SnapshotSet &vs = off.vs;
    const std::vector<double> &table = off.table;

    ExperimentConfig c = cfg;
    c.rom.pressure_recovery = false; // energies only
    const ReducedModel    rm = build_reduced(c, disc, off.vel, off.pres, r, energy_only_pressure_modes(cfg, off.pres, r));
    const Eigen::VectorXd a0 = initial_coefficients(off, fops.mass, r);

    LongHorizonResult res;
    ROMConfig         base = cfg.rom_config();
    res.t_start = base.t_start;
    res.t_end = base.t_start + multiple * static_cast<double>(vs.size()) * base.dt;
    base.t_end = res.t_end;
    res.mu_bar = cfg.rom.mu;
    if (!cfg.rom.mu_bar_candidates.empty())
      res.mu_bar = select_mu_bar(rm.ops, base, a0, table, cfg.rom.mu_bar_candidates).mu_bar;

    ROMConfig constant = base;
    constant.adaptive.enabled = false;
    constant.mu = res.mu_bar;
    ROMConfig adaptive = base;
    adaptive.mu = res.mu_bar;
    adaptive.adaptive.mu_init = res.mu_bar;

    auto run = [&](const ROMConfig &rc) {
      ROMRunOptions opt;
      opt.energy_table = &table;
      opt.keep_trajectory = false;
      const ROMRunResult rr = run_rom(rm.ops, rc, a0, opt);
      LongHorizonVariant v;
      v.adaptive = rc.adaptive.enabled;
      v.max_abs_energy_difference = rr.max_abs_energy_difference();
      v.adaptation_events = static_cast<int>(rr.adaptation_steps.size());
      v.blew_up = rr.blew_up;
      v.blowup_time = rr.blowup_time;
      v.final_mu = rr.records.back().mu;
      v.records = rr.records;
      return v;
    };
    auto a = std::async(std::launch::async, run, adaptive);
    res.constant = run(constant);
    res.adaptive = a.get();
    return res;
  });
}

void write_long_horizon_csv(const LongHorizonResult &r, const fs::path &dir)
{
  fs::create_directories(dir);
  Csv traj{"t", "E_constant", "E_adaptive", "Ediff_constant", "Ediff_adaptive", "mu_adaptive"};
  const std::size_t n = std::max(r.constant.records.size(), r.adaptive.records.size());
  for (std::size_t j = 0; j < n; ++j)
    {
      const ROMRecord *c = j < r.constant.records.size() ? &r.constant.records[j] : nullptr;
      const ROMRecord *a = j < r.adaptive.records.size() ? &r.adaptive.records[j] : nullptr;
      const double     t = c ? c->t : a->t;
      traj.row({num(t), c ? num(c->E_kin) : "", a ? num(a->E_kin) : "", c ? num(c->E_diff) : "", a ? num(a->E_diff) : "",
                a ? num(a->mu) : ""});
    }
  traj.save(dir / "longhorizon.csv");
  Csv sum{"variant", "max_abs_energy_difference", "adaptation_events", "blew_up", "blowup_time", "final_mu"};
  for (const auto *v : {&r.constant, &r.adaptive})
    sum.row({v->adaptive ? "adaptive" : "constant", num(v->max_abs_energy_difference), std::to_string(v->adaptation_events),
             v->blew_up ? "1" : "0", num(v->blowup_time), num(v->final_mu)});
  sum.save(dir / "longhorizon_summary.csv");
}

} // namespace podrom
