#include "podrom/rom.hpp"

#include "podrom/errors.hpp"
#include "podrom/io.hpp"

#include <cmath>
#include <limits>

namespace podrom
{

Eigen::VectorXd MomentumProjection::convection_term(const Eigen::VectorXd &w, const Eigen::VectorXd &a) const
{
  Eigen::VectorXd out = conv_lift + conv_lift_trial * a + conv_trial_lift * w;
  for (int k = 0; k < static_cast<int>(convection.size()); ++k)
    if (w[k] != 0.0)
      out.noalias() += w[k] * (convection[k] * a);
  return out;
}

Eigen::MatrixXd MomentumProjection::convection_matrix(const Eigen::VectorXd &w) const
{
  Eigen::MatrixXd out = conv_lift_trial;
  for (int k = 0; k < static_cast<int>(convection.size()); ++k)
    if (w[k] != 0.0)
      out.noalias() += w[k] * convection[k];
  return out;
}

std::vector<MomentumProjection> project_momentum(const FESpace                      &velocity,
                                                 const FlowOperators                &ops,
                                                 const Eigen::MatrixXd              &Phi,
                                                 const Eigen::VectorXd              &lift,
                                                 const std::vector<Eigen::MatrixXd> &tests,
                                                 bool                                with_lps)
{
  const int r = static_cast<int>(Phi.cols());
  if (Phi.rows() != velocity.n_dofs() || lift.size() != velocity.n_dofs())
    throw ValidationError("project_momentum: trial basis does not match the velocity space");
  if (with_lps && ops.S_h.size() == 0)
    throw ValidationError("project_momentum: LPS matrices were not assembled");

  const Eigen::MatrixXd MPhi = ops.mass * Phi;
  const Eigen::MatrixXd APhi = ops.stiffness * Phi;
  const Eigen::MatrixXd GPhi = ops.grad_div_unit * Phi;
  const Eigen::VectorXd Alift = ops.stiffness * lift;
  const Eigen::VectorXd Glift = ops.grad_div_unit * lift;
  Eigen::MatrixXd       SPhi;
  Eigen::VectorXd       Slift;
  if (with_lps)
    {
      SPhi = ops.S_h * Phi;
      Slift = ops.S_h * lift;
    }

  std::vector<MomentumProjection> out(tests.size());
  const bool                      has_lift = lift.squaredNorm() > 0.0;
  SparseMatrix                    Nlift;
  if (has_lift)
    Nlift = assemble_convection(velocity, lift);

  for (std::size_t t = 0; t < tests.size(); ++t)
    {
      const Eigen::MatrixXd &Y = tests[t];
      if (Y.rows() != velocity.n_dofs())
        throw ValidationError("project_momentum: test basis does not match the velocity space");
      MomentumProjection &p = out[t];
      const int           ny = static_cast<int>(Y.cols());
      p.test = Y;
      p.mass = Y.transpose() * MPhi;
      p.stiffness = Y.transpose() * APhi;
      p.grad_div = Y.transpose() * GPhi;
      p.stiffness_lift = Y.transpose() * Alift;
      p.grad_div_lift = Y.transpose() * Glift;
      if (with_lps)
        {
          p.lps = Y.transpose() * SPhi;
          p.lps_lift = Y.transpose() * Slift;
        }
      else
        {
          p.lps = Eigen::MatrixXd::Zero(ny, r);
          p.lps_lift = Eigen::VectorXd::Zero(ny);
        }
      if (has_lift)
        {
          p.conv_lift_trial = Y.transpose() * (Nlift * Phi);
          p.conv_lift = Y.transpose() * (Nlift * lift);
        }
      else
        {
          p.conv_lift_trial = Eigen::MatrixXd::Zero(ny, r);
          p.conv_lift = Eigen::VectorXd::Zero(ny);
        }
      p.conv_trial_lift = Eigen::MatrixXd::Zero(ny, r);
      p.convection.assign(r, Eigen::MatrixXd());
    }

  for (int k = 0; k < r; ++k)
    {
      const SparseMatrix    Nk = assemble_convection(velocity, Phi.col(k));
      const Eigen::MatrixXd NkPhi = Nk * Phi;
      Eigen::VectorXd       Nklift;
      if (has_lift)
        Nklift = Nk * lift;
      for (std::size_t t = 0; t < tests.size(); ++t)
        {
          MomentumProjection &p = out[t];
          p.convection[k] = p.test.transpose() * NkPhi;
          if (has_lift)
            p.conv_trial_lift.col(k) = p.test.transpose() * Nklift;
        }
    }
  return out;
}

double ROMOperators::kinetic_energy(const Eigen::VectorXd &a) const
{
  return 0.5 * (lift_sq + 2.0 * lift_overlap.dot(a) + a.dot(momentum.mass * a));
}

Eigen::VectorXd ROMOperators::velocity(const Eigen::VectorXd &a) const
{
  return lift + Phi * a;
}

ROMOperators build_rom_operators(const ROMBuildInput &in)
{
  if (!in.spaces || !in.ops || !in.velocity)
    throw ValidationError("build_rom_operators: spaces, operators, and a velocity basis are required");
  const FESpace &V = *in.spaces->velocity;
  if (in.velocity->space->signature() != V.signature())
    throw ValidationError("build_rom_operators: velocity basis lives on a different space");
  if (in.scheme == Scheme::lps && !in.pressure)
    throw ValidationError("build_rom_operators: the LPS model needs a pressure basis");

  ROMOperators o;
  o.scheme = in.scheme;
  o.r = in.r;
  o.Phi = in.velocity->leading(in.r);
  o.lift = in.velocity->centered ? in.velocity->mean : Eigen::VectorXd::Zero(V.n_dofs());
  o.lift_sq = o.lift.dot(in.ops->mass * o.lift);
  o.lift_overlap = o.Phi.transpose() * (in.ops->mass * o.lift);
  o.load = in.load;
  o.drag = in.drag;

  std::vector<Eigen::MatrixXd> tests{o.Phi};
  if (in.drag_fields)
    {
      Eigen::MatrixXd Y(V.n_dofs(), 2);
      Y.col(0) = in.drag_fields->v_D;
      Y.col(1) = in.drag_fields->v_L;
      tests.push_back(Y);
    }
  auto proj = project_momentum(V, *in.ops, o.Phi, o.lift, tests, in.scheme == Scheme::lps);
  o.momentum = std::move(proj[0]);
  if (in.drag_fields)
    o.qoi = std::move(proj[1]);

  if (in.pressure)
    {
      if (in.pressure->space->signature() != in.spaces->pressure->signature())
        throw ValidationError("build_rom_operators: pressure basis lives on a different space");
      o.rp = in.rp;
      o.Psi = in.pressure->leading(in.rp);
      const Eigen::MatrixXd BPhi = in.ops->divergence * o.Phi;
      o.D = o.Psi.transpose() * BPhi;
      o.d0 = o.Psi.transpose() * (in.ops->divergence * o.lift);
      if (in.scheme == Scheme::lps)
        o.Sp = o.Psi.transpose() * (in.ops->s_pres * o.Psi);
      else
        o.Sp = Eigen::MatrixXd::Zero(o.rp, o.rp);
      if (in.drag_fields)
        {
          o.qoi_pressure.resize(2, o.rp);
          const Eigen::MatrixXd BtPsi = in.ops->divergence.transpose() * o.Psi;
          o.qoi_pressure.row(0) = in.drag_fields->v_D.transpose() * BtPsi;
          o.qoi_pressure.row(1) = in.drag_fields->v_L.transpose() * BtPsi;
        }
    }
  return o;
}

void AdaptiveMuConfig::validate() const
{
  if (!enabled)
    return;
  if (!(mu_min > 0.0))
    throw ValidationError("adaptive mu: mu_min must be positive");
  if (F < 1)
    throw ValidationError("adaptive mu: F must be >= 1");
  if (!(delta > 0.0))
    throw ValidationError("adaptive mu: delta must be positive");
  if (!(tol > 0.0))
    throw ValidationError("adaptive mu: tol must be positive");
  if (!(mu_init >= mu_min))
    throw ValidationError("adaptive mu: mu_init must be >= mu_min");
}

MuUpdate adapt_mu(double mu, double e_diff, const AdaptiveMuConfig &cfg, int n)
{
  MuUpdate u{mu, false};
  if (!cfg.enabled || n % cfg.F != 0)
    return u;
  if (e_diff > cfg.tol)
    u.mu = std::max(cfg.mu_min, mu + cfg.delta);
  else if (e_diff < -cfg.tol)
    u.mu = std::max(cfg.mu_min, mu - cfg.delta);
  u.restep = u.mu != mu;
  return u;
}

double energy_difference(double e_kin, const std::vector<double> &table, int n)
{
  const int m = static_cast<int>(table.size());
  if (m == 0)
    throw ValidationError("energy_difference: empty energy table");
  int s = n % m;
  if (s == 0)
    s = m;
  return e_kin - table[s - 1];
}

void ROMConfig::validate() const
{
  if (!(dt > 0.0))
    throw ValidationError("rom: dt must be positive");
  if (!(nu > 0.0))
    throw ValidationError("rom: nu must be positive");
  if (!(mu >= 0.0))
    throw ValidationError("rom: mu must be nonnegative");
  if (!(t_end >= t_start))
    throw ValidationError("rom: t_end must be >= t_start");
  if (!(blowup_factor > 1.0))
    throw ValidationError("rom: blow-up factor must exceed 1");
  adaptive.validate();
}

int ROMConfig::n_steps() const
{
  return static_cast<int>(std::llround((t_end - t_start) / dt));
}

ROMState initial_rom_state(const ROMOperators &ops, const Eigen::VectorXd &a0, double t0, double mu)
{
  if (a0.size() != ops.r)
    throw ValidationError("initial_rom_state: coefficient length " + std::to_string(a0.size()) + " does not match r = " +
                          std::to_string(ops.r));
  ROMState s;
  s.a = a0;
  s.a_prev = a0;
  s.a_prev2 = a0;
  s.b = Eigen::VectorXd::Zero(ops.scheme == Scheme::lps ? ops.rp : 0);
  s.mu = mu;
  s.t = t0;
  return s;
}

namespace
{

struct TimeTerms
{
  double          alpha; ///< coefficient of a^{n+1} divided by dt
  Eigen::VectorXd history;
};

TimeTerms time_terms(const ROMState &s, TimeIntegrator integ)
{
  if (integ == TimeIntegrator::bdf2_semi_implicit)
    return {1.5, 0.5 * (4.0 * s.a - s.a_prev)};
  return {1.0, s.a};
}

Eigen::VectorXd reduced_load(const ROMOperators &ops, double t)
{
  if (!ops.load)
    return Eigen::VectorXd::Zero(ops.r);
  return ops.Phi.transpose() * ops.load(t);
}

// Solves the (possibly coupled) reduced system with convecting coefficients w.
Eigen::VectorXd solve_reduced(const ROMOperators    &ops,
                              const ROMConfig       &cfg,
                              const ROMState        &s,
                              const TimeTerms       &tt,
                              const Eigen::VectorXd &f,
                              const Eigen::VectorXd &w,
                              bool                   coupled)
{
  const auto     &m = ops.momentum;
  const int       r = ops.r;
  const int       rp = coupled ? ops.rp : 0;
  const double    mu = s.mu;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(r + rp, r + rp);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(r + rp);

  K.topLeftCorner(r, r) = (tt.alpha / cfg.dt) * m.mass + cfg.nu * m.stiffness + mu * m.grad_div + m.lps + m.convection_matrix(w);
  rhs.head(r) = m.mass * tt.history / cfg.dt + f - cfg.nu * m.stiffness_lift - mu * m.grad_div_lift - m.lps_lift - m.conv_lift -
                m.conv_trial_lift * w;
  if (coupled)
    {
      K.topRightCorner(r, rp) = -ops.D.transpose();
      K.bottomLeftCorner(rp, r) = ops.D;
      K.bottomRightCorner(rp, rp) = ops.Sp;
      rhs.tail(rp) = -ops.d0;
    }
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(K);
  Eigen::VectorXd                            x = lu.solve(rhs);
  const double                               res = (K * x - rhs).norm() / std::max(rhs.norm(), 1e-300);
  if (!std::isfinite(res) || res > 1e-8)
    throw SolverError("rom: reduced system is singular or ill-conditioned at t = " + std::to_string(s.t + cfg.dt) +
                      " (relative residual " + std::to_string(res) + ")");
  return x;
}

void advance(ROMState &s, const ROMOperators &ops, const ROMConfig &cfg, bool coupled)
{
  const TimeTerms       tt = time_terms(s, cfg.time_integrator);
  const double          t_new = s.t + cfg.dt;
  const Eigen::VectorXd f = reduced_load(ops, t_new);
  Eigen::VectorXd       x;
  if (cfg.time_integrator == TimeIntegrator::bdf2_semi_implicit)
    x = solve_reduced(ops, cfg, s, tt, f, 2.0 * s.a - s.a_prev, coupled);
  else
    {
      Eigen::VectorXd w = s.a;
      bool            converged = false;
      for (int it = 0; it < cfg.nonlinear.max_iterations; ++it)
        {
          x = solve_reduced(ops, cfg, s, tt, f, w, coupled);
          const Eigen::VectorXd a_new = x.head(ops.r);
          const double          change = (a_new - w).norm();
          w = a_new;
          if (change <= cfg.nonlinear.tolerance * std::max(1.0, a_new.norm()))
            {
              converged = true;
              break;
            }
        }
      if (!converged)
        throw SolverError("rom: Picard iteration did not converge at t = " + std::to_string(t_new));
    }
  s.a_prev2 = s.a_prev;
  s.a_prev = s.a;
  s.a = x.head(ops.r);
  if (coupled)
    s.b = x.tail(ops.rp);
  s.t = t_new;
  ++s.step;
}

} // namespace

void step_lps_rom(ROMState &state, const ROMOperators &ops, const ROMConfig &cfg)
{
  if (ops.scheme != Scheme::lps)
    throw ValidationError("step_lps_rom: operators were built for the grad-div model");
  advance(state, ops, cfg, true);
}

void step_graddiv_rom(ROMState &state, const ROMOperators &ops, const ROMConfig &cfg)
{
  if (ops.scheme != Scheme::graddiv)
    throw ValidationError("step_graddiv_rom: operators were built for the LPS model");
  advance(state, ops, cfg, false);
}

void step_rom(ROMState &state, const ROMOperators &ops, const ROMConfig &cfg)
{
  if (ops.scheme == Scheme::lps)
    step_lps_rom(state, ops, cfg);
  else
    step_graddiv_rom(state, ops, cfg);
}

Eigen::VectorXd PressureRecovery::recover(const ROMState &s, const ROMConfig &cfg, const LoadFunction &load) const
{
  const auto     &m = momentum;
  Eigen::VectorXd dadt;
  Eigen::VectorXd w;
  if (cfg.time_integrator == TimeIntegrator::bdf2_semi_implicit)
    {
      dadt = (3.0 * s.a - 4.0 * s.a_prev + s.a_prev2) / (2.0 * cfg.dt);
      w = 2.0 * s.a_prev - s.a_prev2;
    }
  else
    {
      dadt = (s.a - s.a_prev) / cfg.dt;
      w = s.a;
    }
  Eigen::VectorXd rhs = m.mass * dadt + cfg.nu * (m.stiffness * s.a + m.stiffness_lift) +
                        s.mu * (m.grad_div * s.a + m.grad_div_lift) + m.convection_term(w, s.a);
  if (load)
    rhs -= m.test.transpose() * load(s.t);
  return coupling.colPivHouseholderQr().solve(rhs);
}

double ROMRunResult::max_abs_energy_difference() const
{
  double m = 0.0;
  for (std::size_t j = 1; j < records.size(); ++j)
    m = std::max(m, std::abs(records[j].E_diff));
  return m;
}

namespace
{

ROMRecord make_record(const ROMOperators &ops, const ROMConfig &cfg, const ROMState &s, const Eigen::VectorXd &b,
                      const std::vector<double> *table)
{
  ROMRecord rec;
  rec.t = s.t;
  rec.mu = s.mu;
  rec.E_kin = ops.kinetic_energy(s.a);
  if (table && s.step > 0)
    rec.E_diff = energy_difference(rec.E_kin, *table, s.step);
  rec.a_norm = s.a.norm();
  if (ops.qoi && s.step > 0)
    {
      const auto           &q = *ops.qoi;
      const Eigen::VectorXd dadt = (s.a - s.a_prev) / cfg.dt;
      Eigen::VectorXd       val = q.mass * dadt + q.convection_term(s.a, s.a) + cfg.nu * (q.stiffness * s.a + q.stiffness_lift);
      if (b.size() == ops.qoi_pressure.cols() && b.size() > 0)
        val -= ops.qoi_pressure * b;
      const double scale = -2.0 / (ops.drag.D * ops.drag.U_bar * ops.drag.U_bar);
      rec.c_D = scale * val[0];
      rec.c_L = scale * val[1];
    }
  return rec;
}

} // namespace

ROMRunResult run_rom(const ROMOperators &ops, const ROMConfig &cfg, const Eigen::VectorXd &a0, const ROMRunOptions &opt)
{
  cfg.validate();
  if (cfg.scheme != ops.scheme)
    throw ValidationError("run_rom: configuration scheme does not match the operators");
  if (cfg.adaptive.enabled && !opt.energy_table)
    throw ValidationError("run_rom: adaptive mu needs the snapshot energy table");

  ROMRunResult res;
  ROMState     s = initial_rom_state(ops, a0, cfg.t_start, cfg.adaptive.enabled ? cfg.adaptive.mu_init : cfg.mu);
  const double ref = a0.norm();
  const int    n_steps = cfg.n_steps();

  auto pressure_of = [&](const ROMState &st) -> Eigen::VectorXd {
    if (ops.scheme == Scheme::lps)
      return st.b;
    if (opt.recovery && st.step > 0)
      return opt.recovery->recover(st, cfg, ops.load);
    return Eigen::VectorXd::Zero(opt.recovery ? opt.recovery->coupling.cols() : 0);
  };

  auto push = [&](const ROMState &st) {
    const Eigen::VectorXd b = pressure_of(st);
    res.records.push_back(make_record(ops, cfg, st, b, opt.energy_table));
    if (opt.keep_trajectory)
      {
        res.a.push_back(st.a);
        res.b.push_back(b);
      }
  };

  push(s);
  for (int n = 1; n <= n_steps; ++n)
    {
      const ROMState before = s;
      step_rom(s, ops, cfg);
      if (cfg.adaptive.enabled)
        {
          const double   e_diff = energy_difference(ops.kinetic_energy(s.a), *opt.energy_table, n);
          const MuUpdate upd = adapt_mu(s.mu, e_diff, cfg.adaptive, n);
          if (upd.restep)
            {
              s = before;
              s.mu = upd.mu;
              step_rom(s, ops, cfg);
              res.adaptation_steps.push_back(n);
            }
        }
      push(s);
      if (!s.a.allFinite() || (ref > 0.0 && s.a.norm() > cfg.blowup_factor * ref))
        {
          res.blew_up = true;
          res.blowup_time = s.t;
          break;
        }
    }
  return res;
}

MuSelection select_mu_bar(const ROMOperators        &ops,
                          ROMConfig                  cfg,
                          const Eigen::VectorXd     &a0,
                          const std::vector<double> &energy_table,
                          const std::vector<double> &candidates)
{
  if (candidates.empty())
    throw ValidationError("select_mu_bar: no candidate values");
  MuSelection sel;
  sel.candidates = candidates;
  cfg.adaptive.enabled = false;
  cfg.t_end = cfg.t_start + static_cast<double>(energy_table.size()) * cfg.dt;
  double best = std::numeric_limits<double>::infinity();
  for (double mu : candidates)
    {
      cfg.mu = mu;
      ROMRunOptions opt;
      opt.energy_table = &energy_table;
      opt.keep_trajectory = false;
      double score = std::numeric_limits<double>::infinity();
      try
        {
          const ROMRunResult r = run_rom(ops, cfg, a0, opt);
          if (!r.blew_up)
            score = r.max_abs_energy_difference();
        }
      catch (const SolverError &)
        {
        }
      sel.scores.push_back(score);
      if (score < best)
        {
          best = score;
          sel.mu_bar = mu;
        }
    }
  if (!std::isfinite(best))
    throw SolverError("select_mu_bar: every candidate blew up");
  return sel;
}

std::vector<double> periodic_energy_table(const std::vector<double> &snapshot_energies)
{
  const std::size_t m = snapshot_energies.size();
  std::vector<double> table(m);
  for (std::size_t s = 1; s <= m; ++s)
    table[s - 1] = snapshot_energies[s % m];
  return table;
}

void write_rom_operators(const ROMOperators &ops, std::uint64_t basis_signature, std::ostream &out)
{
  BinaryWriter w(out);
  w.magic("PRROMOP1");
  w.u64(basis_signature);
  w.i64(static_cast<std::int64_t>(ops.scheme));
  w.i64(ops.r);
  w.i64(ops.rp);
  const auto &m = ops.momentum;
  for (const Eigen::MatrixXd *x : {&m.mass, &m.stiffness, &m.grad_div, &m.lps, &m.conv_lift_trial, &m.conv_trial_lift, &ops.D, &ops.Sp})
    w.matrix(*x);
  for (const Eigen::VectorXd *v : {&m.stiffness_lift, &m.grad_div_lift, &m.lps_lift, &m.conv_lift, &ops.d0, &ops.lift_overlap})
    w.vector(*v);
  w.f64(ops.lift_sq);
  w.i64(static_cast<std::int64_t>(m.convection.size()));
  for (const auto &c : m.convection)
    w.matrix(c);
}

ROMOperators read_rom_operators(std::istream &in, std::uint64_t basis_signature)
{
  BinaryReader r(in);
  r.magic("PRROMOP1");
  if (r.u64() != basis_signature)
    throw ValidationError("read_rom_operators: dump was built from a different basis");
  ROMOperators ops;
  ops.scheme = static_cast<Scheme>(r.i64());
  ops.r = static_cast<int>(r.i64());
  ops.rp = static_cast<int>(r.i64());
  auto &m = ops.momentum;
  for (Eigen::MatrixXd *x : {&m.mass, &m.stiffness, &m.grad_div, &m.lps, &m.conv_lift_trial, &m.conv_trial_lift, &ops.D, &ops.Sp})
    *x = r.matrix();
  for (Eigen::VectorXd *v : {&m.stiffness_lift, &m.grad_div_lift, &m.lps_lift, &m.conv_lift, &ops.d0, &ops.lift_overlap})
    *v = r.vector();
  ops.lift_sq = r.f64();
  const auto n = r.i64();
  if (n < 0 || n > 100000)
    throw ValidationError("read_rom_operators: corrupt convection tensor size");
  m.convection.resize(static_cast<std::size_t>(n));
  for (auto &c : m.convection)
    c = r.matrix();
  return ops;
}

} // namespace podrom
