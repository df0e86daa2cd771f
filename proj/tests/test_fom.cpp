#include "support.hpp"

#include "podrom/errors.hpp"
#include "podrom/manufactured.hpp"
#include "podrom/metrics.hpp"
#include "podrom/snapshots.hpp"

#include <doctest.h>

#include <Eigen/LU>

using namespace podrom;

namespace
{

const std::vector<BoundaryTag> all_sides{BoundaryTag::inlet, BoundaryTag::outlet, BoundaryTag::wall};

FOMConfig base_config(Scheme scheme)
{
  FOMConfig c;
  c.scheme = scheme;
  c.nu = 0.05;
  c.dt = 0.01;
  c.t_final = 0.05;
  c.stabilization.mu = scheme == Scheme::graddiv ? 0.3 : 0.0;
  c.window = {0.0, 0.05, 1};
  return c;
}

/// First step of the semi-implicit scheme solved densely: Dirichlet DOFs
/// eliminated by hand, the pressure constant fixed by a Lagrange multiplier.
struct OracleStep
{
  Eigen::VectorXd u;
  Eigen::VectorXd p;
};

OracleStep dense_first_step(const FullOrderModel &model, const FOMState &s0, const ManufacturedSolution &exact)
{
  const auto   &ops = model.operators();
  const auto   &V = model.velocity_space();
  const auto   &cfg = model.config();
  const int     nu = V.n_dofs(), np = model.pressure_space().n_dofs(), n = nu + np;
  const double  t1 = cfg.dt;
  const double  c = 1.5 / cfg.dt;
  SparseMatrix  Auu = c * ops.mass + cfg.nu * ops.stiffness + assemble_convection(V, s0.u);
  if (cfg.scheme == Scheme::lps)
    Auu += ops.S_h;
  else
    Auu += cfg.stabilization.mu * ops.grad_div_unit;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + 1, n + 1);
  K.topLeftCorner(nu, nu) = Eigen::MatrixXd(Auu);
  K.block(0, nu, nu, np) = -Eigen::MatrixXd(ops.divergence.transpose());
  K.block(nu, 0, np, nu) = Eigen::MatrixXd(ops.divergence);
  if (cfg.scheme == Scheme::lps)
    K.block(nu, nu, np, np) = Eigen::MatrixXd(ops.s_pres);
  const Eigen::VectorXd mean_row = ops.pressure_mass * Eigen::VectorXd::Ones(np);
  K.block(nu, n, np, 1) = mean_row;
  K.block(n, nu, 1, np) = mean_row.transpose();

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
  rhs.head(nu) = ops.mass * (1.5 * s0.u) / cfg.dt + model.load(t1);

  const Eigen::VectorXd g = interpolate(V, exact.velocity_at(t1));
  for (int d : V.constrained_dofs())
    {
      rhs -= K.col(d) * g[d];
      K.row(d).setZero();
      K.col(d).setZero();
      K(d, d) = 1.0;
      rhs[d] = g[d];
    }
  const Eigen::VectorXd x = K.fullPivLu().solve(rhs);
  return {x.head(nu), x.segment(nu, np)};
}

FlowProblem zero_problem()
{
  FlowProblem p;
  p.dirichlet_tags = {BoundaryTag::inlet, BoundaryTag::wall};
  return p;
}

std::shared_ptr<const Mesh> small_channel()
{
  const double dy = 0.41 / 5;
  return std::make_shared<const Mesh>(build_rect_mesh(2.2, 0.41, 11, 5, Rectangle{0.4, 2 * dy, 0.6, 3 * dy}));
}

FlowProblem channel_problem(double um)
{
  FlowProblem p;
  p.dirichlet_tags = {BoundaryTag::inlet, BoundaryTag::wall, BoundaryTag::obstacle};
  p.boundary_velocity = [um](const Point &x, double) {
    return x.x == 0.0 ? Vec2{4.0 * um * x.y * (0.41 - x.y) / (0.41 * 0.41), 0.0} : Vec2{0.0, 0.0};
  };
  return p;
}

} // namespace

TEST_SUITE("fom")
{
  TEST_CASE("BDF2 extrapolation")
  {
    const Eigen::VectorXd u = Eigen::VectorXd::Constant(4, 2.5);
    CHECK(bdf2_extrapolate(u, u) == u);
    CHECK(bdf2_extrapolate(Eigen::VectorXd::Constant(3, 3.0), Eigen::VectorXd::Constant(3, 1.0)).isApproxToConstant(5.0));
    // u(t) = sin(t) per DOF: extrapolation error 2 u(t) - u(t - dt) - u(t + dt) = O(dt^2).
    double prev = 0.0;
    for (double dt : {0.1, 0.05, 0.025})
      {
        const double t = 0.7;
        const double e = std::abs(bdf2_extrapolate(Eigen::VectorXd::Constant(1, std::sin(t)), Eigen::VectorXd::Constant(1, std::sin(t - dt)))[0] -
                                  std::sin(t + dt));
        if (prev > 0.0)
          CHECK(prev / e == doctest::Approx(4.0).epsilon(0.02));
        prev = e;
      }
  }

  TEST_CASE("zero data keeps the zero state")
  {
    for (Scheme s : {Scheme::lps, Scheme::graddiv})
      for (TimeIntegrator ti : {TimeIntegrator::bdf2_semi_implicit, TimeIntegrator::implicit_euler})
        {
          FOMConfig c = base_config(s);
          c.time_integrator = ti;
          FullOrderModel m(test::square(3), c, zero_problem());
          FOMState       st = m.initial_state();
          s == Scheme::lps ? m.step_lps_fem(st) : m.step_graddiv_fem(st);
          m.step(st);
          CHECK(st.u.cwiseAbs().maxCoeff() == 0.0);
          CHECK(st.p.cwiseAbs().maxCoeff() == 0.0);
          CHECK(st.step == 2);
        }
  }

  TEST_CASE("scheme-specific steps reject the other scheme")
  {
    FullOrderModel m(test::square(2), base_config(Scheme::lps), zero_problem());
    FOMState       st = m.initial_state();
    CHECK_THROWS_AS(m.step_graddiv_fem(st), ValidationError);
  }

  TEST_CASE("one step against a dense oracle solve")
  {
    const auto tg = taylor_green(0.05);
    for (int n : {2, 3})
      for (Scheme s : {Scheme::lps, Scheme::graddiv})
        {
          CAPTURE(n);
          FullOrderModel   m(test::square(n), base_config(s), tg.problem());
          FOMState         st = m.initial_state();
          const OracleStep o = dense_first_step(m, st, tg);
          m.step(st);
          CHECK((st.u - o.u).cwiseAbs().maxCoeff() < 1e-10);
          Eigen::VectorXd p = o.p;
          m.normalize_pressure(p);
          CHECK((st.p - p).cwiseAbs().maxCoeff() < 1e-10);
        }
  }

  TEST_CASE("implicit Euler resolves the nonlinearity by Picard iteration")
  {
    FOMConfig c = base_config(Scheme::graddiv);
    c.time_integrator = TimeIntegrator::implicit_euler;
    const auto     tg = taylor_green(0.05);
    FullOrderModel m(test::square(3), c, tg.problem());
    FOMState       st = m.initial_state();
    const auto     rep = m.step(st);
    CHECK(rep.picard_iterations >= 2);
    CHECK(rep.picard_iterations <= c.nonlinear.max_iterations);
    // The fixed point satisfies the nonlinear system at the new state.
    const SparseMatrix K = m.system_matrix(1.0 / c.dt, st.u);
    Eigen::VectorXd    x(st.u.size() + st.p.size());
    x << st.u, st.p;
    Eigen::VectorXd r = K * x;
    r.head(st.u.size()) -= m.operators().mass * m.initial_state().u / c.dt + m.load(c.dt);
    for (int d : m.velocity_space().constrained_dofs())
      r[d] = 0.0;
    CHECK(r.head(st.u.size()).cwiseAbs().maxCoeff() < 1e-8);

    FOMConfig tight = c;
    tight.nonlinear.max_iterations = 1;
    tight.nonlinear.tolerance = 1e-14;
    FullOrderModel m1(test::square(3), tight, tg.problem());
    FOMState       s1 = m1.initial_state();
    CHECK_THROWS_AS(m1.step(s1), SolverError);
  }

  TEST_CASE("weak divergence: grad-div exact, LPS not")
  {
    for (Scheme s : {Scheme::graddiv, Scheme::lps})
      {
        FOMConfig c = base_config(s);
        c.nu = 1e-2;
        c.dt = 0.02;
        FullOrderModel m(small_channel(), c, channel_problem(1.0));
        FOMState       st = m.initial_state();
        for (int k = 0; k < 5; ++k)
          {
            m.step(st);
            const double wd = weak_divergence(m.operators().divergence, st.u);
            if (s == Scheme::graddiv)
              CHECK(wd < 1e-10);
            else
              CHECK(wd > 1e-6);
          }
      }
  }

  TEST_CASE("frozen data reaches a steady plateau")
  {
    for (Scheme s : {Scheme::graddiv, Scheme::lps})
      {
        FOMConfig c = base_config(s);
        c.nu = 0.05;
        c.dt = 0.05;
        FullOrderModel m(small_channel(), c, channel_problem(0.3));
        FOMState       st = m.initial_state();
        double         first = 0.0, last = 0.0;
        for (int k = 0; k < 200; ++k)
          {
            const Eigen::VectorXd before = st.u;
            m.step(st);
            const double change = (st.u - before).norm();
            if (k == 1)
              first = change;
            last = change;
            CHECK(st.u.allFinite());
          }
        CHECK(last < 1e-6 * first);
      }
  }

  TEST_CASE("snapshot window counts")
  {
    const SnapshotWindow w{5.0, 5.332, 1};
    CHECK(w.count(2e-3) == 167);
    const SnapshotWindow w2{5.0, 5.332, 2};
    CHECK(w2.count(2e-3) == 84);
    CHECK(w.first_step(2e-3) == 2500);
  }

  TEST_CASE("recorded snapshots and centering")
  {
    FOMConfig c = base_config(Scheme::graddiv);
    c.dt = 0.01;
    c.t_final = 0.1;
    c.window = {0.02, 0.1, 2};
    FullOrderModel m(test::square(3), c, stokes_poly(0.1).problem());
    std::vector<int> observed;
    const auto       run = record_snapshots(m, true, [&](const FOMState &s) { observed.push_back(s.step); });
    CHECK(run.velocity.size() == 5);
    CHECK(run.pressure.size() == 5);
    CHECK(observed.size() == 11);
    CHECK(run.velocity.times.front() == doctest::Approx(0.02));
    CHECK(run.velocity.times.back() == doctest::Approx(0.1));
    CHECK(run.velocity.centered);
    CHECK_FALSE(run.pressure.centered);
    CHECK(run.velocity.data.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12 * run.velocity.mean.cwiseAbs().maxCoeff());
    CHECK((run.velocity.field(4) - run.final_state.u).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("configuration checks")
  {
    FOMConfig c = base_config(Scheme::graddiv);
    CHECK_NOTHROW(c.validate());
    FOMConfig bad = c;
    bad.dt = 0.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = c;
    bad.nu = -1.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = c;
    bad.window.t_end = 2.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = c;
    bad.stabilization.mu = 0.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    CHECK_THROWS_AS(scheme_from_string("supg"), ValidationError);
  }
}
