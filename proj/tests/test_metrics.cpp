#include "rom_fixture.hpp"

#include "podrom/errors.hpp"
#include "podrom/metrics.hpp"

#include <doctest.h>

using namespace podrom;

namespace
{

std::vector<Eigen::VectorXd> random_trajectory(std::mt19937_64 &rng, int steps, int n)
{
  std::vector<Eigen::VectorXd> t;
  for (int j = 0; j < steps; ++j)
    t.push_back(test::random_vector(rng, n));
  return t;
}

/// Steady low-Reynolds channel flow past the hole, reached by time stepping
/// with constant inflow and f = 0.
struct SteadyChannel
{
  std::unique_ptr<FullOrderModel> model;
  FOMState                        state;
  DragLiftConfig                  drag;

  explicit SteadyChannel(int refinements)
  {
    const double dy = 0.41 / 5;
    Mesh         mesh = build_rect_mesh(2.2, 0.41, 11, 5, Rectangle{0.4, 2 * dy, 0.6, 3 * dy});
    for (int k = 0; k < refinements; ++k)
      mesh = refine_uniform(mesh);
    FOMConfig c;
    c.scheme = Scheme::graddiv;
    c.nu = 0.1;
    c.dt = 4.0;
    c.t_final = 40.0;
    c.stabilization.mu = 0.1;
    c.window = {0.0, 40.0, 1};
    FlowProblem p;
    p.dirichlet_tags = {BoundaryTag::inlet, BoundaryTag::wall, BoundaryTag::obstacle};
    p.boundary_velocity = [](const Point &x, double) {
      return x.x == 0.0 ? Vec2{4.0 * 0.3 * x.y * (0.41 - x.y) / (0.41 * 0.41), 0.0} : Vec2{0.0, 0.0};
    };
    model = std::make_unique<FullOrderModel>(std::make_shared<const Mesh>(std::move(mesh)), c, std::move(p));
    state = model->initial_state();
    for (int k = 0; k < 8; ++k)
      model->step(state);
    drag = {dy, 0.2, c.nu};
  }
};

} // namespace

TEST_SUITE("metrics")
{
  TEST_CASE("kinetic energy")
  {
    const FESpace      V(test::square(4), 2, 2);
    const SparseMatrix M = assemble_mass(V);
    CHECK(kinetic_energy(interpolate(V, VectorFunction([](const Point &) { return Vec2{1.0, 0.0}; })), M) ==
          doctest::Approx(0.5).epsilon(1e-13));
    CHECK(kinetic_energy(Eigen::VectorXd::Zero(V.n_dofs()), M) == 0.0);
    CHECK_THROWS_AS(kinetic_energy(Eigen::VectorXd::Zero(3), M), ValidationError);
  }

  TEST_CASE("kinetic energy of the Taylor-Green vortex")
  {
    // 1/2 int |u|^2 = 1/4 exp(-4 pi^2 nu t) on the unit square.
    const double nu = 0.01, t = 0.3;
    const auto   tg = taylor_green(nu);
    const double exact = 0.25 * std::exp(-4.0 * test::pi * test::pi * nu * t);
    double       prev = 0.0;
    for (int n : {4, 8, 16})
      {
        const FESpace V(test::square(n), 2, 2);
        const double  e = std::abs(kinetic_energy(interpolate(V, tg.velocity_at(t)), assemble_mass(V)) - exact);
        if (prev > 0.0)
          CHECK(prev / e > 8.0);
        prev = e;
      }
    CHECK(prev < 2e-5 * exact);
  }

  TEST_CASE("drag and lift of a zero state")
  {
    const SteadyChannel   ch(0);
    const auto           &V = ch.model->velocity_space();
    const auto            fields = build_drag_lift_fields(V, ch.model->operators().scalar_stiffness);
    const Eigen::VectorXd u = Eigen::VectorXd::Zero(V.n_dofs());
    const Eigen::VectorXd p = Eigen::VectorXd::Zero(ch.model->pressure_space().n_dofs());
    const DragLift        d = drag_lift(V, ch.model->operators(), fields, u, u, p, 0.1, ch.drag);
    CHECK(d.c_D == 0.0);
    CHECK(d.c_L == 0.0);
    CHECK_THROWS_AS(drag_lift(V, ch.model->operators(), fields, u, u, p, 0.0, ch.drag), ValidationError);
  }

  TEST_CASE("drag/lift test fields")
  {
    const SteadyChannel ch(0);
    const auto         &V = ch.model->velocity_space();
    const auto          fields = build_drag_lift_fields(V, ch.model->operators().scalar_stiffness);
    const int           ns = V.n_scalar();
    const std::array<BoundaryTag, 1> obst{BoundaryTag::obstacle};
    const std::array<BoundaryTag, 3> outer{BoundaryTag::inlet, BoundaryTag::outlet, BoundaryTag::wall};
    const auto                       on_obstacle = V.boundary_scalar_dofs(obst);
    for (int s : on_obstacle)
      {
        CHECK(fields.v_D[s] == 1.0);
        CHECK(fields.v_D[ns + s] == 0.0);
        CHECK(fields.v_L[ns + s] == 1.0);
      }
    for (int s : V.boundary_scalar_dofs(outer))
      if (!std::binary_search(on_obstacle.begin(), on_obstacle.end(), s))
        CHECK(fields.v_D[s] == 0.0);
    const FESpace plain(test::square(2), 2, 2);
    CHECK_THROWS_AS(build_drag_lift_fields(plain, assemble_stiffness(FESpace(test::square(2), 2, 1))), ValidationError);
  }

  TEST_CASE("volume drag matches the refinement limit of the boundary traction")
  {
    // The pointwise traction converges slowly (re-entrant corners of the
    // hole), so the oracle is its Richardson extrapolation over three levels
    // with the observed order.
    std::vector<DragLift> vol, bnd;
    for (int level = 1; level <= 3; ++level)
      {
        const SteadyChannel ch(level);
        const auto         &m = *ch.model;
        const auto          fields = build_drag_lift_fields(m.velocity_space(), m.operators().scalar_stiffness);
        vol.push_back(drag_lift(m.velocity_space(), m.operators(), fields, ch.state.u, ch.state.u, ch.state.p, m.config().dt, ch.drag));
        bnd.push_back(boundary_traction(m.velocity_space(), m.pressure_space(), ch.state.u, ch.state.p, ch.drag));
      }
    const double g1 = bnd[1].c_D - bnd[0].c_D, g2 = bnd[2].c_D - bnd[1].c_D;
    REQUIRE(g1 / g2 > 1.0);
    const double order = std::log2(g1 / g2);
    const double limit = bnd[2].c_D + g2 / (std::pow(2.0, order) - 1.0);
    INFO("traction order " << order << ", limit " << limit << ", volume " << vol[1].c_D);
    CHECK(vol[1].c_D > 0.0);
    CHECK(std::abs(vol[1].c_D - limit) <= 0.02 * limit);
    // Symmetric geometry: both lift values tend to zero.
    CHECK(std::abs(vol[2].c_L) <= 0.02 * limit);
    CHECK(std::abs(bnd[2].c_L) <= 0.02 * limit);
  }

  TEST_CASE("weak divergence of a pointwise solenoidal interpolant")
  {
    // u = curl psi with psi = exp(x + 2y) sin(xy): div u = 0, but its P2
    // interpolant is only divergence-free to O(h^2).
    const VectorFunction u = [](const Point &p) {
      const double e = std::exp(p.x + 2 * p.y), s = std::sin(p.x * p.y), c = std::cos(p.x * p.y);
      return Vec2{e * (2 * s + p.x * c), -e * (s + p.y * c)};
    };
    double prev = 0.0;
    for (int n : {4, 8, 16})
      {
        const auto    mesh = test::square(n);
        const FESpace V(mesh, 2, 2), Q(mesh, 1, 1);
        const double  wd = weak_divergence(assemble_divergence(V, Q), interpolate(V, u));
        CHECK(wd > 0.0);
        if (prev > 0.0)
          CHECK(prev / wd > 4.0);
        prev = wd;
      }
  }

  TEST_CASE("discrete l2 error in time")
  {
    const FESpace      V(test::square(2), 2, 2);
    const SparseMatrix M = assemble_mass(V);
    std::mt19937_64    rng(31);
    const int          n = V.n_dofs();
    const auto         a = random_trajectory(rng, 7, n), b = random_trajectory(rng, 7, n), c = random_trajectory(rng, 7, n);
    CHECK(discrete_l2_error(a, a, M, 0.1).sum == 0.0);

    const Eigen::VectorXd off = interpolate(V, VectorFunction([](const Point &) { return Vec2{2.0, -1.0}; }));
    std::vector<Eigen::VectorXd> shifted = a;
    for (auto &v : shifted)
      v += off;
    // ||(2,-1)||_0^2 = 5 on the unit square.
    CHECK(discrete_l2_error(a, shifted, M, 0.1).sum == doctest::Approx(7 * 0.1 * 5.0).epsilon(1e-12));

    const double ab = discrete_l2_error(a, b, M, 0.1).root;
    CHECK(ab == doctest::Approx(discrete_l2_error(b, a, M, 0.1).root).epsilon(1e-15));
    CHECK(ab <= discrete_l2_error(a, c, M, 0.1).root + discrete_l2_error(c, b, M, 0.1).root);
    CHECK_THROWS_AS(discrete_l2_error(a, std::vector<Eigen::VectorXd>(a.begin(), a.end() - 1), M, 0.1), ValidationError);
  }

  TEST_CASE("replayed reduced trajectory has vanishing l2 error")
  {
    const test::ReplayFixture f(Scheme::graddiv);
    const int                 r = f.velocity.rank;
    const ROMOperators        o = f.build(r, 0);
    const ROMRunResult        res = run_rom(o, f.rom_config(), f.a0(r));
    std::vector<Eigen::VectorXd> rom, fom;
    for (int j = 0; j < f.run.velocity.size(); ++j)
      {
        rom.push_back(o.velocity(res.a[j]));
        fom.push_back(f.run.velocity.field(j));
      }
    CHECK(discrete_l2_error(rom, fom, f.ops().mass, 0.01).root <= 1e-10);
  }

  TEST_CASE("triple norm")
  {
    const test::ReplayFixture f(Scheme::lps);
    const auto               &o = f.ops();
    const Eigen::MatrixXd     Phi = f.velocity.leading(3);
    const int                 np = f.model->pressure_space().n_dofs();
    CHECK(triple_norm(Eigen::VectorXd::Zero(np), Phi, o.divergence, o.stiffness, o.s_pres) == 0.0);

    std::mt19937_64       rng(41);
    const Eigen::VectorXd Z = test::random_vector(rng, np);
    // Dense oracle: sup over c of (g.c) / sqrt(c^T S c) = sqrt(g^T S^{-1} g),
    // checked against the generalized Rayleigh quotient of g g^T against S.
    const Eigen::VectorXd g = Phi.transpose() * (o.divergence.transpose() * Z);
    const Eigen::MatrixXd S = Phi.transpose() * (o.stiffness * Phi);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(g * g.transpose(), S);
    const double sup = std::sqrt(es.eigenvalues().maxCoeff());
    const double stab = std::sqrt(Z.dot(o.s_pres * Z));
    CHECK(triple_norm(Z, Phi, o.divergence, o.stiffness, o.s_pres) == doctest::Approx(sup + stab).epsilon(1e-10));
    CHECK(triple_norm(Z, Phi, o.divergence, o.stiffness, SparseMatrix()) == doctest::Approx(sup).epsilon(1e-10));

    // Constant pressure: no pairing with homogeneous modes and no fluctuation.
    // Both terms are square roots, so round-off of 1e-17 shows up as 1e-9.
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(np);
    CHECK((Phi.transpose() * (o.divergence.transpose() * one)).norm() < 1e-12 * g.norm());
    CHECK(std::abs(one.dot(o.s_pres * one)) < 1e-14 * Z.dot(o.s_pres * Z));
    CHECK(triple_norm(one, Phi, o.divergence, o.stiffness, o.s_pres) < 1e-6 * (sup + stab));
  }

  TEST_CASE("error indicators")
  {
    for (Scheme s : {Scheme::graddiv, Scheme::lps})
      {
        const test::ReplayFixture f(s, 0.1);
        const auto               &o = f.ops();
        const SparseMatrix        Ap = assemble_stiffness(f.model->pressure_space());
        double                    prev_v = std::numeric_limits<double>::infinity(), prev_p = prev_v;
        for (int r = 1; r <= f.velocity.rank; ++r)
          {
            const auto d = spectral_diagnostics(f.velocity, o.stiffness, r, &f.pressure, &Ap);
            const auto e = error_indicators(d, 0.5, s);
            CHECK(e.r == r);
            CHECK(e.velocity <= prev_v * (1.0 + 1e-12));
            CHECK(e.pressure <= prev_p * (1.0 + 1e-12));
            prev_v = e.velocity;
            prev_p = e.pressure;
            if (r == f.velocity.rank && r >= f.pressure.rank)
              {
                CHECK(e.velocity == 0.0);
                CHECK(e.pressure == 0.0);
              }
          }
      }
  }

  TEST_CASE("Kendall tau")
  {
    CHECK(kendall_tau({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(kendall_tau({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
    // One discordant pair out of six.
    CHECK(kendall_tau({1, 2, 3, 4}, {1, 3, 2, 4}) == doctest::Approx(4.0 / 6.0));
    // tau-b with a tie in y: (C - D) / sqrt(n1 n2) = 5 / sqrt(6 * 5).
    CHECK(kendall_tau({1, 2, 3, 4}, {1, 2, 2, 4}) == doctest::Approx(5.0 / std::sqrt(30.0)));
    CHECK_THROWS_AS(kendall_tau({1}, {1}), ValidationError);
    CHECK_THROWS_AS(kendall_tau({1, 2}, {1, 2, 3}), ValidationError);
  }
}
