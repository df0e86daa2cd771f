#include "rom_fixture.hpp"

#include "podrom/errors.hpp"
#include "podrom/supremizer.hpp"

#include <doctest.h>

using namespace podrom;
using test::ReplayFixture;

namespace
{

SupremizerSpace supremizers(const ReplayFixture &f, int rp)
{
  return build_supremizers(f.model->velocity_space(), f.ops().stiffness, f.ops().divergence, f.pressure.leading(rp));
}

double beta(const ReplayFixture &f, const Eigen::MatrixXd &zeta, const Eigen::MatrixXd &Psi)
{
  return compute_beta_r(zeta, Psi, f.ops().divergence, f.ops().stiffness, f.ops().mass, f.ops().pressure_mass);
}

} // namespace

TEST_SUITE("supremizer")
{
  TEST_CASE("supremizer equation and orthonormality")
  {
    const ReplayFixture f(Scheme::graddiv, 0.1);
    const int           rp = std::min(6, f.pressure.rank);
    const auto          sup = supremizers(f, rp);
    const auto         &V = f.model->velocity_space();
    for (double res : sup.raw_residuals)
      CHECK(res <= 1e-10);
    const Eigen::MatrixXd Psi = f.pressure.leading(rp);
    for (int k = 0; k < rp; ++k)
      {
        const Eigen::VectorXd eq = f.ops().stiffness * sup.raw.col(k) + f.ops().divergence.transpose() * Psi.col(k);
        const Eigen::VectorXd free = test::zero_constrained(V, eq);
        CHECK(free.norm() <= 1e-10 * (f.ops().divergence.transpose() * Psi.col(k)).norm());
        for (int d : V.constrained_dofs())
          CHECK(sup.raw(d, k) == 0.0);
      }
    const Eigen::MatrixXd H = sup.zeta.transpose() * (f.ops().stiffness * sup.zeta);
    CHECK((H - Eigen::MatrixXd::Identity(rp, rp)).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("constant pressure has a zero supremizer")
  {
    const ReplayFixture   f(Scheme::graddiv);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(f.model->pressure_space().n_dofs());
    double                res = -1.0;
    const Eigen::VectorXd w = solve_supremizer(f.model->velocity_space(), f.ops().stiffness, f.ops().divergence, one, &res);
    CHECK(w.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(res >= 0.0);
    CHECK(res <= 1e-10);
  }

  TEST_CASE("beta_r for one mode matches the closed form")
  {
    const ReplayFixture   f(Scheme::graddiv, 0.1);
    const auto            sup = supremizers(f, 1);
    const Eigen::VectorXd psi = f.pressure.leading(1).col(0);
    const Eigen::VectorXd z = sup.zeta.col(0);
    const double          num = std::abs(psi.dot(f.ops().divergence * z));
    const double          den = std::sqrt(z.dot(f.ops().stiffness * z)) * std::sqrt(psi.dot(f.ops().pressure_mass * psi));
    CHECK(beta(f, sup.zeta, f.pressure.leading(1)) == doctest::Approx(num / den).epsilon(1e-12));
  }

  TEST_CASE("beta_r against a sampled inf-sup for two modes")
  {
    const ReplayFixture   f(Scheme::graddiv, 0.1);
    const auto            sup = supremizers(f, 2);
    const Eigen::MatrixXd Psi = f.pressure.leading(2);
    const Eigen::MatrixXd C = sup.zeta.transpose() * (f.ops().divergence.transpose() * Psi);
    const Eigen::MatrixXd H = sup.zeta.transpose() * (f.ops().stiffness * sup.zeta);
    const Eigen::MatrixXd G = Psi.transpose() * (f.ops().pressure_mass * Psi);
    const int             n = 1000;
    double                inf = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
      {
        const double          th = test::pi * i / n;
        const Eigen::Vector2d c(std::cos(th), std::sin(th));
        double                sup_val = 0.0;
        for (int j = 0; j < 2 * n; ++j)
          {
            const double          ph = test::pi * j / n;
            const Eigen::Vector2d d(std::cos(ph), std::sin(ph));
            sup_val = std::max(sup_val, d.dot(C * c) / std::sqrt(d.dot(H * d)));
          }
        inf = std::min(inf, sup_val / std::sqrt(c.dot(G * c)));
      }
    CHECK(beta(f, sup.zeta, Psi) == doctest::Approx(inf).epsilon(1e-3));
  }

  TEST_CASE("beta_r is invariant under orthogonal mixing of the pressure modes")
  {
    const ReplayFixture   f(Scheme::graddiv, 0.1);
    const int             rp = 4;
    const Eigen::MatrixXd Psi = f.pressure.leading(rp);
    const double          b0 = beta(f, supremizers(f, rp).zeta, Psi);
    std::mt19937_64       rng(13);
    Eigen::MatrixXd       X(rp, rp);
    for (int j = 0; j < rp; ++j)
      X.col(j) = test::random_vector(rng, rp);
    const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(X).householderQ();
    const Eigen::MatrixXd PsiQ = Psi * Q;
    const auto            supQ = build_supremizers(f.model->velocity_space(), f.ops().stiffness, f.ops().divergence, PsiQ);
    CHECK(beta(f, supQ.zeta, PsiQ) == doctest::Approx(b0).epsilon(1e-10));
  }

  TEST_CASE("beta_r stays bounded away from zero across r")
  {
    // 8x8: beta_r is converged in h there; the 3x3 grid underresolves the
    // higher pressure modes.
    const ReplayFixture f(Scheme::graddiv, 0.1, true, 8);
    REQUIRE(f.pressure.rank >= 8);
    std::vector<double> values;
    for (int r = 1; r <= 8; ++r)
      values.push_back(beta(f, supremizers(f, r).zeta, f.pressure.leading(r)));
    const double lo = *std::min_element(values.begin(), values.end());
    const double hi = *std::max_element(values.begin(), values.end());
    CHECK(lo > 0.0);
    for (double v : values)
      CHECK(v >= 0.9 * lo);
    CHECK((hi - lo) / hi < 0.1);
  }

  TEST_CASE("recovered pressure on the training trajectory")
  {
    const ReplayFixture    f(Scheme::graddiv);
    const int              r = f.velocity.rank;
    const int              rp = f.pressure.rank;
    const ROMOperators     o = f.build(r, rp);
    const auto             sup = supremizers(f, rp);
    const PressureRecovery rec = build_pressure_recovery(sup, f.pressure, rp, o, f.model->spaces(), f.ops());
    ROMRunOptions          opt;
    opt.recovery = &rec;
    const ROMRunResult res = run_rom(o, f.rom_config(), f.a0(r), opt);
    for (int j = 1; j < f.run.pressure.size(); ++j)
      {
        const Eigen::VectorXd p = f.run.pressure.field(j);
        CHECK((rec.Psi * res.b[j] - p).norm() <= 1e-8 * p.norm());
      }
  }

  TEST_CASE("zero state recovers zero pressure")
  {
    const ReplayFixture    f(Scheme::graddiv, 0.05, false);
    const ROMOperators     o = f.build(3, 0, false);
    const auto             sup = supremizers(f, 2);
    const PressureRecovery rec = build_pressure_recovery(sup, f.pressure, 2, o, f.model->spaces(), f.ops());
    ROMState               s = initial_rom_state(o, Eigen::VectorXd::Zero(3), 0.0, 0.1);
    step_rom(s, o, f.rom_config());
    CHECK(rec.recover(s, f.rom_config(), {}).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("principal angle cosine")
  {
    const ReplayFixture   f(Scheme::graddiv);
    const Eigen::MatrixXd A = f.velocity.leading(2);
    CHECK(principal_angle_cosine(A, A, f.ops().mass) == doctest::Approx(1.0));
    CHECK(principal_angle_cosine(A.col(0), f.velocity.leading(4).rightCols(2), f.ops().mass) < 1e-10);
    const double c = principal_angle_cosine(A, supremizers(f, 2).zeta, f.ops().mass);
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);
    CHECK(principal_angle_cosine(Eigen::MatrixXd(A.rows(), 0), A, f.ops().mass) == 0.0);
  }

  TEST_CASE("input checks")
  {
    const ReplayFixture f(Scheme::graddiv);
    CHECK_THROWS_AS(compute_beta_r(Eigen::MatrixXd(f.model->velocity_space().n_dofs(), 0), f.pressure.leading(1), f.ops().divergence,
                                   f.ops().stiffness, f.ops().mass, f.ops().pressure_mass),
                    ValidationError);
    // A repeated pressure mode makes the supremizers dependent.
    Eigen::MatrixXd Psi(f.pressure.modes.rows(), 2);
    Psi << f.pressure.modes.col(0), f.pressure.modes.col(0);
    CHECK_THROWS_AS(build_supremizers(f.model->velocity_space(), f.ops().stiffness, f.ops().divergence, Psi), SolverError);
  }
}
