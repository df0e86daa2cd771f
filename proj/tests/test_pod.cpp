#include "support.hpp"

#include "podrom/errors.hpp"
#include "podrom/pod.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <sstream>

using namespace podrom;

namespace
{

struct Fixture
{
  std::shared_ptr<const FESpace> space;
  SparseMatrix                   mass;
  SparseMatrix                   stiffness;

  explicit Fixture(int n = 4)
      : space(std::make_shared<const FESpace>(test::square(n), 2, 2,
                                              std::vector<BoundaryTag>{BoundaryTag::inlet, BoundaryTag::outlet, BoundaryTag::wall})),
        mass(assemble_mass(*space)), stiffness(assemble_stiffness(*space))
  {
  }

  SnapshotSet snapshots(const Eigen::MatrixXd &data, bool centered = false) const
  {
    SnapshotSet s;
    s.space = space;
    s.data = data;
    s.dt = 0.01;
    for (int j = 0; j < data.cols(); ++j)
      s.times.push_back(0.01 * j);
    return centered ? center(s) : s;
  }

  /// Smooth, linearly independent homogeneous fields x^a y^b (1-x)(1-y) x y.
  Eigen::MatrixXd smooth_family(int m) const
  {
    Eigen::MatrixXd D(space->n_dofs(), m);
    for (int j = 0; j < m; ++j)
      {
        const double t = 0.1 * j;
        D.col(j) = interpolate(*space, VectorFunction([t](const Point &p) {
                                 const double b = p.x * p.y * (1 - p.x) * (1 - p.y);
                                 return Vec2{b * std::cos(3 * t + p.x), b * std::sin(2 * t - p.y) * (1 + t * p.x)};
                               }));
      }
    return D;
  }
};

} // namespace

TEST_SUITE("pod")
{
  TEST_CASE("correlation of a single snapshot")
  {
    Fixture               f;
    std::mt19937_64       rng(3);
    const Eigen::VectorXd u = test::zero_constrained(*f.space, test::random_vector(rng, f.space->n_dofs()));
    const Eigen::MatrixXd K = build_correlation(f.snapshots(u), f.mass);
    REQUIRE(K.rows() == 1);
    CHECK(K(0, 0) == doctest::Approx(u.dot(f.mass * u)).epsilon(1e-14));
  }

  TEST_CASE("identical snapshots give rank one")
  {
    Fixture               f;
    const Eigen::VectorXd u = f.smooth_family(1).col(0);
    Eigen::MatrixXd       D(u.size(), 4);
    for (int j = 0; j < 4; ++j)
      D.col(j) = u;
    const PODBasis b = compute_basis(f.snapshots(D), f.mass, {});
    CHECK(b.rank == 1);
    CHECK(b.eigenvalues[0] == doctest::Approx(u.dot(f.mass * u)));
    // phi_1 = u / ||u||, up to the sign convention.
    const Eigen::VectorXd phi = u / std::sqrt(u.dot(f.mass * u));
    CHECK(std::min((b.modes.col(0) - phi).norm(), (b.modes.col(0) + phi).norm()) < 1e-10 * phi.norm());

    SUBCASE("single mode diagnostics")
    {
      const ModeDiagnostics d = mode_diagnostics(b, f.stiffness, 1);
      const double          g2 = b.modes.col(0).dot(f.stiffness * b.modes.col(0));
      CHECK(d.S_norm == doctest::Approx(g2).epsilon(1e-12));
      CHECK(d.C_r_H1 == doctest::Approx(std::sqrt(g2)).epsilon(1e-12));
    }
  }

  TEST_CASE("two orthogonal snapshots of equal norm")
  {
    Fixture         f;
    Eigen::MatrixXd D = f.smooth_family(2);
    const auto      ip = [&](const Eigen::VectorXd &a, const Eigen::VectorXd &b) { return a.dot(f.mass * b); };
    D.col(1) -= ip(D.col(1), D.col(0)) / ip(D.col(0), D.col(0)) * D.col(0);
    D.col(1) *= std::sqrt(ip(D.col(0), D.col(0)) / ip(D.col(1), D.col(1)));
    const PODBasis b = compute_basis(f.snapshots(D), f.mass, {});
    REQUIRE(b.rank == 2);
    CHECK(b.eigenvalues[0] == doctest::Approx(b.eigenvalues[1]).epsilon(1e-12));
    CHECK(b.eigenvalues[0] == doctest::Approx(0.5 * ip(D.col(0), D.col(0))).epsilon(1e-12));
    // Eigenvectors are not unique, but the projector onto their span is.
    const Eigen::MatrixXd P_basis = b.modes * b.modes.transpose() * f.mass;
    const Eigen::MatrixXd G = D.transpose() * f.mass * D;
    const Eigen::MatrixXd P_data = D * G.inverse() * D.transpose() * f.mass;
    CHECK((P_basis - P_data).cwiseAbs().maxCoeff() < 1e-12 * P_data.cwiseAbs().maxCoeff());
  }

  TEST_CASE("basis invariants")
  {
    Fixture        f;
    const auto     snaps = f.snapshots(f.smooth_family(12), true);
    const PODBasis b = compute_basis(snaps, f.mass, {});
    REQUIRE(b.rank >= 4);
    const int d = b.rank;
    CHECK((b.modes.transpose() * f.mass * b.modes - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-12);
    for (int k = 1; k < b.eigenvalues.size(); ++k)
      CHECK(b.eigenvalues[k] <= b.eigenvalues[k - 1]);
    double mean_energy = 0.0;
    for (int j = 0; j < snaps.size(); ++j)
      mean_energy += snaps.data.col(j).dot(f.mass * snaps.data.col(j)) / snaps.size();
    CHECK(b.eigenvalues.sum() == doctest::Approx(mean_energy).epsilon(1e-12));

    // Projector idempotence.
    const Eigen::MatrixXd Phi = b.leading(3);
    const Eigen::MatrixXd P = Phi * Phi.transpose() * f.mass;
    CHECK((P * P - P).cwiseAbs().maxCoeff() < 1e-12 * P.cwiseAbs().maxCoeff());

  }

  TEST_CASE("reconstruction at full rank")
  {
    // Random fields keep the correlation well conditioned, so no eigenvalue
    // falls under the rank cutoff.
    Fixture         f;
    std::mt19937_64 rng(23);
    Eigen::MatrixXd D(f.space->n_dofs(), 10);
    for (int j = 0; j < D.cols(); ++j)
      D.col(j) = test::zero_constrained(*f.space, test::random_vector(rng, D.rows()));
    const auto     snaps = f.snapshots(D, true);
    const PODBasis b = compute_basis(snaps, f.mass, {});
    REQUIRE(b.rank == 9);
    for (int j : {0, 4, 9})
      {
        const Eigen::VectorXd u = snaps.field(j);
        const Eigen::VectorXd rec = b.reconstruct(project_L2(b, f.mass, u, b.rank));
        CHECK((rec - u).norm() < 1e-10 * u.norm());
      }
  }

  TEST_CASE("project_L2 on modes and orthogonal fields")
  {
    Fixture         f;
    const PODBasis  b = compute_basis(f.snapshots(f.smooth_family(6)), f.mass, {});
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(b.rank);
    e1[0] = 1.0;
    CHECK((project_L2(b, f.mass, b.modes.col(0), b.rank) - e1).cwiseAbs().maxCoeff() < 1e-12);
    std::mt19937_64 rng(11);
    Eigen::VectorXd g = test::random_vector(rng, f.space->n_dofs());
    g -= b.modes * (b.modes.transpose() * (f.mass * g));
    CHECK(project_L2(b, f.mass, g, b.rank).cwiseAbs().maxCoeff() < 1e-12 * g.norm());
  }

  TEST_CASE("spectral identities")
  {
    Fixture        f;
    const auto     snaps = f.snapshots(f.smooth_family(20), true);
    const PODBasis b = compute_basis(snaps, f.mass, {});
    for (int r = 0; r <= b.rank; ++r)
      {
        CAPTURE(r);
        const IdentityReport rep = verify_spectral_identities(b, snaps, f.mass, f.stiffness, r, 5, 100, 1e-10);
        CHECK(rep.l2_residual < 1e-10);
        CHECK(rep.h1_residual < 1e-10);
        CHECK(rep.inverse_violations == 0);
        CHECK(rep.passed);
        if (r == 0)
          CHECK(rep.l2_rhs == doctest::Approx(b.eigenvalues.sum()).epsilon(1e-12));
        if (r == b.rank)
          CHECK(b.tail(r) == 0.0);
      }
    CHECK_THROWS_AS(verify_spectral_identities(b, snaps, f.mass, f.stiffness, b.rank + 1), ValidationError);
  }

  TEST_CASE("power iteration matches a dense eigensolver")
  {
    std::mt19937_64 rng(17);
    for (int n : {3, 8, 20})
      {
        Eigen::MatrixXd X(n, n);
        for (int j = 0; j < n; ++j)
          X.col(j) = test::random_vector(rng, n);
        const Eigen::MatrixXd                          S = X.transpose() * X;
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
        const double                                   top = es.eigenvalues().maxCoeff();
        CHECK(std::abs(power_iteration_norm(S) - top) <= 1e-7 * top);
      }
    CHECK(power_iteration_norm(Eigen::MatrixXd::Zero(3, 3)) == 0.0);
  }

  TEST_CASE("truncation options")
  {
    Fixture    f;
    const auto snaps = f.snapshots(f.smooth_family(8), true);
    PODOptions o;
    o.r = 3;
    CHECK(compute_basis(snaps, f.mass, o).r == 3);
    o.r = 50;
    CHECK_THROWS_AS(compute_basis(snaps, f.mass, o), ValidationError);
    PODOptions e;
    e.energy_threshold = 0.99;
    const PODBasis b = compute_basis(snaps, f.mass, e);
    CHECK(1.0 - b.tail(b.r) / b.eigenvalues.sum() >= 0.99);
    CHECK(1.0 - b.tail(b.r - 1) / b.eigenvalues.sum() < 0.99);
    e.r = 2;
    CHECK_THROWS_AS(compute_basis(snaps, f.mass, e), ValidationError);
  }

  TEST_CASE("basis file round trip")
  {
    Fixture               f;
    const PODBasis        b = compute_basis(f.snapshots(f.smooth_family(6), true), f.mass, {});
    const ModeDiagnostics d = mode_diagnostics(b, f.stiffness, 2);
    std::stringstream     ss;
    write_basis(b, d, ss);
    ModeDiagnostics d2;
    const PODBasis  c = read_basis(f.space, ss, &d2);
    CHECK(c.signature() == b.signature());
    CHECK(c.modes == b.modes);
    CHECK(d2.S_norm == d.S_norm);

    Fixture other(3);
    ss.clear();
    ss.seekg(0);
    CHECK_THROWS_AS(read_basis(other.space, ss), ValidationError);
  }
}
