#include "support.hpp"

#include "podrom/constraints.hpp"
#include "podrom/errors.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <sstream>

using namespace podrom;
using test::pi;

namespace
{

std::shared_ptr<const Mesh> reference_triangle()
{
  std::vector<Point>              v{{0, 0}, {1, 0}, {0, 1}};
  std::vector<std::array<int, 3>> t{{0, 1, 2}};
  std::vector<BoundaryEdge>       e{{0, 1, BoundaryTag::wall}, {1, 2, BoundaryTag::outlet}, {2, 0, BoundaryTag::inlet}};
  return std::make_shared<const Mesh>(v, t, e);
}

const std::vector<BoundaryTag> all_sides{BoundaryTag::inlet, BoundaryTag::outlet, BoundaryTag::wall};

double min_eigenvalue(const SparseMatrix &m)
{
  const Eigen::MatrixXd d(m);
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(d, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

double max_relative_change(const SparseMatrix &a, const SparseMatrix &b)
{
  const SparseMatrix d = a - b;
  return d.coeffs().cwiseAbs().maxCoeff() / a.coeffs().cwiseAbs().maxCoeff();
}

VectorFunction taylor_green0()
{
  return [](const Point &x) { return Vec2{-std::cos(pi * x.x) * std::sin(pi * x.y), std::sin(pi * x.x) * std::cos(pi * x.y)}; };
}

} // namespace

TEST_SUITE("assembly")
{
  TEST_CASE("mass matrix")
  {
    SUBCASE("one P1 triangle")
    {
      auto               mesh = reference_triangle();
      const FESpace      p1(mesh, 1, 1);
      const Eigen::MatrixXd M(assemble_mass(p1));
      Eigen::MatrixXd    ref(3, 3);
      ref << 2, 1, 1, 1, 2, 1, 1, 1, 2;
      ref *= 0.5 / 12.0;
      CHECK((M - ref).cwiseAbs().maxCoeff() < 1e-16);
    }
    SUBCASE("constant one integrates to the area")
    {
      auto mesh = std::make_shared<const Mesh>(build_rect_mesh(2.0, 1.5, 4, 3, Rectangle{0.5, 0.5, 1.0, 1.0}));
      for (int deg : {1, 2})
        {
          const FESpace         s(mesh, deg, 1);
          const Eigen::VectorXd one = Eigen::VectorXd::Ones(s.n_dofs());
          CHECK(one.dot(assemble_mass(s) * one) == doctest::Approx(3.0 - 0.25).epsilon(1e-13));
        }
    }
    SUBCASE("u^T M u converges to the L2 norm")
    {
      const double exact = 0.5; // int of |TG|^2 over the unit square
      double       prev = 1.0;
      for (int n : {4, 8, 16})
        {
          const FESpace v(test::square(n), 2, 2);
          const auto    u = interpolate(v, taylor_green0());
          const double  err = std::abs(u.dot(assemble_mass(v) * u) - exact);
          CHECK(err < prev / 6.0);
          prev = err;
        }
      CHECK(test::integrate(*test::square(2), [](const Point &x) {
              const Vec2 v = taylor_green0()(x);
              return v[0] * v[0] + v[1] * v[1];
            }) == doctest::Approx(exact).epsilon(1e-10));
    }
  }

  TEST_CASE("stiffness matrix")
  {
    auto          mesh = test::square(4);
    const FESpace v(mesh, 2, 2);
    const auto    A = assemble_stiffness(v);
    CHECK((A * Eigen::VectorXd::Ones(v.n_dofs())).cwiseAbs().maxCoeff() < 1e-12);
    const auto ux = interpolate(v, VectorFunction([](const Point &x) { return Vec2{x.x, 0.0}; }));
    CHECK(ux.dot(A * ux) == doctest::Approx(1.0).epsilon(1e-13));

    // ||grad TG||^2 = pi^2 on the unit square, error O(h^4).
    double prev = 1.0;
    for (int n : {4, 8, 16})
      {
        const FESpace w(test::square(n), 2, 2);
        const auto    u = interpolate(w, taylor_green0());
        const double  err = std::abs(u.dot(assemble_stiffness(w) * u) - pi * pi);
        CHECK(err < prev / 12.0);
        prev = err;
      }
  }

  TEST_CASE("divergence coupling")
  {
    auto          mesh = test::square(3);
    const FESpace v(mesh, 2, 2, all_sides), q(mesh, 1, 1);
    const auto    B = assemble_divergence(v, q);
    CHECK(B.rows() == q.n_dofs());
    CHECK(B.cols() == v.n_dofs());
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(q.n_dofs());
    const auto xy = interpolate(v, VectorFunction([](const Point &x) { return Vec2{x.x, x.y}; }));
    CHECK(one.dot(B * xy) == doctest::Approx(2.0).epsilon(1e-13));

    std::mt19937_64 rng(3);
    for (int k = 0; k < 5; ++k)
      {
        const auto w = test::zero_constrained(v, test::random_vector(rng, v.n_dofs()));
        CHECK(std::abs(one.dot(B * w)) < 1e-13);
      }

    // The Taylor-Green interpolant is weakly divergence-free by symmetry of
    // the grid; a generic solenoidal field has an O(h^2) residual.
    double prev = 1.0;
    for (int n : {4, 8, 16})
      {
        auto          m = test::square(n);
        const FESpace vv(m, 2, 2), qq(m, 1, 1);
        const auto    Bn = assemble_divergence(vv, qq);
        CHECK((Bn * interpolate(vv, taylor_green0())).cwiseAbs().maxCoeff() < 1e-14);
        const auto   u = interpolate(vv, VectorFunction([](const Point &x) {
                       const double e = std::exp(x.x + 2.0 * x.y) * std::sin(x.x * x.y);
                       const double ex = std::exp(x.x + 2.0 * x.y);
                       // u = curl of psi = e^{x+2y} sin(xy)
                       return Vec2{ex * (2.0 * std::sin(x.x * x.y) + x.x * std::cos(x.x * x.y)),
                                   -(e + ex * x.y * std::cos(x.x * x.y))};
                     }));
        const double r = (Bn * u).cwiseAbs().maxCoeff();
        CHECK(r > 0.0);
        CHECK(r < prev / 4.0);
        prev = r;
      }
  }

  TEST_CASE("grad-div form")
  {
    auto          mesh = test::square(3);
    const FESpace v(mesh, 2, 2);
    const auto    G = assemble_grad_div(v, 0.7);
    const auto    rot = interpolate(v, VectorFunction([](const Point &x) { return Vec2{-x.y, x.x}; }));
    CHECK(std::abs(rot.dot(G * rot)) < 1e-13);
    const auto xy = interpolate(v, VectorFunction([](const Point &x) { return Vec2{x.x, x.y}; }));
    CHECK(xy.dot(G * xy) == doctest::Approx(0.7 * 4.0).epsilon(1e-13));
    CHECK(max_relative_change(assemble_grad_div(v, 1.4), 2.0 * G) < 1e-15);
    CHECK_THROWS_AS(assemble_grad_div(v, 0.0), ValidationError);
  }

  TEST_CASE("divergence bounded by the gradient on H1_0 fields")
  {
    auto            mesh = test::square(4);
    const FESpace   v(mesh, 2, 2, all_sides);
    const auto      A = assemble_stiffness(v);
    const auto      G = assemble_grad_div(v, 2.5);
    std::mt19937_64 rng(11);
    for (int k = 0; k < 100; ++k)
      {
        const auto w = test::zero_constrained(v, test::random_vector(rng, v.n_dofs()));
        CHECK(w.dot(G * w) / 2.5 <= w.dot(A * w) * (1.0 + 1e-12));
      }
  }

  TEST_CASE("convection form")
  {
    auto            mesh = test::square(3);
    const FESpace   v(mesh, 2, 2, all_sides);
    std::mt19937_64 rng(5);
    for (int k = 0; k < 20; ++k)
      {
        const auto   u = test::random_vector(rng, v.n_dofs());
        const auto   a = test::zero_constrained(v, test::random_vector(rng, v.n_dofs()));
        const auto   b = test::zero_constrained(v, test::random_vector(rng, v.n_dofs()));
        const double scale = u.norm() * a.norm() * b.norm();
        CHECK(std::abs(apply_convection(v, u, a, a)) < 1e-13 * u.norm() * a.squaredNorm());
        CHECK(std::abs(apply_convection(v, u, a, b) + apply_convection(v, u, b, a)) < 1e-12 * scale);
        const SparseMatrix N = assemble_convection(v, u);
        CHECK(std::abs(b.dot(N * a) - apply_convection(v, u, a, b)) < 1e-12 * scale);
        CHECK((convection_residual(v, u, a) - N * a).norm() < 1e-12 * u.norm() * a.norm());
      }

    SUBCASE("quadrature oracle")
    {
      const FESpace w(test::square(2), 2, 2);
      const auto    u = interpolate(w, VectorFunction([](const Point &) { return Vec2{1.0, 0.0}; }));
      const auto    x = interpolate(w, VectorFunction([](const Point &p) { return Vec2{p.x, 0.0}; }));
      // ((1,0).grad)(x,0) . (x,0) = x, div u = 0
      const double oracle = test::integrate(w.mesh(), [](const Point &p) { return p.x; });
      CHECK(apply_convection(w, u, x, x) == doctest::Approx(oracle).epsilon(1e-13));
      CHECK(oracle == doctest::Approx(0.5).epsilon(1e-14));
    }
  }

  TEST_CASE("convection skew defect is the outflow flux")
  {
    // With an open outlet, b(u,v,w) + b(u,w,v) = boundary integral of (u.n)(v.w).
    auto            mesh = std::make_shared<const Mesh>(build_rect_mesh(2.0, 1.0, 8, 4, Rectangle{0.5, 0.25, 0.75, 0.5}));
    const FESpace   v(mesh, 2, 2, {BoundaryTag::inlet, BoundaryTag::wall, BoundaryTag::obstacle});
    std::mt19937_64 rng(9);
    double          worst = 0.0, raw = 0.0;
    for (int k = 0; k < 10; ++k)
      {
        Eigen::MatrixXd f(v.n_dofs(), 3);
        for (int c = 0; c < 3; ++c)
          f.col(c) = test::zero_constrained(v, test::random_vector(rng, v.n_dofs()));
        const auto   flux = test::boundary_flux_tensor(v, f);
        const double sum = apply_convection(v, f.col(0), f.col(1), f.col(2)) + apply_convection(v, f.col(0), f.col(2), f.col(1));
        const double scale = f.col(0).norm() * f.col(1).norm() * f.col(2).norm();
        raw = std::max(raw, std::abs(sum) / scale);
        worst = std::max(worst, std::abs(sum - flux[0](1, 2)) / scale);
      }
    CHECK(raw > 1e-6);
    CHECK(worst < 1e-13);
  }

  TEST_CASE("LPS fluctuation operator")
  {
    auto               mesh = test::square(4);
    const FESpace      s(mesh, 2, 1);
    const LpsProjector P = assemble_lps_fluctuation(s);
    const auto lin = interpolate(s, ScalarFunction([](const Point &x) { return 3.0 * x.x - x.y + 2.0; }));
    CHECK((P.fluctuation * lin).cwiseAbs().maxCoeff() < 1e-12);
    const auto quad = interpolate(s, ScalarFunction([](const Point &x) { return x.x * x.x; }));
    CHECK((P.fluctuation * quad).cwiseAbs().maxCoeff() < 1e-12);

    std::mt19937_64 rng(2);
    for (int k = 0; k < 5; ++k)
      {
        const auto g = test::random_vector(rng, P.dg_size());
        const auto once = P.complement * g;
        CHECK((P.complement * once - once).norm() < 1e-12 * g.norm());
      }

    // Non-polynomial field: nonzero fluctuation that shrinks with h.
    double prev = 0.0;
    for (int n : {4, 8, 16})
      {
        auto                 m = test::square(n);
        const FESpace        sn(m, 2, 1);
        const LpsProjector   Pn = assemble_lps_fluctuation(sn);
        const auto           c = interpolate(sn, ScalarFunction([](const Point &x) { return std::sin(3.0 * x.x) * std::cos(2.0 * x.y); }));
        const Eigen::VectorXd f = Pn.fluctuation * c, g = Pn.gradient * c;
        const SparseMatrix   W = dg_weighted_mass(*m, 1.0);
        const double         rel = std::sqrt(f.dot(W * f) / g.dot(W * g));
        CHECK(rel > 0.0);
        if (prev > 0.0)
          CHECK(rel < 0.6 * prev);
        prev = rel;
      }
  }

  TEST_CASE("LPS matrices")
  {
    auto                mesh = test::square(3);
    const FESpace       v(mesh, 2, 2), p(mesh, 2, 1);
    StabilizationConfig cfg;
    const LpsMatrices   L = assemble_lps_matrices(v, p, cfg);
    const auto          lin = interpolate(v, VectorFunction([](const Point &x) { return Vec2{x.x - 2 * x.y, 3 * x.y}; }));
    CHECK(std::abs(lin.dot(L.S_h * lin)) < 1e-14);
    StabilizationConfig twice = cfg;
    twice.C_v *= 2.0;
    CHECK(max_relative_change(assemble_lps_matrices(v, p, twice).S_h, 2.0 * L.S_h) < 1e-14);

    // s_pres(q, q) = ||sigma*(grad q)||^2_{tau_p}
    const LpsProjector P = assemble_lps_fluctuation(p);
    const SparseMatrix W = dg_weighted_mass(*mesh, cfg.C_p);
    std::mt19937_64    rng(8);
    for (int k = 0; k < 5; ++k)
      {
        const auto q = test::random_vector(rng, p.n_dofs());
        const auto f = P.fluctuation * q;
        CHECK(q.dot(L.s_pres * q) == doctest::Approx(f.dot(W * f)).epsilon(1e-12));
      }
    CHECK_THROWS_AS(assemble_lps_fluctuation(FESpace(mesh, 1, 1)), ValidationError);
  }

  TEST_CASE("symmetric operators are symmetric and PSD")
  {
    auto                mesh = test::square(2);
    const FESpace       v(mesh, 2, 2), p(mesh, 2, 1);
    StabilizationConfig cfg;
    const LpsMatrices   L = assemble_lps_matrices(v, p, cfg);
    const std::vector<SparseMatrix> ops{assemble_mass(v), assemble_stiffness(v), assemble_grad_div(v, 1.0), L.S_h, L.s_pres};
    for (const auto &m : ops)
      {
        CHECK(test::relative_asymmetry(m) < 1e-13);
        CHECK(min_eigenvalue(m) >= -1e-10 * Eigen::MatrixXd(m).norm());
      }
  }

  TEST_CASE("one more quadrature degree changes nothing")
  {
    auto                    mesh = test::square(3);
    const FESpace           v(mesh, 2, 2), q(mesh, 1, 1);
    const QuadratureOptions more{1};
    CHECK(max_relative_change(assemble_mass(v), assemble_mass(v, more)) < 1e-12);
    CHECK(max_relative_change(assemble_stiffness(v), assemble_stiffness(v, more)) < 1e-12);
    CHECK(max_relative_change(assemble_divergence(v, q), assemble_divergence(v, q, more)) < 1e-12);
    CHECK(max_relative_change(assemble_grad_div(v, 1.0), assemble_grad_div(v, 1.0, more)) < 1e-12);
    std::mt19937_64 rng(4);
    const auto      w = test::random_vector(rng, v.n_dofs());
    CHECK(max_relative_change(assemble_convection(v, w), assemble_convection(v, w, more)) < 1e-12);
  }

  TEST_CASE("Dirichlet elimination keeps symmetry")
  {
    auto               mesh = test::square(2);
    const FESpace      v(mesh, 2, 2, all_sides);
    SparseMatrix       K = assemble_stiffness(v) + assemble_mass(v);
    Eigen::VectorXd    b = Eigen::VectorXd::Ones(v.n_dofs());
    DirichletData      d;
    d.dofs = v.constrained_dofs();
    d.values.assign(d.dofs.size(), 0.25);
    apply_dirichlet(K, b, d);
    CHECK(test::relative_asymmetry(K) < 1e-15);
    Eigen::SimplicialLDLT<SparseMatrix> solver(K);
    const Eigen::VectorXd x = solver.solve(b);
    for (int g : d.dofs)
      CHECK(x[g] == doctest::Approx(0.25).epsilon(1e-14));
  }

  TEST_CASE("matrix market round trip")
  {
    const FESpace     v(test::square(2), 2, 1);
    const auto        A = assemble_stiffness(v);
    std::stringstream ss;
    write_matrix_market(A, ss);
    CHECK((read_matrix_market(ss) - A).norm() == 0.0);
  }
}
