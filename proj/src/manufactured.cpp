#include "podrom/manufactured.hpp"

#include "podrom/errors.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace podrom
{

namespace
{

constexpr double pi = std::numbers::pi;

// Second-order Taylor jet in (x, y, t).
struct Jet
{
  double                               v = 0.0;
  std::array<double, 3>                d{};
  std::array<std::array<double, 3>, 3> h{};

  Jet() = default;
  Jet(double c) : v(c) {}
  static Jet variable(double value, int k)
  {
    Jet j(value);
    j.d[k] = 1.0;
    return j;
  }
};

Jet operator+(Jet a, const Jet &b)
{
  a.v += b.v;
  for (int i = 0; i < 3; ++i)
    {
      a.d[i] += b.d[i];
      for (int k = 0; k < 3; ++k)
        a.h[i][k] += b.h[i][k];
    }
  return a;
}

Jet operator*(double s, Jet a)
{
  a.v *= s;
  for (int i = 0; i < 3; ++i)
    {
      a.d[i] *= s;
      for (int k = 0; k < 3; ++k)
        a.h[i][k] *= s;
    }
  return a;
}

Jet operator-(const Jet &a, const Jet &b) { return a + (-1.0) * b; }
Jet operator-(const Jet &a) { return (-1.0) * a; }

Jet operator*(const Jet &a, const Jet &b)
{
  Jet r(a.v * b.v);
  for (int i = 0; i < 3; ++i)
    {
      r.d[i] = a.d[i] * b.v + a.v * b.d[i];
      for (int k = 0; k < 3; ++k)
        r.h[i][k] = a.h[i][k] * b.v + a.v * b.h[i][k] + a.d[i] * b.d[k] + a.d[k] * b.d[i];
    }
  return r;
}

// f(a) for a scalar function with derivatives f0, f1, f2 at a.v.
Jet chain(const Jet &a, double f0, double f1, double f2)
{
  Jet r(f0);
  for (int i = 0; i < 3; ++i)
    {
      r.d[i] = f1 * a.d[i];
      for (int k = 0; k < 3; ++k)
        r.h[i][k] = f1 * a.h[i][k] + f2 * a.d[i] * a.d[k];
    }
  return r;
}

Jet sin(const Jet &a) { return chain(a, std::sin(a.v), std::cos(a.v), -std::sin(a.v)); }
Jet cos(const Jet &a) { return chain(a, std::cos(a.v), -std::sin(a.v), -std::cos(a.v)); }
Jet exp(const Jet &a)
{
  const double e = std::exp(a.v);
  return chain(a, e, e, e);
}

using std::cos;
using std::exp;
using std::sin;

// Momentum and continuity residual of the templated fields at (p, t).
template <typename U, typename P, typename F>
double sampled_residual(const U &u, const P &pres, const F &f, double nu, const Point &x, double t)
{
  const Jet                 X = Jet::variable(x.x, 0), Y = Jet::variable(x.y, 1), T = Jet::variable(t, 2);
  const std::array<Jet, 2>  uj = u(X, Y, T);
  const Jet                 pj = pres(X, Y, T);
  const Vec2                fv = f(x, t);
  double                    worst = std::abs(uj[0].d[0] + uj[1].d[1]);
  for (int c = 0; c < 2; ++c)
    {
      const double conv = uj[0].v * uj[c].d[0] + uj[1].v * uj[c].d[1];
      const double lap = uj[c].h[0][0] + uj[c].h[1][1];
      const double res = uj[c].d[2] + conv - nu * lap + pj.d[c] - fv[c];
      worst = std::max(worst, std::abs(res));
    }
  return worst;
}

template <typename U, typename P>
ManufacturedSolution finish(ManufacturedSolution s, const U &u, const P &pres, double t_max)
{
  std::mt19937_64                        rng(20240917);
  std::uniform_real_distribution<double> ux(s.domain.x0, s.domain.x1), uy(s.domain.y0, s.domain.y1), ut(0.0, t_max);
  double                                 worst = 0.0;
  for (int k = 0; k < 64; ++k)
    worst = std::max(worst, sampled_residual(u, pres, s.forcing, s.nu, {ux(rng), uy(rng)}, ut(rng)));
  s.max_residual = worst;
  if (!(worst <= 1e-10))
    throw ValidationError("manufactured solution '" + s.name + "': residual " + std::to_string(worst) + " exceeds 1e-10");
  return s;
}

// Polynomial in one variable, coefficients by ascending power.
struct Poly
{
  std::vector<double> c;

  template <typename T> T operator()(const T &s) const
  {
    T r(0.0);
    for (std::size_t k = c.size(); k-- > 0;)
      r = r * s + T(c[k]);
    return r;
  }
  Poly derivative() const
  {
    Poly p;
    for (std::size_t k = 1; k < c.size(); ++k)
      p.c.push_back(static_cast<double>(k) * c[k]);
    if (p.c.empty())
      p.c.push_back(0.0);
    return p;
  }
};

// s^(2+i) (1-s)^2
Poly boundary_bubble(int i)
{
  Poly p;
  p.c.assign(static_cast<std::size_t>(i) + 5, 0.0);
  p.c[i + 2] = 1.0;
  p.c[i + 3] = -2.0;
  p.c[i + 4] = 1.0;
  return p;
}

struct StreamMode
{
  std::array<Poly, 4> X; // value and three derivatives
  std::array<Poly, 4> Y;
  double              omega = 0.0;
  double              phase = 0.0;
};

StreamMode make_mode(int ix, int iy, double omega, double phase)
{
  StreamMode m;
  m.X[0] = boundary_bubble(ix);
  m.Y[0] = boundary_bubble(iy);
  for (int k = 1; k < 4; ++k)
    {
      m.X[k] = m.X[k - 1].derivative();
      m.Y[k] = m.Y[k - 1].derivative();
    }
  m.omega = omega;
  m.phase = phase;
  return m;
}

} // namespace

FlowProblem ManufacturedSolution::problem() const
{
  FlowProblem p;
  p.dirichlet_tags = {BoundaryTag::inlet, BoundaryTag::outlet, BoundaryTag::wall};
  p.boundary_velocity = velocity;
  p.forcing = forcing;
  p.initial_velocity = velocity_at(0.0);
  return p;
}

VectorFunction ManufacturedSolution::velocity_at(double t) const
{
  return [u = velocity, t](const Point &x) { return u(x, t); };
}

ScalarFunction ManufacturedSolution::pressure_at(double t) const
{
  return [p = pressure, t](const Point &x) { return p(x, t); };
}

ManufacturedSolution taylor_green(double nu)
{
  if (!(nu > 0.0))
    throw ValidationError("taylor_green: nu must be positive");
  auto u = [nu](const auto &x, const auto &y, const auto &t) {
    using T = std::decay_t<decltype(x)>;
    const T e = exp(T(-2.0 * pi * pi * nu) * t);
    return std::array<T, 2>{-(cos(T(pi) * x) * sin(T(pi) * y) * e), sin(T(pi) * x) * cos(T(pi) * y) * e};
  };
  auto p = [nu](const auto &x, const auto &y, const auto &t) {
    using T = std::decay_t<decltype(x)>;
    const T e = exp(T(-4.0 * pi * pi * nu) * t);
    return T(-0.25) * (cos(T(2.0 * pi) * x) + cos(T(2.0 * pi) * y)) * e;
  };

  ManufacturedSolution s;
  s.name = "taylor_green";
  s.nu = nu;
  s.domain = {0.0, 0.0, 1.0, 1.0};
  s.velocity = [u](const Point &x, double t) {
    const auto v = u(x.x, x.y, t);
    return Vec2{v[0], v[1]};
  };
  s.pressure = [p](const Point &x, double t) { return p(x.x, x.y, t); };
  s.forcing = [](const Point &, double) { return Vec2{0.0, 0.0}; };
  return finish(std::move(s), u, p, 1.0);
}

ManufacturedSolution stokes_poly(double nu, const StokesPolyOptions &opt)
{
  if (!(nu > 0.0))
    throw ValidationError("stokes_poly: nu must be positive");
  if (opt.omega.empty())
    throw ValidationError("stokes_poly: at least one velocity mode is required");
  static constexpr std::array<std::array<int, 2>, 6> exponents{{{0, 0}, {1, 0}, {0, 1}, {1, 1}, {2, 0}, {0, 2}}};
  if (opt.omega.size() > exponents.size())
    throw ValidationError("stokes_poly: at most 6 velocity modes");

  std::vector<StreamMode> modes;
  for (std::size_t k = 0; k < opt.omega.size(); ++k)
    modes.push_back(make_mode(exponents[k][0], exponents[k][1], opt.omega[k], 0.0));
  // Stream-function amplitude is scaled so |u| = O(1).
  constexpr double amp = 30.0;
  const double     pw = opt.pressure_omega;

  // u = curl(psi) = (psi_y, -psi_x) with psi = sum a_k X_k(x) Y_k(y)
  auto u = [modes, amp](const auto &x, const auto &y, const auto &t) {
    using T = std::decay_t<decltype(x)>;
    std::array<T, 2> r{T(0.0), T(0.0)};
    for (const auto &m : modes)
      {
        const T a = T(amp) * sin(T(m.omega) * t + T(m.phase));
        r[0] = r[0] + a * m.X[0](x) * m.Y[1](y);
        r[1] = r[1] - a * m.X[1](x) * m.Y[0](y);
      }
    return r;
  };
  // (x - 1/2)(y - 1/2) and cos(pi x) cos(pi y) integrate to zero on the square.
  auto p = [pw](const auto &x, const auto &y, const auto &t) {
    using T = std::decay_t<decltype(x)>;
    return sin(T(pw) * t) * (x - T(0.5)) * (y - T(0.5)) + cos(T(pw) * t) * cos(T(pi) * x) * cos(T(pi) * y);
  };

  ManufacturedSolution s;
  s.name = "stokes_poly";
  s.nu = nu;
  s.domain = {0.0, 0.0, 1.0, 1.0};
  s.velocity = [u](const Point &x, double t) {
    const auto v = u(x.x, x.y, t);
    return Vec2{v[0], v[1]};
  };
  s.pressure = [p](const Point &x, double t) { return p(x.x, x.y, t); };
  s.forcing = [modes, nu, pw, amp](const Point &pt, double t) {
    const double x = pt.x, y = pt.y;
    Vec2         uv{0.0, 0.0}, ut{0.0, 0.0}, lap{0.0, 0.0};
    Mat2         g{};
    for (const auto &m : modes)
      {
        const double a = amp * std::sin(m.omega * t + m.phase);
        const double da = amp * m.omega * std::cos(m.omega * t + m.phase);
        const double X0 = m.X[0](x), X1 = m.X[1](x), X2 = m.X[2](x), X3 = m.X[3](x);
        const double Y0 = m.Y[0](y), Y1 = m.Y[1](y), Y2 = m.Y[2](y), Y3 = m.Y[3](y);
        uv[0] += a * X0 * Y1;
        uv[1] -= a * X1 * Y0;
        ut[0] += da * X0 * Y1;
        ut[1] -= da * X1 * Y0;
        g[0][0] += a * X1 * Y1;
        g[0][1] += a * X0 * Y2;
        g[1][0] -= a * X2 * Y0;
        g[1][1] -= a * X1 * Y1;
        lap[0] += a * (X2 * Y1 + X0 * Y3);
        lap[1] -= a * (X3 * Y0 + X1 * Y2);
      }
    const double gx = std::sin(pw * t) * (y - 0.5) - pi * std::cos(pw * t) * std::sin(pi * x) * std::cos(pi * y);
    const double gy = std::sin(pw * t) * (x - 0.5) - pi * std::cos(pw * t) * std::cos(pi * x) * std::sin(pi * y);
    Vec2 f;
    for (int c = 0; c < 2; ++c)
      f[c] = ut[c] + uv[0] * g[c][0] + uv[1] * g[c][1] - nu * lap[c] + (c == 0 ? gx : gy);
    return f;
  };
  return finish(std::move(s), u, p, 1.0);
}

ManufacturedSolution manufactured_by_name(const std::string &name, double nu)
{
  if (name == "taylor_green")
    return taylor_green(nu);
  if (name == "stokes_poly")
    return stokes_poly(nu);
  throw ValidationError("unknown manufactured solution '" + name + "' (expected taylor_green or stokes_poly)");
}

} // namespace podrom
