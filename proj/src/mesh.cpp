#include "podrom/mesh.hpp"

#include "podrom/digest.hpp"
#include "podrom/errors.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace podrom
{

namespace
{

std::int64_t edge_key(int a, int b, int n)
{
  if (a > b)
    std::swap(a, b);
  return static_cast<std::int64_t>(a) * n + b;
}

double distance(const Point &a, const Point &b)
{
  return std::hypot(a.x - b.x, a.y - b.y);
}

struct RawEdge
{
  int v0, v1;
};

// Edges used by exactly one triangle, oriented as in that triangle.
std::vector<RawEdge> find_boundary_edges(const std::vector<std::array<int, 3>> &triangles, int n_vertices)
{
  std::unordered_map<std::int64_t, int> count;
  for (const auto &t : triangles)
    for (int k = 0; k < 3; ++k)
      ++count[edge_key(t[k], t[(k + 1) % 3], n_vertices)];

  std::vector<RawEdge> result;
  for (const auto &t : triangles)
    for (int k = 0; k < 3; ++k)
      if (count[edge_key(t[k], t[(k + 1) % 3], n_vertices)] == 1)
        result.push_back({t[k], t[(k + 1) % 3]});
  return result;
}

} // namespace

std::string to_string(BoundaryTag tag)
{
  switch (tag)
    {
      case BoundaryTag::inlet:
        return "inlet";
      case BoundaryTag::outlet:
        return "outlet";
      case BoundaryTag::wall:
        return "wall";
      case BoundaryTag::obstacle:
        return "obstacle";
    }
  return "wall";
}

BoundaryTag boundary_tag_from_string(const std::string &name)
{
  if (name == "inlet")
    return BoundaryTag::inlet;
  if (name == "outlet")
    return BoundaryTag::outlet;
  if (name == "wall")
    return BoundaryTag::wall;
  if (name == "obstacle")
    return BoundaryTag::obstacle;
  throw ValidationError("unknown boundary tag '" + name + "'");
}

Mesh::Mesh(std::vector<Point>               vertices,
           std::vector<std::array<int, 3>>  triangles,
           const std::vector<BoundaryEdge> &tagged_edges,
           double                           max_quasi_uniformity)
  : vertices_(std::move(vertices))
  , triangles_(std::move(triangles))
{
  const int nv = n_vertices();
  if (triangles_.empty())
    throw ValidationError("mesh has no triangles");

  areas_.resize(triangles_.size());
  h_K_.resize(triangles_.size());
  triangle_edges_.resize(triangles_.size());

  std::unordered_map<std::int64_t, int> edge_index;
  std::vector<int>                      edge_uses;

  for (std::size_t t = 0; t < triangles_.size(); ++t)
    {
      const auto &tri = triangles_[t];
      for (int v : tri)
        if (v < 0 || v >= nv)
          throw ValidationError("triangle " + std::to_string(t) + " references a missing vertex");

      const Point &a = vertices_[tri[0]];
      const Point &b = vertices_[tri[1]];
      const Point &c = vertices_[tri[2]];
      const double twice = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
      if (!(twice > 0.0))
        throw ValidationError("triangle " + std::to_string(t) + " has non-positive signed area");
      areas_[t] = 0.5 * twice;
      h_K_[t] = std::max({distance(a, b), distance(b, c), distance(c, a)});
      h_ = std::max(h_, h_K_[t]);

      for (int k = 0; k < 3; ++k)
        {
          const int  v0 = tri[k];
          const int  v1 = tri[(k + 1) % 3];
          const auto key = edge_key(v0, v1, nv);
          auto       it = edge_index.find(key);
          if (it == edge_index.end())
            {
              it = edge_index.emplace(key, static_cast<int>(edges_.size())).first;
              edges_.push_back({std::min(v0, v1), std::max(v0, v1)});
              edge_uses.push_back(0);
            }
          triangle_edges_[t][k] = it->second;
          if (++edge_uses[it->second] > 2)
            throw ValidationError("edge (" + std::to_string(v0) + "," + std::to_string(v1) +
                                  ") is shared by more than two triangles");
        }
    }

  edge_boundary_index_.assign(edges_.size(), -1);
  for (const auto &be : tagged_edges)
    {
      auto it = edge_index.find(edge_key(be.v0, be.v1, nv));
      if (it == edge_index.end() || edge_uses[it->second] != 1)
        throw ValidationError("tagged edge (" + std::to_string(be.v0) + "," + std::to_string(be.v1) +
                              ") is not a boundary edge");
      if (edge_boundary_index_[it->second] >= 0)
        throw ValidationError("boundary edge tagged twice");
      BoundaryEdge stored = be;
      stored.edge = it->second;
      edge_boundary_index_[it->second] = static_cast<int>(boundary_edges_.size());
      boundary_edges_.push_back(stored);
    }
  for (std::size_t e = 0; e < edges_.size(); ++e)
    if (edge_uses[e] == 1 && edge_boundary_index_[e] < 0)
      throw ValidationError("boundary edge (" + std::to_string(edges_[e][0]) + "," +
                            std::to_string(edges_[e][1]) + ") carries no tag");

  const double h_min = *std::min_element(h_K_.begin(), h_K_.end());
  if (h_ / h_min > max_quasi_uniformity)
    throw ValidationError("mesh quasi-uniformity ratio " + std::to_string(h_ / h_min) +
                          " exceeds the bound " + std::to_string(max_quasi_uniformity));
}

double Mesh::total_area() const
{
  double s = 0.0;
  for (double a : areas_)
    s += a;
  return s;
}

bool Mesh::has_tag(BoundaryTag tag) const
{
  return std::any_of(boundary_edges_.begin(), boundary_edges_.end(),
                     [tag](const BoundaryEdge &e) { return e.tag == tag; });
}

std::optional<BoundaryTag> Mesh::edge_tag(int e) const
{
  const int idx = edge_boundary_index_[e];
  if (idx < 0)
    return std::nullopt;
  return boundary_edges_[idx].tag;
}

std::uint64_t Mesh::signature() const
{
  Digest d;
  d.add(n_vertices()).add(n_triangles());
  for (const auto &p : vertices_)
    d.add(p.x).add(p.y);
  for (const auto &t : triangles_)
    for (int v : t)
      d.add(v);
  return d.value();
}

namespace
{

Mesh tag_by_geometry(std::vector<Point>              vertices,
                     std::vector<std::array<int, 3>> triangles,
                     double                          width,
                     double                          height)
{
  const double tol = 1e-10 * std::max(width, height);
  const auto   boundary = find_boundary_edges(triangles, static_cast<int>(vertices.size()));

  std::vector<BoundaryEdge> tagged;
  tagged.reserve(boundary.size());
  for (const auto &e : boundary)
    {
      const Point &a = vertices[e.v0];
      const Point &b = vertices[e.v1];
      BoundaryTag  tag = BoundaryTag::obstacle;
      if (std::abs(a.x) < tol && std::abs(b.x) < tol)
        tag = BoundaryTag::inlet;
      else if (std::abs(a.x - width) < tol && std::abs(b.x - width) < tol)
        tag = BoundaryTag::outlet;
      else if ((std::abs(a.y) < tol && std::abs(b.y) < tol) ||
               (std::abs(a.y - height) < tol && std::abs(b.y - height) < tol))
        tag = BoundaryTag::wall;
      tagged.push_back({e.v0, e.v1, tag, -1});
    }
  return Mesh(std::move(vertices), std::move(triangles), tagged);
}

int aligned_index(double coordinate, double spacing, const char *what)
{
  const double q = coordinate / spacing;
  const double r = std::round(q);
  if (std::abs(q - r) > 1e-8)
    {
      std::ostringstream msg;
      msg << "hole " << what << " = " << coordinate << " is not aligned to the grid spacing " << spacing
          << " (offset " << (q - r) << " cells)";
      throw ValidationError(msg.str());
    }
  return static_cast<int>(r);
}

} // namespace

Mesh build_rect_mesh(double width, double height, int nx, int ny, std::optional<Rectangle> hole)
{
  if (nx < 1 || ny < 1)
    throw ValidationError("build_rect_mesh requires nx, ny >= 1");
  if (!(width > 0.0) || !(height > 0.0))
    throw ValidationError("build_rect_mesh requires positive width and height");

  const double dx = width / nx;
  const double dy = height / ny;

  int i0 = 0, i1 = 0, j0 = 0, j1 = 0;
  if (hole)
    {
      if (!(hole->x0 > 0.0 && hole->x1 < width && hole->y0 > 0.0 && hole->y1 < height &&
            hole->x0 < hole->x1 && hole->y0 < hole->y1))
        throw ValidationError("hole must lie strictly inside the rectangle");
      i0 = aligned_index(hole->x0, dx, "x0");
      i1 = aligned_index(hole->x1, dx, "x1");
      j0 = aligned_index(hole->y0, dy, "y0");
      j1 = aligned_index(hole->y1, dy, "y1");
      if (i0 < 1 || i1 > nx - 1 || j0 < 1 || j1 > ny - 1 || i0 >= i1 || j0 >= j1)
        throw ValidationError("hole must be separated from the outer boundary by at least one cell");
    }
  const auto in_hole_cell = [&](int i, int j) { return hole && i >= i0 && i < i1 && j >= j0 && j < j1; };
  const auto in_hole_interior = [&](int i, int j) { return hole && i > i0 && i < i1 && j > j0 && j < j1; };

  std::vector<int>   index((nx + 1) * (ny + 1), -1);
  std::vector<Point> vertices;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      if (!in_hole_interior(i, j))
        {
          index[j * (nx + 1) + i] = static_cast<int>(vertices.size());
          // x = i*dx would differ from width in the last bit for some nx
          const double x = (i == nx) ? width : i * dx;
          const double y = (j == ny) ? height : j * dy;
          vertices.push_back({x, y});
        }

  std::vector<std::array<int, 3>> triangles;
  triangles.reserve(2 * nx * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      {
        if (in_hole_cell(i, j))
          continue;
        const int    v00 = index[j * (nx + 1) + i];
        const int    v10 = index[j * (nx + 1) + i + 1];
        const int    v01 = index[(j + 1) * (nx + 1) + i];
        const int    v11 = index[(j + 1) * (nx + 1) + i + 1];
        const double cx = (i + 0.5) * dx - 0.5 * width;
        const double cy = (j + 0.5) * dy - 0.5 * height;
        if (cx * cy >= 0.0)
          {
            triangles.push_back({v00, v10, v11});
            triangles.push_back({v00, v11, v01});
          }
        else
          {
            triangles.push_back({v00, v10, v01});
            triangles.push_back({v10, v11, v01});
          }
      }

  return tag_by_geometry(std::move(vertices), std::move(triangles), width, height);
}

Mesh refine_uniform(const Mesh &mesh)
{
  std::vector<Point> vertices = mesh.vertices();
  const int          nv = mesh.n_vertices();
  for (const auto &e : mesh.edges())
    {
      const Point &a = mesh.vertices()[e[0]];
      const Point &b = mesh.vertices()[e[1]];
      vertices.push_back({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
    }

  std::vector<std::array<int, 3>> triangles;
  triangles.reserve(4 * mesh.n_triangles());
  for (int t = 0; t < mesh.n_triangles(); ++t)
    {
      const auto &v = mesh.triangles()[t];
      const auto &e = mesh.triangle_edges()[t];
      const int   m01 = nv + e[0];
      const int   m12 = nv + e[1];
      const int   m20 = nv + e[2];
      triangles.push_back({v[0], m01, m20});
      triangles.push_back({m01, v[1], m12});
      triangles.push_back({m20, m12, v[2]});
      triangles.push_back({m01, m12, m20});
    }

  std::vector<BoundaryEdge> tagged;
  for (const auto &be : mesh.boundary_edges())
    {
      const int mid = nv + be.edge;
      tagged.push_back({be.v0, mid, be.tag, -1});
      tagged.push_back({mid, be.v1, be.tag, -1});
    }
  return Mesh(std::move(vertices), std::move(triangles), tagged);
}

MeshStats mesh_stats(const Mesh &mesh)
{
  MeshStats stats;
  stats.h = mesh.h();
  double min_angle = std::numbers::pi;
  for (const auto &t : mesh.triangles())
    for (int k = 0; k < 3; ++k)
      {
        const Point &p = mesh.vertices()[t[k]];
        const Point &a = mesh.vertices()[t[(k + 1) % 3]];
        const Point &b = mesh.vertices()[t[(k + 2) % 3]];
        const double ux = a.x - p.x, uy = a.y - p.y;
        const double vx = b.x - p.x, vy = b.y - p.y;
        min_angle = std::min(min_angle, std::atan2(std::abs(ux * vy - uy * vx), ux * vx + uy * vy));
      }
  stats.min_angle = min_angle * 180.0 / std::numbers::pi;
  const auto &hk = mesh.h_K();
  stats.quasi_uniformity_ratio = mesh.h() / *std::min_element(hk.begin(), hk.end());
  return stats;
}

void write_mesh(const Mesh &mesh, std::ostream &out)
{
  const auto old_precision = out.precision(17);
  out << "podrom-mesh 1\n";
  out << mesh.n_vertices() << ' ' << mesh.n_triangles() << ' ' << mesh.boundary_edges().size() << '\n';
  for (const auto &p : mesh.vertices())
    out << p.x << ' ' << p.y << '\n';
  for (const auto &t : mesh.triangles())
    out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (const auto &e : mesh.boundary_edges())
    out << e.v0 << ' ' << e.v1 << ' ' << to_string(e.tag) << '\n';
  out.precision(old_precision);
}

Mesh read_mesh(std::istream &in)
{
  std::string magic;
  int         version = 0;
  in >> magic >> version;
  if (magic != "podrom-mesh" || version != 1)
    throw ValidationError("not a podrom mesh file");
  std::size_t nv = 0, nt = 0, nb = 0;
  in >> nv >> nt >> nb;
  if (!in)
    throw ValidationError("malformed mesh header");

  std::vector<Point> vertices(nv);
  for (auto &p : vertices)
    in >> p.x >> p.y;
  std::vector<std::array<int, 3>> triangles(nt);
  for (auto &t : triangles)
    in >> t[0] >> t[1] >> t[2];
  std::vector<BoundaryEdge> tagged(nb);
  for (auto &e : tagged)
    {
      std::string tag;
      in >> e.v0 >> e.v1 >> tag;
      e.tag = boundary_tag_from_string(tag);
    }
  if (!in)
    throw ValidationError("truncated mesh file");
  return Mesh(std::move(vertices), std::move(triangles), tagged);
}

} // namespace podrom
