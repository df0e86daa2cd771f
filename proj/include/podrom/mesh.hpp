#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace podrom
{

struct Point
{
  double x = 0.0;
  double y = 0.0;
};

enum class BoundaryTag : std::uint8_t
{
  inlet,
  outlet,
  wall,
  obstacle
};

std::string to_string(BoundaryTag tag);
BoundaryTag boundary_tag_from_string(const std::string &name);

/// Axis-aligned rectangle [x0, x1] x [y0, y1].
struct Rectangle
{
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  double area() const { return (x1 - x0) * (y1 - y0); }
};

struct BoundaryEdge
{
  int v0 = -1;
  int v1 = -1;
  BoundaryTag tag = BoundaryTag::wall;
  int edge = -1; ///< index into Mesh::edges()
};

/// Conforming triangulation of a planar polygonal domain.
///
/// Vertices of every triangle are stored counterclockwise. Local edge k of a
/// triangle joins local vertices k and (k+1)%3; this is also the ordering of
/// the P2 edge nodes. The mesh is immutable after construction and validates
/// its invariants in the constructor.
class Mesh
{
public:
  Mesh(std::vector<Point>                    vertices,
       std::vector<std::array<int, 3>>        triangles,
       const std::vector<BoundaryEdge>        &tagged_edges,
       double                                 max_quasi_uniformity = 4.0);

  const std::vector<Point>                  &vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>     &triangles() const { return triangles_; }
  const std::vector<std::array<int, 2>>     &edges() const { return edges_; }
  const std::vector<std::array<int, 3>>     &triangle_edges() const { return triangle_edges_; }
  const std::vector<BoundaryEdge>           &boundary_edges() const { return boundary_edges_; }
  const std::vector<double>                 &h_K() const { return h_K_; }

  int n_vertices() const { return static_cast<int>(vertices_.size()); }
  int n_triangles() const { return static_cast<int>(triangles_.size()); }
  int n_edges() const { return static_cast<int>(edges_.size()); }

  double h() const { return h_; }
  double area(int triangle) const { return areas_[triangle]; }
  double total_area() const;
  bool   has_tag(BoundaryTag tag) const;

  /// Tag of edge e, empty for interior edges.
  std::optional<BoundaryTag> edge_tag(int e) const;

  /// Order-dependent 64-bit digest of the topology and the coordinates.
  std::uint64_t signature() const;

private:
  std::vector<Point>                    vertices_;
  std::vector<std::array<int, 3>>       triangles_;
  std::vector<std::array<int, 2>>       edges_;
  std::vector<std::array<int, 3>>       triangle_edges_;
  std::vector<BoundaryEdge>             boundary_edges_;
  std::vector<int>                      edge_boundary_index_;
  std::vector<double>                   h_K_;
  std::vector<double>                   areas_;
  double                                h_ = 0.0;
};

/// Structured triangulation of [0,width]x[0,height] with nx*ny cells, each
/// split by one diagonal. Diagonals point towards the nearest domain corner,
/// so no triangle has two edges on the outer boundary. Cells inside `hole`
/// are removed; the hole must be grid aligned and strictly interior.
///
/// Sides are tagged left=inlet, right=outlet, bottom/top=wall and the hole
/// boundary obstacle.
Mesh build_rect_mesh(double                   width,
                     double                   height,
                     int                      nx,
                     int                      ny,
                     std::optional<Rectangle> hole = std::nullopt);

/// Red refinement: every triangle is split into four by its edge midpoints.
Mesh refine_uniform(const Mesh &mesh);

struct MeshStats
{
  double h = 0.0;
  double min_angle = 0.0; ///< degrees
  double quasi_uniformity_ratio = 0.0;
};

MeshStats mesh_stats(const Mesh &mesh);

void write_mesh(const Mesh &mesh, std::ostream &out);
Mesh read_mesh(std::istream &in);

} // namespace podrom
