#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <vector>

#include "torsionlab/geometry.hpp"

namespace tlab {

/// Six-node triangle: corners 0..2 counter-clockwise, then mid-edge nodes on
/// edges (0,1), (1,2), (2,0).
struct P2Triangle {
  std::array<int, 6> nodes{};
};

/// Boundary edge in counter-clockwise order. `theta_b` is unwrapped so that
/// theta_b > theta_a; the mid node sits at the parameter midpoint.
struct BoundaryEdge {
  int a = -1;
  int mid = -1;
  int b = -1;
  double theta_a = 0.0;
  double theta_b = 0.0;
  int triangle = -1;
};

struct MeshOptions {
  /// Rings of the level-0 polar template; level 0 has 6 * base_rings^2 triangles.
  int base_rings = 2;
  int max_level = 8;
};

/// Conforming quadratic triangulation of a StarDomain. Corner vertices come
/// first in `nodes()`, followed by one node per edge. Interior mid-edge nodes
/// are physical midpoints; boundary mid-edge nodes lie exactly on the curve.
class TriMesh {
 public:
  const StarDomain& domain() const { return domain_; }
  int level() const { return level_; }
  const MeshOptions& options() const { return options_; }

  const std::vector<Vec2>& nodes() const { return nodes_; }
  int node_count() const { return static_cast<int>(nodes_.size()); }
  int vertex_count() const { return static_cast<int>(template_.vertices.size()); }
  const std::vector<P2Triangle>& triangles() const { return triangles_; }
  int triangle_count() const { return static_cast<int>(triangles_.size()); }
  const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_edges_; }

  bool is_boundary(int node) const { return !std::isnan(boundary_theta_[node]); }
  /// Boundary parameter of a node in [0, 2 pi); NaN for interior nodes.
  double boundary_theta(int node) const { return boundary_theta_[node]; }

  /// Boundary node ids sorted by theta.
  const std::vector<int>& boundary_nodes() const { return boundary_nodes_; }

  /// Maximum element diameter (longest corner-to-corner edge).
  double h() const { return h_; }

  /// Reference template: unit-disc vertices, their boundary parameter (NaN
  /// when interior) and counter-clockwise corner triples.
  struct Template {
    std::vector<Vec2> vertices;
    std::vector<double> vertex_theta;
    std::vector<std::array<int, 3>> corners;
  };

  const Template& reference() const { return template_; }

  /// Maps a reference template onto `domain` and inserts the mid-edge nodes.
  static TriMesh from_template(const StarDomain& domain, int level, const MeshOptions& options,
                               Template tmpl);

 private:
  TriMesh() = default;

  StarDomain domain_ = StarDomain::circle(1.0);
  int level_ = 0;
  MeshOptions options_;
  Template template_;
  std::vector<Vec2> nodes_;
  std::vector<double> boundary_theta_;
  std::vector<int> boundary_nodes_;
  std::vector<P2Triangle> triangles_;
  std::vector<BoundaryEdge> boundary_edges_;
  double h_ = 0.0;
};

TriMesh build_mesh(const StarDomain& domain, int level, const MeshOptions& options = {});

/// Uniform 1-to-4 split; new boundary vertices are placed on the curve by
/// their parameter midpoint.
TriMesh refine(const TriMesh& mesh);

struct MeshQuality {
  double min_angle_deg = 0.0;
  double min_signed_area = 0.0;   // over straight corner triangles
  double max_boundary_error = 0.0;  // max | |x - c| - r(theta) | over boundary nodes
  int interior_edges_shared_twice = 0;
  int bad_edges = 0;  // edges with a count other than 1 (boundary) or 2 (interior)
};

MeshQuality mesh_quality(const TriMesh& mesh);

/// Writes `x,y` per node and `n0,...,n5` per triangle.
void write_mesh_csv(const TriMesh& mesh, const std::filesystem::path& vertices_csv,
                    const std::filesystem::path& connectivity_csv);

}  // namespace tlab
