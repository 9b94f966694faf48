#include "torsionlab/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <fmt/core.h>

#include "torsionlab/csv.hpp"
#include "torsionlab/error.hpp"

namespace tlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using EdgeKey = std::pair<int, int>;

EdgeKey edge_key(int i, int j) { return {std::min(i, j), std::max(i, j)}; }

constexpr std::array<std::array<int, 2>, 3> kLocalEdges = {{{0, 1}, {1, 2}, {2, 0}}};

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double wrap_angle(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  return t;
}

// Counter-clockwise parameter interval of a boundary edge running a -> b.
std::pair<double, double> unwrapped(double theta_a, double theta_b) {
  if (theta_b <= theta_a) theta_b += kTwoPi;
  return {theta_a, theta_b};
}

std::map<EdgeKey, int> count_edges(const std::vector<std::array<int, 3>>& corners) {
  std::map<EdgeKey, int> counts;
  for (const auto& t : corners) {
    for (const auto& e : kLocalEdges) ++counts[edge_key(t[e[0]], t[e[1]])];
  }
  return counts;
}

// Hexagonal ring template on the unit disc: ring i carries 6 i vertices at
// radius i / rings; consecutive rings are stitched by walking both rings in
// angle order.
TriMesh::Template polar_template(int rings) {
  TriMesh::Template t;
  std::vector<int> ring_start;
  t.vertices.emplace_back(0.0, 0.0);
  t.vertex_theta.push_back(kNaN);
  ring_start.push_back(0);
  for (int i = 1; i <= rings; ++i) {
    ring_start.push_back(static_cast<int>(t.vertices.size()));
    const int count = 6 * i;
    const double radius = static_cast<double>(i) / rings;
    for (int j = 0; j < count; ++j) {
      const double theta = kTwoPi * j / count;
      t.vertices.emplace_back(radius * std::cos(theta), radius * std::sin(theta));
      t.vertex_theta.push_back(i == rings ? theta : kNaN);
    }
  }
  for (int j = 0; j < 6; ++j) t.corners.push_back({0, 1 + j, 1 + (j + 1) % 6});
  for (int i = 2; i <= rings; ++i) {
    const int ni = 6 * (i - 1);
    const int no = 6 * i;
    const int inner = ring_start[i - 1];
    const int outer = ring_start[i];
    int a = 0;
    int b = 0;
    while (a < ni || b < no) {
      // Compare next angles 2 pi (b+1)/no and 2 pi (a+1)/ni exactly.
      const bool advance_outer =
          b < no && (a == ni || static_cast<long>(b + 1) * ni <= static_cast<long>(a + 1) * no);
      if (advance_outer) {
        t.corners.push_back({inner + a % ni, outer + b, outer + (b + 1) % no});
        ++b;
      } else {
        t.corners.push_back({inner + a, outer + b % no, inner + (a + 1) % ni});
        ++a;
      }
    }
  }
  return t;
}

TriMesh::Template split_template(const TriMesh::Template& in) {
  TriMesh::Template out;
  out.vertices = in.vertices;
  out.vertex_theta = in.vertex_theta;
  const std::map<EdgeKey, int> counts = count_edges(in.corners);
  std::map<EdgeKey, int> mids;

  auto midpoint = [&](int i, int j) {
    const EdgeKey key = edge_key(i, j);
    if (auto it = mids.find(key); it != mids.end()) return it->second;
    const int id = static_cast<int>(out.vertices.size());
    const bool on_boundary = counts.at(key) == 1;
    if (on_boundary) {
      // (i, j) is counter-clockwise along the boundary inside its triangle.
      const auto [ta, tb] = unwrapped(in.vertex_theta[i], in.vertex_theta[j]);
      const double tm = wrap_angle(0.5 * (ta + tb));
      out.vertices.emplace_back(std::cos(tm), std::sin(tm));
      out.vertex_theta.push_back(tm);
    } else {
      out.vertices.push_back(0.5 * (in.vertices[i] + in.vertices[j]));
      out.vertex_theta.push_back(kNaN);
    }
    mids.emplace(key, id);
    return id;
  };

  out.corners.reserve(4 * in.corners.size());
  for (const auto& t : in.corners) {
    const int m01 = midpoint(t[0], t[1]);
    const int m12 = midpoint(t[1], t[2]);
    const int m20 = midpoint(t[2], t[0]);
    out.corners.push_back({t[0], m01, m20});
    out.corners.push_back({m01, t[1], m12});
    out.corners.push_back({m20, m12, t[2]});
    out.corners.push_back({m01, m12, m20});
  }
  return out;
}

// Polar angle for template angle t. On domains with an ellipse part t is
// the parametric angle of that ellipse, which makes the map affine there
// instead of sheared.
double polar_angle(const StarDomain& domain, double t) {
  if (std::isnan(t) || !domain.ellipse_part()) return t;
  const EllipsePart& e = *domain.ellipse_part();
  const double s = t - e.angle;
  return wrap_angle(e.angle + std::atan2(e.b * std::sin(s), e.a * std::cos(s)));
}

Vec2 map_vertex(const StarDomain& domain, const Vec2& ref, double theta) {
  if (!std::isnan(theta)) return domain.point(theta);
  const double rho = ref.norm();
  if (rho == 0.0) return domain.center();
  const double phi = polar_angle(domain, std::atan2(ref.y(), ref.x()));
  return domain.center() + rho * domain.radius(phi) * Vec2(std::cos(phi), std::sin(phi));
}

}  // namespace

TriMesh TriMesh::from_template(const StarDomain& domain, int level, const MeshOptions& options,
                               Template tmpl) {
  TriMesh mesh;
  mesh.domain_ = domain;
  mesh.level_ = level;
  mesh.options_ = options;

  const std::size_t nv = tmpl.vertices.size();
  mesh.nodes_.reserve(4 * nv);
  mesh.boundary_theta_.reserve(4 * nv);
  for (std::size_t v = 0; v < nv; ++v) {
    const double theta = polar_angle(domain, tmpl.vertex_theta[v]);
    mesh.nodes_.push_back(map_vertex(domain, tmpl.vertices[v], theta));
    mesh.boundary_theta_.push_back(theta);
  }

  const std::map<EdgeKey, int> counts = count_edges(tmpl.corners);
  std::map<EdgeKey, int> mids;
  mesh.triangles_.reserve(tmpl.corners.size());
  double h = 0.0;
  for (std::size_t ti = 0; ti < tmpl.corners.size(); ++ti) {
    const auto& c = tmpl.corners[ti];
    const Vec2& p0 = mesh.nodes_[c[0]];
    const Vec2& p1 = mesh.nodes_[c[1]];
    const Vec2& p2 = mesh.nodes_[c[2]];
    if (!(cross(p1 - p0, p2 - p0) > 0.0)) {
      throw MeshError(fmt::format("degenerate or inverted element {} at level {}", ti, level));
    }
    h = std::max({h, (p1 - p0).norm(), (p2 - p1).norm(), (p0 - p2).norm()});

    P2Triangle tri;
    for (int k = 0; k < 3; ++k) tri.nodes[k] = c[k];
    for (int e = 0; e < 3; ++e) {
      const int i = c[kLocalEdges[e][0]];
      const int j = c[kLocalEdges[e][1]];
      const EdgeKey key = edge_key(i, j);
      auto it = mids.find(key);
      if (it == mids.end()) {
        const int id = static_cast<int>(mesh.nodes_.size());
        if (counts.at(key) == 1) {
          const auto [ta, tb] = unwrapped(mesh.boundary_theta_[i], mesh.boundary_theta_[j]);
          const double tm = 0.5 * (ta + tb);
          mesh.nodes_.push_back(domain.point(tm));
          mesh.boundary_theta_.push_back(wrap_angle(tm));
          mesh.boundary_edges_.push_back({i, id, j, ta, tb, static_cast<int>(ti)});
        } else {
          mesh.nodes_.push_back(0.5 * (mesh.nodes_[i] + mesh.nodes_[j]));
          mesh.boundary_theta_.push_back(kNaN);
        }
        it = mids.emplace(key, id).first;
      }
      tri.nodes[3 + e] = it->second;
    }
    mesh.triangles_.push_back(tri);
  }
  mesh.h_ = h;

  for (int n = 0; n < mesh.node_count(); ++n) {
    if (mesh.is_boundary(n)) mesh.boundary_nodes_.push_back(n);
  }
  std::sort(mesh.boundary_nodes_.begin(), mesh.boundary_nodes_.end(), [&](int a, int b) {
    return mesh.boundary_theta_[a] < mesh.boundary_theta_[b];
  });
  std::sort(mesh.boundary_edges_.begin(), mesh.boundary_edges_.end(),
            [](const BoundaryEdge& a, const BoundaryEdge& b) { return a.theta_a < b.theta_a; });
  mesh.template_ = std::move(tmpl);
  return mesh;
}

TriMesh build_mesh(const StarDomain& domain, int level, const MeshOptions& options) {
  if (level < 0) throw MeshError(fmt::format("mesh level must be >= 0, got {}", level));
  if (level > options.max_level) {
    throw ResourceError(
        fmt::format("mesh level {} exceeds the cap of {}", level, options.max_level));
  }
  if (options.base_rings < 1) throw MeshError("base_rings must be >= 1");
  domain.validate();
  TriMesh::Template tmpl = polar_template(options.base_rings);
  for (int l = 0; l < level; ++l) tmpl = split_template(tmpl);
  return TriMesh::from_template(domain, level, options, std::move(tmpl));
}

TriMesh refine(const TriMesh& mesh) {
  if (mesh.level() + 1 > mesh.options().max_level) {
    throw ResourceError(fmt::format("refining level {} would exceed the cap of {}", mesh.level(),
                                    mesh.options().max_level));
  }
  return TriMesh::from_template(mesh.domain(), mesh.level() + 1, mesh.options(),
                                split_template(mesh.reference()));
}

MeshQuality mesh_quality(const TriMesh& mesh) {
  MeshQuality q;
  q.min_angle_deg = 180.0;
  q.min_signed_area = std::numeric_limits<double>::infinity();
  std::map<EdgeKey, int> counts;
  for (const P2Triangle& t : mesh.triangles()) {
    std::array<Vec2, 3> p;
    for (int k = 0; k < 3; ++k) p[k] = mesh.nodes()[t.nodes[k]];
    q.min_signed_area = std::min(q.min_signed_area, 0.5 * cross(p[1] - p[0], p[2] - p[0]));
    for (int k = 0; k < 3; ++k) {
      const Vec2 u = p[(k + 1) % 3] - p[k];
      const Vec2 v = p[(k + 2) % 3] - p[k];
      const double angle = std::atan2(std::abs(cross(u, v)), u.dot(v)) * 180.0 / kPi;
      q.min_angle_deg = std::min(q.min_angle_deg, angle);
    }
    for (const auto& e : kLocalEdges) ++counts[edge_key(t.nodes[e[0]], t.nodes[e[1]])];
  }
  for (const auto& [key, count] : counts) {
    const bool boundary = mesh.is_boundary(key.first) && mesh.is_boundary(key.second) && count == 1;
    if (count == 2) {
      ++q.interior_edges_shared_twice;
    } else if (!boundary) {
      ++q.bad_edges;
    }
  }
  for (int n : mesh.boundary_nodes()) {
    const double theta = mesh.boundary_theta(n);
    const double err = std::abs((mesh.nodes()[n] - mesh.domain().center()).norm() -
                                mesh.domain().radius(theta));
    q.max_boundary_error = std::max(q.max_boundary_error, err);
  }
  return q;
}

void write_mesh_csv(const TriMesh& mesh, const std::filesystem::path& vertices_csv,
                    const std::filesystem::path& connectivity_csv) {
  std::string v = "node,x,y,boundary_theta\n";
  for (int n = 0; n < mesh.node_count(); ++n) {
    const Vec2& p = mesh.nodes()[n];
    v += fmt::format("{},{},{},{}\n", n, format_number(p.x()), format_number(p.y()),
                     mesh.is_boundary(n) ? format_number(mesh.boundary_theta(n)) : "");
  }
  write_file_atomic(vertices_csv, v);

  std::string c = "triangle,n0,n1,n2,n3,n4,n5\n";
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& n = mesh.triangles()[t].nodes;
    c += fmt::format("{},{},{},{},{},{},{}\n", t, n[0], n[1], n[2], n[3], n[4], n[5]);
  }
  write_file_atomic(connectivity_csv, c);
}

}  // namespace tlab
