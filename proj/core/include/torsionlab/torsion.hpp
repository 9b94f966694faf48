#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "torsionlab/geometry.hpp"
#include "torsionlab/mesh.hpp"

namespace tlab {

struct SolverOptions {
  double relative_tolerance = 1e-12;
  /// CG iteration cap is `iteration_factor * sqrt(dof)`.
  double iteration_factor = 20.0;
};

/// Exact boundary geometry at a boundary quadrature point and the recovered
/// flux there.
struct BoundaryPoint {
  BoundarySample geo;
  double flux = 0.0;
};

/// Solution fields at a domain quadrature point.
struct DomainPoint {
  Vec2 x = Vec2::Zero();
  double weight = 0.0;  // physical quadrature weight
  double u = 0.0;
  Vec2 grad = Vec2::Zero();
  Mat2 hess = Mat2::Zero();
  /// Hessian of the interpolated nodal gradient (see recovered_hessian).
  Mat2 hess_recovered = Mat2::Zero();
  int element = -1;
};

/// Discrete solution of  Lap u = N in Omega, u = 0 on Gamma  with every
/// derived field the identity checks consume. Immutable once built.
class TorsionSolution {
 public:
  const TriMesh& mesh() const { return *mesh_; }
  const StarDomain& domain() const { return mesh_->domain(); }

  /// Nodal values of u (zero on boundary nodes).
  const std::vector<double>& u() const { return u_; }
  /// Nodal gradient: boundary-integral representation with the recovered
  /// flux at interior nodes, u_nu nu at boundary nodes.
  const std::vector<Vec2>& nodal_gradient() const { return nodal_grad_; }
  /// Element hessian at the element centroid (exact on straight elements).
  const std::vector<Mat2>& element_hessian() const { return element_hess_; }

  /// Recovered outward flux, one value per mesh node (NaN off the boundary).
  const std::vector<double>& nodal_flux() const { return flux_; }
  /// u_nunu at boundary nodes (NaN elsewhere), differentiated along the
  /// inward normal from the boundary representation of grad u.
  const std::vector<double>& nodal_flux_normal_derivative() const { return flux_normal_derivative_; }
  /// Recovered flux at boundary parameter theta.
  double flux_at(double theta) const;
  /// Trigonometric coefficients of the recovered flux: c0, a1, b1, a2, b2, ...
  const std::vector<double>& flux_modes() const { return flux_modes_; }
  /// Periodic trapezoid quadrature on the exact curve with the recovered flux.
  const std::vector<BoundaryPoint>& boundary_points() const { return boundary_points_; }

  double tau() const { return tau_; }
  /// -N * integral of u; equals tau() up to solver tolerance.
  double tau_from_volume_integral() const { return tau_volume_; }

  const Vec2& z() const { return z_; }
  double a() const { return a_; }
  /// q(x) = |x - z|^2 / 2 - a.
  double q(const Vec2& x) const { return 0.5 * (x - z_).squaredNorm() - a_; }

  const std::vector<double>& nodal_p() const { return p_; }
  const std::vector<double>& nodal_h() const { return h_; }

  double area() const { return area_; }          // exact |Omega|
  double perimeter() const { return perimeter_; }  // exact |Gamma|
  double mesh_area() const { return mesh_area_; }
  double R() const { return R_; }
  double H0() const { return 1.0 / R_; }

  long cg_iterations() const { return cg_iterations_; }
  double cg_residual() const { return cg_residual_; }

  /// Field values, gradient and hessian of element `e` at reference (xi, eta).
  DomainPoint evaluate_in_element(int e, double xi, double eta) const;

  /// Hessian of the quadratic interpolant of the nodal gradient in element
  /// `e`, symmetrized. More accurate than the element hessian of u.
  Mat2 recovered_hessian(int e, double xi, double eta) const;

  /// Locates x in the mesh; empty when x is outside the discrete domain.
  std::optional<DomainPoint> evaluate(const Vec2& x) const;

  /// Visits every domain quadrature point, element by element.
  void for_each_domain_point(const std::function<void(const DomainPoint&)>& visit) const;

  /// Domain integral of f by the element quadrature.
  double integrate(const std::function<double(const DomainPoint&)>& f) const;

  /// Boundary integral of f over the exact curve.
  double integrate_boundary(const std::function<double(const BoundaryPoint&)>& f) const;

  /// Element nodes and nodal values of `field` (one value per mesh node).
  std::array<Vec2, 6> element_nodes(int e) const;
  std::array<double, 6> element_values(int e, const std::vector<double>& field) const;

 private:
  friend TorsionSolution solve_torsion(std::shared_ptr<const TriMesh>, const SolverOptions&);
  TorsionSolution() = default;

  std::shared_ptr<const TriMesh> mesh_;
  std::vector<double> u_;
  std::vector<Vec2> nodal_grad_;
  std::vector<Mat2> element_hess_;
  std::vector<double> flux_;
  std::vector<double> flux_modes_;
  std::vector<double> flux_normal_derivative_;
  std::vector<BoundaryPoint> boundary_points_;
  std::vector<double> p_;
  std::vector<double> h_;
  double tau_ = 0.0;
  double tau_volume_ = 0.0;
  Vec2 z_ = Vec2::Zero();
  double a_ = 0.0;
  double area_ = 0.0;
  double perimeter_ = 0.0;
  double mesh_area_ = 0.0;
  double R_ = 0.0;
  long cg_iterations_ = 0;
  double cg_residual_ = 0.0;
};

/// Quadratic-element Galerkin solve with Jacobi-preconditioned CG, followed
/// by flux recovery and the derived fields.
TorsionSolution solve_torsion(std::shared_ptr<const TriMesh> mesh, const SolverOptions& options = {});
TorsionSolution solve_torsion(const TriMesh& mesh, const SolverOptions& options = {});

struct FluxSample {
  int node = -1;
  double theta = 0.0;
  Vec2 x = Vec2::Zero();
  double flux = 0.0;
};

/// Recovered flux at the boundary nodes, ordered by theta. The values come
/// from the boundary mass-matrix system M g = b over a trigonometric space,
/// with b the Gauss-Green residual int (grad u . grad phi + N phi) over Omega.
std::vector<FluxSample> boundary_flux(const TorsionSolution& solution);

/// grad u . nu at the boundary nodes from the adjacent element gradients;
/// a lower-order comparison for the recovered flux.
std::vector<FluxSample> gradient_trace_flux(const TorsionSolution& solution);

/// Closed-form values for the ball of radius R in dimension N, where
/// u(x) = (|x|^2 - R^2) / 2.
struct RadialOracle {
  int dimension = 2;
  double R = 1.0;
  double ball_volume = 0.0;    // omega_N R^N
  double sphere_area = 0.0;    // N omega_N R^(N-1)
  double flux = 0.0;           // u_nu = R
  double p_value = 0.0;        // P = R^2 / 2
  double tau = 0.0;            // N |B| R^2 / (N + 2)
  double mean_curvature = 0.0; // 1 / R
  double dirichlet_energy = 0.0;  // integral of |grad u|^2

  double u(double radius) const { return 0.5 * (radius * radius - R * R); }

  struct Pair {
    double lhs = 0.0;
    double rhs = 0.0;
  };
  Pair divergence() const;        // int u_nu dS  vs  N |Omega|
  Pair pohozaev() const;          // (N+2) int |grad u|^2  vs  int u_nu^2 x.nu dS
  Pair p_integral() const;        // int P  vs  (1/2 + 1/N) int |grad u|^2
  Pair minkowski() const;         // int H x.nu dS  vs  |Gamma|
  Pair heintze_karcher() const;   // int dS / H  vs  N |Omega|
  Pair fundamental_serrin() const;
  Pair fundamental_sbt() const;
  Pair idwps_h() const;
  Pair reilly() const;            // u_nunu + (N-1) H u_nu  vs  N
};

RadialOracle radial_oracle(int dimension, double R);

/// |A|^2 - (tr A)^2 / N, the integrand of Lap P.
double traceless_norm2(const Mat2& hessian);

struct PFunction {
  std::vector<double> nodal;             // P = |grad u|^2 / 2 - u
  std::vector<double> element_integrand; // |hess u|^2 - (tr hess u)^2 / N at centroids
  double max_boundary = 0.0;
  double max_interior = 0.0;
};

PFunction p_function(const TorsionSolution& solution);

/// Node CSV (node,x,y,u,P,h) and boundary CSV (node,theta,x,y,u_nu).
void write_solution_csv(const TorsionSolution& solution, const std::filesystem::path& nodes_csv,
                        const std::filesystem::path& boundary_csv);

}  // namespace tlab
