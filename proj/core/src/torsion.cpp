#include "torsionlab/torsion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>
#include <fmt/core.h>

#include "torsionlab/csv.hpp"
#include "torsionlab/error.hpp"
#include "torsionlab/p2_element.hpp"

namespace tlab {

namespace {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<double>;

constexpr double kN = static_cast<double>(kDim);

Mat2 interpolated_jacobian(const std::vector<Vec2>& field, const P2Triangle& tri,
                           const p2::MappedPoint& mp) {
  Mat2 jac = Mat2::Zero();
  for (int k = 0; k < 6; ++k) jac += field[tri.nodes[k]] * mp.grad[k].transpose();
  return 0.5 * (jac + jac.transpose());
}

}  // namespace

std::array<Vec2, 6> TorsionSolution::element_nodes(int e) const {
  const auto& tri = mesh_->triangles()[e];
  std::array<Vec2, 6> out;
  for (int k = 0; k < 6; ++k) out[k] = mesh_->nodes()[tri.nodes[k]];
  return out;
}

std::array<double, 6> TorsionSolution::element_values(int e, const std::vector<double>& field) const {
  const auto& tri = mesh_->triangles()[e];
  std::array<double, 6> out;
  for (int k = 0; k < 6; ++k) out[k] = field[tri.nodes[k]];
  return out;
}

double TorsionSolution::flux_at(double theta) const {
  double value = flux_modes_.empty() ? 0.0 : flux_modes_[0];
  for (std::size_t k = 1; 2 * k < flux_modes_.size(); ++k) {
    value += flux_modes_[2 * k - 1] * std::cos(k * theta) + flux_modes_[2 * k] * std::sin(k * theta);
  }
  return value;
}

DomainPoint TorsionSolution::evaluate_in_element(int e, double xi, double eta) const {
  const p2::ShapeEval s = p2::shape(xi, eta);
  const auto nodes = element_nodes(e);
  const auto values = element_values(e, u_);
  const p2::MappedPoint mp = p2::map_point(nodes, s);
  DomainPoint dp;
  dp.x = mp.x;
  dp.u = p2::field_value(values, s);
  dp.grad = p2::field_gradient(values, mp);
  dp.hess = p2::field_hessian(nodes, values, s, mp);
  if (!nodal_grad_.empty()) {
    dp.hess_recovered = interpolated_jacobian(nodal_grad_, mesh_->triangles()[e], mp);
  }
  dp.element = e;
  return dp;
}

Mat2 TorsionSolution::recovered_hessian(int e, double xi, double eta) const {
  const p2::MappedPoint mp = p2::map_point(element_nodes(e), p2::shape(xi, eta));
  return interpolated_jacobian(nodal_grad_, mesh_->triangles()[e], mp);
}

std::optional<DomainPoint> TorsionSolution::evaluate(const Vec2& x) const {
  for (int e = 0; e < mesh_->triangle_count(); ++e) {
    const auto nodes = element_nodes(e);
    Vec2 lo = nodes[0];
    Vec2 hi = nodes[0];
    for (const Vec2& p : nodes) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const double pad = 1e-9 + 0.25 * (hi - lo).maxCoeff();
    if ((x.array() < lo.array() - pad).any() || (x.array() > hi.array() + pad).any()) continue;
    double xi = 0.0;
    double eta = 0.0;
    if (p2::locate(nodes, x, &xi, &eta)) return evaluate_in_element(e, xi, eta);
  }
  return std::nullopt;
}

void TorsionSolution::for_each_domain_point(
    const std::function<void(const DomainPoint&)>& visit) const {
  const auto& rule = p2::triangle_rule();
  for (int e = 0; e < mesh_->triangle_count(); ++e) {
    const auto nodes = element_nodes(e);
    const auto values = element_values(e, u_);
    for (const p2::QuadPoint& qp : rule) {
      const p2::MappedPoint mp = p2::map_point(nodes, qp.shape);
      DomainPoint dp;
      dp.x = mp.x;
      dp.weight = qp.weight * mp.det;
      dp.u = p2::field_value(values, qp.shape);
      dp.grad = p2::field_gradient(values, mp);
      dp.hess = p2::field_hessian(nodes, values, qp.shape, mp);
      if (!nodal_grad_.empty()) {
        dp.hess_recovered = interpolated_jacobian(nodal_grad_, mesh_->triangles()[e], mp);
      }
      dp.element = e;
      visit(dp);
    }
  }
}

double TorsionSolution::integrate(const std::function<double(const DomainPoint&)>& f) const {
  double total = 0.0;
  for_each_domain_point([&](const DomainPoint& dp) { total += dp.weight * f(dp); });
  return total;
}

double TorsionSolution::integrate_boundary(
    const std::function<double(const BoundaryPoint&)>& f) const {
  double total = 0.0;
  for (const BoundaryPoint& bp : boundary_points_) total += bp.geo.weight * f(bp);
  return total;
}

namespace {

// Gradient of u at interior points from the boundary representation
//   grad u(x0) = -N/(2 pi) int ln|x - x0| nu dS + 1/(2 pi) int (x - x0) u_nu / |x - x0|^2 dS,
// using the exact curve and the recovered flux. Panels close to x0 are
// bisected until their length is below half the distance to x0.
class GradientRepresentation {
 public:
  GradientRepresentation(const StarDomain& domain, const TorsionSolution& sol, int panels)
      : domain_(domain), sol_(sol), rule_(p2::line_rule(kPanelPoints)) {
    const double span = kTwoPi / panels;
    panels_.reserve(panels);
    for (int p = 0; p < panels; ++p) panels_.push_back(make_panel(p * span, (p + 1) * span));
  }

  GradientRepresentation(const GradientRepresentation&) = delete;
  GradientRepresentation& operator=(const GradientRepresentation&) = delete;

  Vec2 gradient(const Vec2& x0) {
    Vec2 g = Vec2::Zero();
    for (Panel& panel : panels_) g += integrate(panel, x0, 0);
    return g / kTwoPi;
  }

 private:
  static constexpr int kPanelPoints = 10;
  static constexpr int kMaxDepth = 40;

  struct Node {
    Vec2 x;
    Vec2 normal;
    double ds;
    double flux;
  };
  // Children are built on first use and shared by later evaluation points.
  struct Panel {
    double theta_a;
    double theta_b;
    Vec2 center;
    double length;
    std::vector<Node> nodes;
    std::unique_ptr<Panel> left;
    std::unique_ptr<Panel> right;
  };

  Panel make_panel(double theta_a, double theta_b) const {
    Panel panel{theta_a, theta_b, Vec2::Zero(), 0.0, {}, nullptr, nullptr};
    const double span = theta_b - theta_a;
    panel.nodes.reserve(rule_.s.size());
    for (std::size_t q = 0; q < rule_.s.size(); ++q) {
      const BoundarySample b = boundary_sample_at(domain_, theta_a + rule_.s[q] * span, rule_.w[q] * span);
      panel.nodes.push_back({b.x, b.normal, b.weight, sol_.flux_at(b.theta)});
      panel.length += b.weight;
    }
    panel.center = domain_.point(theta_a + 0.5 * span);
    return panel;
  }

  Vec2 integrate(Panel& panel, const Vec2& x0, int depth) {
    const double distance = (panel.center - x0).norm() - 0.5 * panel.length;
    if (distance > 2.0 * panel.length || depth >= kMaxDepth) {
      Vec2 g = Vec2::Zero();
      for (const Node& nd : panel.nodes) {
        const Vec2 d = nd.x - x0;
        const double r2 = d.squaredNorm();
        g += nd.ds * (-0.5 * kN * std::log(r2) * nd.normal + nd.flux / r2 * d);
      }
      return g;
    }
    if (!panel.left) {
      const double mid = 0.5 * (panel.theta_a + panel.theta_b);
      panel.left = std::make_unique<Panel>(make_panel(panel.theta_a, mid));
      panel.right = std::make_unique<Panel>(make_panel(mid, panel.theta_b));
    }
    return integrate(*panel.left, x0, depth + 1) + integrate(*panel.right, x0, depth + 1);
  }

  const StarDomain& domain_;
  const TorsionSolution& sol_;
  const p2::LineRule& rule_;
  std::vector<Panel> panels_;
};

}  // namespace

TorsionSolution solve_torsion(const TriMesh& mesh, const SolverOptions& options) {
  return solve_torsion(std::make_shared<const TriMesh>(mesh), options);
}

TorsionSolution solve_torsion(std::shared_ptr<const TriMesh> mesh_ptr, const SolverOptions& options) {
  const TriMesh& mesh = *mesh_ptr;
  const int n = mesh.node_count();
  const auto& rule = p2::triangle_rule();

  TorsionSolution sol;
  sol.mesh_ = mesh_ptr;

  // Full stiffness and load f_i = int phi_i; Dirichlet rows are dropped below.
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.triangle_count()) * 36);
  Eigen::VectorXd load = Eigen::VectorXd::Zero(n);
  double mesh_area = 0.0;
  for (int e = 0; e < mesh.triangle_count(); ++e) {
    const auto nodes = sol.element_nodes(e);
    const auto& ids = mesh.triangles()[e].nodes;
    Eigen::Matrix<double, 6, 6> ke = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> fe = Eigen::Matrix<double, 6, 1>::Zero();
    for (const p2::QuadPoint& qp : rule) {
      const p2::MappedPoint mp = p2::map_point(nodes, qp.shape);
      if (!(mp.det > 0.0)) {
        throw MeshError(fmt::format("element {} has non-positive jacobian {:.3g}", e, mp.det));
      }
      const double w = qp.weight * mp.det;
      mesh_area += w;
      for (int i = 0; i < 6; ++i) {
        fe(i) += w * qp.shape.value[i];
        for (int j = 0; j < 6; ++j) ke(i, j) += w * mp.grad[i].dot(mp.grad[j]);
      }
    }
    for (int i = 0; i < 6; ++i) {
      load(ids[i]) += fe(i);
      for (int j = 0; j < 6; ++j) triplets.emplace_back(ids[i], ids[j], ke(i, j));
    }
  }
  SparseMatrix stiffness(n, n);
  stiffness.setFromTriplets(triplets.begin(), triplets.end());
  triplets.clear();
  triplets.shrink_to_fit();

  std::vector<int> dof(n, -1);
  int ndof = 0;
  for (int i = 0; i < n; ++i) {
    if (!mesh.is_boundary(i)) dof[i] = ndof++;
  }

  std::vector<Triplet> interior;
  interior.reserve(static_cast<std::size_t>(stiffness.nonZeros()));
  for (int i = 0; i < n; ++i) {
    if (dof[i] < 0) continue;
    for (SparseMatrix::InnerIterator it(stiffness, i); it; ++it) {
      if (dof[it.col()] >= 0) interior.emplace_back(dof[i], dof[it.col()], it.value());
    }
  }
  SparseMatrix k_ii(ndof, ndof);
  k_ii.setFromTriplets(interior.begin(), interior.end());
  interior.clear();
  interior.shrink_to_fit();

  Eigen::VectorXd rhs(ndof);
  for (int i = 0; i < n; ++i) {
    if (dof[i] >= 0) rhs(dof[i]) = -kN * load(i);
  }

  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  cg.setTolerance(options.relative_tolerance);
  const long max_iter =
      static_cast<long>(std::ceil(options.iteration_factor * std::sqrt(static_cast<double>(ndof))));
  cg.setMaxIterations(max_iter);
  cg.compute(k_ii);
  Eigen::VectorXd x = cg.solveWithGuess(rhs, Eigen::VectorXd::Zero(ndof));
  sol.cg_iterations_ = cg.iterations();
  sol.cg_residual_ = cg.error();
  if (cg.info() != Eigen::Success || !(cg.error() <= options.relative_tolerance)) {
    throw SolverError(fmt::format("conjugate gradients did not converge: relative residual {:.3e} "
                                  "after {} iterations (cap {})",
                                  cg.error(), cg.iterations(), max_iter),
                      cg.error(), cg.iterations());
  }

  sol.u_.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    if (dof[i] >= 0) sol.u_[i] = x(dof[i]);
  }
  const Eigen::Map<const Eigen::VectorXd> u_vec(sol.u_.data(), n);
  const Eigen::VectorXd ku = stiffness * u_vec;
  sol.tau_ = u_vec.dot(ku);
  sol.tau_volume_ = -kN * load.dot(u_vec);
  sol.mesh_area_ = mesh_area;

  const AreaPerimeter ap = area_perimeter(mesh.domain());
  sol.area_ = ap.area;
  sol.perimeter_ = ap.perimeter;
  sol.R_ = kN * ap.area / ap.perimeter;

  // Variational flux recovery. The Gauss-Green residual r_i = (K u + N f)_i
  // at the boundary nodes gives superconvergent moments of u_nu against
  // smooth boundary functions, so the recovery space is a trigonometric
  // series in theta rather than the piecewise quadratic trace (whose nodal
  // values oscillate between corner and mid-edge nodes).
  const std::vector<int>& bnodes = mesh.boundary_nodes();
  const int nb = static_cast<int>(bnodes.size());
  const int modes = std::clamp(nb / 8, 1, kMaxHarmonics);
  const int basis = 2 * modes + 1;
  auto trig = [basis](double theta, Eigen::VectorXd& out) {
    out.resize(basis);
    out(0) = 1.0;
    for (int k = 1; 2 * k < basis; ++k) {
      out(2 * k - 1) = std::cos(k * theta);
      out(2 * k) = std::sin(k * theta);
    }
  };
  Eigen::VectorXd moments = Eigen::VectorXd::Zero(basis);
  Eigen::VectorXd row;
  for (int node : bnodes) {
    trig(mesh.boundary_theta(node), row);
    moments += (ku(node) + kN * load(node)) * row;
  }
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(basis, basis);
  for (const BoundarySample& bs : sample_boundary(mesh.domain(), std::max(512, 8 * basis))) {
    trig(bs.theta, row);
    gram.noalias() += bs.weight * row * row.transpose();
  }
  const Eigen::LDLT<Eigen::MatrixXd> gram_solver(gram);
  if (gram_solver.info() != Eigen::Success || !(gram_solver.rcond() > 1e-14)) {
    throw Error(ErrorCategory::kInternal, "boundary mass matrix is singular");
  }
  const Eigen::VectorXd coeffs = gram_solver.solve(moments);
  sol.flux_modes_.assign(coeffs.data(), coeffs.data() + basis);

  sol.flux_.assign(n, std::numeric_limits<double>::quiet_NaN());
  for (int node : bnodes) sol.flux_[node] = sol.flux_at(mesh.boundary_theta(node));
  for (const BoundarySample& bs : sample_boundary(mesh.domain(), std::max(2048, 16 * basis))) {
    sol.boundary_points_.push_back({bs, sol.flux_at(bs.theta)});
  }

  // Element hessians at centroids. Nodal gradients come from the boundary
  // representation in the interior and from u_nu nu on the boundary.
  sol.element_hess_.resize(mesh.triangle_count());
  const p2::ShapeEval centroid_shape = p2::shape(1.0 / 3.0, 1.0 / 3.0);
  for (int e = 0; e < mesh.triangle_count(); ++e) {
    const auto nodes = sol.element_nodes(e);
    const auto values = sol.element_values(e, sol.u_);
    const p2::MappedPoint mc = p2::map_point(nodes, centroid_shape);
    sol.element_hess_[e] = p2::field_hessian(nodes, values, centroid_shape, mc);
  }
  sol.nodal_grad_.assign(n, Vec2::Zero());
  GradientRepresentation representation(mesh.domain(), sol, std::max(32, modes));
  for (int i = 0; i < n; ++i) {
    if (mesh.is_boundary(i)) {
      const BoundarySample b = boundary_sample_at(mesh.domain(), mesh.boundary_theta(i), 0.0);
      sol.nodal_grad_[i] = sol.flux_[i] * b.normal;
    } else {
      sol.nodal_grad_[i] = representation.gradient(mesh.nodes()[i]);
    }
  }

  // u_nunu at boundary nodes: one-sided fourth-order difference of grad u . nu
  // along the inward normal, with the gradient from the representation.
  sol.flux_normal_derivative_.assign(n, std::numeric_limits<double>::quiet_NaN());
  const double step = std::min(0.5 * mesh.h(), 0.05 * sol.R_);
  for (int node : bnodes) {
    const BoundarySample b = boundary_sample_at(mesh.domain(), mesh.boundary_theta(node), 0.0);
    std::array<double, 5> g{};
    g[0] = sol.flux_[node];
    for (int k = 1; k < 5; ++k) {
      g[k] = representation.gradient(b.x - k * step * b.normal).dot(b.normal);
    }
    const double slope = (-25.0 * g[0] + 48.0 * g[1] - 36.0 * g[2] + 16.0 * g[3] - 3.0 * g[4]) / (12.0 * step);
    sol.flux_normal_derivative_[node] = -slope;
  }

  // z: minimizing node polished by one Newton step on the local quadratic.
  const int argmin =
      static_cast<int>(std::min_element(sol.u_.begin(), sol.u_.end()) - sol.u_.begin());
  sol.z_ = mesh.nodes()[argmin];
  for (int e = 0; e < mesh.triangle_count(); ++e) {
    const auto& ids = mesh.triangles()[e].nodes;
    const auto at = std::find(ids.begin(), ids.end(), argmin);
    if (at == ids.end()) continue;
    const int k = static_cast<int>(at - ids.begin());
    const DomainPoint dp =
        sol.evaluate_in_element(e, p2::reference_nodes()[k].x(), p2::reference_nodes()[k].y());
    if (std::abs(dp.hess.determinant()) < 1e-300) continue;
    const Vec2 candidate = dp.x - dp.hess.inverse() * dp.grad;
    double xi = 0.0;
    double eta = 0.0;
    if (p2::locate(sol.element_nodes(e), candidate, &xi, &eta)) {
      sol.z_ = candidate;
      break;
    }
  }

  // a makes h = q - u average to zero over the discrete domain.
  const double mean_q_minus_u =
      sol.integrate([&](const DomainPoint& dp) {
        return 0.5 * (dp.x - sol.z_).squaredNorm() - dp.u;
      }) / mesh_area;
  sol.a_ = mean_q_minus_u;

  sol.p_.resize(n);
  sol.h_.resize(n);
  for (int i = 0; i < n; ++i) {
    sol.p_[i] = 0.5 * sol.nodal_grad_[i].squaredNorm() - sol.u_[i];
    sol.h_[i] = sol.q(mesh.nodes()[i]) - sol.u_[i];
  }
  return sol;
}

std::vector<FluxSample> boundary_flux(const TorsionSolution& solution) {
  std::vector<FluxSample> out;
  const TriMesh& mesh = solution.mesh();
  out.reserve(mesh.boundary_nodes().size());
  for (int node : mesh.boundary_nodes()) {
    out.push_back({node, mesh.boundary_theta(node), mesh.nodes()[node], solution.nodal_flux()[node]});
  }
  return out;
}

std::vector<FluxSample> gradient_trace_flux(const TorsionSolution& solution) {
  std::vector<FluxSample> out;
  const TriMesh& mesh = solution.mesh();
  for (int node : mesh.boundary_nodes()) {
    const double theta = mesh.boundary_theta(node);
    const BoundarySample s = boundary_sample_at(mesh.domain(), theta, 0.0);
    out.push_back({node, theta, mesh.nodes()[node], solution.nodal_gradient()[node].dot(s.normal)});
  }
  return out;
}

RadialOracle radial_oracle(int dimension, double R) {
  if (dimension < 2) throw DomainError(fmt::format("dimension must be >= 2, got {}", dimension));
  if (!(R > 0.0)) throw DomainError(fmt::format("radius must be positive, got {}", R));
  RadialOracle o;
  const double n = dimension;
  const double omega = std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
  o.dimension = dimension;
  o.R = R;
  o.ball_volume = omega * std::pow(R, n);
  o.sphere_area = n * omega * std::pow(R, n - 1.0);
  o.flux = R;
  o.p_value = 0.5 * R * R;
  o.tau = n * o.ball_volume * R * R / (n + 2.0);
  o.mean_curvature = 1.0 / R;
  o.dirichlet_energy = o.tau;
  return o;
}

RadialOracle::Pair RadialOracle::divergence() const {
  return {flux * sphere_area, dimension * ball_volume};
}

RadialOracle::Pair RadialOracle::pohozaev() const {
  // x . nu = R on the sphere.
  return {(dimension + 2.0) * dirichlet_energy, flux * flux * R * sphere_area};
}

RadialOracle::Pair RadialOracle::p_integral() const {
  return {p_value * ball_volume, (0.5 + 1.0 / dimension) * dirichlet_energy};
}

RadialOracle::Pair RadialOracle::minkowski() const {
  return {mean_curvature * R * sphere_area, sphere_area};
}

RadialOracle::Pair RadialOracle::heintze_karcher() const {
  return {sphere_area / mean_curvature, dimension * ball_volume};
}

RadialOracle::Pair RadialOracle::fundamental_serrin() const {
  // Hessian is the identity, so |hess|^2 - (Lap u)^2 / N = N - N = 0; u_nu = R.
  const double integrand = dimension - static_cast<double>(dimension * dimension) / dimension;
  return {integrand, 0.5 * (flux * flux - R * R) * (flux - R) * sphere_area};
}

RadialOracle::Pair RadialOracle::fundamental_sbt() const {
  const double h_gap = 1.0 / R - mean_curvature;
  return {(flux - R) * (flux - R) * sphere_area / R,
          h_gap * (flux - R) * flux * sphere_area + h_gap * (flux - R) * R * sphere_area};
}

RadialOracle::Pair RadialOracle::idwps_h() const {
  // h = q - u is constant when z is the centre.
  return {0.0, 0.5 * (R * R - flux * flux) * 0.0};
}

RadialOracle::Pair RadialOracle::reilly() const {
  return {1.0 + (dimension - 1.0) * mean_curvature * flux, static_cast<double>(dimension)};
}

double traceless_norm2(const Mat2& hessian) {
  const double tr = hessian.trace();
  return hessian.squaredNorm() - tr * tr / kN;
}

PFunction p_function(const TorsionSolution& solution) {
  PFunction out;
  out.nodal = solution.nodal_p();
  out.element_integrand.reserve(solution.element_hessian().size());
  for (const Mat2& h : solution.element_hessian()) out.element_integrand.push_back(traceless_norm2(h));
  out.max_boundary = -std::numeric_limits<double>::infinity();
  out.max_interior = -std::numeric_limits<double>::infinity();
  const TriMesh& mesh = solution.mesh();
  for (int i = 0; i < mesh.node_count(); ++i) {
    double& slot = mesh.is_boundary(i) ? out.max_boundary : out.max_interior;
    slot = std::max(slot, out.nodal[i]);
  }
  return out;
}

void write_solution_csv(const TorsionSolution& solution, const std::filesystem::path& nodes_csv,
                        const std::filesystem::path& boundary_csv) {
  const TriMesh& mesh = solution.mesh();
  std::string nodes = "node,x,y,u,P,h\n";
  for (int i = 0; i < mesh.node_count(); ++i) {
    const Vec2& p = mesh.nodes()[i];
    nodes += fmt::format("{},{},{},{},{},{}\n", i, format_number(p.x()), format_number(p.y()),
                         format_number(solution.u()[i]), format_number(solution.nodal_p()[i]),
                         format_number(solution.nodal_h()[i]));
  }
  write_file_atomic(nodes_csv, nodes);

  std::string boundary = "node,theta,x,y,u_nu\n";
  for (const FluxSample& f : boundary_flux(solution)) {
    boundary += fmt::format("{},{},{},{},{}\n", f.node, format_number(f.theta), format_number(f.x.x()),
                            format_number(f.x.y()), format_number(f.flux));
  }
  write_file_atomic(boundary_csv, boundary);
}

}  // namespace tlab
