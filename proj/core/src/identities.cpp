#include "torsionlab/identities.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <atomic>
#include <exception>
#include <limits>
#include <thread>

#include <Eigen/Eigenvalues>
#include <fmt/core.h>

#include "torsionlab/csv.hpp"
#include "torsionlab/error.hpp"
#include "torsionlab/mesh.hpp"
#include "torsionlab/p2_element.hpp"

namespace tlab {

namespace {

constexpr double kN = static_cast<double>(kDim);
constexpr double kScaleFloor = 1e-14;

template <class F>
double boundary_sum(const TorsionSolution& sol, F&& f) {
  double total = 0.0;
  for (const BoundaryPoint& bp : sol.boundary_points()) total += bp.geo.weight * f(bp);
  return total;
}

double q_normal(const TorsionSolution& sol, const BoundaryPoint& bp) {
  return (bp.geo.x - sol.z()).dot(bp.geo.normal);
}

// Integral of the quadratic interpolant of a nodal field.
double integrate_nodal(const TorsionSolution& sol, const std::vector<double>& field) {
  const auto& rule = p2::triangle_rule();
  double total = 0.0;
  for (int e = 0; e < sol.mesh().triangle_count(); ++e) {
    const auto nodes = sol.element_nodes(e);
    const auto values = sol.element_values(e, field);
    for (const p2::QuadPoint& qp : rule) {
      const p2::MappedPoint mp = p2::map_point(nodes, qp.shape);
      total += qp.weight * mp.det * p2::field_value(values, qp.shape);
    }
  }
  return total;
}

IdentityReport finish(IdentityReport r, const TorsionSolution& sol) {
  r.level = sol.mesh().level();
  r.h = sol.mesh().h();
  return r;
}

// Adjacent (element, local index) pairs of every node.
std::vector<std::vector<std::pair<int, int>>> node_elements(const TriMesh& mesh) {
  std::vector<std::vector<std::pair<int, int>>> out(mesh.node_count());
  for (int e = 0; e < mesh.triangle_count(); ++e) {
    for (int k = 0; k < 6; ++k) out[mesh.triangles()[e].nodes[k]].emplace_back(e, k);
  }
  return out;
}

template <class Hessian>
double reilly_defect(const TorsionSolution& sol, Hessian&& hessian_at) {
  const TriMesh& mesh = sol.mesh();
  const auto adjacency = node_elements(mesh);
  const auto& ref = p2::reference_nodes();
  double worst = 0.0;
  for (int node : mesh.boundary_nodes()) {
    Mat2 hess = Mat2::Zero();
    for (const auto& [e, k] : adjacency[node]) hess += hessian_at(e, ref[k].x(), ref[k].y());
    hess /= static_cast<double>(adjacency[node].size());
    const BoundarySample b = boundary_sample_at(mesh.domain(), mesh.boundary_theta(node), 0.0);
    const double u_nn = b.normal.dot(hess * b.normal);
    const double defect = std::abs(kN - u_nn - (kN - 1.0) * b.curvature * sol.nodal_flux()[node]);
    worst = std::max(worst, defect);
  }
  return worst;
}

}  // namespace

IdentityReport make_report(std::string name, double lhs, double rhs, int level, double h) {
  IdentityReport r;
  r.name = std::move(name);
  r.lhs = lhs;
  r.rhs = rhs;
  r.abs_residual = std::abs(lhs - rhs);
  r.rel_residual = r.abs_residual / std::max({std::abs(lhs), std::abs(rhs), kScaleFloor});
  r.level = level;
  r.h = h;
  return r;
}

HarmonicBasis::HarmonicBasis(int degree, const Vec2& center, double scale)
    : degree_(degree), center_(center), scale_(scale) {
  if (degree < 0) throw ConfigError(fmt::format("harmonic degree must be >= 0, got {}", degree));
  if (!(scale > 0.0)) throw ConfigError(fmt::format("harmonic scale must be positive, got {}", scale));
}

std::string HarmonicBasis::name(int j) const {
  if (j == 0) return "1";
  const int k = (j + 1) / 2;
  return fmt::format("{}(z^{})", j % 2 == 1 ? "Re" : "Im", k);
}

void HarmonicBasis::values(const Vec2& x, std::vector<double>& out) const {
  out.resize(static_cast<std::size_t>(size()));
  const std::complex<double> w((x.x() - center_.x()) / scale_, (x.y() - center_.y()) / scale_);
  std::complex<double> p(1.0, 0.0);
  out[0] = 1.0;
  for (int k = 1; k <= degree_; ++k) {
    p *= w;
    out[2 * k - 1] = p.real();
    out[2 * k] = p.imag();
  }
}

double HarmonicBasis::value(int j, const Vec2& x) const {
  if (j == 0) return 1.0;
  const int k = (j + 1) / 2;
  const std::complex<double> w((x.x() - center_.x()) / scale_, (x.y() - center_.y()) / scale_);
  const std::complex<double> p = std::pow(w, k);
  return j % 2 == 1 ? p.real() : p.imag();
}

Vec2 HarmonicBasis::gradient(int j, const Vec2& x) const {
  if (j == 0) return Vec2::Zero();
  const int k = (j + 1) / 2;
  const std::complex<double> w((x.x() - center_.x()) / scale_, (x.y() - center_.y()) / scale_);
  const std::complex<double> d = static_cast<double>(k) * std::pow(w, k - 1) / scale_;
  // d/dx w^k = d, d/dy w^k = i d.
  if (j % 2 == 1) return Vec2(d.real(), -d.imag());
  return Vec2(d.imag(), d.real());
}

HarmonicBasis harmonic_basis_for(const StarDomain& domain, int degree) {
  double scale = 0.0;
  for (const BoundarySample& s : sample_boundary(domain, 512)) {
    scale = std::max(scale, (s.x - domain.center()).norm());
  }
  return HarmonicBasis(degree, domain.center(), scale);
}

IdentityReport check_divergence(const TorsionSolution& sol) {
  const double lhs = boundary_sum(sol, [](const BoundaryPoint& bp) { return bp.flux; });
  return finish(make_report("divergence", lhs, kN * sol.area()), sol);
}

IdentityReport check_pohozaev(const TorsionSolution& sol) {
  const double rhs = boundary_sum(
      sol, [](const BoundaryPoint& bp) { return bp.flux * bp.flux * bp.geo.support; });
  return finish(make_report("pohozaev", (kN + 2.0) * sol.tau(), rhs), sol);
}

IdentityReport check_p_integral(const TorsionSolution& sol) {
  const double lhs = integrate_nodal(sol, sol.nodal_p());
  return finish(make_report("p_integral", lhs, (0.5 + 1.0 / kN) * sol.tau()), sol);
}

IdentityReport check_minkowski(const StarDomain& domain, int m) {
  double lhs = 0.0;
  double perimeter = 0.0;
  for (const BoundarySample& s : sample_boundary(domain, m)) {
    lhs += s.curvature * s.support * s.weight;
    perimeter += s.weight;
  }
  (void)perimeter;
  return make_report("minkowski", lhs, area_perimeter(domain).perimeter);
}

IdentityReport check_heintze_karcher(const StarDomain& domain, int m) {
  const auto samples = sample_boundary(domain, m);
  const double min_h =
      std::min_element(samples.begin(), samples.end(), [](const auto& a, const auto& b) {
        return a.curvature < b.curvature;
      })->curvature;
  const double rhs = kN * area_perimeter(domain).area;
  if (!(min_h > 0.0)) {
    IdentityReport r = make_report("heintze_karcher", std::numeric_limits<double>::quiet_NaN(), rhs);
    r.equality = false;
    r.applicable = false;
    return r;
  }
  double lhs = 0.0;
  for (const BoundarySample& s : samples) lhs += s.weight / s.curvature;
  IdentityReport r = make_report("heintze_karcher", lhs, rhs);
  r.equality = false;
  return r;
}

IdentityReport check_isoperimetric(const StarDomain& domain) {
  const AreaPerimeter ap = area_perimeter(domain);
  IdentityReport r =
      make_report("isoperimetric", ap.perimeter * ap.perimeter - 4.0 * kPi * ap.area, 0.0);
  r.rel_residual = r.abs_residual / (ap.perimeter * ap.perimeter);
  r.equality = false;
  return r;
}

IdentityReport check_reilly_pointwise(const TorsionSolution& sol) {
  const TriMesh& mesh = sol.mesh();
  double defect = 0.0;
  for (int node : mesh.boundary_nodes()) {
    const BoundarySample b = boundary_sample_at(mesh.domain(), mesh.boundary_theta(node), 0.0);
    const double u_nn = sol.nodal_flux_normal_derivative()[node];
    defect = std::max(defect, std::abs(kN - u_nn - (kN - 1.0) * b.curvature * sol.nodal_flux()[node]));
  }
  IdentityReport r = finish(make_report("reilly", defect, 0.0), sol);
  r.rel_residual = defect / kN;
  return r;
}

double reilly_defect_recovered_hessian(const TorsionSolution& sol) {
  return reilly_defect(
      sol, [&](int e, double xi, double eta) { return sol.recovered_hessian(e, xi, eta); });
}

double reilly_defect_element_hessian(const TorsionSolution& sol) {
  return reilly_defect(
      sol, [&](int e, double xi, double eta) { return sol.evaluate_in_element(e, xi, eta).hess; });
}

IdentityReport check_fundamental_serrin(const TorsionSolution& sol) {
  const double lhs =
      sol.integrate([](const DomainPoint& dp) { return -dp.u * traceless_norm2(dp.hess_recovered); });
  const double R = sol.R();
  const double rhs = 0.5 * boundary_sum(sol, [&](const BoundaryPoint& bp) {
                       return (bp.flux * bp.flux - R * R) * (bp.flux - q_normal(sol, bp));
                     });
  return finish(make_report("idwps", lhs, rhs), sol);
}

SbtTerms sbt_terms(const TorsionSolution& sol) {
  const double R = sol.R();
  const double H0 = sol.H0();
  SbtTerms t;
  t.hessian_term =
      sol.integrate([](const DomainPoint& dp) { return traceless_norm2(dp.hess_recovered); }) /
      (kN - 1.0);
  t.flux_term =
      boundary_sum(sol, [&](const BoundaryPoint& bp) { return (bp.flux - R) * (bp.flux - R); }) / R;
  t.curvature_flux = boundary_sum(sol, [&](const BoundaryPoint& bp) {
    return (H0 - bp.geo.curvature) * (bp.flux - q_normal(sol, bp)) * bp.flux;
  });
  t.curvature_support = boundary_sum(sol, [&](const BoundaryPoint& bp) {
    return (H0 - bp.geo.curvature) * (bp.flux - R) * q_normal(sol, bp);
  });
  return t;
}

IdentityReport check_fundamental_sbt(const TorsionSolution& sol) {
  const SbtTerms t = sbt_terms(sol);
  return finish(make_report("identity_sbt", t.hessian_term + t.flux_term,
                            t.curvature_flux + t.curvature_support),
                sol);
}

IdentityReport check_idwps_h(const TorsionSolution& sol) {
  const double lhs = sol.integrate([](const DomainPoint& dp) {
    return -dp.u * (Mat2::Identity() - dp.hess_recovered).squaredNorm();
  });
  const double R = sol.R();
  const double rhs = 0.5 * boundary_sum(sol, [&](const BoundaryPoint& bp) {
                       return (R * R - bp.flux * bp.flux) * (q_normal(sol, bp) - bp.flux);
                     });
  return finish(make_report("idwps_h", lhs, rhs), sol);
}

DualValue dual_functional(const TorsionSolution& sol, const HarmonicBasis& basis, int j) {
  if (j < 0 || j >= basis.size()) {
    throw ConfigError(fmt::format("harmonic index {} outside [0, {})", j, basis.size()));
  }
  const double domain_mean =
      sol.integrate([&](const DomainPoint& dp) { return basis.value(j, dp.x); }) / sol.mesh_area();
  double boundary_total = 0.0;
  double length = 0.0;
  double form = 0.0;
  double norm2 = 0.0;
  for (const BoundaryPoint& bp : sol.boundary_points()) {
    const double g = basis.value(j, bp.geo.x);
    boundary_total += bp.geo.weight * g;
    length += bp.geo.weight;
    form += bp.geo.weight * g * (bp.flux - sol.R());
    norm2 += bp.geo.weight * g * g;
  }
  DualValue v;
  v.gap = domain_mean - boundary_total / length;
  v.boundary_form = form / (kN * sol.area());
  v.boundary_norm = std::sqrt(norm2);
  return v;
}

IdentityReport check_dual_formulation(const TorsionSolution& sol, int degree) {
  const HarmonicBasis basis = harmonic_basis_for(sol.domain(), degree);
  DualValue best = dual_functional(sol, basis, 0);
  double best_score = -1.0;
  for (int j = 1; j < basis.size(); ++j) {
    const DualValue v = dual_functional(sol, basis, j);
    const double score = std::abs(v.boundary_form) / v.boundary_norm;
    if (score > best_score) {
      best_score = score;
      best = v;
    }
  }
  return finish(make_report("dual_formulation", best.gap, best.boundary_form), sol);
}

std::vector<DualNorm> dual_norm_sequence(const TorsionSolution& sol, int max_degree) {
  if (max_degree < 1) throw ConfigError(fmt::format("dual norm degree must be >= 1, got {}", max_degree));
  const HarmonicBasis basis = harmonic_basis_for(sol.domain(), max_degree);
  const int n = basis.size();

  Eigen::VectorXd ell = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> g;
  Eigen::VectorXd domain_int = Eigen::VectorXd::Zero(n);
  sol.for_each_domain_point([&](const DomainPoint& dp) {
    basis.values(dp.x, g);
    for (int j = 0; j < n; ++j) domain_int(j) += dp.weight * g[j];
  });
  Eigen::VectorXd boundary_int = Eigen::VectorXd::Zero(n);
  double length = 0.0;
  double deviation2 = 0.0;
  for (const BoundaryPoint& bp : sol.boundary_points()) {
    basis.values(bp.geo.x, g);
    const Eigen::Map<const Eigen::VectorXd> gv(g.data(), n);
    boundary_int += bp.geo.weight * gv;
    gram.noalias() += bp.geo.weight * gv * gv.transpose();
    length += bp.geo.weight;
    deviation2 += bp.geo.weight * (bp.flux - sol.R()) * (bp.flux - sol.R());
  }
  ell = domain_int / sol.mesh_area() - boundary_int / length;
  const double closed_form = std::sqrt(deviation2) / (kN * sol.area());

  std::vector<DualNorm> out;
  for (int d = 1; d <= max_degree; ++d) {
    const int size = 2 * d + 1;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram.topLeftCorner(size, size));
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    if (!(lambda(0) > 1e-13 * lambda(size - 1))) {
      throw SolverError(fmt::format("boundary Gram matrix is ill-conditioned at degree {} "
                                    "(eigenvalue ratio {:.3e}); increase the boundary sample count",
                                    d, lambda(0) / lambda(size - 1)),
                        lambda(0) / lambda(size - 1), 0);
    }
    const Eigen::VectorXd proj = eig.eigenvectors().transpose() * ell.head(size);
    double est2 = 0.0;
    for (int i = 0; i < size; ++i) est2 += proj(i) * proj(i) / lambda(i);
    out.push_back({std::sqrt(est2), closed_form, d});
  }
  return out;
}

DualNorm dual_norm(const TorsionSolution& sol, int degree) {
  return dual_norm_sequence(sol, degree).back();
}

double flux_deviation_l2(const TorsionSolution& sol) {
  const double R = sol.R();
  return std::sqrt(
      boundary_sum(sol, [&](const BoundaryPoint& bp) { return (bp.flux - R) * (bp.flux - R); }));
}

std::optional<double> feldman_ratio(const TorsionSolution& sol) {
  if (sol.domain().is_circle()) return std::nullopt;
  const double denominator = flux_deviation_l2(sol);
  if (!(denominator > 1e-12)) return std::nullopt;
  const double numerator = std::sqrt(boundary_sum(sol, [&](const BoundaryPoint& bp) {
    const double h_nu = q_normal(sol, bp) - bp.flux;
    return h_nu * h_nu;
  }));
  return numerator / denominator;
}

OscillationChain oscillation_chain(const TorsionSolution& sol) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const BoundaryPoint& bp : sol.boundary_points()) {
    const double h = sol.q(bp.geo.x);
    lo = std::min(lo, h);
    hi = std::max(hi, h);
  }
  double l2 = 0.0;
  double dirichlet = 0.0;
  sol.for_each_domain_point([&](const DomainPoint& dp) {
    const double h = sol.q(dp.x) - dp.u;
    const Vec2 grad_h = (dp.x - sol.z()) - dp.grad;
    l2 += dp.weight * h * h;
    dirichlet += dp.weight * grad_h.squaredNorm();
  });
  const double power = 1.0 / (kN + 2.0);
  return {hi - lo, std::pow(l2, power), std::pow(dirichlet, power)};
}

std::vector<IdentityReport> verify_solution(const TorsionSolution& sol) {
  std::vector<IdentityReport> out;
  out.push_back(check_p_integral(sol));
  out.push_back(check_divergence(sol));
  out.push_back(check_pohozaev(sol));
  IdentityReport mink = check_minkowski(sol.domain());
  mink.level = sol.mesh().level();
  mink.h = sol.mesh().h();
  out.push_back(mink);
  out.push_back(check_reilly_pointwise(sol));
  out.push_back(check_fundamental_serrin(sol));
  out.push_back(check_fundamental_sbt(sol));
  out.push_back(check_idwps_h(sol));
  out.push_back(check_dual_formulation(sol));
  return out;
}

double observed_order(const IdentityReport& coarse, const IdentityReport& fine) {
  if (!(coarse.abs_residual > 0.0) || !(fine.abs_residual > 0.0) || !(coarse.h > fine.h)) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return std::log(coarse.abs_residual / fine.abs_residual) / std::log(coarse.h / fine.h);
}

std::vector<std::vector<IdentityReport>> verify_levels(const StarDomain& domain,
                                                       const std::vector<int>& levels,
                                                       int threads) {
  const std::size_t n = levels.size();
  std::vector<std::vector<IdentityReport>> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = verify_solution(solve_torsion(build_mesh(domain, levels[i])));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::min<int>(threads, static_cast<int>(n)); ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::string identities_csv(const std::vector<std::vector<IdentityReport>>& by_level) {
  std::string out = "identity,level,h,lhs,rhs,abs_residual,rel_residual,order_estimate\n";
  for (std::size_t l = 0; l < by_level.size(); ++l) {
    for (const IdentityReport& r : by_level[l]) {
      std::string order;
      if (l > 0) {
        for (const IdentityReport& prev : by_level[l - 1]) {
          if (prev.name == r.name) order = format_number(observed_order(prev, r));
        }
      }
      out += fmt::format("{},{},{},{},{},{},{},{}\n", r.name, r.level, format_number(r.h),
                         format_number(r.lhs), format_number(r.rhs), format_number(r.abs_residual),
                         format_number(r.rel_residual), order);
    }
  }
  return out;
}

}  // namespace tlab
