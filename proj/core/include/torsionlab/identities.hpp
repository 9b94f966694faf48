#pragma once

#include <optional>
#include <string>
#include <vector>

#include "torsionlab/geometry.hpp"
#include "torsionlab/torsion.hpp"

namespace tlab {

/// Both sides of one identity or inequality on one solved domain.
struct IdentityReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_residual = 0.0;
  /// |lhs - rhs| / max(|lhs|, |rhs|, 1e-14).
  double rel_residual = 0.0;
  int level = -1;
  double h = 0.0;
  /// False for inequalities and for pointwise defects.
  bool equality = true;
  /// False when a precondition (e.g. mean convexity) does not hold.
  bool applicable = true;
};

IdentityReport make_report(std::string name, double lhs, double rhs, int level = -1, double h = 0.0);

/// Harmonic polynomials {1, Re w^k, Im w^k : k = 1..degree} with
/// w = ((x - center) / scale) viewed as a complex number.
class HarmonicBasis {
 public:
  explicit HarmonicBasis(int degree, const Vec2& center = Vec2::Zero(), double scale = 1.0);

  int degree() const { return degree_; }
  int size() const { return 2 * degree_ + 1; }
  std::string name(int j) const;

  double value(int j, const Vec2& x) const;
  Vec2 gradient(int j, const Vec2& x) const;
  /// All values at x, in index order.
  void values(const Vec2& x, std::vector<double>& out) const;

 private:
  int degree_;
  Vec2 center_;
  double scale_;
};

/// Basis adapted to a domain: centred at the domain centre, scaled by its
/// largest radius so that the boundary Gram matrix stays well conditioned.
HarmonicBasis harmonic_basis_for(const StarDomain& domain, int degree);

IdentityReport check_divergence(const TorsionSolution& sol);
IdentityReport check_pohozaev(const TorsionSolution& sol);
IdentityReport check_p_integral(const TorsionSolution& sol);
IdentityReport check_minkowski(const StarDomain& domain, int m = 2048);

/// lhs = int dS / H, rhs = N |Omega|. Not applicable unless min H > 0.
IdentityReport check_heintze_karcher(const StarDomain& domain, int m = 2048);

/// Isoperimetric deficit |Gamma|^2 - 4 pi |Omega| as lhs against 0.
IdentityReport check_isoperimetric(const StarDomain& domain);

/// Sup over boundary nodes of |N - u_nunu - (N-1) H u_nu|, reported as lhs
/// against rhs = 0 with rel_residual = defect / N. u_nunu is the normal
/// derivative of the represented gradient (nodal_flux_normal_derivative).
IdentityReport check_reilly_pointwise(const TorsionSolution& sol);

/// Same defect with u_nunu from the adjacent recovered hessians.
double reilly_defect_recovered_hessian(const TorsionSolution& sol);

/// Same defect with u_nunu from the adjacent element hessians (lowest order).
double reilly_defect_element_hessian(const TorsionSolution& sol);

IdentityReport check_fundamental_serrin(const TorsionSolution& sol);

struct SbtTerms {
  double hessian_term = 0.0;  // 1/(N-1) int |hess u|^2 - (Lap u)^2 / N
  double flux_term = 0.0;     // 1/R int (u_nu - R)^2
  double curvature_flux = 0.0;     // int (H0 - H)(u_nu - q_nu) u_nu
  double curvature_support = 0.0;  // int (H0 - H)(u_nu - R) q_nu
};
SbtTerms sbt_terms(const TorsionSolution& sol);
IdentityReport check_fundamental_sbt(const TorsionSolution& sol);

IdentityReport check_idwps_h(const TorsionSolution& sol);

/// Mean-value gap and its boundary form for one harmonic function g:
///   L(g) = mean_Omega g - mean_Gamma g,
///   form = 1/(N |Omega|) int g (u_nu - R) dS.
struct DualValue {
  double gap = 0.0;
  double boundary_form = 0.0;
  double boundary_norm = 0.0;  // ||g||_{2,Gamma}
};
DualValue dual_functional(const TorsionSolution& sol, const HarmonicBasis& basis, int j);

/// Dual-formulation report for the basis member (degree <= `degree`) with
/// the largest normalized boundary form; falls back to index 0.
IdentityReport check_dual_formulation(const TorsionSolution& sol, int degree = 4);

struct DualNorm {
  double estimate = 0.0;     // sup of |L| on the unit sphere of the subspace
  double closed_form = 0.0;  // ||u_nu - R||_{2,Gamma} / (N |Omega|)
  int degree = 0;
};

/// Subspace estimate of ||L||_2 from the generalized eigenproblem of the
/// functional against the boundary Gram matrix. Throws SolverError when
/// the Gram matrix is numerically singular.
DualNorm dual_norm(const TorsionSolution& sol, int degree = 12);

/// Estimates for degrees 1..max_degree (nested subspaces).
std::vector<DualNorm> dual_norm_sequence(const TorsionSolution& sol, int max_degree);

/// ||h_nu||_{2,Gamma} / ||u_nu - R||_{2,Gamma}; empty for circles or when
/// the denominator is below 1e-12.
std::optional<double> feldman_ratio(const TorsionSolution& sol);

/// Quantities of the oscillation chain for h = q - u, recorded without
/// asserting the chain.
struct OscillationChain {
  double oscillation = 0.0;      // max_Gamma h - min_Gamma h
  double l2_power = 0.0;         // (int h^2)^(1/(N+2))
  double dirichlet_power = 0.0;  // (int |grad h|^2)^(1/(N+2))
};
OscillationChain oscillation_chain(const TorsionSolution& sol);

/// L2 norm of u_nu - R over the exact boundary.
double flux_deviation_l2(const TorsionSolution& sol);

/// All equality reports for one solution, in a fixed order.
std::vector<IdentityReport> verify_solution(const TorsionSolution& sol);

/// Observed order between two consecutive levels; NaN if undefined.
double observed_order(const IdentityReport& coarse, const IdentityReport& fine);

/// verify_solution at each level, in the given order. Levels are solved on
/// up to `threads` threads; the result does not depend on it.
std::vector<std::vector<IdentityReport>> verify_levels(const StarDomain& domain,
                                                       const std::vector<int>& levels,
                                                       int threads = 1);

/// identity,level,h,lhs,rhs,abs_residual,rel_residual,order_estimate, one row
/// per report; the order compares a row with the same identity one level up.
std::string identities_csv(const std::vector<std::vector<IdentityReport>>& by_level);

}  // namespace tlab
