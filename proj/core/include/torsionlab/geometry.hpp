#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace tlab {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Space dimension used by every discretized computation. Closed-form radial
/// formulas take the dimension as an argument instead.
inline constexpr int kDim = 2;

/// Upper bound on the number of trigonometric harmonics in a radial series.
inline constexpr int kMaxHarmonics = 64;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Semi-axes and orientation of an ellipse centred at the domain centre.
struct EllipsePart {
  double a = 1.0;
  double b = 1.0;
  double angle = 0.0;
};

/// Radial function and its first two derivatives with respect to theta.
struct RadialJet {
  double r = 0.0;
  double dr = 0.0;
  double ddr = 0.0;
};

/// A smooth planar domain that is star-shaped about `center()`.
///
/// The boundary is x(theta) = center + r(theta) (cos theta, sin theta) with
///
///   r(theta) = r_ellipse(theta) + c0 + sum_k (a_k cos k theta + b_k sin k theta),
///
/// where the ellipse part is optional. A pure Fourier domain has no ellipse
/// part; a pure ellipse has c0 = 0 and no coefficients. The sum form lets an
/// ellipse carry a trigonometric perturbation, which the shape-derivative
/// finite differences need.
class StarDomain {
 public:
  static StarDomain circle(double radius, const Vec2& center = Vec2::Zero());
  static StarDomain fourier(double c0, std::vector<double> cos_coeffs,
                            std::vector<double> sin_coeffs,
                            const Vec2& center = Vec2::Zero());
  static StarDomain ellipse(double a, double b, double angle = 0.0,
                            const Vec2& center = Vec2::Zero());

  RadialJet radial(double theta) const;
  double radius(double theta) const { return radial(theta).r; }
  Vec2 point(double theta) const;

  const Vec2& center() const { return center_; }
  double c0() const { return c0_; }
  const std::vector<double>& cos_coeffs() const { return cos_; }
  const std::vector<double>& sin_coeffs() const { return sin_; }
  const std::optional<EllipsePart>& ellipse_part() const { return ellipse_; }

  /// Number of trigonometric harmonics carried by the series part.
  int harmonics() const { return static_cast<int>(cos_.size()); }

  /// True when the boundary is exactly a circle about center().
  bool is_circle() const;

  StarDomain translated(const Vec2& shift) const;
  StarDomain rotated(double angle) const;

  /// Adds `scale * (dc0 + sum dcos_k cos k theta + dsin_k sin k theta)` to r.
  StarDomain perturbed(double scale, double dc0, std::span<const double> dcos,
                       std::span<const double> dsin) const;

  /// Throws DomainError unless r > 0 on a fine grid and the harmonic cap holds.
  void validate() const;

 private:
  StarDomain() = default;

  Vec2 center_ = Vec2::Zero();
  double c0_ = 0.0;
  std::vector<double> cos_;
  std::vector<double> sin_;
  std::optional<EllipsePart> ellipse_;
};

/// Exact boundary geometry at one parameter value.
struct BoundarySample {
  double theta = 0.0;
  Vec2 x = Vec2::Zero();
  Vec2 normal = Vec2::Zero();  // unit outward
  double curvature = 0.0;      // mean curvature H (curve curvature in 2-D)
  double speed = 0.0;          // |dx/dtheta|
  double weight = 0.0;         // arc-length quadrature weight
  double support = 0.0;        // x . normal, with x measured from the origin
};

/// Geometry at `theta`; `dtheta` is the parameter-space quadrature weight.
BoundarySample boundary_sample_at(const StarDomain& domain, double theta, double dtheta);

/// `m` equispaced samples, theta_j = 2 pi j / m, with trapezoid weights.
std::vector<BoundarySample> sample_boundary(const StarDomain& domain, int m);

struct AreaPerimeter {
  double area = 0.0;
  double perimeter = 0.0;
};

AreaPerimeter area_perimeter(const StarDomain& domain);

/// R = N |Omega| / |Gamma| and H0 = 1 / R.
struct ReferenceConstants {
  double R = 0.0;
  double H0 = 0.0;
};

ReferenceConstants reference_constants(const StarDomain& domain);

/// Area centroid of the domain.
Vec2 centroid(const StarDomain& domain);

/// True when p lies strictly inside the domain.
bool contains(const StarDomain& domain, const Vec2& p);

struct TouchingRadii {
  double rho_i = 0.0;
  double rho_e = 0.0;
  bool center_inside = true;
};

/// Radii of the largest inner and smallest outer circles about z that
/// sandwich the boundary.
TouchingRadii touching_radii(const StarDomain& domain, const Vec2& z);

/// |Omega symmetric-difference B(center, radius)|.
double symmetric_difference_area(const StarDomain& domain, const Vec2& center, double radius);

struct Asymmetry {
  double value = 0.0;
  Vec2 center = Vec2::Zero();
};

/// inf over centres of |Omega sym-diff B| / |B| for balls of radius R.
Asymmetry fraenkel_asymmetry(const StarDomain& domain, double R);

struct CircleFit {
  double distance = 0.0;
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
};

/// Random near-circular Fourier domain with c0 = 1 and at most
/// `max_harmonics` modes whose absolute coefficients sum to `amplitude` < 1.
StarDomain random_fourier_domain(std::uint64_t seed, int max_harmonics = 6,
                                 double amplitude = 0.3);

/// Minimax circle fit: min over (z, rho) of max_j ||x_j - z| - rho| on `m`
/// boundary samples.
CircleFit best_fit_circle(const StarDomain& domain, int m = 512);

}  // namespace tlab
