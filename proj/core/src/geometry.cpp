#include "torsionlab/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <fmt/core.h>

#include "torsionlab/error.hpp"

namespace tlab {

namespace {

constexpr int kValidationSamples = 4096;

Vec2 unit(double theta) { return {std::cos(theta), std::sin(theta)}; }

RadialJet ellipse_jet(const EllipsePart& e, double theta) {
  const double phi = theta - e.angle;
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  const double a2 = e.a * e.a;
  const double b2 = e.b * e.b;
  const double d = b2 * c * c + a2 * s * s;
  const double dd = (a2 - b2) * std::sin(2.0 * phi);
  const double ddd = 2.0 * (a2 - b2) * std::cos(2.0 * phi);
  const double ab = e.a * e.b;
  const double inv_sqrt = 1.0 / std::sqrt(d);
  const double inv_d32 = inv_sqrt / d;
  const double inv_d52 = inv_d32 / d;
  return {ab * inv_sqrt, -0.5 * ab * inv_d32 * dd,
          ab * (0.75 * inv_d52 * dd * dd - 0.5 * inv_d32 * ddd)};
}

// Coordinate pattern search shared by the asymmetry and circle-fit
// minimizations. Halves the step whenever no probe improves.
template <class F>
Vec2 pattern_search(F&& objective, Vec2 x, double step, double min_step, bool diagonals) {
  static const std::array<Vec2, 8> kDirs = {
      Vec2(1, 0), Vec2(-1, 0), Vec2(0, 1), Vec2(0, -1),
      Vec2(M_SQRT1_2, M_SQRT1_2), Vec2(-M_SQRT1_2, -M_SQRT1_2),
      Vec2(M_SQRT1_2, -M_SQRT1_2), Vec2(-M_SQRT1_2, M_SQRT1_2)};
  const std::size_t ndirs = diagonals ? 8 : 4;
  double fx = objective(x);
  while (step >= min_step) {
    bool improved = false;
    for (std::size_t d = 0; d < ndirs; ++d) {
      const Vec2 trial = x + step * kDirs[d];
      const double ft = objective(trial);
      if (ft < fx) {
        x = trial;
        fx = ft;
        improved = true;
        break;
      }
    }
    if (!improved) step *= 0.5;
  }
  return x;
}

}  // namespace

StarDomain StarDomain::circle(double radius, const Vec2& center) {
  return fourier(radius, {}, {}, center);
}

StarDomain StarDomain::fourier(double c0, std::vector<double> cos_coeffs,
                               std::vector<double> sin_coeffs, const Vec2& center) {
  const std::size_t k = std::max(cos_coeffs.size(), sin_coeffs.size());
  cos_coeffs.resize(k, 0.0);
  sin_coeffs.resize(k, 0.0);
  StarDomain d;
  d.center_ = center;
  d.c0_ = c0;
  d.cos_ = std::move(cos_coeffs);
  d.sin_ = std::move(sin_coeffs);
  d.validate();
  return d;
}

StarDomain StarDomain::ellipse(double a, double b, double angle, const Vec2& center) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw DomainError(fmt::format("ellipse semi-axes must be positive, got a={} b={}", a, b));
  }
  StarDomain d;
  d.center_ = center;
  d.ellipse_ = EllipsePart{a, b, angle};
  d.validate();
  return d;
}

RadialJet StarDomain::radial(double theta) const {
  RadialJet jet{c0_, 0.0, 0.0};
  if (ellipse_) {
    const RadialJet e = ellipse_jet(*ellipse_, theta);
    jet.r += e.r;
    jet.dr += e.dr;
    jet.ddr += e.ddr;
  }
  const double c1 = std::cos(theta);
  const double s1 = std::sin(theta);
  double ck = 1.0;
  double sk = 0.0;
  for (std::size_t i = 0; i < cos_.size(); ++i) {
    const double cn = ck * c1 - sk * s1;
    sk = sk * c1 + ck * s1;
    ck = cn;
    const double k = static_cast<double>(i + 1);
    const double a = cos_[i];
    const double b = sin_[i];
    jet.r += a * ck + b * sk;
    jet.dr += k * (-a * sk + b * ck);
    jet.ddr += -k * k * (a * ck + b * sk);
  }
  return jet;
}

Vec2 StarDomain::point(double theta) const { return center_ + radius(theta) * unit(theta); }

bool StarDomain::is_circle() const {
  const bool series_flat = std::all_of(cos_.begin(), cos_.end(), [](double v) { return v == 0.0; }) &&
                           std::all_of(sin_.begin(), sin_.end(), [](double v) { return v == 0.0; });
  if (!series_flat) return false;
  return !ellipse_ || ellipse_->a == ellipse_->b;
}

StarDomain StarDomain::translated(const Vec2& shift) const {
  StarDomain d = *this;
  d.center_ += shift;
  return d;
}

StarDomain StarDomain::rotated(double angle) const {
  StarDomain d = *this;
  for (std::size_t i = 0; i < cos_.size(); ++i) {
    const double k = static_cast<double>(i + 1);
    const double c = std::cos(k * angle);
    const double s = std::sin(k * angle);
    d.cos_[i] = cos_[i] * c - sin_[i] * s;
    d.sin_[i] = cos_[i] * s + sin_[i] * c;
  }
  if (d.ellipse_) d.ellipse_->angle += angle;
  return d;
}

StarDomain StarDomain::perturbed(double scale, double dc0, std::span<const double> dcos,
                                 std::span<const double> dsin) const {
  StarDomain d = *this;
  const std::size_t k = std::max({d.cos_.size(), dcos.size(), dsin.size()});
  d.cos_.resize(k, 0.0);
  d.sin_.resize(k, 0.0);
  d.c0_ += scale * dc0;
  for (std::size_t i = 0; i < dcos.size(); ++i) d.cos_[i] += scale * dcos[i];
  for (std::size_t i = 0; i < dsin.size(); ++i) d.sin_[i] += scale * dsin[i];
  d.validate();
  return d;
}

void StarDomain::validate() const {
  if (harmonics() > kMaxHarmonics) {
    throw DomainError(fmt::format("radial series has {} harmonics, cap is {}", harmonics(),
                                  kMaxHarmonics));
  }
  if (!std::isfinite(c0_) || !center_.allFinite()) {
    throw DomainError("domain has non-finite coefficients");
  }
  for (std::size_t i = 0; i < cos_.size(); ++i) {
    if (!std::isfinite(cos_[i]) || !std::isfinite(sin_[i])) {
      throw DomainError(fmt::format("non-finite coefficient at harmonic {}", i + 1));
    }
  }
  for (int j = 0; j < kValidationSamples; ++j) {
    const double theta = kTwoPi * j / kValidationSamples;
    const double r = radius(theta);
    if (!(r > 0.0)) {
      throw DomainError(
          fmt::format("radial function is non-positive (r = {:.6g}) at theta = {:.6f}", r, theta));
    }
  }
}

BoundarySample boundary_sample_at(const StarDomain& domain, double theta, double dtheta) {
  const RadialJet j = domain.radial(theta);
  const Vec2 e = unit(theta);
  const Vec2 e_perp(-e.y(), e.x());
  const Vec2 tangent = j.dr * e + j.r * e_perp;
  const double speed = std::hypot(j.r, j.dr);

  BoundarySample s;
  s.theta = theta;
  s.x = domain.center() + j.r * e;
  s.normal = Vec2(tangent.y(), -tangent.x()) / speed;
  s.curvature = (j.r * j.r + 2.0 * j.dr * j.dr - j.r * j.ddr) / (speed * speed * speed);
  s.speed = speed;
  s.weight = speed * dtheta;
  s.support = s.x.dot(s.normal);
  return s;
}

std::vector<BoundarySample> sample_boundary(const StarDomain& domain, int m) {
  if (m < 16) throw DomainError(fmt::format("sample count must be >= 16, got {}", m));
  std::vector<BoundarySample> out;
  out.reserve(static_cast<std::size_t>(m));
  const double dtheta = kTwoPi / m;
  for (int j = 0; j < m; ++j) {
    const double theta = dtheta * j;
    if (!(domain.radius(theta) > 0.0)) {
      throw DomainError(fmt::format("non-positive radius at sample {} (theta = {:.6f})", j, theta));
    }
    out.push_back(boundary_sample_at(domain, theta, dtheta));
  }
  return out;
}

AreaPerimeter area_perimeter(const StarDomain& domain) {
  auto evaluate = [&](int m) {
    AreaPerimeter ap;
    const double dtheta = kTwoPi / m;
    for (int j = 0; j < m; ++j) {
      const RadialJet jet = domain.radial(dtheta * j);
      ap.area += 0.5 * jet.r * jet.r;
      ap.perimeter += std::hypot(jet.r, jet.dr);
    }
    ap.area *= dtheta;
    ap.perimeter *= dtheta;
    return ap;
  };

  constexpr int kMaxSamples = 1 << 22;
  int m = 64;
  AreaPerimeter prev = evaluate(m);
  while (m < kMaxSamples) {
    m *= 2;
    const AreaPerimeter next = evaluate(m);
    const bool area_ok = std::abs(next.area - prev.area) <= 1e-12 * std::abs(next.area);
    const bool perim_ok =
        std::abs(next.perimeter - prev.perimeter) <= 1e-12 * std::abs(next.perimeter);
    prev = next;
    if (area_ok && perim_ok) return prev;
  }
  return prev;
}

ReferenceConstants reference_constants(const StarDomain& domain) {
  const AreaPerimeter ap = area_perimeter(domain);
  const double R = kDim * ap.area / ap.perimeter;
  return {R, 1.0 / R};
}

Vec2 centroid(const StarDomain& domain) {
  constexpr int m = 4096;
  const double dtheta = kTwoPi / m;
  double area = 0.0;
  Vec2 moment = Vec2::Zero();
  for (int j = 0; j < m; ++j) {
    const double theta = dtheta * j;
    const double r = domain.radius(theta);
    area += 0.5 * r * r;
    moment += (r * r * r / 3.0) * unit(theta);
  }
  return domain.center() + moment / area;
}

bool contains(const StarDomain& domain, const Vec2& p) {
  const Vec2 d = p - domain.center();
  const double rho = d.norm();
  if (rho == 0.0) return true;
  return rho < domain.radius(std::atan2(d.y(), d.x()));
}

TouchingRadii touching_radii(const StarDomain& domain, const Vec2& z) {
  constexpr int m = 4096;
  const double dtheta = kTwoPi / m;
  auto dist = [&](double theta) { return (domain.point(theta) - z).norm(); };

  int jmin = 0;
  int jmax = 0;
  double dmin = std::numeric_limits<double>::infinity();
  double dmax = -dmin;
  for (int j = 0; j < m; ++j) {
    const double d = dist(dtheta * j);
    if (d < dmin) {
      dmin = d;
      jmin = j;
    }
    if (d > dmax) {
      dmax = d;
      jmax = j;
    }
  }

  constexpr int bits = std::numeric_limits<double>::digits / 2;
  boost::uintmax_t iters = 200;
  const auto lo = boost::math::tools::brent_find_minima(
      dist, dtheta * (jmin - 1), dtheta * (jmin + 1), bits, iters);
  iters = 200;
  const auto hi = boost::math::tools::brent_find_minima(
      [&](double t) { return -dist(t); }, dtheta * (jmax - 1), dtheta * (jmax + 1), bits, iters);

  TouchingRadii out;
  out.rho_i = std::min(dmin, lo.second);
  out.rho_e = std::max(dmax, -hi.second);
  out.center_inside = contains(domain, z);
  return out;
}

namespace {

// Symmetric difference by radial integration about the domain centre. Valid
// when the domain centre lies inside the ball, so both sets are star-shaped
// about it.
double symdiff_radial(const StarDomain& domain, const Vec2& rel_center, double radius) {
  const double c2 = rel_center.squaredNorm();
  auto mismatch = [&](double theta) {
    const Vec2 e = unit(theta);
    const double p = e.dot(rel_center);
    const double ball = p + std::sqrt(p * p - c2 + radius * radius);
    const double r = domain.radius(theta);
    return r * r - ball * ball;
  };

  using Gauss = boost::math::quadrature::gauss<double, 10>;
  auto piece = [&](double a, double b) {
    return Gauss::integrate([&](double t) { return 0.5 * std::abs(mismatch(t)); }, a, b);
  };

  constexpr int m = 256;
  const double dtheta = kTwoPi / m;
  double total = 0.0;
  double fa = mismatch(0.0);
  for (int j = 0; j < m; ++j) {
    const double a = dtheta * j;
    const double b = dtheta * (j + 1);
    const double fb = mismatch(b);
    if ((fa < 0.0) != (fb < 0.0) && fa != 0.0 && fb != 0.0) {
      boost::uintmax_t iters = 100;
      auto tol = boost::math::tools::eps_tolerance<double>(50);
      const auto root = boost::math::tools::toms748_solve(mismatch, a, b, fa, fb, tol, iters);
      const double t = 0.5 * (root.first + root.second);
      total += piece(a, t) + piece(t, b);
    } else {
      total += piece(a, b);
    }
    fa = fb;
  }
  return total;
}

double symdiff_grid(const StarDomain& domain, const Vec2& ball_center, double radius) {
  double rmax = 0.0;
  for (int j = 0; j < 1024; ++j) rmax = std::max(rmax, domain.radius(kTwoPi * j / 1024));
  const Vec2 lo = domain.center().cwiseMin(ball_center) - Vec2::Constant(std::max(rmax, radius));
  const Vec2 hi = domain.center().cwiseMax(ball_center) + Vec2::Constant(std::max(rmax, radius));
  const double h = 1e-3 * std::max(rmax, radius);
  const int nx = static_cast<int>(std::ceil((hi.x() - lo.x()) / h));
  const int ny = static_cast<int>(std::ceil((hi.y() - lo.y()) / h));
  const double hx = (hi.x() - lo.x()) / nx;
  const double hy = (hi.y() - lo.y()) / ny;
  long count = 0;
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      const Vec2 p(lo.x() + (i + 0.5) * hx, lo.y() + (j + 0.5) * hy);
      const bool in_omega = contains(domain, p);
      const bool in_ball = (p - ball_center).squaredNorm() < radius * radius;
      if (in_omega != in_ball) ++count;
    }
  }
  return static_cast<double>(count) * hx * hy;
}

}  // namespace

double symmetric_difference_area(const StarDomain& domain, const Vec2& center, double radius) {
  const Vec2 rel = center - domain.center();
  if (rel.norm() < radius) return symdiff_radial(domain, rel, radius);
  return symdiff_grid(domain, center, radius);
}

Asymmetry fraenkel_asymmetry(const StarDomain& domain, double R) {
  if (!(R > 0.0)) throw DomainError(fmt::format("asymmetry radius must be positive, got {}", R));
  const double ball_area = kPi * R * R;
  auto objective = [&](const Vec2& x) { return symmetric_difference_area(domain, x, R) / ball_area; };
  const Vec2 best = pattern_search(objective, centroid(domain), 0.1 * R, 1e-6, false);
  return {objective(best), best};
}

StarDomain random_fourier_domain(std::uint64_t seed, int max_harmonics, double amplitude) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> kdist(1, std::max(1, max_harmonics));
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  const int k = kdist(rng);
  std::vector<double> a(static_cast<std::size_t>(k));
  std::vector<double> b(static_cast<std::size_t>(k));
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    // Decay keeps random curves smooth and mostly mean-convex.
    const double decay = 1.0 / (1.0 + i);
    a[i] = decay * coeff(rng);
    b[i] = decay * coeff(rng);
    total += std::abs(a[i]) + std::abs(b[i]);
  }
  const double scale = total > 0.0 ? amplitude / total : 0.0;
  for (int i = 0; i < k; ++i) {
    a[i] *= scale;
    b[i] *= scale;
  }
  return StarDomain::fourier(1.0, std::move(a), std::move(b));
}

CircleFit best_fit_circle(const StarDomain& domain, int m) {
  const std::vector<BoundarySample> samples = sample_boundary(domain, m);
  auto spread = [&](const Vec2& z, double* rmin, double* rmax) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const BoundarySample& s : samples) {
      const double d = (s.x - z).norm();
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    if (rmin) *rmin = lo;
    if (rmax) *rmax = hi;
    return 0.5 * (hi - lo);
  };
  const double scale = std::sqrt(area_perimeter(domain).area / kPi);
  const Vec2 z = pattern_search([&](const Vec2& p) { return spread(p, nullptr, nullptr); },
                                centroid(domain), 0.1 * scale, 1e-10 * scale, true);
  CircleFit fit;
  double lo = 0.0;
  double hi = 0.0;
  fit.distance = spread(z, &lo, &hi);
  fit.center = z;
  fit.radius = 0.5 * (lo + hi);
  return fit;
}

}  // namespace tlab
