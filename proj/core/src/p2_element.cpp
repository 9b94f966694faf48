#include "torsionlab/p2_element.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

namespace tlab::p2 {

namespace {

template <unsigned N>
LineRule make_line_rule() {
  using G = boost::math::quadrature::gauss<double, N>;
  const auto& x = G::abscissa();
  const auto& w = G::weights();
  LineRule rule;
  // Boost stores the non-negative half of the symmetric rule.
  for (std::size_t i = x.size(); i-- > 0;) {
    if (x[i] == 0.0) continue;
    rule.s.push_back(0.5 * (1.0 - x[i]));
    rule.w.push_back(0.5 * w[i]);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    rule.s.push_back(0.5 * (1.0 + x[i]));
    rule.w.push_back(0.5 * w[i]);
  }
  return rule;
}

}  // namespace

ShapeEval shape(double xi, double eta) {
  ShapeEval s;
  s.xi = xi;
  s.eta = eta;
  const double l0 = 1.0 - xi - eta;
  const double l1 = xi;
  const double l2 = eta;
  const Vec2 g0(-1.0, -1.0);
  const Vec2 g1(1.0, 0.0);
  const Vec2 g2(0.0, 1.0);

  s.value = {l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
             4 * l0 * l1,       4 * l1 * l2,       4 * l2 * l0};
  s.grad = {(4 * l0 - 1) * g0,       (4 * l1 - 1) * g1,       (4 * l2 - 1) * g2,
            4 * (l1 * g0 + l0 * g1), 4 * (l2 * g1 + l1 * g2), 4 * (l0 * g2 + l2 * g0)};
  auto outer = [](const Vec2& a, const Vec2& b) -> Mat2 { return a * b.transpose(); };
  s.hess = {4 * outer(g0, g0),
            4 * outer(g1, g1),
            4 * outer(g2, g2),
            4 * (outer(g0, g1) + outer(g1, g0)),
            4 * (outer(g1, g2) + outer(g2, g1)),
            4 * (outer(g2, g0) + outer(g0, g2))};
  return s;
}

const std::array<Vec2, 6>& reference_nodes() {
  static const std::array<Vec2, 6> nodes = {Vec2(0, 0),   Vec2(1, 0),     Vec2(0, 1),
                                            Vec2(0.5, 0), Vec2(0.5, 0.5), Vec2(0, 0.5)};
  return nodes;
}

const std::vector<QuadPoint>& triangle_rule() {
  static const std::vector<QuadPoint> rule = [] {
    const LineRule& g = line_rule(5);
    std::vector<QuadPoint> pts;
    for (std::size_t i = 0; i < g.s.size(); ++i) {
      for (std::size_t j = 0; j < g.s.size(); ++j) {
        const double t = g.s[j];
        pts.push_back({shape(g.s[i] * (1.0 - t), t), g.w[i] * g.w[j] * (1.0 - t)});
      }
    }
    return pts;
  }();
  return rule;
}

const LineRule& line_rule(int points) {
  static const std::array<LineRule, 8> rules = {
      make_line_rule<3>(), make_line_rule<4>(), make_line_rule<5>(), make_line_rule<6>(),
      make_line_rule<7>(), make_line_rule<8>(), make_line_rule<9>(), make_line_rule<10>()};
  if (points < 3 || points > 10) throw std::out_of_range("line rule supports 3..10 points");
  return rules[static_cast<std::size_t>(points - 3)];
}

MappedPoint map_point(const ElementNodes& nodes, const ShapeEval& ref) {
  MappedPoint mp;
  for (int k = 0; k < 6; ++k) {
    mp.x += ref.value[k] * nodes[k];
    mp.jac += nodes[k] * ref.grad[k].transpose();
  }
  mp.det = mp.jac.determinant();
  mp.jac_inv = mp.jac.inverse();
  const Mat2 jit = mp.jac_inv.transpose();
  for (int k = 0; k < 6; ++k) mp.grad[k] = jit * ref.grad[k];
  return mp;
}

double field_value(const ElementValues& values, const ShapeEval& ref) {
  double v = 0.0;
  for (int k = 0; k < 6; ++k) v += values[k] * ref.value[k];
  return v;
}

Vec2 field_gradient(const ElementValues& values, const MappedPoint& mp) {
  Vec2 g = Vec2::Zero();
  for (int k = 0; k < 6; ++k) g += values[k] * mp.grad[k];
  return g;
}

Mat2 field_hessian(const ElementNodes& nodes, const ElementValues& values, const ShapeEval& ref,
                   const MappedPoint& mp) {
  Mat2 h_ref = Mat2::Zero();
  Mat2 fx = Mat2::Zero();
  Mat2 fy = Mat2::Zero();
  for (int k = 0; k < 6; ++k) {
    h_ref += values[k] * ref.hess[k];
    fx += nodes[k].x() * ref.hess[k];
    fy += nodes[k].y() * ref.hess[k];
  }
  const Vec2 g = field_gradient(values, mp);
  const Mat2 corrected = h_ref - g.x() * fx - g.y() * fy;
  return mp.jac_inv.transpose() * corrected * mp.jac_inv;
}

bool locate(const ElementNodes& nodes, const Vec2& x, double* xi, double* eta) {
  // Affine guess from the corners, then Newton on the quadratic map.
  Mat2 a;
  a.col(0) = nodes[1] - nodes[0];
  a.col(1) = nodes[2] - nodes[0];
  Vec2 p = a.inverse() * (x - nodes[0]);
  for (int it = 0; it < 20; ++it) {
    const ShapeEval s = shape(p.x(), p.y());
    const MappedPoint mp = map_point(nodes, s);
    const Vec2 step = mp.jac_inv * (x - mp.x);
    p += step;
    if (step.norm() < 1e-15) break;
  }
  *xi = p.x();
  *eta = p.y();
  constexpr double tol = 1e-10;
  return p.x() >= -tol && p.y() >= -tol && p.x() + p.y() <= 1.0 + tol;
}

}  // namespace tlab::p2
