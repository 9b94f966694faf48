#pragma once

#include <array>
#include <span>
#include <vector>

#include "torsionlab/geometry.hpp"

namespace tlab::p2 {

/// Quadratic Lagrange basis on the reference triangle (0,0), (1,0), (0,1) with
/// mid-edge nodes on (0,1), (1,2), (2,0).
struct ShapeEval {
  double xi = 0.0;
  double eta = 0.0;
  std::array<double, 6> value{};
  std::array<Vec2, 6> grad{};
  std::array<Mat2, 6> hess{};  // constant per basis function
};

ShapeEval shape(double xi, double eta);

/// Reference coordinates of the six nodes.
const std::array<Vec2, 6>& reference_nodes();

struct QuadPoint {
  ShapeEval shape;
  double weight = 0.0;  // reference weights sum to 1/2
};

/// Collapsed Gauss-Legendre rule, exact for polynomials of degree 8.
const std::vector<QuadPoint>& triangle_rule();

/// Gauss-Legendre rule on [0, 1] with `points` nodes (supported: 3..10).
struct LineRule {
  std::vector<double> s;
  std::vector<double> w;
};
const LineRule& line_rule(int points);

/// Isoparametric map data at one reference point.
struct MappedPoint {
  Vec2 x = Vec2::Zero();
  Mat2 jac = Mat2::Zero();     // d x / d (xi, eta)
  Mat2 jac_inv = Mat2::Zero();
  double det = 0.0;
  std::array<Vec2, 6> grad{};  // physical gradients of the basis
};

using ElementNodes = std::array<Vec2, 6>;
using ElementValues = std::array<double, 6>;

MappedPoint map_point(const ElementNodes& nodes, const ShapeEval& ref);

double field_value(const ElementValues& values, const ShapeEval& ref);
Vec2 field_gradient(const ElementValues& values, const MappedPoint& mp);

/// Physical hessian of the isoparametric field, including the curvature of
/// the element map on curved boundary elements.
Mat2 field_hessian(const ElementNodes& nodes, const ElementValues& values, const ShapeEval& ref,
                   const MappedPoint& mp);

/// Inverse isoparametric map by Newton iteration; returns false if the point
/// is not inside the element (with a small tolerance).
bool locate(const ElementNodes& nodes, const Vec2& x, double* xi, double* eta);

}  // namespace tlab::p2
