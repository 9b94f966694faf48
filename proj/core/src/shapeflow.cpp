#include "torsionlab/shapeflow.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/core.h>

#include "torsionlab/csv.hpp"
#include "torsionlab/identities.hpp"
#include "torsionlab/mesh.hpp"

namespace tlab {

namespace {

double radial_value(const RadialSpeed& s, double theta) {
  double v = s.dc0;
  for (std::size_t k = 0; k < s.dcos.size(); ++k) v += s.dcos[k] * std::cos((k + 1) * theta);
  for (std::size_t k = 0; k < s.dsin.size(); ++k) v += s.dsin[k] * std::sin((k + 1) * theta);
  return v;
}

// nu . e_r
double radial_cosine(const BoundarySample& s) {
  return s.normal.dot(Vec2(std::cos(s.theta), std::sin(s.theta)));
}

FlowState make_state(const StarDomain& domain, const FlowOptions& options, double V, double R) {
  FlowState s;
  s.domain = domain;
  s.solution = std::make_shared<const TorsionSolution>(solve_torsion(build_mesh(domain, options.level)));
  s.tau = s.solution->tau();
  s.area = s.solution->area();
  s.V = V;
  s.R = options.freeze_R ? R : s.solution->R();
  s.J = s.tau + s.R * s.R * (s.V - s.area);
  s.circle_distance = best_fit_circle(domain, options.circle_samples).distance;
  s.flux_deviation = flux_deviation_l2(*s.solution);
  const double sign = options.orientation == FlowOrientation::kDescent ? 1.0 : -1.0;
  const std::vector<double> phi = privileged_speed(*s.solution);
  double var = 0.0;
  const auto& bps = s.solution->boundary_points();
  for (std::size_t i = 0; i < bps.size(); ++i) {
    var += bps[i].geo.weight * sign * phi[i] * (bps[i].flux * bps[i].flux - s.R * s.R);
  }
  s.variation = var;
  return s;
}

}  // namespace

RadialSpeed random_radial_speed(std::uint64_t seed, int harmonics) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  RadialSpeed s;
  s.dc0 = coeff(rng);
  for (int k = 1; k <= harmonics; ++k) {
    const double decay = std::ldexp(1.0, -k);
    s.dcos.push_back(decay * coeff(rng));
    s.dsin.push_back(decay * coeff(rng));
  }
  return s;
}

std::vector<double> normal_speed(const RadialSpeed& speed, const std::vector<BoundarySample>& samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const BoundarySample& s : samples) {
    out.push_back(radial_value(speed, s.theta) * radial_cosine(s));
  }
  return out;
}

std::vector<double> normal_speed(const RadialSpeed& speed, const std::vector<BoundaryPoint>& points) {
  std::vector<double> out;
  out.reserve(points.size());
  for (const BoundaryPoint& p : points) {
    out.push_back(radial_value(speed, p.geo.theta) * radial_cosine(p.geo));
  }
  return out;
}

double volume_derivative(const StarDomain& domain, std::span<const double> phi) {
  if (phi.empty()) return 0.0;
  const std::vector<BoundarySample> samples = sample_boundary(domain, static_cast<int>(phi.size()));
  double total = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) total += samples[i].weight * phi[i];
  return total;
}

double torsion_derivative(const TorsionSolution& sol, std::span<const double> phi) {
  const auto& bps = sol.boundary_points();
  if (phi.size() != bps.size()) {
    throw ConfigError(fmt::format("speed has {} samples, boundary sampler has {}", phi.size(),
                                  bps.size()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < bps.size(); ++i) {
    total += bps[i].geo.weight * phi[i] * bps[i].flux * bps[i].flux;
  }
  return total;
}

std::vector<double> privileged_speed(const TorsionSolution& sol) {
  std::vector<double> out;
  out.reserve(sol.boundary_points().size());
  for (const BoundaryPoint& bp : sol.boundary_points()) {
    const double q_nu = (bp.geo.x - sol.z()).dot(bp.geo.normal);
    out.push_back(0.5 * (q_nu - bp.flux));
  }
  return out;
}

LagrangeReport lagrange_residual(const TorsionSolution& sol, const StarDomain& domain) {
  const std::vector<double> phi = privileged_speed(sol);
  const double R = sol.R();
  const double dT = torsion_derivative(sol, phi);
  const double dV = volume_derivative(domain, phi);
  LagrangeReport r;
  r.variation = dT - R * R * dV;
  r.variation_mirror = -r.variation;
  r.idwps_lhs = check_fundamental_serrin(sol).lhs;
  return r;
}

const char* to_string(FlowOrientation orientation) noexcept {
  return orientation == FlowOrientation::kDescent ? "descent" : "toward-ball";
}

FlowOrientation parse_orientation(const std::string& name) {
  if (name == "descent") return FlowOrientation::kDescent;
  if (name == "toward-ball") return FlowOrientation::kTowardBall;
  throw ConfigError(fmt::format("unknown flow orientation '{}' (descent | toward-ball)", name));
}

FlowState initial_flow_state(const StarDomain& domain, const FlowOptions& options) {
  domain.validate();
  const AreaPerimeter ap = area_perimeter(domain);
  return make_state(domain, options, ap.area, reference_constants(domain).R);
}

RadialUpdate flow_update(const FlowState& state, double dt, const FlowOptions& options) {
  const TorsionSolution& sol = *state.solution;
  const auto& bps = sol.boundary_points();
  const std::vector<double> phi = privileged_speed(sol);
  const double sign = options.orientation == FlowOrientation::kDescent ? 1.0 : -1.0;
  const int m = static_cast<int>(bps.size());
  std::vector<double> dr(bps.size());
  for (std::size_t i = 0; i < bps.size(); ++i) {
    const double c = radial_cosine(bps[i].geo);
    if (!(c > 0.0)) throw DomainError("boundary is no longer star-shaped about its centre");
    dr[i] = sign * phi[i] * dt / c;
  }

  const int cap = std::clamp(options.harmonics, 0, kMaxHarmonics);
  RadialUpdate up;
  double energy = 0.0;
  for (double v : dr) energy += v * v;
  energy /= m;
  up.coefficients.dc0 = 0.0;
  for (double v : dr) up.coefficients.dc0 += v;
  up.coefficients.dc0 /= m;
  double kept = up.coefficients.dc0 * up.coefficients.dc0;
  up.coefficients.dcos.assign(static_cast<std::size_t>(cap), 0.0);
  up.coefficients.dsin.assign(static_cast<std::size_t>(cap), 0.0);
  for (int k = 1; k <= cap && 2 * k < m; ++k) {
    double a = 0.0;
    double b = 0.0;
    for (int j = 0; j < m; ++j) {
      const double th = bps[j].geo.theta;
      a += dr[j] * std::cos(k * th);
      b += dr[j] * std::sin(k * th);
    }
    a *= 2.0 / m;
    b *= 2.0 / m;
    up.coefficients.dcos[k - 1] = a;
    up.coefficients.dsin[k - 1] = b;
    kept += 0.5 * (a * a + b * b);
  }
  up.tail_energy = energy > 0.0 ? std::max(0.0, energy - kept) / energy : 0.0;
  for (const BoundaryPoint& bp : bps) {
    up.max_change = std::max(up.max_change, std::abs(radial_value(up.coefficients, bp.geo.theta)));
  }
  return up;
}

FlowState flow_step(const FlowState& state, double dt, const FlowOptions& options) {
  if (!(dt > 0.0)) throw ConfigError(fmt::format("flow step dt = {} must be positive", dt));
  double speed = 0.0;
  for (double v : privileged_speed(*state.solution)) speed = std::max(speed, std::abs(v));
  if (speed < options.stationary_speed) {
    FlowState next = state;
    next.step = state.step + 1;
    next.t = state.t + dt;
    next.dt = dt;
    next.tail_energy = 0.0;
    next.rejections = 0;
    return next;
  }
  int rejections = 0;
  std::string last_reason = "none";
  for (double trial = dt; trial >= options.min_dt; trial *= 0.5, ++rejections) {
    const RadialUpdate up = flow_update(state, trial, options);
    if (up.tail_energy > options.tail_tolerance) {
      // The dropped fraction does not depend on dt, so halving cannot help.
      last_reason = fmt::format("tail energy {:.3g} above {:.3g}", up.tail_energy, options.tail_tolerance);
      break;
    }
    FlowState next;
    try {
      const StarDomain domain = state.domain.perturbed(1.0, up.coefficients.dc0, up.coefficients.dcos,
                                                       up.coefficients.dsin);
      next = make_state(domain, options, state.V, state.R);
    } catch (const DomainError& e) {
      last_reason = e.what();
      continue;
    } catch (const MeshError& e) {
      last_reason = e.what();
      continue;
    }
    const bool descent = options.orientation == FlowOrientation::kDescent;
    if (descent ? next.J > state.J : next.J < state.J) {
      last_reason = fmt::format("J moved from {:.17g} to {:.17g}", state.J, next.J);
      continue;
    }
    next.step = state.step + 1;
    next.t = state.t + trial;
    next.dt = trial;
    next.tail_energy = up.tail_energy;
    next.rejections = rejections;
    return next;
  }
  throw StagnationError(
      fmt::format("flow stagnated at t = {} (J = {:.17g}, circle distance {:.3g}): no acceptable step "
                  "from dt = {} after {} halvings; last rejection: {}",
                  state.t, state.J, state.circle_distance, dt, rejections, last_reason),
      state.t, state.J, dt * std::ldexp(1.0, -rejections));
}

FlowResult run_flow(const StarDomain& domain, double dt, int max_steps, const FlowOptions& options) {
  if (max_steps < 0) throw ConfigError("max_steps must be non-negative");
  FlowResult result;
  result.trajectory.push_back(initial_flow_state(domain, options));
  while (true) {
    const FlowState& cur = result.trajectory.back();
    if (cur.circle_distance < options.target_distance) {
      result.converged = true;
      break;
    }
    if (cur.step >= max_steps) break;
    result.trajectory.push_back(flow_step(cur, dt, options));
  }
  return result;
}

std::string trajectory_csv(const std::vector<FlowState>& trajectory) {
  std::string out =
      "step,t,dt,J,tau,area,circle_distance,flux_deviation,variation,tail_energy,rejections\n";
  for (const FlowState& s : trajectory) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", s.step, format_number(s.t),
                       format_number(s.dt), format_number(s.J), format_number(s.tau),
                       format_number(s.area), format_number(s.circle_distance),
                       format_number(s.flux_deviation), format_number(s.variation),
                       format_number(s.tail_energy), s.rejections);
  }
  return out;
}

}  // namespace tlab
