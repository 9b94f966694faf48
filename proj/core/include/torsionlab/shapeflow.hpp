#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "torsionlab/error.hpp"
#include "torsionlab/geometry.hpp"
#include "torsionlab/torsion.hpp"

namespace tlab {

/// Radial velocity field dr/dt = dc0 + sum dcos_k cos k theta + dsin_k sin k theta.
struct RadialSpeed {
  double dc0 = 0.0;
  std::vector<double> dcos;
  std::vector<double> dsin;
};

/// Smooth random radial speed with `harmonics` modes and coefficients in [-1, 1] * 2^-k.
RadialSpeed random_radial_speed(std::uint64_t seed, int harmonics = 4);

/// Normal speed phi = dr * (nu . e_r) of a radial speed on `samples`.
std::vector<double> normal_speed(const RadialSpeed& speed, const std::vector<BoundarySample>& samples);
std::vector<double> normal_speed(const RadialSpeed& speed, const std::vector<BoundaryPoint>& points);

/// int phi dS with phi given on sample_boundary(domain, phi.size()).
double volume_derivative(const StarDomain& domain, std::span<const double> phi);

/// int phi u_nu^2 dS with phi given on sol.boundary_points(). Outward phi
/// increases tau under this sign.
double torsion_derivative(const TorsionSolution& sol, std::span<const double> phi);

/// phi* = (q_nu - u_nu) / 2 on sol.boundary_points().
std::vector<double> privileged_speed(const TorsionSolution& sol);

struct LagrangeReport {
  /// dJ/dt of J = tau + R^2 (V - |Omega|) under phi*, outward-positive sign.
  double variation = 0.0;
  /// Same quantity under the opposite orientation convention.
  double variation_mirror = 0.0;
  /// int (-u) (|hess u|^2 - (Lap u)^2 / N), computed in the interior.
  double idwps_lhs = 0.0;
};

/// First variation of the Lagrangian under phi* alongside the interior
/// integral it should match in absolute value.
LagrangeReport lagrange_residual(const TorsionSolution& sol, const StarDomain& domain);

enum class FlowOrientation {
  kDescent,     // phi*, steps must not increase J
  kTowardBall,  // -phi*, steps must not decrease J
};

const char* to_string(FlowOrientation orientation) noexcept;
FlowOrientation parse_orientation(const std::string& name);

struct FlowOptions {
  int level = 4;
  bool freeze_R = true;
  FlowOrientation orientation = FlowOrientation::kDescent;
  int harmonics = 32;             // coefficient cap of the re-projected radius
  double tail_tolerance = 0.01;   // max spectral energy fraction dropped by the cap
  double target_distance = 1e-3;  // run_flow stops below this circle distance
  double min_dt = 1e-8;
  /// sup |phi*| below this is flux discretization noise; the state is then
  /// stationary and flow_step leaves the radius unchanged.
  double stationary_speed = 1e-6;
  int circle_samples = 512;
};

/// Immutable snapshot of the flow at one accepted time.
struct FlowState {
  StarDomain domain = StarDomain::circle(1.0);
  std::shared_ptr<const TorsionSolution> solution;
  int step = 0;
  double t = 0.0;
  double dt = 0.0;  // step that produced this state (0 for the initial state)
  double tau = 0.0;
  double area = 0.0;
  double V = 0.0;  // target volume, fixed along the trajectory
  double R = 0.0;  // reference radius in J
  double J = 0.0;
  double circle_distance = 0.0;
  double flux_deviation = 0.0;  // ||u_nu - R_current||_{2,Gamma}
  double variation = 0.0;       // dJ/dt along the chosen orientation at this state
  double tail_energy = 0.0;     // dropped fraction of the update that produced this state
  int rejections = 0;           // halvings before acceptance
};

/// Solves on `domain` and fills the initial state (V = |Omega|, R from the domain).
FlowState initial_flow_state(const StarDomain& domain, const FlowOptions& options);

/// Raised when dt falls below options.min_dt without an acceptable step.
class StagnationError : public Error {
 public:
  StagnationError(const std::string& what, double t, double J, double dt)
      : Error(ErrorCategory::kSolver, what), t_(t), J_(J), dt_(dt) {}
  double t() const noexcept { return t_; }
  double J() const noexcept { return J_; }
  double dt() const noexcept { return dt_; }

 private:
  double t_;
  double J_;
  double dt_;
};

/// One accepted step starting from trial size dt (halved on rejection).
FlowState flow_step(const FlowState& state, double dt, const FlowOptions& options);

/// Radius update of one trial step before re-projection, for inspection.
struct RadialUpdate {
  RadialSpeed coefficients;  // truncated to options.harmonics
  double tail_energy = 0.0;
  double max_change = 0.0;   // sup over samples of the truncated update
};
RadialUpdate flow_update(const FlowState& state, double dt, const FlowOptions& options);

struct FlowResult {
  std::vector<FlowState> trajectory;
  bool converged = false;
};

/// Iterates flow_step until the circle distance drops below the target or
/// max_steps steps have been taken.
FlowResult run_flow(const StarDomain& domain, double dt, int max_steps, const FlowOptions& options);

/// step,t,dt,J,tau,area,circle_distance,flux_deviation,variation,tail_energy,rejections
std::string trajectory_csv(const std::vector<FlowState>& trajectory);

}  // namespace tlab
