#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "torsionlab/identities.hpp"
#include "torsionlab/mesh.hpp"
#include "torsionlab/shapeflow.hpp"

using namespace tlab;

namespace {

RadialSpeed constant_speed(double c) { return RadialSpeed{c, {}, {}}; }

const TorsionSolution& disc4() {
  static const TorsionSolution s = solve_torsion(build_mesh(StarDomain::circle(1.0), 4));
  return s;
}

}  // namespace

TEST(VolumeDerivative, CircleExamples) {
  const StarDomain d = StarDomain::circle(1.0);
  const auto samples = sample_boundary(d, 256);
  EXPECT_NEAR(volume_derivative(d, normal_speed(constant_speed(1.0), samples)), 2.0 * oracle::pi, 1e-13);
  EXPECT_NEAR(volume_derivative(d, std::vector<double>(256, 0.0)), 0.0, 0.0);
  const RadialSpeed cos1{0.0, {1.0}, {}};
  EXPECT_NEAR(volume_derivative(d, normal_speed(cos1, samples)), 0.0, 1e-14);
}

TEST(VolumeDerivative, MatchesFiniteDifference) {
  const StarDomain d = StarDomain::ellipse(2.0, 1.0);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const RadialSpeed s = random_radial_speed(seed);
    const double dV = volume_derivative(d, normal_speed(s, sample_boundary(d, 1024)));
    const double h = 1e-3;
    const double fd = (area_perimeter(d.perturbed(h, s.dc0, s.dcos, s.dsin)).area -
                       area_perimeter(d.perturbed(-h, s.dc0, s.dcos, s.dsin)).area) /
                      (2.0 * h);
    EXPECT_NEAR(dV, fd, 1e-6) << "seed " << seed;
  }
}

TEST(TorsionDerivative, CircleExamples) {
  const TorsionSolution& s = disc4();
  EXPECT_NEAR(torsion_derivative(s, normal_speed(constant_speed(1.0), s.boundary_points())), 2.0 * oracle::pi,
              1e-4);
  EXPECT_EQ(torsion_derivative(s, std::vector<double>(s.boundary_points().size(), 0.0)), 0.0);
  EXPECT_THROW((void)torsion_derivative(s, std::vector<double>(3, 1.0)), ConfigError);
}

TEST(TorsionDerivative, EllipseCosTwoMatchesFiniteDifference) {
  const StarDomain d = StarDomain::ellipse(2.0, 1.0);
  const RadialSpeed s{0.0, {0.0, 1.0}, {}};
  const TorsionSolution sol = solve_torsion(build_mesh(d, 4));
  const double dT = torsion_derivative(sol, normal_speed(s, sol.boundary_points()));
  const double h = 1e-3;
  const double fd = (solve_torsion(build_mesh(d.perturbed(h, s.dc0, s.dcos, s.dsin), 4)).tau() -
                     solve_torsion(build_mesh(d.perturbed(-h, s.dc0, s.dcos, s.dsin), 4)).tau()) /
                    (2.0 * h);
  EXPECT_NEAR(dT / fd, 1.0, 1e-2);
  // Outward motion increases the rigidity.
  EXPECT_GT(torsion_derivative(sol, normal_speed(constant_speed(1.0), sol.boundary_points())), 0.0);
}

TEST(Lagrange, CircleIsCritical) {
  const LagrangeReport r = lagrange_residual(disc4(), StarDomain::circle(1.0));
  EXPECT_NEAR(r.variation, 0.0, 1e-9);
  EXPECT_NEAR(r.idwps_lhs, 0.0, 1e-10);
}

TEST(Lagrange, EllipseMatchesIdwps) {
  const TorsionSolution sol = solve_torsion(build_mesh(StarDomain::ellipse(2.0, 1.0), 4));
  const LagrangeReport r = lagrange_residual(sol, StarDomain::ellipse(2.0, 1.0));
  EXPECT_NEAR(std::abs(r.variation) / r.idwps_lhs, 1.0, 1e-3);
  EXPECT_DOUBLE_EQ(r.variation_mirror, -r.variation);
  EXPECT_LT(r.variation, 0.0);
}

TEST(Lagrange, ShrinksWithPerturbation) {
  double prev = 1e300;
  for (double eps : {0.08, 0.04, 0.02}) {
    const StarDomain d = StarDomain::fourier(1.0, {0.0, 0.0, eps}, {});
    const double v = std::abs(lagrange_residual(solve_torsion(build_mesh(d, 3)), d).variation);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(Flow, CircleIsFixedPoint) {
  FlowOptions opt;
  const FlowState s = initial_flow_state(StarDomain::circle(1.0), opt);
  const FlowState n = flow_step(s, 0.05, opt);
  for (double th = 0.0; th < 2.0 * oracle::pi; th += 0.1) {
    EXPECT_LE(std::abs(n.domain.radius(th) - s.domain.radius(th)), 1e-10);
  }
  const FlowResult r = run_flow(StarDomain::circle(1.0), 0.05, 10, opt);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.trajectory.size(), 1u);
}

TEST(Flow, DescentStepDecreasesJWithSecondOrderTaylorError) {
  FlowOptions opt;
  const FlowState s = initial_flow_state(StarDomain::fourier(1.0, {0.0, 0.0, 0.1}, {}), opt);
  EXPECT_LT(s.variation, 0.0);
  const FlowState n = flow_step(s, 0.05, opt);
  EXPECT_LT(n.J, s.J);
  EXPECT_EQ(n.rejections, 0);
  double prev = 0.0;
  for (double dt : {0.04, 0.02, 0.01}) {
    const double err = std::abs(flow_step(s, dt, opt).J - s.J - dt * s.variation);
    if (prev > 0.0) EXPECT_NEAR(prev / err, 4.0, 0.4);
    prev = err;
  }
}

TEST(Flow, TowardBallIncreasesJAndRounds) {
  FlowOptions opt;
  opt.orientation = FlowOrientation::kTowardBall;
  const FlowResult r = run_flow(StarDomain::fourier(1.0, {0.0, 0.0, 0.1}, {}), 0.05, 12, opt);
  ASSERT_EQ(r.trajectory.size(), 13u);
  for (std::size_t i = 1; i < r.trajectory.size(); ++i) {
    EXPECT_GE(r.trajectory[i].J, r.trajectory[i - 1].J);
    EXPECT_LT(r.trajectory[i].circle_distance, r.trajectory[i - 1].circle_distance);
    EXPECT_DOUBLE_EQ(r.trajectory[i].V, r.trajectory[0].V);
    EXPECT_DOUBLE_EQ(r.trajectory[i].R, r.trajectory[0].R);
  }
  EXPECT_LT(r.trajectory.back().flux_deviation, r.trajectory.front().flux_deviation);
}

TEST(Flow, RecomputedRFollowsDomain) {
  FlowOptions opt;
  opt.freeze_R = false;
  opt.orientation = FlowOrientation::kTowardBall;
  const FlowState s = initial_flow_state(StarDomain::ellipse(1.1, 1.0), opt);
  const FlowState n = flow_step(s, 0.05, opt);
  EXPECT_DOUBLE_EQ(n.R, n.solution->R());
}

TEST(Flow, StagnationRaised) {
  FlowOptions opt;
  opt.tail_tolerance = 0.0;
  opt.harmonics = 1;
  const FlowState s = initial_flow_state(StarDomain::fourier(1.0, {0.0, 0.0, 0.1}, {}), opt);
  EXPECT_THROW((void)flow_step(s, 0.05, opt), StagnationError);
}

TEST(Flow, TrajectoryCsvHeader) {
  FlowOptions opt;
  const FlowResult r = run_flow(StarDomain::circle(1.0), 0.05, 1, opt);
  const std::string csv = trajectory_csv(r.trajectory);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "step,t,dt,J,tau,area,circle_distance,flux_deviation,variation,tail_energy,rejections");
}

TEST(Flow, OrientationNames) {
  EXPECT_EQ(parse_orientation("descent"), FlowOrientation::kDescent);
  EXPECT_EQ(parse_orientation("toward-ball"), FlowOrientation::kTowardBall);
  EXPECT_THROW((void)parse_orientation("sideways"), ConfigError);
}
