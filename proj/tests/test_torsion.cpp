#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "oracles.hpp"
#include "torsionlab/mesh.hpp"
#include "torsionlab/torsion.hpp"

using namespace tlab;

namespace {

const TorsionSolution& disc(int level) {
  static std::map<int, TorsionSolution> cache;
  auto it = cache.find(level);
  if (it == cache.end()) it = cache.emplace(level, solve_torsion(build_mesh(StarDomain::circle(1.0), level))).first;
  return it->second;
}

const TorsionSolution& ellipse21(int level) {
  static std::map<int, TorsionSolution> cache;
  auto it = cache.find(level);
  if (it == cache.end()) {
    it = cache.emplace(level, solve_torsion(build_mesh(StarDomain::ellipse(2.0, 1.0), level))).first;
  }
  return it->second;
}

}  // namespace

TEST(Torsion, DiscMatchesRadialSolution) {
  auto nodal_error = [](const TorsionSolution& s) {
    const auto& nodes = s.mesh().nodes();
    double err = 0.0;
    for (int n = 0; n < s.mesh().node_count(); ++n) {
      err = std::max(err, std::abs(s.u()[n] - oracle::disc_u(1.0, nodes[n].x(), nodes[n].y())));
    }
    return err;
  };
  const TorsionSolution& s = disc(4);
  // The quadratic solution is only perturbed by boundary snapping.
  const double err = nodal_error(s);
  EXPECT_LE(err, 1e-6);
  EXPECT_GE(std::log2(nodal_error(disc(3)) / err), 2.5);
  EXPECT_NEAR(s.z().norm(), 0.0, 1e-8);
  EXPECT_NEAR(s.evaluate(Vec2::Zero())->u, -0.5, 1e-8);
  EXPECT_NEAR(s.tau(), oracle::disc_tau(1.0), 1e-7);
  EXPECT_NEAR(s.tau_from_volume_integral(), s.tau(), 1e-10);
  for (const FluxSample& f : boundary_flux(s)) EXPECT_NEAR(f.flux, 1.0, 1e-5);
}

TEST(Torsion, DiscFluxAndPAtLevelFive) {
  const TorsionSolution& s = disc(5);
  for (const FluxSample& f : boundary_flux(s)) EXPECT_NEAR(f.flux, 1.0, 1e-6);
  for (double p : s.nodal_p()) EXPECT_NEAR(p, 0.5, 1e-6);
  EXPECT_NEAR(s.tau(), oracle::pi / 2.0, 1e-6);
}

TEST(Torsion, FluxRecoveryBeatsGradientTrace) {
  const TorsionSolution& s = disc(3);
  double rec = 0.0;
  double trace = 0.0;
  for (const FluxSample& f : boundary_flux(s)) rec = std::max(rec, std::abs(f.flux - 1.0));
  for (const FluxSample& f : gradient_trace_flux(s)) trace = std::max(trace, std::abs(f.flux - 1.0));
  EXPECT_LT(rec, trace);
}

TEST(Torsion, EllipseClosedForm) {
  const TorsionSolution& s = ellipse21(5);
  const oracle::Ellipse e{2.0, 1.0};
  EXPECT_NEAR(s.tau(), e.tau(), 1e-6);
  EXPECT_NEAR(s.tau(), 8.0 * oracle::pi / 5.0, 1e-3);
  EXPECT_NEAR(s.flux_at(0.0), 0.8, 1e-6);
  EXPECT_NEAR(s.flux_at(oracle::pi / 2.0), 1.6, 1e-6);
  EXPECT_NEAR(s.flux_at(oracle::pi), 0.8, 1e-6);
  EXPECT_NEAR(s.flux_at(3.0 * oracle::pi / 2.0), 1.6, 1e-6);
  for (const BoundaryPoint& bp : s.boundary_points()) {
    const double t = std::atan2(bp.geo.x.y() / e.b, bp.geo.x.x() / e.a);
    EXPECT_NEAR(bp.flux, e.flux(t), 1e-5);
  }
}

TEST(Torsion, EllipseFieldsMatchClosedForm) {
  const oracle::Ellipse e{2.0, 1.0};
  auto errors = [&](const TorsionSolution& s) {
    const auto& nodes = s.mesh().nodes();
    double eu = 0.0;
    double eg = 0.0;
    for (int n = 0; n < s.mesh().node_count(); ++n) {
      const Vec2& x = nodes[n];
      eu = std::max(eu, std::abs(s.u()[n] - e.u(x.x(), x.y())));
      eg = std::max(eg, (s.nodal_gradient()[n] - Vec2(e.ux(x.x()), e.uy(x.y()))).norm());
    }
    return std::pair{eu, eg};
  };
  const auto [u3, g3] = errors(ellipse21(3));
  const auto [u4, g4] = errors(ellipse21(4));
  EXPECT_LE(u4, 2e-6);
  EXPECT_LE(g4, 1e-4);
  EXPECT_GE(std::log2(u3 / u4), 2.5);
  EXPECT_GE(std::log2(g3 / g4), 1.5);
}

TEST(Torsion, DivergenceSumOfFlux) {
  const TorsionSolution& s = ellipse21(4);
  const double total = s.integrate_boundary([](const BoundaryPoint& bp) { return bp.flux; });
  EXPECT_NEAR(total, 2.0 * s.area(), 1e-6);
}

TEST(Torsion, ConvergesUnderRefinement) {
  const oracle::Ellipse e{2.0, 1.0};
  double prev = 1.0;
  for (int level = 1; level <= 4; ++level) {
    const double err = std::abs(ellipse21(level).tau() - e.tau());
    EXPECT_LT(err, prev);
    prev = err;
  }
}

TEST(RadialOracle, PlaneAndSpace) {
  const RadialOracle two = radial_oracle(2, 1.0);
  EXPECT_NEAR(two.tau, oracle::pi / 2.0, 1e-14);
  EXPECT_NEAR(two.p_value, 0.5, 1e-15);
  const RadialOracle three = radial_oracle(3, 1.0);
  EXPECT_NEAR(three.tau, 4.0 * oracle::pi / 5.0, 1e-14);
  for (const RadialOracle& o : {two, three, radial_oracle(4, 1.7)}) {
    for (auto p : {o.divergence(), o.pohozaev(), o.p_integral(), o.minkowski(), o.heintze_karcher(),
                   o.fundamental_serrin(), o.fundamental_sbt(), o.idwps_h(), o.reilly()}) {
      EXPECT_NEAR(p.lhs, p.rhs, 1e-12 * std::max(1.0, std::abs(p.rhs)));
    }
  }
}

TEST(PFunction, DiscIsConstant) {
  const PFunction p = p_function(disc(4));
  for (double v : p.nodal) EXPECT_NEAR(v, 0.5, 1e-5);
  auto sup = [](const PFunction& f) {
    double m = 0.0;
    for (double v : f.element_integrand) m = std::max(m, std::abs(v));
    return m;
  };
  EXPECT_LE(sup(p), 1e-3);
  EXPECT_GE(std::log2(sup(p_function(disc(3))) / sup(p)), 1.5);
}

TEST(PFunction, EllipseIntegrandConstantAndMaxOnBoundary) {
  const PFunction p = p_function(ellipse21(4));
  const double expected = oracle::ellipse_traceless(2.0, 1.0);
  ASSERT_GT(expected, 0.0);
  // Boundary snapping perturbs the constant, mostly on the outer elements.
  std::vector<double> dev;
  for (double v : p.element_integrand) {
    EXPECT_GT(v, 0.0);
    dev.push_back(std::abs(v - expected));
  }
  std::sort(dev.begin(), dev.end());
  EXPECT_LE(dev[dev.size() / 2], 1e-6);
  EXPECT_LE(dev.back(), 0.1 * expected);
  EXPECT_GE(p.max_boundary, p.max_interior - 1e-8);
}

TEST(Torsion, SolutionCsvHeaders) {
  const auto dir = std::filesystem::temp_directory_path() / "torsionlab_test_csv";
  std::filesystem::create_directories(dir);
  write_solution_csv(disc(1), dir / "n.csv", dir / "b.csv");
  std::ifstream n(dir / "n.csv");
  std::ifstream b(dir / "b.csv");
  std::string line;
  std::getline(n, line);
  EXPECT_EQ(line, "node,x,y,u,P,h");
  std::getline(b, line);
  EXPECT_EQ(line, "node,theta,x,y,u_nu");
  std::filesystem::remove_all(dir);
}
