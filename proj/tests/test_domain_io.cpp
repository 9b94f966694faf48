#include <gtest/gtest.h>

#include <filesystem>

#include "torsionlab/domain_io.hpp"
#include "torsionlab/error.hpp"

using namespace tlab;

TEST(DomainIo, ParsesEachKind) {
  const StarDomain c = parse_domain(R"({"kind": "circle", "radius": 2.0, "center": [1, -1]})");
  EXPECT_TRUE(c.is_circle());
  EXPECT_DOUBLE_EQ(c.center().x(), 1.0);
  EXPECT_NEAR(c.radius(0.3), 2.0, 1e-15);

  const StarDomain e = parse_domain(R"({"kind": "ellipse", "a": 2, "b": 1})");
  EXPECT_NEAR(e.radius(0.0), 2.0, 1e-15);
  EXPECT_NEAR(e.radius(1.5707963267948966), 1.0, 1e-15);

  const StarDomain f = parse_domain(R"({"kind": "fourier", "c0": 1, "cos": [0, 0.1], "sin": [0.05]})");
  EXPECT_EQ(f.harmonics(), 2);
  EXPECT_NEAR(f.radius(0.0), 1.1, 1e-15);
}

TEST(DomainIo, RoundTrip) {
  const StarDomain f = StarDomain::fourier(1.0, {0.0, 0.1, 0.02}, {0.03, 0.0, 0.01}, Vec2(0.5, 0.25));
  const StarDomain g = parse_domain(domain_to_json(f));
  for (double th : {0.0, 0.7, 2.1, 4.4}) EXPECT_DOUBLE_EQ(f.radius(th), g.radius(th));
  EXPECT_EQ(g.center(), f.center());

  const StarDomain e = StarDomain::ellipse(1.5, 0.75, 0.3);
  const StarDomain e2 = parse_domain(domain_to_json(e));
  for (double th : {0.0, 0.7, 2.1}) EXPECT_DOUBLE_EQ(e.radius(th), e2.radius(th));
}

TEST(DomainIo, ConfigErrorsNameTheField) {
  try {
    (void)parse_domain(R"({"kind": "ellipse", "a": 2})");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& err) {
    EXPECT_NE(std::string(err.what()).find("b"), std::string::npos);
  }
  EXPECT_THROW((void)parse_domain("{not json"), ConfigError);
  EXPECT_THROW((void)parse_domain(R"({"kind": "square"})"), ConfigError);
  EXPECT_THROW((void)parse_domain(R"({"kind": "circle", "radius": "one"})"), ConfigError);
}

TEST(DomainIo, InvalidShapeIsDomainError) {
  EXPECT_THROW((void)parse_domain(R"({"kind": "circle", "radius": -1})"), DomainError);
  EXPECT_THROW((void)parse_domain(R"({"kind": "fourier", "c0": 0.2, "cos": [0.5], "sin": []})"),
               DomainError);
}

TEST(DomainIo, MissingFileIsResourceError) {
  EXPECT_THROW((void)load_domain("/nonexistent/dir/domain.json"), ResourceError);
}
