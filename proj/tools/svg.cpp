#include "svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <fmt/core.h>

namespace tlab::svg {

namespace {

constexpr double kSize = 480.0;
constexpr double kMargin = 40.0;
constexpr std::array<const char*, 6> kColours = {"#1f77b4", "#d62728", "#2ca02c",
                                                 "#9467bd", "#ff7f0e", "#17becf"};

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kMargin + (x - x0) / (x1 - x0) * (kSize - 2 * kMargin); }
  double py(double y) const { return kSize - kMargin - (y - y0) / (y1 - y0) * (kSize - 2 * kMargin); }
};

std::string header() {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{0}\" viewBox=\"0 0 {0} {0}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      kSize);
}

}  // namespace

std::string boundaries(const std::vector<std::pair<std::string, StarDomain>>& curves, int samples) {
  std::vector<std::vector<Vec2>> pts;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& [name, d] : curves) {
    std::vector<Vec2> p;
    for (const BoundarySample& s : sample_boundary(d, samples)) {
      p.push_back(s.x);
      lo = std::min({lo, s.x.x(), s.x.y()});
      hi = std::max({hi, s.x.x(), s.x.y()});
    }
    pts.push_back(std::move(p));
  }
  if (!(hi > lo)) {
    lo = -1.0;
    hi = 1.0;
  }
  const Frame f{lo, hi, lo, hi};
  std::string out = header();
  for (std::size_t c = 0; c < pts.size(); ++c) {
    const char* colour = kColours[c % kColours.size()];
    out += fmt::format("<polygon fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"", colour);
    for (const Vec2& p : pts[c]) out += fmt::format("{:.2f},{:.2f} ", f.px(p.x()), f.py(p.y()));
    out += "\"/>\n";
    out += fmt::format("<text x=\"{}\" y=\"{}\" fill=\"{}\" font-size=\"12\">{}</text>\n", kMargin,
                       18.0 + 14.0 * c, colour, curves[c].first);
  }
  out += "</svg>\n";
  return out;
}

std::string loglog(const std::vector<StabilityRecord>& records, const std::vector<ExponentFit>& fits) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const ExponentFit& fit : fits) {
    for (const StabilityRecord& r : records) {
      const double x = std::log10(record_field(r, fit.x_field));
      const double y = std::log10(record_field(r, fit.y_field));
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) y1 = y0 + 1.0;
  const Frame f{x0, x1, y0, y1};
  std::string out = header();
  out += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"12\">log10 x: [{:.2f}, {:.2f}]  log10 y: [{:.2f}, {:.2f}]</text>\n",
                     kMargin, kSize - 10.0, x0, x1, y0, y1);
  for (std::size_t c = 0; c < fits.size(); ++c) {
    const ExponentFit& fit = fits[c];
    const char* colour = kColours[c % kColours.size()];
    for (const StabilityRecord& r : records) {
      out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>\n",
                         f.px(std::log10(record_field(r, fit.x_field))),
                         f.py(std::log10(record_field(r, fit.y_field))), colour);
    }
    // Fitted line, natural-log parameters converted to base 10.
    const double b = fit.intercept / std::log(10.0);
    out += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\"/>\n",
                       f.px(x0), f.py(b + fit.slope * x0), f.px(x1), f.py(b + fit.slope * x1), colour);
    out += fmt::format("<text x=\"{}\" y=\"{}\" fill=\"{}\" font-size=\"12\">{} vs {}: slope {:.3f}</text>\n",
                       kMargin, 18.0 + 14.0 * c, colour, fit.y_field, fit.x_field, fit.slope);
  }
  out += "</svg>\n";
  return out;
}

}  // namespace tlab::svg
