#include "torsionlab/stability.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include <fmt/core.h>

#include "json_domain.hpp"
#include "torsionlab/csv.hpp"
#include "torsionlab/error.hpp"
#include "torsionlab/identities.hpp"
#include "torsionlab/torsion.hpp"

namespace tlab {

namespace {

constexpr int kCurvatureSamples = 2048;
constexpr int kDualDegree = 12;

struct FieldEntry {
  const char* name;
  double StabilityRecord::*member;
};

const std::vector<FieldEntry>& field_table() {
  static const std::vector<FieldEntry> table = {
      {"eps", &StabilityRecord::eps},
      {"eta_sup_H", &StabilityRecord::eta_sup_H},
      {"eta_osc_H", &StabilityRecord::eta_osc_H},
      {"eta_plus_H", &StabilityRecord::eta_plus_H},
      {"eta_L2_H", &StabilityRecord::eta_L2_H},
      {"eta_L2_flux", &StabilityRecord::eta_L2_flux},
      {"eta_L1_flux", &StabilityRecord::eta_L1_flux},
      {"eta_lip_flux", &StabilityRecord::eta_lip_flux},
      {"rho_i", &StabilityRecord::rho_i},
      {"rho_e", &StabilityRecord::rho_e},
      {"gap", &StabilityRecord::gap},
      {"asym", &StabilityRecord::asym},
      {"dual_norm", &StabilityRecord::dual_norm},
      {"dual_norm_closed", &StabilityRecord::dual_norm_closed},
      {"feldman_ratio", &StabilityRecord::feldman_ratio},
      {"dual_residual", &StabilityRecord::dual_residual},
      {"oscillation", &StabilityRecord::oscillation},
      {"l2_power", &StabilityRecord::l2_power},
      {"dirichlet_power", &StabilityRecord::dirichlet_power},
      {"tau", &StabilityRecord::tau},
      {"R", &StabilityRecord::R},
  };
  return table;
}

std::vector<std::pair<std::string, std::string>> default_fits() {
  return {{"eta_L2_H", "gap"}, {"eta_L2_flux", "gap"}, {"eta_L2_H", "asym"}};
}

}  // namespace

StarDomain DomainFamily::member(double eps) const {
  StarDomain d = base.perturbed(eps, dc0, dcos, dsin);
  d.validate();
  return d;
}

void DomainFamily::validate() const {
  if (amplitudes.size() < 4) {
    throw ConfigError(fmt::format("family '{}': need at least 4 amplitudes, got {}", name,
                                  amplitudes.size()));
  }
  for (std::size_t i = 0; i < amplitudes.size(); ++i) {
    if (!(amplitudes[i] > 0.0) || !std::isfinite(amplitudes[i])) {
      throw ConfigError(fmt::format("family '{}': amplitudes[{}] = {} must be positive", name, i,
                                    amplitudes[i]));
    }
    if (i > 0 && !(amplitudes[i] > amplitudes[i - 1])) {
      throw ConfigError(fmt::format("family '{}': amplitudes must be strictly ascending", name));
    }
  }
  if (level < 0 || level > 8) {
    throw ConfigError(fmt::format("family '{}': level {} outside [0, 8]", name, level));
  }
  base.validate();
  for (double eps : amplitudes) {
    try {
      (void)member(eps);
    } catch (const Error& e) {
      rethrow_with_context(e, fmt::format("family '{}' member eps = {}", name, eps));
    }
  }
  for (const auto& [x, y] : fits) {
    (void)record_field(StabilityRecord{}, x);
    (void)record_field(StabilityRecord{}, y);
  }
}

std::vector<double> default_amplitudes() {
  std::vector<double> out;
  for (int j = 4; j >= 0; --j) out.push_back(0.08 * std::ldexp(1.0, -j));
  return out;
}

DomainFamily cosine_family(int k, int level) {
  if (k < 1 || k > kMaxHarmonics) throw ConfigError(fmt::format("mode {} outside [1, {}]", k, kMaxHarmonics));
  DomainFamily f;
  f.name = fmt::format("cos{}", k);
  f.base = StarDomain::circle(1.0);
  f.dcos.assign(static_cast<std::size_t>(k), 0.0);
  f.dcos.back() = 1.0;
  f.amplitudes = default_amplitudes();
  f.level = level;
  f.fits = default_fits();
  return f;
}

DomainFamily parse_family(std::string_view json_text) {
  const nlohmann::json j = detail::parse_json_text(json_text, "family");
  if (!j.is_object()) throw ConfigError("family: expected a JSON object");
  DomainFamily f;
  if (j.contains("name")) {
    if (!j["name"].is_string()) throw ConfigError("family.name: expected a string");
    f.name = j["name"].get<std::string>();
  }
  f.base = j.contains("base") ? detail::domain_from_json(j["base"], "family.base")
                              : StarDomain::circle(1.0);
  if (!j.contains("perturbation")) throw ConfigError("family.perturbation: missing");
  const nlohmann::json& p = j["perturbation"];
  if (!p.is_object()) throw ConfigError("family.perturbation: expected an object");
  f.dc0 = p.contains("c0") ? detail::require_number(p, "c0", "family.perturbation") : 0.0;
  f.dcos = detail::number_array(p, "cos", "family.perturbation");
  f.dsin = detail::number_array(p, "sin", "family.perturbation");
  f.amplitudes = j.contains("amplitudes") ? detail::number_array(j, "amplitudes", "family")
                                          : default_amplitudes();
  if (j.contains("level")) {
    if (!j["level"].is_number_integer()) throw ConfigError("family.level: expected an integer");
    f.level = j["level"].get<int>();
  }
  if (j.contains("fits")) {
    const nlohmann::json& fits = j["fits"];
    if (!fits.is_array()) throw ConfigError("family.fits: expected an array of [x, y] pairs");
    for (std::size_t i = 0; i < fits.size(); ++i) {
      const nlohmann::json& pair = fits[i];
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string()) {
        throw ConfigError(fmt::format("family.fits[{}]: expected [\"x_field\", \"y_field\"]", i));
      }
      f.fits.emplace_back(pair[0].get<std::string>(), pair[1].get<std::string>());
    }
  } else {
    f.fits = default_fits();
  }
  f.validate();
  return f;
}

DomainFamily load_family(const std::filesystem::path& path) {
  return parse_family(detail::read_text_file(path));
}

const std::vector<std::string>& record_fields() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const FieldEntry& e : field_table()) out.emplace_back(e.name);
    return out;
  }();
  return names;
}

double record_field(const StabilityRecord& record, const std::string& field) {
  for (const FieldEntry& e : field_table()) {
    if (field == e.name) return record.*(e.member);
  }
  throw ConfigError(fmt::format("unknown record field '{}'", field));
}

StabilityRecord evaluate_domain(const StarDomain& domain, int level, double eps) {
  domain.validate();
  const TorsionSolution sol = solve_torsion(build_mesh(domain, level));
  StabilityRecord r;
  r.eps = eps;
  r.tau = sol.tau();
  r.R = sol.R();
  const double H0 = sol.H0();

  double h_min = std::numeric_limits<double>::infinity();
  double h_max = -h_min;
  for (const BoundarySample& s : sample_boundary(domain, kCurvatureSamples)) {
    const double dev = H0 - s.curvature;
    r.eta_sup_H = std::max(r.eta_sup_H, std::abs(dev));
    h_min = std::min(h_min, s.curvature);
    h_max = std::max(h_max, s.curvature);
    r.eta_plus_H += s.weight * std::max(dev, 0.0);
    r.eta_L2_H += s.weight * dev * dev;
  }
  r.eta_osc_H = h_max - h_min;
  r.eta_L2_H = std::sqrt(r.eta_L2_H);

  const auto& bps = sol.boundary_points();
  for (const BoundaryPoint& bp : bps) {
    const double dev = bp.flux - r.R;
    r.eta_L2_flux += bp.geo.weight * dev * dev;
    r.eta_L1_flux += bp.geo.weight * std::abs(dev);
  }
  r.eta_L2_flux = std::sqrt(r.eta_L2_flux);
  for (std::size_t i = 0; i < bps.size(); ++i) {
    for (std::size_t j = i + 1; j < bps.size(); ++j) {
      const double dist = (bps[i].geo.x - bps[j].geo.x).norm();
      if (dist > 0.0) {
        r.eta_lip_flux = std::max(r.eta_lip_flux, std::abs(bps[i].flux - bps[j].flux) / dist);
      }
    }
  }

  const TouchingRadii touch = touching_radii(domain, sol.z());
  r.rho_i = touch.rho_i;
  r.rho_e = touch.rho_e;
  r.gap = touch.rho_e - touch.rho_i;
  r.asym = fraenkel_asymmetry(domain, r.R).value;

  const DualNorm dn = dual_norm(sol, kDualDegree);
  r.dual_norm = dn.estimate;
  r.dual_norm_closed = dn.closed_form;
  r.dual_residual = check_dual_formulation(sol).abs_residual;
  const auto feldman = feldman_ratio(sol);
  r.feldman_ratio = feldman ? *feldman : std::numeric_limits<double>::quiet_NaN();

  const OscillationChain chain = oscillation_chain(sol);
  r.oscillation = chain.oscillation;
  r.l2_power = chain.l2_power;
  r.dirichlet_power = chain.dirichlet_power;
  return r;
}

std::vector<StabilityRecord> sweep(const DomainFamily& family, int threads) {
  family.validate();
  const std::size_t n = family.amplitudes.size();
  std::vector<StabilityRecord> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = evaluate_domain(family.member(family.amplitudes[i]), family.level,
                                 family.amplitudes[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int workers = std::clamp(threads, 1, static_cast<int>(n));
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      rethrow_with_context(e, fmt::format("family '{}' member eps = {}", family.name,
                                          family.amplitudes[i]));
    }
  }
  return out;
}

ExponentFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ConfigError("fit: x and y differ in length");
  if (x.size() < 4) throw ConfigError(fmt::format("fit: need at least 4 points, got {}", x.size()));
  const double n = static_cast<double>(x.size());
  double sx = 0.0;
  double sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
      throw ConfigError(fmt::format("fit: point {} has non-positive value ({}, {})", i, x[i], y[i]));
    }
    sx += std::log(x[i]);
    sy += std::log(y[i]);
  }
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    const double dy = std::log(y[i]) - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0)) throw ConfigError("fit: x values are all equal");
  ExponentFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.correlation = syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 1.0;
  fit.count = static_cast<int>(x.size());
  return fit;
}

ExponentFit fit_exponent(const std::vector<StabilityRecord>& records, const std::string& x_field,
                         const std::string& y_field) {
  if (records.size() < 4) {
    throw ConfigError(fmt::format("fit {} vs {}: need at least 4 records, got {}", y_field, x_field,
                                  records.size()));
  }
  std::vector<double> x;
  std::vector<double> y;
  for (const StabilityRecord& r : records) {
    const double xv = record_field(r, x_field);
    const double yv = record_field(r, y_field);
    if (!(xv > 0.0) || !(yv > 0.0)) {
      throw ConfigError(fmt::format("fit {} vs {}: record eps = {} has non-positive value ({}, {})",
                                    y_field, x_field, r.eps, xv, yv));
    }
    x.push_back(xv);
    y.push_back(yv);
  }
  ExponentFit fit = fit_loglog(x, y);
  fit.x_field = x_field;
  fit.y_field = y_field;
  return fit;
}

std::string records_csv(const std::vector<StabilityRecord>& records) {
  std::string out;
  const auto& fields = record_fields();
  for (std::size_t i = 0; i < fields.size(); ++i) out += (i ? "," : "") + fields[i];
  out += '\n';
  for (const StabilityRecord& r : records) {
    for (std::size_t i = 0; i < field_table().size(); ++i) {
      if (i) out += ',';
      out += format_number(r.*(field_table()[i].member));
    }
    out += '\n';
  }
  return out;
}

}  // namespace tlab
