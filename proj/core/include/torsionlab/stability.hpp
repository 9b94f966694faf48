#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "torsionlab/geometry.hpp"

namespace tlab {

/// One-parameter family r_eps = r_base + eps * (dc0 + sum dcos_k cos k theta + dsin_k sin k theta).
struct DomainFamily {
  std::string name = "family";
  StarDomain base = StarDomain::circle(1.0);
  double dc0 = 0.0;
  std::vector<double> dcos;
  std::vector<double> dsin;
  std::vector<double> amplitudes;  // ascending, all > 0
  int level = 5;
  /// (x, y) record fields to fit in log-log space.
  std::vector<std::pair<std::string, std::string>> fits;

  StarDomain member(double eps) const;
  /// Throws ConfigError on bad amplitudes/level, DomainError on invalid members.
  void validate() const;
};

/// eps = 0.08 * 2^-j, j = 0..4.
std::vector<double> default_amplitudes();

/// r = 1 + eps cos(k theta) with the default amplitudes and fit pairs.
DomainFamily cosine_family(int k, int level = 5);

/// Reads {"name", "base": <domain>, "perturbation": {"c0", "cos", "sin"},
/// "amplitudes", "level", "fits": [["x", "y"], ...]}; everything but the
/// perturbation is optional.
DomainFamily parse_family(std::string_view json_text);
DomainFamily load_family(const std::filesystem::path& path);

struct StabilityRecord {
  double eps = 0.0;
  double eta_sup_H = 0.0;     // max |H0 - H|
  double eta_osc_H = 0.0;     // max H - min H
  double eta_plus_H = 0.0;    // int (H0 - H)^+ dS
  double eta_L2_H = 0.0;      // ||H0 - H||_2
  double eta_L2_flux = 0.0;   // ||u_nu - R||_2
  double eta_L1_flux = 0.0;   // ||u_nu - R||_1
  double eta_lip_flux = 0.0;  // sup |u_nu(x) - u_nu(y)| / |x - y|
  double rho_i = 0.0;
  double rho_e = 0.0;
  double gap = 0.0;           // rho_e - rho_i about z = argmin u
  double asym = 0.0;          // Fraenkel-type asymmetry with radius R
  double dual_norm = 0.0;     // degree-12 subspace estimate of ||L||_2
  double dual_norm_closed = 0.0;
  double feldman_ratio = 0.0;  // NaN on circles
  double dual_residual = 0.0;  // |L(g) - boundary form| of the dual report
  double oscillation = 0.0;
  double l2_power = 0.0;
  double dirichlet_power = 0.0;
  double tau = 0.0;
  double R = 0.0;
};

/// Names of the numeric record columns, in CSV order.
const std::vector<std::string>& record_fields();
/// Value of a named column; throws ConfigError for unknown names.
double record_field(const StabilityRecord& record, const std::string& field);

StabilityRecord evaluate_domain(const StarDomain& domain, int level, double eps = 0.0);

/// One record per amplitude, in amplitude order. Members are evaluated on
/// up to `threads` worker threads; the result does not depend on it.
std::vector<StabilityRecord> sweep(const DomainFamily& family, int threads = 1);

struct ExponentFit {
  std::string x_field;
  std::string y_field;
  double slope = 0.0;
  double intercept = 0.0;
  double correlation = 0.0;
  int count = 0;
};

/// Least-squares line through (log x, log y). Needs >= 4 records with
/// positive values; throws ConfigError naming the offending record.
ExponentFit fit_exponent(const std::vector<StabilityRecord>& records, const std::string& x_field,
                         const std::string& y_field);

/// Same on raw data.
ExponentFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

std::string records_csv(const std::vector<StabilityRecord>& records);

}  // namespace tlab
