#include "torsionlab/domain_io.hpp"

#include <fstream>
#include <sstream>

#include <fmt/core.h>

#include "json_domain.hpp"
#include "torsionlab/error.hpp"

namespace tlab {

namespace detail {

nlohmann::json parse_json_text(std::string_view text, const std::string& where) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(fmt::format("{}: malformed JSON: {}", where, e.what()));
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ResourceError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double require_number(const nlohmann::json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(fmt::format("{}.{}: missing required field", where, key));
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(fmt::format("{}.{}: expected a number", where, key));
  return v.get<double>();
}

std::vector<double> number_array(const nlohmann::json& j, const std::string& key,
                                 const std::string& where) {
  if (!j.contains(key)) return {};
  const auto& v = j.at(key);
  if (!v.is_array()) throw ConfigError(fmt::format("{}.{}: expected an array of numbers", where, key));
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) {
      throw ConfigError(fmt::format("{}.{}[{}]: expected a number", where, key, i));
    }
    out.push_back(v[i].get<double>());
  }
  return out;
}

StarDomain domain_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(fmt::format("{}: expected an object", where));
  if (!j.contains("kind") || !j.at("kind").is_string()) {
    throw ConfigError(fmt::format("{}.kind: missing or not a string", where));
  }
  Vec2 center = Vec2::Zero();
  if (j.contains("center")) {
    const std::vector<double> c = number_array(j, "center", where);
    if (c.size() != 2) throw ConfigError(fmt::format("{}.center: expected [x, y]", where));
    center = Vec2(c[0], c[1]);
  }
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "fourier") {
    const double c0 = require_number(j, "c0", where);
    std::vector<double> cs = number_array(j, "cos", where);
    std::vector<double> sn = number_array(j, "sin", where);
    if (static_cast<int>(std::max(cs.size(), sn.size())) > kMaxHarmonics) {
      throw ConfigError(fmt::format("{}.cos/sin: more than {} harmonics", where, kMaxHarmonics));
    }
    return StarDomain::fourier(c0, std::move(cs), std::move(sn), center);
  }
  if (kind == "ellipse") {
    const double a = require_number(j, "a", where);
    const double b = require_number(j, "b", where);
    const double angle = j.contains("angle") ? require_number(j, "angle", where) : 0.0;
    return StarDomain::ellipse(a, b, angle, center);
  }
  if (kind == "circle") {
    const double radius = require_number(j, "radius", where);
    return StarDomain::circle(radius, center);
  }
  throw ConfigError(fmt::format("{}.kind: unknown kind '{}' (expected fourier, ellipse or circle)",
                                where, kind));
}

nlohmann::json domain_json(const StarDomain& domain) {
  nlohmann::json j;
  const bool has_series = domain.c0() != 0.0 || domain.harmonics() > 0;
  if (domain.ellipse_part() && !has_series) {
    j["kind"] = "ellipse";
    j["a"] = domain.ellipse_part()->a;
    j["b"] = domain.ellipse_part()->b;
    if (domain.ellipse_part()->angle != 0.0) j["angle"] = domain.ellipse_part()->angle;
  } else {
    if (domain.ellipse_part()) {
      throw DomainError("ellipse-plus-series domains have no file representation");
    }
    j["kind"] = "fourier";
    j["c0"] = domain.c0();
    j["cos"] = domain.cos_coeffs();
    j["sin"] = domain.sin_coeffs();
  }
  if (!domain.center().isZero(0.0)) j["center"] = {domain.center().x(), domain.center().y()};
  return j;
}

}  // namespace detail

StarDomain parse_domain(std::string_view json_text) {
  return detail::domain_from_json(detail::parse_json_text(json_text, "domain"), "domain");
}

StarDomain load_domain(const std::filesystem::path& path) {
  const std::string where = path.filename().string();
  return detail::domain_from_json(detail::parse_json_text(detail::read_text_file(path), where),
                                  where);
}

std::string domain_to_json(const StarDomain& domain) { return detail::domain_json(domain).dump(); }

}  // namespace tlab
