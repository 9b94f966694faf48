#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "torsionlab/geometry.hpp"

namespace tlab {

/// Parses a domain description:
///
///   {"kind": "fourier", "c0": 1.0, "cos": [...], "sin": [...]}
///   {"kind": "ellipse", "a": 2.0, "b": 1.0}
///   {"kind": "circle", "radius": 1.0}
///
/// Every kind accepts an optional "center": [x, y]; ellipses also accept
/// "angle" (radians). Malformed input throws ConfigError naming the field;
/// a well-formed but invalid shape throws DomainError.
StarDomain parse_domain(std::string_view json_text);

StarDomain load_domain(const std::filesystem::path& path);

std::string domain_to_json(const StarDomain& domain);

}  // namespace tlab
