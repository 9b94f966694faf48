#pragma once

#include <string>

#include <json.hpp>

#include "torsionlab/geometry.hpp"

namespace tlab::detail {

StarDomain domain_from_json(const nlohmann::json& j, const std::string& where);
nlohmann::json domain_json(const StarDomain& domain);

double require_number(const nlohmann::json& j, const std::string& key, const std::string& where);
std::vector<double> number_array(const nlohmann::json& j, const std::string& key,
                                 const std::string& where);
nlohmann::json parse_json_text(std::string_view text, const std::string& where);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace tlab::detail
