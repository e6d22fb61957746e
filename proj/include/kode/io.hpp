#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "kode/experiments.hpp"
#include "kode/lgds.hpp"

namespace kode {

// Shortest round-trip decimal representation, locale-independent.
std::string format_double(double v);

// "NA" when unset, otherwise format_double.
std::string format_optional(const std::optional<double>& v);

nlohmann::json instance_to_json(const LgdsParams& params);
LgdsParams instance_from_json(const nlohmann::json& j);
void save_instance(const LgdsParams& params, const std::filesystem::path& path);
LgdsParams load_instance(const std::filesystem::path& path);

nlohmann::json config_to_json(const ExperimentConfig& config);
// Rejects unknown keys; missing keys keep their defaults.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path,
                     const std::string& content);

}  // namespace kode
