#include "kode/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "kode/errors.hpp"
#include "kode/matops.hpp"

namespace kode {

namespace {

std::vector<double> matrix_rows(const Eigen::MatrixXd& m) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) flat.push_back(m(i, j));
  return flat;
}

Eigen::MatrixXd matrix_from_rows(const std::vector<double>& flat,
                                 Eigen::Index rows, Eigen::Index cols,
                                 const char* what) {
  if (static_cast<Eigen::Index>(flat.size()) != rows * cols)
    throw ParseError(std::string(what) + ": wrong number of entries");
  Eigen::MatrixXd m(rows, cols);
  std::size_t idx = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = flat[idx++];
  return m;
}

void reject_unknown_keys(const nlohmann::json& j,
                         const std::set<std::string>& allowed,
                         const char* where) {
  for (const auto& item : j.items())
    if (!allowed.contains(item.key()))
      throw ParseError(std::string(where) + ": unknown key '" + item.key() +
                       "'");
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 40> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc())
    throw NumericError("format_double: conversion failed");
  return std::string(buf.data(), ptr);
}

std::string format_optional(const std::optional<double>& v) {
  return v.has_value() ? format_double(*v) : "NA";
}

nlohmann::json instance_to_json(const LgdsParams& params) {
  nlohmann::json j;
  j["format"] = "kodesim-instance";
  j["version"] = 1;
  j["d"] = params.dim();
  j["k"] = params.num_actions();
  j["seed"] = params.seed;
  j["sigma2"] = params.sigma2;
  j["gamma"] = matrix_rows(params.gamma);
  j["q"] = matrix_rows(params.q);
  j["sigma0"] = matrix_rows(params.sigma0);
  nlohmann::json actions = nlohmann::json::array();
  for (const auto& a : params.actions)
    actions.push_back(std::vector<double>(a.data(), a.data() + a.size()));
  j["actions"] = actions;
  return j;
}

LgdsParams instance_from_json(const nlohmann::json& j) {
  try {
    reject_unknown_keys(j,
                        {"format", "version", "d", "k", "seed", "sigma2",
                         "gamma", "q", "sigma0", "actions"},
                        "instance");
    if (j.at("format").get<std::string>() != "kodesim-instance")
      throw ParseError("instance: unexpected format tag");
    if (j.at("version").get<int>() != 1)
      throw ParseError("instance: unsupported version");
    const auto d = j.at("d").get<Eigen::Index>();
    const auto k = j.at("k").get<int>();
    if (d < 1 || k < 1) throw ParseError("instance: bad dimensions");
    LgdsParams params;
    params.seed = j.at("seed").get<std::uint64_t>();
    params.sigma2 = j.at("sigma2").get<double>();
    params.gamma = matrix_from_rows(j.at("gamma").get<std::vector<double>>(),
                                    d, d, "gamma");
    params.q = matrix_from_rows(j.at("q").get<std::vector<double>>(), d, d, "q");
    params.sigma0 = matrix_from_rows(j.at("sigma0").get<std::vector<double>>(),
                                     d, d, "sigma0");
    const auto& actions = j.at("actions");
    if (!actions.is_array() || static_cast<int>(actions.size()) != k)
      throw ParseError("instance: expected k actions");
    for (const auto& entry : actions) {
      const auto comps = entry.get<std::vector<double>>();
      if (static_cast<Eigen::Index>(comps.size()) != d)
        throw ParseError("instance: action dimension mismatch");
      params.actions.push_back(Eigen::Map<const Eigen::VectorXd>(
          comps.data(), static_cast<Eigen::Index>(comps.size())));
    }
    validate(params);
    return params;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("instance: ") + e.what());
  }
}

void save_instance(const LgdsParams& params,
                   const std::filesystem::path& path) {
  write_text_file(path, instance_to_json(params).dump(2) + "\n");
}

LgdsParams load_instance(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return instance_from_json(j);
}

nlohmann::json config_to_json(const ExperimentConfig& config) {
  nlohmann::json j;
  j["d"] = config.d;
  j["k"] = config.k;
  j["horizon"] = config.horizon;
  j["num_instances"] = config.num_instances;
  j["repeats"] = config.repeats;
  j["burn_in"] = config.burn_in;
  j["base_seed"] = config.base_seed;
  j["alpha"] = config.alpha;
  j["nu_samples"] = config.nu_samples;
  j["workers"] = config.workers;
  j["out_dir"] = config.out_dir;
  nlohmann::json roster = nlohmann::json::array();
  for (PolicyKind kind : config.roster)
    roster.push_back(std::string(policy_name(kind)));
  j["policies"] = roster;
  j["ucb"]["c"] = config.hyper.ucb_c.has_value()
                      ? nlohmann::json(*config.hyper.ucb_c)
                      : nlohmann::json(nullptr);
  j["sw_ucb"]["window"] = config.hyper.sw_window;
  j["sw_ucb"]["c"] = config.hyper.sw_c.has_value()
                         ? nlohmann::json(*config.hyper.sw_c)
                         : nlohmann::json(nullptr);
  j["rexp3"]["batch"] = config.hyper.rexp3_batch.has_value()
                            ? nlohmann::json(*config.hyper.rexp3_batch)
                            : nlohmann::json(nullptr);
  j["rexp3"]["clip_sigmas"] = config.hyper.rexp3_clip_sigmas;
  j["oful"]["lambda"] = config.hyper.oful_lambda;
  j["oful"]["delta"] = config.hyper.oful_delta;
  j["pearson"]["permutation"] = config.pearson_permutation;
  j["pearson"]["permutations"] = config.pearson_permutations;
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  try {
    reject_unknown_keys(
        j,
        {"d", "k", "horizon", "num_instances", "repeats", "burn_in",
         "base_seed", "alpha", "nu_samples", "workers", "out_dir", "policies",
         "ucb", "sw_ucb", "rexp3", "oful", "pearson"},
        "config");
    ExperimentConfig config;
    if (j.contains("d")) config.d = j["d"].get<int>();
    if (j.contains("k")) config.k = j["k"].get<int>();
    if (j.contains("horizon")) config.horizon = j["horizon"].get<long>();
    if (j.contains("num_instances"))
      config.num_instances = j["num_instances"].get<long>();
    if (j.contains("repeats")) config.repeats = j["repeats"].get<long>();
    if (j.contains("burn_in")) config.burn_in = j["burn_in"].get<long>();
    if (j.contains("base_seed"))
      config.base_seed = j["base_seed"].get<std::uint64_t>();
    if (j.contains("alpha")) config.alpha = j["alpha"].get<double>();
    if (j.contains("nu_samples"))
      config.nu_samples = j["nu_samples"].get<long>();
    if (j.contains("workers")) config.workers = j["workers"].get<int>();
    if (j.contains("out_dir")) config.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("policies")) {
      config.roster.clear();
      for (const auto& name : j["policies"])
        config.roster.push_back(
            policy_kind_from_name(name.get<std::string>()));
    }
    if (j.contains("ucb")) {
      reject_unknown_keys(j["ucb"], {"c"}, "config.ucb");
      if (j["ucb"].contains("c") && !j["ucb"]["c"].is_null())
        config.hyper.ucb_c = j["ucb"]["c"].get<double>();
    }
    if (j.contains("sw_ucb")) {
      reject_unknown_keys(j["sw_ucb"], {"window", "c"}, "config.sw_ucb");
      if (j["sw_ucb"].contains("window"))
        config.hyper.sw_window = j["sw_ucb"]["window"].get<long>();
      if (j["sw_ucb"].contains("c") && !j["sw_ucb"]["c"].is_null())
        config.hyper.sw_c = j["sw_ucb"]["c"].get<double>();
    }
    if (j.contains("rexp3")) {
      reject_unknown_keys(j["rexp3"], {"batch", "clip_sigmas"}, "config.rexp3");
      if (j["rexp3"].contains("batch") && !j["rexp3"]["batch"].is_null())
        config.hyper.rexp3_batch = j["rexp3"]["batch"].get<long>();
      if (j["rexp3"].contains("clip_sigmas"))
        config.hyper.rexp3_clip_sigmas = j["rexp3"]["clip_sigmas"].get<double>();
    }
    if (j.contains("oful")) {
      reject_unknown_keys(j["oful"], {"lambda", "delta"}, "config.oful");
      if (j["oful"].contains("lambda"))
        config.hyper.oful_lambda = j["oful"]["lambda"].get<double>();
      if (j["oful"].contains("delta"))
        config.hyper.oful_delta = j["oful"]["delta"].get<double>();
    }
    if (j.contains("pearson")) {
      reject_unknown_keys(j["pearson"], {"permutation", "permutations"},
                          "config.pearson");
      if (j["pearson"].contains("permutation"))
        config.pearson_permutation = j["pearson"]["permutation"].get<bool>();
      if (j["pearson"].contains("permutations"))
        config.pearson_permutations = j["pearson"]["permutations"].get<long>();
    }
    validate(config);
    return config;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace kode
