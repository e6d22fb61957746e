#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace kode {

struct GenerateOptions {
  int d = 10;
  int k = 10;
  std::uint64_t seed = 1;
  std::string out_path = "instance.json";
  bool print_stats = false;
};
int cmd_generate(const GenerateOptions& opts);

struct BoundsOptions {
  std::string instance_path;
  double alpha = 0.95;
  long horizon = 1000;
  long nu_samples = 100000;
  std::optional<std::uint64_t> seed;  // default: the instance generation seed
  std::optional<std::string> out_dir;
};
int cmd_bounds(const BoundsOptions& opts);

struct RunOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out_dir;
  std::optional<double> alpha;
  bool dry_run = false;
};
int cmd_run(const RunOptions& opts);

struct EpisodeOptions {
  std::string instance_path;
  std::string policy = "kode";
  std::uint64_t seed = 1;
  long n = 1000;
  long burn_in = 10000;
  std::string out_path;  // empty: print the CSV to stdout
};
int cmd_episode(const EpisodeOptions& opts);

}  // namespace kode
