#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ptb/harness/mlp.hpp"
#include "ptb/nn_cert.hpp"

namespace ptb::harness {

struct TimeGridSpec {
  double t_max = 8.0;
  std::size_t steps = 64;
};

struct ExperimentConfig {
  std::uint64_t seed = 20240601;
  std::uint64_t n = 10000;
  double delta = 0.1;
  std::vector<double> rho_grid{0.0625, 0.125, 0.25, 0.5, 1.0, 2.0, 4.0};
  TimeGridSpec time_grid{};
  std::size_t mc_samples = 2000;
  std::size_t trials = 500;
  nn::DerandMode mode = nn::DerandMode::theorem2;
  bool rebalance = true;
  /// Weight file for certify / derand-cost; empty means "train the toy MLP".
  std::string weights_path;
  TrainConfig train{};
  std::filesystem::path output_dir = "ptb-out";

  /// Throws ValidationError on any out-of-range field.
  void validate() const;
};

/// Fields absent from `j` keep their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical form (sorted keys). Output paths are excluded so that the same
/// experiment written to two places hashes identically.
nlohmann::json config_to_json(const ExperimentConfig& c);
/// FNV-1a 64 of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& c);

}  // namespace ptb::harness
