#pragma once

#include <filesystem>
#include <functional>

#include "ptb/harness/config.hpp"
#include "ptb/harness/report.hpp"
#include "ptb/harness/verifiers.hpp"

namespace ptb::harness {

/// Risk certificate of a network (loaded from config.weights_path, or the
/// toy MLP trained from config.train) on a fresh blob sample of size n, with
/// a sweep over config.rho_grid.
Report run_certify(const ExperimentConfig& config);

/// Derandomization cost breakdown over config.rho_grid, both modes.
Report run_derand_cost(const ExperimentConfig& config);

/// Contraction flow in the 1-D squared-loss world: per-grid-point increment
/// bound, the OT distance upper bound and the assembled risk bound.
Report run_flow_sim(const ExperimentConfig& config);

/// Trains the toy MLP and writes its weights to `weights_out`.
Report run_train_toy(const ExperimentConfig& config, const std::filesystem::path& weights_out);

struct VerifyRun {
  Report report;
  ojson timings = ojson::object();
  bool all_passed = true;
};

VerifyRun run_verify(const ExperimentConfig& config, const transport::BoundMutation& mutation = {},
                     const std::function<void(const VerifierResult&)>& on_result = {});

}  // namespace ptb::harness
