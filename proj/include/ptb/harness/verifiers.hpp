#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ptb/harness/mlp.hpp"
#include "ptb/harness/report.hpp"
#include "ptb/pac_core.hpp"
#include "ptb/transport.hpp"

namespace ptb::harness {

struct VerifierResult {
  std::string name;
  bool passed = false;
  double observed = 0.0;
  double threshold = 0.0;
  std::string relation;  // how observed is compared with threshold, e.g. "<="
  std::string detail;
  double seconds = 0.0;
};

/// One line: "PASS name: observed <= threshold (detail)".
std::string format_result(const VerifierResult& r);

/// The toy network shared by the gradient-based verifiers: m = 16, K = 3,
/// trained on the blob task with hinge loss.
TrainResult reference_mlp(std::uint64_t seed);

VerifierResult verify_theorem1_coverage(std::uint64_t seed, double delta = 0.1,
                                        const transport::BoundMutation& mutation = {});
VerifierResult verify_theorem1_derivative(std::uint64_t seed);
VerifierResult verify_velocity_domination(std::uint64_t seed);
VerifierResult verify_ot_refinement();
VerifierResult verify_centrality(pac::CentralityScenario scenario, std::uint64_t seed);
VerifierResult verify_abstract_coverage(std::uint64_t seed);
VerifierResult verify_subgaussian_coverage(std::uint64_t seed);
VerifierResult verify_subgaussian_posterior_grid(std::uint64_t seed);
VerifierResult verify_kl_cauchy_domination();
VerifierResult verify_gaussian_spectral(std::uint64_t seed);
VerifierResult verify_sigma_inv_direct(std::uint64_t seed);
VerifierResult verify_lambda_norm(const TrainResult& net, std::uint64_t seed);
VerifierResult verify_contraction_specialization(std::uint64_t seed);
VerifierResult verify_derand_vanishing();
VerifierResult verify_derand_mode_order();
VerifierResult verify_rate_check();
VerifierResult verify_gradient_check(const TrainResult& net, std::uint64_t seed);
VerifierResult verify_signal_reconstruction(const TrainResult& net, std::uint64_t seed);

struct SuiteOptions {
  std::uint64_t seed = 20240601;
  transport::BoundMutation mutation{};
};

/// Runs every verifier; each result carries its runtime.
std::vector<VerifierResult> run_verify_suite(const SuiteOptions& options,
                                             const std::function<void(const VerifierResult&)>& on_result = {});

}  // namespace ptb::harness
