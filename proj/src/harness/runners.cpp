#include "ptb/harness/runners.hpp"

#include <cmath>
#include <random>

#include "ptb/divergences.hpp"
#include "ptb/harness/mlp.hpp"
#include "ptb/harness/weights_io.hpp"
#include "ptb/nn_cert.hpp"
#include "ptb/pac_core.hpp"
#include "ptb/transport.hpp"

namespace ptb::harness {

namespace {

Report start_report(const std::string& command, const ExperimentConfig& config) {
  Report r;
  r.command = command;
  r.seed = config.seed;
  r.config_hash = config_hash(config);
  r.config = ojson::parse(config_to_json(config).dump());
  return r;
}

nn::CertOptions cert_options(const ExperimentConfig& config) {
  nn::CertOptions o;
  o.rebalance = config.rebalance;
  return o;
}

struct Subject {
  nn::NetworkWeights weights;
  std::string source;
};

Subject obtain_network(const ExperimentConfig& config, Report& report) {
  if (!config.weights_path.empty()) return {load_weights(config.weights_path), config.weights_path};
  TrainResult trained = train_toy_mlp(config.train);
  report.results["training"] = {{"final_loss", trained.loss_history.back()},
                                {"train_accuracy", accuracy(trained.weights, trained.data)}};
  return {std::move(trained.weights), "trained"};
}

ojson stats_json(const nn::SpectralStats& s) {
  return {{"depth", s.depth},
          {"width", s.width},
          {"lambda_k", s.lambda_k},
          {"lambda_bar", s.lambda_bar},
          {"total_radius", s.total_radius},
          {"frob_norm", s.frob_norm}};
}

// Monte Carlo estimate of Q P_S ramp for the Gaussian perturbation of the
// balanced weights: each draw scores a fresh network on a random minibatch.
numerics::MonteCarloEstimate stochastic_risk(const nn::NetworkWeights& balanced, double sigma, const Dataset& data,
                                             std::size_t draws, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  const std::size_t batch = std::min<std::size_t>(64, data.size());
  numerics::RunningMoments moments;
  nn::NetworkWeights noisy = balanced;
  for (std::size_t d = 0; d < draws; ++d) {
    for (std::size_t k = 0; k < balanced.depth(); ++k) {
      const auto src = balanced.layers[k].entries();
      auto dst = noisy.layers[k].entries();
      for (std::size_t e = 0; e < src.size(); ++e) dst[e] = src[e] + sigma * normal(rng);
    }
    double acc = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t i = pick(rng);
      acc += loss_value(Loss::ramp, data.y[i], predict(noisy, data.x[i])[0]);
    }
    moments.add(acc / static_cast<double>(batch));
  }
  return moments.estimate();
}

}  // namespace

Report run_certify(const ExperimentConfig& config) {
  config.validate();
  Report report = start_report("certify", config);
  const Subject subject = obtain_network(config, report);
  const auto& w = subject.weights;
  w.validate();

  const Dataset data = make_blob_dataset(config.n, w.width(), numerics::derive_seed(config.seed, 1));
  const double emp = empirical_risk(w, data, Loss::ramp);
  const nn::CertOptions options = cert_options(config);
  const nn::RiskCertificate cert = nn::risk_certificate(w, config.n, config.delta, emp, config.mode, options);

  report.results["network"] = {{"source", subject.source}, {"stats", stats_json(cert.derand.stats)}};
  report.results["certificate"] = {{"mode", nn::mode_name(config.mode)},
                                   {"rho", options.rho},
                                   {"emp_risk", cert.emp_risk},
                                   {"test_accuracy", accuracy(w, data)},
                                   {"derand_cost", cert.derand.derand_cost},
                                   {"kl", cert.kl},
                                   {"h_delta", cert.h_delta},
                                   {"reference_deviation", cert.reference_deviation},
                                   {"total", cert.total},
                                   {"gap", cert.gap()},
                                   {"vc_baseline", cert.vc_baseline},
                                   {"below_vc_baseline", cert.below_vc_baseline}};
  for (const auto& msg : cert.warnings) report.warnings.push_back(msg);

  const nn::NetworkWeights balanced = config.rebalance ? nn::rebalance(w) : w;
  Table& sweep = report.table("rho_sweep", {"rho", "derand_theorem2", "derand_appendix_tight", "reference_deviation",
                                            "total_deterministic", "stochastic_emp_risk", "stochastic_std_error",
                                            "total_stochastic"});
  for (std::size_t i = 0; i < config.rho_grid.size(); ++i) {
    const double rho = config.rho_grid[i];
    nn::CertOptions o = options;
    o.rho = rho;
    const auto c = nn::risk_certificate(w, config.n, config.delta, emp, config.mode, o);
    const auto other = nn::derand_cost(
        w, rho, config.n, c.delta_derand,
        config.mode == nn::DerandMode::theorem2 ? nn::DerandMode::appendix_tight : nn::DerandMode::theorem2, o);
    const double d2 = config.mode == nn::DerandMode::theorem2 ? c.derand.derand_cost : other.derand_cost;
    const double dt = config.mode == nn::DerandMode::theorem2 ? other.derand_cost : c.derand.derand_cost;
    const double sigma = nn::stochastic_predictor_stddev(c.derand.stats, rho);
    const auto mc = stochastic_risk(balanced, sigma, data, config.mc_samples, numerics::derive_seed(config.seed, 100 + i));
    sweep.add_row({rho, d2, dt, c.reference_deviation, c.total, mc.mean, mc.std_error,
                   mc.mean + c.reference_deviation});
  }
  return report;
}

Report run_derand_cost(const ExperimentConfig& config) {
  config.validate();
  Report report = start_report("derand-cost", config);
  const Subject subject = obtain_network(config, report);
  const nn::CertOptions options = cert_options(config);
  if (!options.rebalance) report.warnings.push_back("rebalancing disabled: layer norms used as given");

  Table& t = report.table("derand_cost", {"rho", "mode", "derand_cost", "entropy_term", "transport_term", "log_term",
                                          "c1", "c2", "rho0"});
  bool first = true;
  for (double rho : config.rho_grid) {
    for (auto mode : {nn::DerandMode::theorem2, nn::DerandMode::appendix_tight}) {
      const auto c = nn::derand_cost(subject.weights, rho, config.n, config.delta, mode, options);
      if (first) {
        report.results["network"] = {{"source", subject.source}, {"stats", stats_json(c.stats)}};
        first = false;
      }
      t.add_row({rho, nn::mode_name(mode), c.derand_cost, c.entropy_term, c.transport_term, c.log_term, c.c1, c.c2,
                 c.rho0});
    }
  }
  return report;
}

Report run_flow_sim(const ExperimentConfig& config) {
  config.validate();
  Report report = start_report("flow-sim", config);
  const transport::SquaredLossWorld world;
  const transport::ContractionFlow flow(transport::DiagonalGaussian({0.0}, {1.0}), {1.0});
  std::mt19937_64 rng(numerics::derive_seed(config.seed, 1));
  const auto sample = world.sample(config.n, rng);
  const double half_delta = 0.5 * config.delta;

  const auto inputs = [&](double t) {
    const double w = transport::wasserstein_velocity(flow, t);
    const double v = transport::SquaredLossWorld::deviation_velocity_exact(flow, t, sample);
    return transport::IncrementInputs{transport::VelocityPair(w, v, world.lipschitz_deviation()),
                                      transport::contraction_complexity(flow, t, half_delta)};
  };
  const auto ot = transport::ot_distance_upper(config.time_grid.t_max, config.time_grid.steps, config.n, inputs);

  Table& t = report.table("flow", {"t", "wasserstein_velocity", "deviation_velocity", "h_delta", "chaining",
                                   "transport", "iota"});
  for (const auto& g : ot.grid) {
    const auto in = inputs(g.t);
    t.add_row({g.t, in.velocities.wasserstein(), in.velocities.deviation_based(), in.h_delta, g.chaining, g.transport,
               g.iota});
  }

  // Q_0 Delta(., z) = (1/3 - z^2) / 2 ranges over [-1/3, 1/6]; half the range
  // is its sub-Gaussian scale.
  const double sigma = 0.25;
  const double ref = transport::reference_deviation(sigma, half_delta, config.n);
  const auto end = transport::snapshot(flow, config.time_grid.t_max);
  const double m = end.posterior.mean()[0];
  const double s = end.posterior.stddev()[0];
  double emp = 0.0;
  for (const auto& z : sample) emp += 0.5 * ((z[0] - m) * (z[0] - m) + s * s);
  emp /= static_cast<double>(sample.size());
  const double true_risk = world.risk({m}) + 0.5 * s * s;

  report.results["ot"] = {{"rule", transport::rule_name(ot.rule)},
                          {"chaining_cost", ot.chaining_cost},
                          {"transport_cost", ot.transport_cost},
                          {"total", ot.total},
                          {"monotone", ot.monotone},
                          {"tail_estimate", ot.tail_estimate},
                          {"rule_spread", ot.rule_spread}};
  report.results["risk"] = {{"emp_risk_final", emp},
                            {"reference_deviation", ref},
                            {"bound", transport::corollary1_assemble(emp, ot.total, ref)},
                            {"true_risk_final", true_risk},
                            {"naive_pac_bayes_h_delta", transport::contraction_complexity(flow, config.time_grid.t_max,
                                                                                          half_delta)}};
  if (ot.rule_spread > 0.02 * ot.total) {
    report.warnings.push_back("time grid is coarse: trapezoid and right-endpoint sums differ by more than 2%");
  }
  return report;
}

Report run_train_toy(const ExperimentConfig& config, const std::filesystem::path& weights_out) {
  config.validate();
  Report report = start_report("train-toy", config);
  const TrainResult r = train_toy_mlp(config.train);
  save_weights(weights_out, r.weights);
  const Dataset test = make_blob_dataset(config.n, r.weights.width(), numerics::derive_seed(config.seed, 1));
  report.results["training"] = {{"weights_file", weights_out.filename().string()},
                                {"final_loss", r.loss_history.back()},
                                {"train_accuracy", accuracy(r.weights, r.data)},
                                {"test_accuracy", accuracy(r.weights, test)},
                                {"test_ramp_risk", empirical_risk(r.weights, test, Loss::ramp)}};
  Table& t = report.table("loss_history", {"epoch", "loss"});
  for (std::size_t e = 0; e < r.loss_history.size(); ++e) t.add_row({e + 1, r.loss_history[e]});
  return report;
}

VerifyRun run_verify(const ExperimentConfig& config, const transport::BoundMutation& mutation,
                     const std::function<void(const VerifierResult&)>& on_result) {
  config.validate();
  VerifyRun run;
  run.report = start_report("verify", config);
  SuiteOptions options;
  options.seed = config.seed;
  options.mutation = mutation;
  const bool mutated = mutation.c_scale != 1.0 || mutation.h_scale != 1.0 || mutation.transport_scale != 1.0;
  run.report.results["mutation"] = {{"active", mutated},
                                    {"c_scale", mutation.c_scale},
                                    {"h_scale", mutation.h_scale},
                                    {"transport_scale", mutation.transport_scale}};
  Table& t = run.report.table("verifiers", {"name", "passed", "observed", "relation", "threshold", "detail"});
  for (const auto& r : run_verify_suite(options, on_result)) {
    t.add_row({r.name, r.passed, r.observed, r.relation, r.threshold, r.detail});
    run.timings[r.name] = r.seconds;
    run.all_passed = run.all_passed && r.passed;
  }
  run.report.results["all_passed"] = run.all_passed;
  return run;
}

}  // namespace ptb::harness
