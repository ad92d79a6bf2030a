// ptbcert: risk certificates and bound verifiers from the command line.
//
// Exit codes: 0 success, 2 validation failure, 3 verifier failure,
// 4 I/O or format error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ptb/errors.hpp"
#include "ptb/harness/config.hpp"
#include "ptb/harness/runners.hpp"
#include "ptb/harness/weights_io.hpp"

namespace {

using namespace ptb;
using namespace ptb::harness;

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::vector<double> rho;
  std::optional<std::uint64_t> n;
  std::optional<double> delta;
  std::optional<std::size_t> steps;
  std::optional<std::string> mode;
  std::optional<std::string> weights;
  bool no_rebalance = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON experiment config");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--rho", o.rho, "noise levels (comma separated)")->delimiter(',');
  cmd->add_option("--n", o.n, "sample size");
  cmd->add_option("--delta", o.delta, "confidence parameter");
  cmd->add_option("--steps", o.steps, "time grid steps");
  cmd->add_option("--mode", o.mode, "derandomization mode: theorem2 or appendix_tight");
  cmd->add_option("--weights", o.weights, "weight file (binary or JSON)");
  cmd->add_flag("--no-rebalance", o.no_rebalance, "use layer norms as given");
}

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig c = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.output_dir = *o.out;
  if (!o.rho.empty()) c.rho_grid = o.rho;
  if (o.n) c.n = *o.n;
  if (o.delta) c.delta = *o.delta;
  if (o.steps) c.time_grid.steps = *o.steps;
  if (o.mode) {
    try {
      c.mode = nn::parse_derand_mode(*o.mode);
    } catch (const std::exception& e) {
      throw ValidationError(e.what());
    }
  }
  if (o.weights) c.weights_path = *o.weights;
  if (o.no_rebalance) c.rebalance = false;
  c.validate();
  return c;
}

void emit(const Report& report, const ExperimentConfig& c) {
  write_report(report, c.output_dir);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "wrote " << (c.output_dir / "report.json").string() << '\n';
}

int run(int argc, char** argv) {
  CLI::App app{"PAC-Bayesian transportation-bound risk certificates"};
  app.require_subcommand(1);
  Overrides o;

  auto* certify = app.add_subcommand("certify", "risk certificate of a network with a rho sweep");
  auto* derand = app.add_subcommand("derand-cost", "derandomization cost breakdown");
  auto* flow = app.add_subcommand("flow-sim", "contraction flow in the 1-D squared-loss world");
  auto* verify = app.add_subcommand("verify", "run every bound verifier");
  auto* train = app.add_subcommand("train-toy", "train the toy MLP and save its weights");
  for (auto* cmd : {certify, derand, flow, verify, train}) add_common(cmd, o);
  bool canary = false;
  verify->add_flag("--canary", canary, "zero the increment bound; coverage checks must then fail");
  std::string weights_name = "weights.bin";
  train->add_option("--weights-out", weights_name, "weight file name inside the output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const ExperimentConfig c = resolve(o);
  if (*certify) {
    emit(run_certify(c), c);
  } else if (*derand) {
    emit(run_derand_cost(c), c);
  } else if (*flow) {
    emit(run_flow_sim(c), c);
  } else if (*train) {
    emit(run_train_toy(c, c.output_dir / weights_name), c);
  } else if (*verify) {
    transport::BoundMutation mutation;
    if (canary) mutation = {0.0, 0.0, 0.0};
    const VerifyRun r = run_verify(c, mutation, [](const VerifierResult& v) {
      std::cout << format_result(v) << std::endl;
    });
    write_report(r.report, c.output_dir);
    write_file(c.output_dir / "timings.json", r.timings.dump(2) + "\n");
    if (!r.all_passed) {
      std::cerr << "failing verifiers:";
      for (const auto& row : r.report.tables.front().rows) {
        if (!row[1].get<bool>()) std::cerr << ' ' << row[0].get<std::string>();
      }
      std::cerr << '\n';
      return 3;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ptb::FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return 4;
  } catch (const ptb::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 2;
  } catch (const ptb::InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const ptb::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
