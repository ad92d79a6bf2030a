#include "ptb/harness/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ptb/errors.hpp"

namespace ptb::harness {

namespace {

double relu(double x) { return x > 0.0 ? x : 0.0; }

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

Dataset make_blob_dataset(std::size_t n, std::size_t width, std::uint64_t seed, double separation, double noise) {
  if (n == 0) throw InvalidInput("make_blob_dataset: n must be >= 1");
  if (width < 2) throw InvalidInput("make_blob_dataset: width must be >= 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, noise);
  std::bernoulli_distribution coin(0.5);
  Dataset data;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = coin(rng) ? 1 : -1;
    std::vector<double> x(width);
    for (double& v : x) v = normal(rng);
    x[y > 0 ? 0 : 1] += separation;
    const double r = norm2(x);
    if (r > 1.0) {
      for (double& v : x) v /= r;
    }
    data.x.push_back(std::move(x));
    data.y.push_back(y);
  }
  return data;
}

Loss parse_loss(const std::string& name) {
  if (name == "hinge") return Loss::hinge;
  if (name == "logistic") return Loss::logistic;
  if (name == "ramp") return Loss::ramp;
  throw InvalidInput("unknown loss '" + name + "' (expected hinge, logistic or ramp)");
}

const char* loss_name(Loss loss) {
  switch (loss) {
    case Loss::hinge: return "hinge";
    case Loss::logistic: return "logistic";
    case Loss::ramp: return "ramp";
  }
  return "unknown";
}

double loss_value(Loss loss, int y, double score) {
  const double margin = static_cast<double>(y) * score;
  switch (loss) {
    case Loss::hinge: return std::max(0.0, 1.0 - margin);
    case Loss::logistic:
      // log(1 + e^{-margin}) without overflow
      return margin > 0.0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
    case Loss::ramp: return std::clamp(1.0 - margin, 0.0, 1.0);
  }
  return 0.0;
}

double loss_derivative(Loss loss, int y, double score) {
  const double yd = static_cast<double>(y);
  const double margin = yd * score;
  switch (loss) {
    case Loss::hinge: return margin < 1.0 ? -yd : 0.0;
    case Loss::logistic: return -yd / (1.0 + std::exp(margin));
    case Loss::ramp: return (margin < 1.0 && margin > 0.0) ? -yd : 0.0;
  }
  return 0.0;
}

ForwardTrace forward(const NetworkWeights& w, const std::vector<double>& x) {
  if (x.size() != w.width()) throw InvalidInput("forward: input dimension does not match network width");
  ForwardTrace trace;
  std::vector<double> prev = x;
  for (const Matrix& W : w.layers) {
    std::vector<double> u(prev.size());
    std::transform(prev.begin(), prev.end(), u.begin(), relu);
    prev = W.apply(u);
    trace.u.push_back(std::move(u));
    trace.h.push_back(prev);
  }
  return trace;
}

std::vector<double> predict(const NetworkWeights& w, const std::vector<double>& x) { return forward(w, x).h.back(); }

namespace {

// g[k] = d loss / d h_k for every layer.
std::vector<std::vector<double>> backward_signals(const NetworkWeights& w, const ForwardTrace& trace, int y,
                                                  Loss loss) {
  const std::size_t K = w.depth();
  std::vector<std::vector<double>> g(K);
  g[K - 1].assign(w.width(), 0.0);
  g[K - 1][0] = loss_derivative(loss, y, trace.h.back()[0]);
  for (std::size_t k = K - 1; k > 0; --k) {
    std::vector<double> du = w.layers[k].apply_transposed(g[k]);
    for (std::size_t i = 0; i < du.size(); ++i) {
      if (!(trace.h[k - 1][i] > 0.0)) du[i] = 0.0;
    }
    g[k - 1] = std::move(du);
  }
  return g;
}

Matrix outer(const std::vector<double>& a, const std::vector<double>& b, double scale = 1.0) {
  Matrix m(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = scale * a[i] * b[j];
  return m;
}

}  // namespace

std::vector<Matrix> loss_gradient(const NetworkWeights& w, const std::vector<double>& x, int y, Loss loss) {
  const ForwardTrace trace = forward(w, x);
  const auto g = backward_signals(w, trace, y, loss);
  std::vector<Matrix> grads;
  for (std::size_t k = 0; k < w.depth(); ++k) grads.push_back(outer(g[k], trace.u[k]));
  return grads;
}

LayerSignals layer_signals(const NetworkWeights& w, const nn::SpectralStats& stats, const std::vector<double>& x,
                           int y, Loss loss) {
  if (stats.degenerate) throw InvalidInput("layer_signals: degenerate network");
  const ForwardTrace trace = forward(w, x);
  const auto g = backward_signals(w, trace, y, loss);
  const std::size_t K = w.depth();
  LayerSignals s;
  for (std::size_t k = 0; k < K; ++k) {
    double log_before = std::log(w.input_radius);
    double log_after = std::log(w.lipschitz_loss);
    for (std::size_t l = 0; l < K; ++l) {
      if (l < k) log_before += std::log(stats.lambda_k[l]);
      if (l > k) log_after += std::log(stats.lambda_k[l]);
    }
    std::vector<double> fwd = trace.u[k];
    for (double& v : fwd) v *= std::exp(-log_before);
    std::vector<double> bwd = g[k];
    for (double& v : bwd) v *= std::exp(-log_after);
    s.forward.push_back(std::move(fwd));
    s.backward.push_back(std::move(bwd));
  }
  return s;
}

std::vector<Matrix> gradient_from_signals(const nn::SpectralStats& stats, const LayerSignals& signals) {
  std::vector<Matrix> grads;
  for (std::size_t k = 0; k < signals.forward.size(); ++k) {
    const double scale = std::exp(stats.log_total_radius - std::log(stats.lambda_k[k]));
    grads.push_back(outer(signals.backward[k], signals.forward[k], scale));
  }
  return grads;
}

double empirical_risk(const NetworkWeights& w, const Dataset& data, Loss loss) {
  if (data.size() == 0) throw InvalidInput("empirical_risk: empty dataset");
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) s += loss_value(loss, data.y[i], predict(w, data.x[i])[0]);
  return s / static_cast<double>(data.size());
}

double accuracy(const NetworkWeights& w, const Dataset& data) {
  if (data.size() == 0) throw InvalidInput("accuracy: empty dataset");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (static_cast<double>(data.y[i]) * predict(w, data.x[i])[0] > 0.0) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

void TrainConfig::validate() const {
  if (width < 2 || width > 64) throw ValidationError("train: width must lie in [2, 64]");
  if (depth < 1 || depth > 4) throw ValidationError("train: depth must lie in [1, 4]");
  if (train_size == 0 || epochs == 0) throw ValidationError("train: train_size and epochs must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ValidationError("train: learning_rate must be > 0");
  if (!(init_scale > 0.0)) throw ValidationError("train: init_scale must be > 0");
}

NetworkWeights train_on(const Dataset& data, const TrainConfig& config, std::vector<double>* loss_history) {
  config.validate();
  if (data.size() == 0) throw InvalidInput("train: empty dataset");
  std::mt19937_64 rng(numerics::derive_seed(config.seed, 0));
  std::normal_distribution<double> normal(0.0, config.init_scale / std::sqrt(static_cast<double>(config.width)));
  NetworkWeights w;
  w.input_radius = data.input_radius;
  w.lipschitz_loss = 1.0;
  for (std::size_t k = 0; k < config.depth; ++k) {
    Matrix W(config.width, config.width);
    for (double& x : W.entries()) x = normal(rng);
    w.layers.push_back(std::move(W));
  }

  const double inv_n = 1.0 / static_cast<double>(data.size());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<Matrix> total(config.depth, Matrix(config.width, config.width));
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto g = loss_gradient(w, data.x[i], data.y[i], config.loss);
      for (std::size_t k = 0; k < config.depth; ++k) total[k] += g[k];
    }
    for (std::size_t k = 0; k < config.depth; ++k) w.layers[k] -= total[k].scaled(config.learning_rate * inv_n);
    const double mean_loss = empirical_risk(w, data, config.loss);
    if (!std::isfinite(mean_loss) || !std::all_of(w.layers.begin(), w.layers.end(),
                                                  [](const Matrix& W) { return W.all_finite(); })) {
      throw TrainingError("training diverged at epoch " + std::to_string(epoch), static_cast<int>(epoch) - 1);
    }
    if (loss_history) loss_history->push_back(mean_loss);
  }
  return w;
}

TrainResult train_toy_mlp(const TrainConfig& config) {
  config.validate();
  TrainResult result;
  result.data = make_blob_dataset(config.train_size, config.width, numerics::derive_seed(config.seed, 1));
  result.weights = train_on(result.data, config, &result.loss_history);
  return result;
}

}  // namespace ptb::harness
