#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ptb/nn_cert.hpp"

namespace ptb::harness {

using nn::Matrix;
using nn::NetworkWeights;

/// Binary classification sample; labels are -1 or +1, inputs lie in the
/// ball of radius `input_radius`.
struct Dataset {
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  double input_radius = 1.0;

  std::size_t size() const noexcept { return y.size(); }
};

/// Two Gaussian blobs in R^m centred at `separation` e_1 (label +1) and
/// `separation` e_2 (label -1), isotropic noise `noise`, then projected onto
/// the unit ball.
Dataset make_blob_dataset(std::size_t n, std::size_t width, std::uint64_t seed, double separation = 0.7,
                          double noise = 0.15);

enum class Loss { hinge, logistic, ramp };

Loss parse_loss(const std::string& name);
const char* loss_name(Loss loss);

/// Loss of score f_1 = output[0] against label y; all three are 1-Lipschitz
/// in the network output, and ramp takes values in [0, 1].
double loss_value(Loss loss, int y, double score);
/// d loss / d score (a subgradient at kinks).
double loss_derivative(Loss loss, int y, double score);

struct ForwardTrace {
  /// u[k] = a_k(h_{k-1}), the input of layer k (h_0 = x).
  std::vector<std::vector<double>> u;
  /// h[k] = W_k u[k]; h.back() is the network output.
  std::vector<std::vector<double>> h;
};

ForwardTrace forward(const NetworkWeights& w, const std::vector<double>& x);
std::vector<double> predict(const NetworkWeights& w, const std::vector<double>& x);

/// Per-layer gradient of loss(f_w(x), y) w.r.t. W_k, by backpropagation.
std::vector<Matrix> loss_gradient(const NetworkWeights& w, const std::vector<double>& x, int y, Loss loss);

/// Normalized forward and backward signals of every layer.
struct LayerSignals {
  std::vector<std::vector<double>> forward;   // u_k / (R_X prod_{l<k} lambda_l)
  std::vector<std::vector<double>> backward;  // g_k / (L prod_{l>k} lambda_l)
};

LayerSignals layer_signals(const NetworkWeights& w, const nn::SpectralStats& stats, const std::vector<double>& x,
                           int y, Loss loss);

/// G_k = (R / lambda_k) backward_k (x) forward_k, assembled from the signals.
std::vector<Matrix> gradient_from_signals(const nn::SpectralStats& stats, const LayerSignals& signals);

double empirical_risk(const NetworkWeights& w, const Dataset& data, Loss loss);
double accuracy(const NetworkWeights& w, const Dataset& data);

struct TrainConfig {
  std::size_t width = 16;
  std::size_t depth = 3;
  std::size_t train_size = 512;
  std::size_t epochs = 200;
  double learning_rate = 0.1;
  Loss loss = Loss::hinge;
  std::uint64_t seed = 1;
  double init_scale = 1.0;  // Gaussian init with stddev init_scale / sqrt(m)

  void validate() const;
};

struct TrainResult {
  NetworkWeights weights;
  Dataset data;
  std::vector<double> loss_history;  // mean training loss after each epoch
};

/// Full-batch gradient descent from a seeded Gaussian initialization.
/// Throws TrainingError when the loss stops being finite.
TrainResult train_toy_mlp(const TrainConfig& config);
/// Same, on a given dataset.
NetworkWeights train_on(const Dataset& data, const TrainConfig& config, std::vector<double>* loss_history = nullptr);

}  // namespace ptb::harness
