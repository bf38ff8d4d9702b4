#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

// Delayed-generalization harness: a small tanh MLP trained with Adam on a
// scarce classification set, with four scale knobs (weight init ratio, target
// scale, input scale, output scale) that steer the weight-to-target ratio and
// with it the delay between fitting and generalizing.

namespace lindyn {

struct GrokDataset {
  Eigen::MatrixXd x_train;  // n_train x d
  Eigen::VectorXi y_train;  // class indices
  Eigen::MatrixXd x_test;
  Eigen::VectorXi y_test;
  int classes = 0;
  std::string source;  // "synthetic" or "mnist"

  void validate() const;
};

/// Gaussian class clusters: unit-covariance blobs centered on margin-scaled
/// random unit directions; labels drawn uniformly. Deterministic per seed.
GrokDataset synthetic_task(int d, int classes, int n_train, int n_test,
                           double margin, std::uint64_t seed);

struct GrokConfig {
  int width = 512;
  int depth = 4;  // weight-layer count; tanh between all but the last
  double weight_init_ratio = 5.0;  // multiplier on 1/sqrt(fan_in) entries
  double target_scale = 3.0;       // one-hot magnitude
  double input_scale = 1.0;
  double output_scale = 1.0;
  double lr = 1e-3;
  double weight_decay = 1e-4;  // decoupled
  int batch = 128;
  int epochs = 2000;
  double acc_threshold = 0.9;

  void validate() const;
};

/// Layer pack convention used throughout: [W_0..W_{D-1}, b_0..b_{D-1}] with
/// biases stored as one-column matrices. Weights start at
/// weight_init_ratio / sqrt(fan_in) per entry, biases at zero; ratio 1 is the
/// baseline and other ratios rescale the same draw.
std::vector<Eigen::MatrixXd> mlp_init(int d, int width, int classes, int depth,
                                      double weight_init_ratio,
                                      std::uint64_t seed);

/// Batch outputs output_scale * f(x), shape n x classes.
Eigen::MatrixXd mlp_forward(const std::vector<Eigen::MatrixXd>& layers,
                            const Eigen::MatrixXd& x, double output_scale);

/// Loss (1/2B) sum_b ||output_scale f(x_b) - y_scaled_b||^2 and its exact
/// reverse-mode gradients in the layer pack layout. Optionally exposes the
/// scaled batch outputs. Throws DivergenceError on non-finite activations.
double mlp_forward_backward(const std::vector<Eigen::MatrixXd>& layers,
                            const Eigen::MatrixXd& x,
                            const Eigen::MatrixXd& y_scaled,
                            double output_scale,
                            std::vector<Eigen::MatrixXd>& grads,
                            Eigen::MatrixXd* outputs = nullptr);

struct GrokResult {
  // One entry per epoch. Train statistics aggregate the minibatch forward
  // passes of that epoch; test statistics come from a full pass afterwards.
  std::vector<double> train_loss, test_loss, train_acc, test_acc;
  bool train_reached = false, test_reached = false;
  int t_train = -1;  // first 1-based epoch at or above acc_threshold
  int t_test = -1;
  int gap = -1;  // t_test - t_train, defined only when both were reached
  std::vector<Eigen::MatrixXd> final_layers;
};

/// Adam training loop over shuffled minibatches with per-epoch evaluation.
GrokResult run_grok(const GrokConfig& cfg, const GrokDataset& data,
                    std::uint64_t seed);

}  // namespace lindyn
