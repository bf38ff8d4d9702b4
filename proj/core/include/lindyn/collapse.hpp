#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "lindyn/integrator.hpp"
#include "lindyn/model.hpp"

// Neural-collapse measurements on trained two-layer factorizations: the four
// collapse conditions (variability ratio, simplex angles, classifier
// self-duality, nearest-mean agreement) plus the low-rank feature structure
// forced by the conserved layer balance.

namespace lindyn {

struct ClassStatistics {
  Eigen::MatrixXd means;        // c x p class means
  Eigen::VectorXd global_mean;  // p
  Eigen::MatrixXd sigma_w;      // within-class covariance, p x p
  Eigen::MatrixXd sigma_b;      // between-class covariance, p x p
};

/// Balanced classes required: every label 0..c-1 appears n/c times.
ClassStatistics class_statistics(const Eigen::MatrixXd& features,
                                 const Eigen::VectorXi& labels, int classes);

struct NCReport {
  double nc1_ratio = 0.0;      // tr(Sigma_W) / tr(Sigma_B)
  double nc2_max_dev = 0.0;    // worst centered-mean cosine deviation from
                               // (c delta_jk - 1)/(c - 1)
  double nc3_max_dev = 0.0;    // worst || w_k/||w_k|| - mu_k^c/||mu_k^c|| ||
  double nc4_agreement = 0.0;  // fraction argmax logit == nearest class mean
  int effective_rank = 0;      // singular values above threshold * sigma_max
};

/// Number of singular values exceeding rel_threshold * sigma_max.
int effective_rank(const Eigen::MatrixXd& m, double rel_threshold = 1e-3);

/// classifier: p x c last-layer weights; bias: c (zero allowed).
NCReport nc_report(const Eigen::MatrixXd& features,
                   const Eigen::VectorXi& labels, int classes,
                   const Eigen::MatrixXd& classifier,
                   const Eigen::VectorXd& bias,
                   double rank_threshold = 1e-3);

struct CollapseConfig {
  int n = 60;
  int d = 20;  // ambient input dimension (fixed-input path)
  int p = 20;
  int c = 3;
  double init_scale = 1e-3;  // layer Frobenius norm at init
  /// true: the per-sample feature rows train directly (inputs are implicit
  /// one-hots), which interpolates for any n. false: a fixed Gaussian input
  /// matrix X is sampled and the first layer trains; interpolation of one-hot
  /// labels then requires d >= n.
  bool features_trainable = true;
  double target_loss = 1e-10;
  FlowConfig flow{/*t_end=*/600.0, /*rel_tol=*/1e-10, /*abs_tol=*/1e-12,
                  /*max_step=*/0.0, /*record_every=*/0.0, /*seed=*/0};
  std::uint64_t seed = 0;
};

struct CollapseResult {
  Trajectory trajectory;     // loss, nc metrics, conservation drift vs time
  NCReport final_report;
  Eigen::MatrixXd features;  // n x p at the end of training
  Eigen::VectorXi labels;
  ParamState final_state;
  double final_loss = 0.0;
};

/// Trains the factorization to interpolation of balanced one-hot labels by
/// gradient flow from a small random init and reports collapse metrics.
/// Throws NonConvergenceError when the budget ends above target_loss.
CollapseResult train_collapse(const CollapseConfig& cfg);

}  // namespace lindyn
