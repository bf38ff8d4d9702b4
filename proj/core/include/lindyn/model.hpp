#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "lindyn/errors.hpp"

// Layerwise linear model families and their exact loss geometry.
//
// Every family realizes a linear map whose factors train by gradient descent
// on mean squared error. The target is either a per-mode scale vector (for
// families whose dynamics decouple coordinate-wise), an input-output
// correlation matrix (population view), or an explicit finite-sample matrix Y
// paired with sample inputs.

namespace lindyn {

enum class Family {
  kLinear,      // f(x) = x^T Theta, one layer
  kDiagLnn,     // f(x) = sum_i x_i a_i b_i, elementwise two-layer
  kLnn,         // f(x) = x^T W1 W2, dense two-layer
  kWideScalar,  // f(x) = (x/z) sum_i a_i b_i, scalar in/out, width p
  kUfm,         // f_i = e_i^T H W2, trainable per-sample features
  kMlpTanh      // nonlinear tanh MLP; trained by the grokking harness
};

std::string family_name(Family family);

struct ModelSpec {
  Family family = Family::kDiagLnn;
  int d = 1;        // input dimension (UFM: number of datapoints, rows of H)
  int p = 1;        // hidden width (unused by kLinear)
  int c = 1;        // output dimension
  double z = 1.0;   // kWideScalar output normalization
  int depth = 4;    // kMlpTanh weight-layer count

  /// Throws ShapeError on inconsistent dimensions.
  void validate() const;

  /// Number of scalar modes reported by trajectory observers.
  int mode_count() const;
};

struct ParamState {
  std::vector<Eigen::MatrixXd> layers;
  double t = 0.0;
};

/// Layer shapes for a family (kMlpTanh is owned by the grokking harness and
/// is rejected here).
std::vector<std::pair<Eigen::Index, Eigen::Index>> layer_shapes(
    const ModelSpec& spec);

/// Throws ShapeError when the state does not match the spec's layer shapes.
void validate_state(const ModelSpec& spec, const ParamState& state);

struct TargetSpec {
  Eigen::VectorXd scales;       // per-mode target S_i (size d, or p for wide scalar)
  Eigen::MatrixXd correlation;  // E[x f*(x)^T], d x c
  Eigen::MatrixXd labels;       // finite-sample target matrix Y, n x c

  enum class Kind { kScales, kCorrelation, kLabels };

  static TargetSpec Scales(Eigen::VectorXd s);
  static TargetSpec Correlation(Eigen::MatrixXd c);
  static TargetSpec Labels(Eigen::MatrixXd y);

  /// Exactly one member may be non-empty; throws ShapeError otherwise.
  Kind kind() const;
};

struct InputStatistics {
  Eigen::VectorXd variances;  // E[x_i^2], all positive
  Eigen::MatrixXd samples;    // optional n x d sample matrix
  bool whitened = false;      // true implies variances identically one

  static InputStatistics Population(Eigen::VectorXd variances);
  static InputStatistics Whitened(int d);
  /// Sample path; variances are filled with column mean squares.
  static InputStatistics Samples(Eigen::MatrixXd x);

  void validate() const;
  bool has_samples() const { return samples.size() > 0; }
};

/// Mean squared error of the realized map against the target.
double loss(const ModelSpec& spec, const ParamState& state,
            const TargetSpec& target, const InputStatistics& stats);

/// dL/d(layer) for each layer; gradient flow integrates d(theta)/dt = -grad.
std::vector<Eigen::MatrixXd> gradient(const ModelSpec& spec,
                                      const ParamState& state,
                                      const TargetSpec& target,
                                      const InputStatistics& stats);

/// Quantity conserved by gradient flow: a_i^2 - b_i^2 per mode for the
/// elementwise families, W1^T W1 - W2 W2^T for the dense two-layer families.
Eigen::MatrixXd conserved_quantity(const ModelSpec& spec,
                                   const ParamState& state);

/// Two-layer init with W2 W2^T - W1^T W1 = lambda I (p x p) and
/// ||W1 W2||_F = absolute_scale. Equal singular values on the active block;
/// shared inner basis. For rectangular shapes the trailing block (where one
/// factor is rank-limited to zero) can only carry the requested lambda when
/// its sign allows a real singular value; otherwise the exact residual is
/// infeasible and the call throws InfeasibleInitError unless clamp_infeasible
/// is set, in which case the trailing block is zero-balanced.
ParamState balanced_init(int d, int p, int c, double lambda,
                         double absolute_scale, std::uint64_t seed,
                         bool clamp_infeasible = false);

/// Square-network convenience wrapper (p = d = c).
ParamState lambda_balanced_init(int d, int c, double lambda,
                                double absolute_scale, std::uint64_t seed);

/// Elementwise two-layer state with a_i = b_i = sqrt(u0).
ParamState diag_balanced_state(int d, double u0);

ParamState make_diag_state(Eigen::VectorXd a, Eigen::VectorXd b);
ParamState make_linear_state(Eigen::MatrixXd theta);

/// Per-mode observables: theta_i (linear), a_i b_i (elementwise families),
/// sum a_i b_i / z (wide scalar). Dense families need a singular basis and use
/// the overload below.
Eigen::VectorXd mode_values(const ModelSpec& spec, const ParamState& state);

/// Dense two-layer mode values diag(U^T W1 W2 V) against a fixed basis.
Eigen::VectorXd mode_values(const ModelSpec& spec, const ParamState& state,
                            const Eigen::MatrixXd& basis_u,
                            const Eigen::MatrixXd& basis_v);

}  // namespace lindyn
