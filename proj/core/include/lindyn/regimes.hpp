#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "lindyn/integrator.hpp"
#include "lindyn/model.hpp"

// Lazy/rich diagnostics: the exact parameter-gradient Gram matrix (empirical
// NTK) of dense two-layer networks, the Frobenius-cosine kernel distance, and
// grid experiments sweeping layer imbalance, absolute scale and
// weight-to-target ratio.

namespace lindyn {

/// K_{(i,k),(j,l)} = (x_i.x_j) (W2^T W2)_{kl} + (x_i^T W1 W1^T x_j) delta_{kl}
/// for f(x) = x^T W1 W2; rows/cols indexed (i,k) -> i*c + k. Only the dense
/// two-layer family is supported.
Eigen::MatrixXd empirical_ntk(const ModelSpec& spec, const ParamState& state,
                              const Eigen::MatrixXd& x);

/// 1 - <K0, Kt> / (||K0|| ||Kt||), in [0, 2]. Throws DegenerateKernelError
/// when either kernel has zero norm.
double kernel_distance(const Eigen::MatrixXd& k0, const Eigen::MatrixXd& kt);

/// The width-p scalar model's NTK is the rank-one kernel kappa * x x^T with
/// kappa = (||a||^2 + ||b||^2) / z^2, so its direction never moves; kernel
/// motion is carried entirely by the magnitude kappa.
double widescalar_kernel_scale(const ModelSpec& spec, const ParamState& state);

/// Relative magnitude shift 1 - min(kappa0, kappa1)/max(kappa0, kappa1).
double kernel_shift_proxy(double kappa0, double kappa1);

/// Spearman rank correlation (average ranks on ties). Inputs must be the same
/// nonzero length with nonzero rank variance.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

struct RegimeGrid {
  std::string axis1_name;
  std::string axis2_name;
  Eigen::VectorXd axis1;   // imbalance lambda, or layer-scale imbalance
  Eigen::VectorXd axis2;   // absolute scale, or weight-to-target ratio
  Eigen::MatrixXd cells;   // cells(i, j) at (axis1[i], axis2[j]); NaN marks a
                           // diverged cell
  std::uint64_t config_hash = 0;
};

// Shared training harness for all grids: random regression with inputs
// N(0, input_std^2) and labels y = Theta* x from the teacher implied by the
// requested input-output correlation, trained by minibatch SGD. The default
// dataset is a single batch of 10 samples: scarce data keeps the empirical
// correlation anisotropic, which is what lets rich training reorient the
// kernel; large n washes the effect out.
struct GridTrainConfig {
  int n = 10;
  double input_std = 1.7320508075688772;  // sqrt(3)
  double noise_std = 0.0;                 // optional label noise
  double lr = 0.01;
  int batch = 10;
  long steps = 4000;
  std::uint64_t seed = 0;
  int threads = 1;  // cells are independent; >1 evaluates them concurrently

  void validate() const;
};

struct RegimeGridConfig {
  int d = 10, p = 10, c = 10;             // square network
  Eigen::VectorXd lambdas;                // default: 13 points on [-9, 9]
  Eigen::VectorXd scales;                 // default: 10 points on (0, 20]
  GridTrainConfig train;
};

/// Final kernel distance per (lambda, absolute scale) cell for a square
/// two-layer network on a random regression task with E[x y^T] = I.
/// The lambda axis is the conserved imbalance W1^T W1 - W2 W2^T = lambda I:
/// positive lambda starts with the surplus norm on the first layer.
RegimeGrid regime_grid(const RegimeGridConfig& cfg);

enum class FunnelShape { kFunnel, kAntiFunnel };

struct FunnelGridConfig {
  FunnelShape shape = FunnelShape::kFunnel;
  int wide = 20, mid = 10, narrow = 4;    // funnel: d,p,c; anti-funnel: c,p,d
  Eigen::VectorXd lambdas;
  Eigen::VectorXd scales;
  GridTrainConfig train;
};

/// Same sweep (and lambda-axis convention) for rectangular networks;
/// infeasible trailing imbalance blocks are zero-clamped at init.
RegimeGrid funnel_grid(const FunnelGridConfig& cfg);

/// Two equal hidden halves with opposite-sign second-layer blocks, so the
/// network function is identically zero at init while both layers carry the
/// requested entry scales.
ParamState symmetrized_init(int d, int p, int c, double w1_entry_std,
                            double w2_entry_std, std::uint64_t seed);

struct RatioGridConfig {
  int d = 20, p = 20, c = 2;
  Eigen::VectorXd imbalances;  // log2 of the w2/w1 entry-scale ratio;
                               // default 5 points on [-2, 2]
  Eigen::VectorXd ratios;      // log2 of the weight-to-target ratio;
                               // default 8 points on [-2, 4]
  double base_norm = 4.0;      // sqrt(||W1||_F^2 + ||W2||_F^2) held fixed
  GridTrainConfig train;
};

/// Final kernel distance per (imbalance, ratio) cell under symmetrized init;
/// the ratio axis is realized by downscaling the target while the init norm
/// stays fixed.
RegimeGrid ratio_grid(const RatioGridConfig& cfg);

/// Per-cell initial weight norm measure sigma0 = (||W1||^2 + ||W2||^2) / (2p)
/// and the target scale that realizes the requested ratio; used to map cells
/// onto the scalar model's weight-to-target analysis.
struct RatioCellInit {
  double sigma0 = 0.0;
  double target_scale = 0.0;
  double w1_entry_std = 0.0;
  double w2_entry_std = 0.0;
};
RatioCellInit ratio_cell_init(const RatioGridConfig& cfg, int imbalance_index,
                              int ratio_index);

}  // namespace lindyn
