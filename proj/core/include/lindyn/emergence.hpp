#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "lindyn/errors.hpp"

// Skill-based emergence: mutually exclusive basis functions with power-law
// frequencies. Each skill trains as an independent sigmoidal mode whose rate
// is its frequency, so emergence curves against time, data and parameters all
// reduce to closed forms plus Monte-Carlo coupon collection.

namespace lindyn {

struct SkillEnsemble {
  int p_star = 16;        // number of target skills
  int p = 16;             // number of skills the model can represent
  double s = 1.0;         // shared target scale
  Eigen::VectorXd freq;   // skill frequencies, positive, summing to one

  /// freq_k proportional to k^(-alpha), k = 1..p_star.
  static SkillEnsemble PowerLaw(int p_star, int p, double alpha, double s);

  void validate() const;
};

/// Sparse-parity ingestion task: each sample activates exactly one control
/// bit (the skill index, drawn from freq) and carries uniform payload bits;
/// the label is the parity of the active skill's m payload positions.
struct ParityTask {
  int n_control = 8;
  int n_payload = 16;
  int m = 3;
  double alpha = 2.0;

  Eigen::VectorXd freq() const;
  /// Skill k reads payload positions (k*m + j) % n_payload, j = 0..m-1.
  std::vector<std::vector<int>> masks() const;
  void validate() const;
};

struct ParityData {
  Eigen::MatrixXi x;  // n x (n_control + n_payload), entries 0/1
  Eigen::VectorXi y;  // parity labels 0/1
};

ParityData gen_parity(const ParityTask& task, int n, std::uint64_t seed);

/// Skill strengths from the model's per-skill coefficients a_k b_k; under
/// mutual exclusivity R_k = E[f g_k] / E[g_k^2] is the coefficient itself.
Eigen::VectorXd skill_strength(const Eigen::VectorXd& coefficients,
                               const SkillEnsemble& ensemble);

/// R_k(t) for each target skill on the time grid (rows = grid, cols = skills).
/// Skills beyond the model width have no parameters and stay at zero.
Eigen::MatrixXd emergence_time_curve(const SkillEnsemble& ensemble, double u0,
                                     const Eigen::VectorXd& t_grid);

/// Monte-Carlo probability that skill k has at least shots_k samples in a
/// dataset of each size (rows = sizes, cols = skills). Trials are reduced in
/// trial order regardless of scheduling.
Eigen::MatrixXd emergence_data(const SkillEnsemble& ensemble,
                               const std::vector<long>& sizes,
                               const Eigen::VectorXi& shots, int trials,
                               std::uint64_t seed);

/// Indicator matrix: skill k is learnable at width p iff k <= p.
Eigen::MatrixXi emergence_params(const SkillEnsemble& ensemble,
                                 const std::vector<int>& widths);

enum class Resource { kTime, kData, kParams };

struct ScalingCurve {
  Eigen::VectorXd resource;
  Eigen::VectorXd loss;
};

/// Aggregate loss 1/2 sum_k freq_k (s - R_k)^2 against the resource grid.
/// kTime uses the sigmoidal modes from u0; kData uses the one-shot closed
/// form (unlearned skills stay at u0); kParams zeroes skills beyond width.
ScalingCurve scaling_curve(const SkillEnsemble& ensemble, Resource resource,
                           const Eigen::VectorXd& grid, double u0 = 1e-6);

/// Least-squares slope of log(loss) against log(resource).
double log_log_slope(const ScalingCurve& curve);

}  // namespace lindyn
