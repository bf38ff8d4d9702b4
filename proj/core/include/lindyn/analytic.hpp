#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "lindyn/errors.hpp"

// Closed-form gradient-flow solutions for the layerwise linear families.
// Every function here is pure algebra; the adaptive integrator provides the
// independent numeric check.

namespace lindyn {

/// One decoupled mode: target scale s, effective rate E[x_i^2], initial
/// product u0 = a_i(0) b_i(0) on the balanced manifold a_i = b_i.
struct ModeParams {
  double s = 1.0;
  double rate = 1.0;
  double u0 = 1e-6;

  /// Requires rate > 0 and 0 < u0 < s.
  void validate() const;
};

/// Balanced elementwise product a_i(t) b_i(t):
///   s / (1 + (s/u0 - 1) exp(-2 s rate t)).
double sigmoidal_mode(double t, const ModeParams& params);

/// Time at which sigmoidal_mode reaches fraction f of s, f in (0, 1).
double sigmoidal_crossing_time(double fraction, const ModeParams& params);

/// Single-layer exponential mode: theta(t) = s (1 - exp(-rate t)) from
/// theta(0) = 0.
double linear_mode(double t, double s, double rate);

/// Dense two-layer singular-mode strength alpha^2(t) under a shared-basis
/// balanced init: rho / (1 + (rho/alpha0_sq - 1) exp(-2 rho t)).
double saxe_mode(double t, double rho, double alpha0_sq);

/// Singular triplets of an input-output correlation matrix, sorted by
/// descending rho. correlation = u * diag(rho) * v^T.
struct SingularTriplets {
  Eigen::MatrixXd u;
  Eigen::VectorXd rho;
  Eigen::MatrixXd v;
};
SingularTriplets correlation_spectrum(const Eigen::MatrixXd& correlation);

/// Exact solution data for the width-p scalar model with conserved per-mode
/// differences. gamma(t) rescales (a_i + b_i)/2 by sqrt(gamma) and
/// (a_i - b_i)/2 by 1/sqrt(gamma).
struct GammaSolution {
  Eigen::VectorXd a0, b0;
  double s = 1.0;          // target scale
  double z = 1.0;          // output normalization
  double s_init = 0.0;     // sum a0_i b0_i / z
  double sigma_init = 0.0; // sum (a0_i^2 + b0_i^2) / (2 z)
  double disc = 0.0;       // sigma_init^2 - s_init^2 + s^2
  double gamma_plus = 1.0;
  double gamma_minus = 0.0;
};

/// Throws DegenerateInitError when sigma_init + s_init vanishes (a = -b
/// identically) or the discriminant is not positive.
GammaSolution gamma_solution(const Eigen::VectorXd& a0,
                             const Eigen::VectorXd& b0, double s, double z);

/// gamma(t); gamma(0) = 1, monotone toward gamma_plus.
double gamma_at(const GammaSolution& sol, double t);

/// a_i(t), b_i(t) reconstructed from gamma(t).
std::pair<Eigen::VectorXd, Eigen::VectorXd> reconstruct_params(
    const GammaSolution& sol, double t);

/// Model output sum a_i(t) b_i(t) / z implied by gamma(t).
double gamma_output(const GammaSolution& sol, double t);

/// Normalized singular-mode transition gamma_alpha(t) of a lambda-balanced
/// square network in the two solved limits: lambda == 0 (sigmoidal) and
/// |lambda| >= 1 (single-exponential with rate |lambda|/tau). Intermediate
/// nonzero lambda throws UnsupportedRegimeError.
double balanced_transition(double t, double lambda, double rho_tilde,
                           double s_alpha0, double tau);

/// Activity window [t(eps), t(1-eps)] per mode plus a disjointness flag:
/// true when the windows, ordered by onset, do not overlap (stage-like
/// learning).
struct StageSchedule {
  std::vector<std::pair<double, double>> windows;  // in input mode order
  bool disjoint = false;
};
StageSchedule stage_like_schedule(const std::vector<ModeParams>& modes,
                                  double eps);

}  // namespace lindyn
