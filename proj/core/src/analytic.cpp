#include "lindyn/analytic.hpp"

#include <algorithm>
#include <cmath>

namespace lindyn {

namespace {
constexpr double kAsymptoticLambdaMin = 1.0;
}

void ModeParams::validate() const {
  if (!(rate > 0.0)) throw DomainError("ModeParams: rate must be > 0");
  if (!(u0 > 0.0 && u0 < s))
    throw DomainError("ModeParams: requires 0 < u0 < s");
}

double sigmoidal_mode(double t, const ModeParams& params) {
  params.validate();
  if (t < 0.0) throw DomainError("sigmoidal_mode: t must be >= 0");
  const double decay = std::exp(-2.0 * params.s * params.rate * t);
  return params.s / (1.0 + (params.s / params.u0 - 1.0) * decay);
}

double sigmoidal_crossing_time(double fraction, const ModeParams& params) {
  params.validate();
  if (!(fraction > 0.0 && fraction < 1.0))
    throw DomainError("sigmoidal_crossing_time: fraction must be in (0, 1)");
  // Inverting the logistic form; negative values mean the level was already
  // passed at t = 0 and are clamped to zero.
  const double t = std::log((params.s / params.u0 - 1.0) * fraction /
                            (1.0 - fraction)) /
                   (2.0 * params.s * params.rate);
  return std::max(t, 0.0);
}

double linear_mode(double t, double s, double rate) {
  if (!(rate > 0.0)) throw DomainError("linear_mode: rate must be > 0");
  if (t < 0.0) throw DomainError("linear_mode: t must be >= 0");
  return s * (1.0 - std::exp(-rate * t));
}

double saxe_mode(double t, double rho, double alpha0_sq) {
  if (!(rho > 0.0)) throw DomainError("saxe_mode: rho must be > 0");
  if (!(alpha0_sq > 0.0)) throw DomainError("saxe_mode: alpha0_sq must be > 0");
  if (t < 0.0) throw DomainError("saxe_mode: t must be >= 0");
  const double decay = std::exp(-2.0 * rho * t);
  return rho / (1.0 + (rho / alpha0_sq - 1.0) * decay);
}

SingularTriplets correlation_spectrum(const Eigen::MatrixXd& correlation) {
  if (correlation.size() == 0)
    throw ShapeError("correlation_spectrum: empty matrix");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      correlation, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

GammaSolution gamma_solution(const Eigen::VectorXd& a0,
                             const Eigen::VectorXd& b0, double s, double z) {
  if (a0.size() != b0.size() || a0.size() == 0)
    throw ShapeError("gamma_solution: a0 and b0 must have equal positive size");
  if (!(z > 0.0)) throw ShapeError("gamma_solution: z must be > 0");

  GammaSolution sol;
  sol.a0 = a0;
  sol.b0 = b0;
  sol.s = s;
  sol.z = z;
  sol.s_init = a0.dot(b0) / z;
  sol.sigma_init = (a0.squaredNorm() + b0.squaredNorm()) / (2.0 * z);
  sol.disc = sol.sigma_init * sol.sigma_init - sol.s_init * sol.s_init + s * s;

  // sigma_init + s_init = sum (a_i + b_i)^2 / (2z); zero only on the
  // anti-aligned manifold a = -b where gamma is undefined.
  const double denom = sol.sigma_init + sol.s_init;
  if (!(denom > 0.0))
    throw DegenerateInitError(
        "gamma_solution: init has a_i = -b_i for all i; the transition "
        "variable is undefined");
  if (!(sol.disc > 0.0))
    throw DegenerateInitError("gamma_solution: discriminant must be positive");

  const double root = std::sqrt(sol.disc);
  sol.gamma_plus = (s + root) / denom;
  sol.gamma_minus = (s - root) / denom;
  return sol;
}

double gamma_at(const GammaSolution& sol, double t) {
  if (t < 0.0) throw DomainError("gamma_at: t must be >= 0");
  // gamma solves the Riccati flow z gamma' = -(sigma_init + s_init)
  // (gamma - gamma_plus)(gamma - gamma_minus); the fixed-point gap times the
  // leading coefficient gives the decay rate 2 sqrt(disc) / z.
  const double root = std::sqrt(sol.disc);
  const double decay = std::exp(-2.0 * root * t / sol.z);
  const double num = (sol.sigma_init - sol.s_init + sol.s + root) +
                     (-sol.sigma_init + sol.s_init - sol.s + root) * decay;
  const double den = (sol.sigma_init + sol.s_init - sol.s + root) +
                     (-sol.sigma_init - sol.s_init + sol.s + root) * decay;
  return num / den;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> reconstruct_params(
    const GammaSolution& sol, double t) {
  const double g = gamma_at(sol, t);
  const double sqrt_g = std::sqrt(g);
  const Eigen::VectorXd sum_half = 0.5 * (sol.a0 + sol.b0);
  const Eigen::VectorXd diff_half = 0.5 * (sol.a0 - sol.b0);
  return {sum_half * sqrt_g + diff_half / sqrt_g,
          sum_half * sqrt_g - diff_half / sqrt_g};
}

double gamma_output(const GammaSolution& sol, double t) {
  const double g = gamma_at(sol, t);
  // sum a_i b_i / z = (sigma + S) gamma / 2 - (sigma - S) / (2 gamma),
  // with sigma = sigma_init and S = s_init.
  return 0.5 * ((sol.sigma_init + sol.s_init) * g -
                (sol.sigma_init - sol.s_init) / g);
}

double balanced_transition(double t, double lambda, double rho_tilde,
                           double s_alpha0, double tau) {
  if (t < 0.0) throw DomainError("balanced_transition: t must be >= 0");
  if (!(tau > 0.0)) throw DomainError("balanced_transition: tau must be > 0");
  if (lambda == 0.0) {
    if (!(rho_tilde > 0.0))
      throw DomainError("balanced_transition: rho_tilde must be > 0");
    if (!(s_alpha0 > 0.0))
      throw DomainError("balanced_transition: s_alpha0 must be > 0");
    const double q = std::exp(-2.0 * rho_tilde * t / tau);
    return (1.0 - q) / (1.0 - q + (rho_tilde / s_alpha0) * q);
  }
  if (std::abs(lambda) >= kAsymptoticLambdaMin)
    return 1.0 - std::exp(-std::abs(lambda) * t / tau);
  throw UnsupportedRegimeError(
      "balanced_transition: only lambda == 0 and |lambda| >= 1 have closed "
      "forms");
}

StageSchedule stage_like_schedule(const std::vector<ModeParams>& modes,
                                  double eps) {
  if (modes.empty()) throw ShapeError("stage_like_schedule: no modes");
  if (!(eps > 0.0 && eps < 0.5))
    throw DomainError("stage_like_schedule: eps must be in (0, 0.5)");

  StageSchedule sched;
  sched.windows.reserve(modes.size());
  for (const ModeParams& m : modes) {
    sched.windows.emplace_back(sigmoidal_crossing_time(eps, m),
                               sigmoidal_crossing_time(1.0 - eps, m));
  }

  std::vector<std::pair<double, double>> ordered = sched.windows;
  std::sort(ordered.begin(), ordered.end());
  sched.disjoint = true;
  for (std::size_t i = 0; i + 1 < ordered.size(); ++i) {
    if (ordered[i + 1].first < ordered[i].second) {
      sched.disjoint = false;
      break;
    }
  }
  return sched;
}

}  // namespace lindyn
