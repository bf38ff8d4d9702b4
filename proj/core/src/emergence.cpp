#include "lindyn/emergence.hpp"

#include <cmath>

#include "lindyn/analytic.hpp"
#include "lindyn/rng.hpp"

namespace lindyn {

SkillEnsemble SkillEnsemble::PowerLaw(int p_star, int p, double alpha,
                                      double s) {
  if (p_star < 1 || p < 1)
    throw ShapeError("SkillEnsemble: p_star and p must be >= 1");
  SkillEnsemble e;
  e.p_star = p_star;
  e.p = p;
  e.s = s;
  e.freq.resize(p_star);
  for (int k = 0; k < p_star; ++k)
    e.freq[k] = std::pow(static_cast<double>(k + 1), -alpha);
  e.freq /= e.freq.sum();
  e.validate();
  return e;
}

void SkillEnsemble::validate() const {
  if (freq.size() != p_star)
    throw ShapeError("SkillEnsemble: freq must have length p_star");
  if (!(freq.array() > 0.0).all())
    throw ShapeError("SkillEnsemble: frequencies must be positive");
  if (std::abs(freq.sum() - 1.0) > 1e-12)
    throw ShapeError("SkillEnsemble: frequencies must sum to one");
  if (!(s > 0.0)) throw ShapeError("SkillEnsemble: s must be > 0");
}

Eigen::VectorXd ParityTask::freq() const {
  validate();
  Eigen::VectorXd f(n_control);
  for (int k = 0; k < n_control; ++k)
    f[k] = std::pow(static_cast<double>(k + 1), -alpha);
  return f / f.sum();
}

std::vector<std::vector<int>> ParityTask::masks() const {
  validate();
  std::vector<std::vector<int>> m_all(n_control);
  for (int k = 0; k < n_control; ++k)
    for (int j = 0; j < m; ++j) m_all[k].push_back((k * m + j) % n_payload);
  return m_all;
}

void ParityTask::validate() const {
  if (n_control < 1 || n_payload < 1)
    throw ShapeError("ParityTask: bit counts must be >= 1");
  if (m < 1 || m > n_payload)
    throw ShapeError("ParityTask: m must be in [1, n_payload]");
}

ParityData gen_parity(const ParityTask& task, int n, std::uint64_t seed) {
  if (n < 1) throw ShapeError("gen_parity: n must be >= 1");
  const Eigen::VectorXd f = task.freq();
  const auto masks = task.masks();

  Eigen::VectorXd cumulative(f.size());
  double acc = 0.0;
  for (Eigen::Index k = 0; k < f.size(); ++k) {
    acc += f[k];
    cumulative[k] = acc;
  }
  cumulative[f.size() - 1] = 1.0;

  Rng rng(seed);
  ParityData data;
  data.x = Eigen::MatrixXi::Zero(n, task.n_control + task.n_payload);
  data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    int skill = 0;
    while (skill + 1 < task.n_control && u > cumulative[skill]) ++skill;
    data.x(i, skill) = 1;
    for (int j = 0; j < task.n_payload; ++j)
      data.x(i, task.n_control + j) = rng.uniform() < 0.5 ? 0 : 1;
    int parity = 0;
    for (int pos : masks[skill]) parity ^= data.x(i, task.n_control + pos);
    data.y[i] = parity;
  }
  return data;
}

Eigen::VectorXd skill_strength(const Eigen::VectorXd& coefficients,
                               const SkillEnsemble& ensemble) {
  ensemble.validate();
  if (coefficients.size() != ensemble.p)
    throw ShapeError("skill_strength: coefficients must have length p");
  // Mutual exclusivity makes the basis orthogonal, so the regression of f on
  // g_k is the coefficient itself; skills beyond the width contribute zero.
  Eigen::VectorXd r = Eigen::VectorXd::Zero(ensemble.p_star);
  const int shared = std::min(ensemble.p, ensemble.p_star);
  r.head(shared) = coefficients.head(shared);
  return r;
}

Eigen::MatrixXd emergence_time_curve(const SkillEnsemble& ensemble, double u0,
                                     const Eigen::VectorXd& t_grid) {
  ensemble.validate();
  Eigen::MatrixXd curve(t_grid.size(), ensemble.p_star);
  for (int k = 0; k < ensemble.p_star; ++k) {
    if (k >= ensemble.p) {
      curve.col(k).setZero();
      continue;
    }
    const ModeParams mode{ensemble.s, ensemble.freq[k], u0};
    for (Eigen::Index i = 0; i < t_grid.size(); ++i)
      curve(i, k) = sigmoidal_mode(t_grid[i], mode);
  }
  return curve;
}

Eigen::MatrixXd emergence_data(const SkillEnsemble& ensemble,
                               const std::vector<long>& sizes,
                               const Eigen::VectorXi& shots, int trials,
                               std::uint64_t seed) {
  ensemble.validate();
  if (shots.size() != ensemble.p_star)
    throw ShapeError("emergence_data: shots must have length p_star");
  if (trials < 1) throw ShapeError("emergence_data: trials must be >= 1");

  Eigen::VectorXd cumulative(ensemble.p_star);
  double acc = 0.0;
  for (int k = 0; k < ensemble.p_star; ++k) {
    acc += ensemble.freq[k];
    cumulative[k] = acc;
  }
  cumulative[ensemble.p_star - 1] = 1.0;

  Eigen::MatrixXd prob =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sizes.size()),
                            ensemble.p_star);
  std::vector<long> counts(ensemble.p_star);
  for (std::size_t si = 0; si < sizes.size(); ++si) {
    if (sizes[si] < 0) throw ShapeError("emergence_data: sizes must be >= 0");
    for (int trial = 0; trial < trials; ++trial) {
      Rng rng(derive_seed(seed, si, static_cast<std::uint64_t>(trial)));
      std::fill(counts.begin(), counts.end(), 0L);
      for (long i = 0; i < sizes[si]; ++i) {
        const double u = rng.uniform();
        // Binary search over the cumulative frequencies.
        int lo = 0, hi = ensemble.p_star - 1;
        while (lo < hi) {
          const int mid = (lo + hi) / 2;
          if (u > cumulative[mid]) lo = mid + 1; else hi = mid;
        }
        ++counts[lo];
      }
      for (int k = 0; k < ensemble.p_star; ++k)
        if (counts[k] >= shots[k]) prob(si, k) += 1.0;
    }
  }
  return prob / static_cast<double>(trials);
}

Eigen::MatrixXi emergence_params(const SkillEnsemble& ensemble,
                                 const std::vector<int>& widths) {
  ensemble.validate();
  Eigen::MatrixXi learned(static_cast<Eigen::Index>(widths.size()),
                          ensemble.p_star);
  for (std::size_t wi = 0; wi < widths.size(); ++wi)
    for (int k = 0; k < ensemble.p_star; ++k)
      learned(static_cast<Eigen::Index>(wi), k) = k < widths[wi] ? 1 : 0;
  return learned;
}

ScalingCurve scaling_curve(const SkillEnsemble& ensemble, Resource resource,
                           const Eigen::VectorXd& grid, double u0) {
  ensemble.validate();
  if (grid.size() == 0) throw ShapeError("scaling_curve: empty grid");

  ScalingCurve curve;
  curve.resource = grid;
  curve.loss.resize(grid.size());
  const double s = ensemble.s;

  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    double total = 0.0;
    for (int k = 0; k < ensemble.p_star; ++k) {
      const double f = ensemble.freq[k];
      double rk;
      switch (resource) {
        case Resource::kTime:
          rk = k < ensemble.p
                   ? sigmoidal_mode(grid[i], ModeParams{s, f, u0})
                   : 0.0;
          break;
        case Resource::kData: {
          // One-shot learning: learned with probability 1 - (1-f)^n, else the
          // strength stays at its initial value.
          if (k >= ensemble.p) {
            rk = 0.0;
            break;
          }
          const double p_learn = 1.0 - std::pow(1.0 - f, grid[i]);
          total += 0.5 * f *
                   (p_learn * 0.0 + (1.0 - p_learn) * (s - u0) * (s - u0));
          continue;
        }
        case Resource::kParams:
          rk = k < static_cast<int>(grid[i]) ? s : 0.0;
          break;
        default:
          throw ShapeError("scaling_curve: unknown resource");
      }
      total += 0.5 * f * (s - rk) * (s - rk);
    }
    curve.loss[i] = total;
  }
  return curve;
}

double log_log_slope(const ScalingCurve& curve) {
  if (curve.resource.size() < 2)
    throw ShapeError("log_log_slope: need at least two points");
  const Eigen::Index n = curve.resource.size();
  Eigen::VectorXd lx(n), ly(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(curve.resource[i] > 0.0) || !(curve.loss[i] > 0.0))
      throw DomainError("log_log_slope: values must be positive");
    lx[i] = std::log(curve.resource[i]);
    ly[i] = std::log(curve.loss[i]);
  }
  const double mx = lx.mean(), my = ly.mean();
  const double cov = (lx.array() - mx).cwiseProduct(ly.array() - my).sum();
  const double var = (lx.array() - mx).square().sum();
  if (var == 0.0) throw DomainError("log_log_slope: degenerate grid");
  return cov / var;
}

}  // namespace lindyn
