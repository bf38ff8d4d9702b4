#include "lindyn/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lindyn/analytic.hpp"
#include "lindyn/rng.hpp"

namespace lindyn {

namespace {

Eigen::VectorXd flatten(const std::vector<Eigen::MatrixXd>& layers) {
  Eigen::Index total = 0;
  for (const auto& m : layers) total += m.size();
  Eigen::VectorXd v(total);
  Eigen::Index at = 0;
  for (const auto& m : layers) {
    v.segment(at, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    at += m.size();
  }
  return v;
}

void unflatten(const Eigen::VectorXd& v, std::vector<Eigen::MatrixXd>& layers) {
  Eigen::Index at = 0;
  for (auto& m : layers) {
    m = Eigen::Map<const Eigen::MatrixXd>(v.data() + at, m.rows(), m.cols());
    at += m.size();
  }
}

// Dormand-Prince 5(4) tableau.
constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA21 = 1.0 / 5;
constexpr double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
constexpr double kA41 = 44.0 / 45, kA42 = -56.0 / 15, kA43 = 32.0 / 9;
constexpr double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187,
                 kA53 = 64448.0 / 6561, kA54 = -212.0 / 729;
constexpr double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33,
                 kA63 = 46732.0 / 5247, kA64 = 49.0 / 176,
                 kA65 = -5103.0 / 18656;
constexpr double kB1 = 35.0 / 384, kB3 = 500.0 / 1113, kB4 = 125.0 / 192,
                 kB5 = -2187.0 / 6784, kB6 = 11.0 / 84;
// Fifth-order weights minus the embedded fourth-order weights.
constexpr double kE1 = 71.0 / 57600, kE3 = -71.0 / 16695, kE4 = 71.0 / 1920,
                 kE5 = -17253.0 / 339200, kE6 = 22.0 / 525, kE7 = -1.0 / 40;

}  // namespace

void FlowConfig::validate() const {
  if (!(t_end > 0.0)) throw ShapeError("FlowConfig: t_end must be > 0");
  if (!(rel_tol > 0.0 && rel_tol <= 1e-2))
    throw ShapeError("FlowConfig: rel_tol must be in (0, 1e-2]");
  if (!(abs_tol > 0.0 && abs_tol <= 1e-2))
    throw ShapeError("FlowConfig: abs_tol must be in (0, 1e-2]");
  if (max_step < 0.0) throw ShapeError("FlowConfig: max_step must be >= 0");
  if (record_every < 0.0 || record_every > t_end)
    throw ShapeError("FlowConfig: record_every must be in [0, t_end]");
}

const std::vector<double>& Trajectory::series_for(
    const std::string& name) const {
  for (std::size_t k = 0; k < series_names.size(); ++k)
    if (series_names[k] == name) return series[k];
  throw ShapeError("Trajectory: no series named " + name);
}

std::vector<Observer> standard_observers(const ModelSpec& spec,
                                         const TargetSpec& target,
                                         const InputStatistics& stats,
                                         const ParamState& init) {
  std::vector<Observer> obs;
  obs.push_back({"loss", [spec, target, stats](const ParamState& s) {
                   return loss(spec, s, target, stats);
                 }});

  const bool dense =
      spec.family == Family::kLnn || spec.family == Family::kUfm;
  Eigen::MatrixXd basis_u, basis_v;
  if (dense) {
    // Fixed singular basis of the target so dense mode values are comparable
    // across time.
    Eigen::MatrixXd reference;
    if (target.kind() == TargetSpec::Kind::kCorrelation) {
      reference = target.correlation;
    } else if (stats.has_samples()) {
      reference = stats.samples.transpose() * target.labels /
                  static_cast<double>(target.labels.rows());
    } else {
      reference = target.labels;  // trainable-feature family: inputs are e_i
    }
    const SingularTriplets svd = correlation_spectrum(reference);
    basis_u = svd.u;
    basis_v = svd.v;
  }
  for (int i = 0; i < spec.mode_count(); ++i) {
    const std::string name = "mode_" + std::to_string(i + 1);
    if (dense) {
      obs.push_back({name, [spec, basis_u, basis_v, i](const ParamState& s) {
                       return mode_values(spec, s, basis_u, basis_v)[i];
                     }});
    } else {
      obs.push_back({name, [spec, i](const ParamState& s) {
                       return mode_values(spec, s)[i];
                     }});
    }
  }

  if (spec.family == Family::kLinear || spec.family == Family::kMlpTanh) {
    obs.push_back({"conservation_drift", [](const ParamState&) { return 0.0; }});
  } else {
    const Eigen::MatrixXd q0 = conserved_quantity(spec, init);
    obs.push_back({"conservation_drift", [spec, q0](const ParamState& s) {
                     return (conserved_quantity(spec, s) - q0)
                         .cwiseAbs()
                         .maxCoeff();
                   }});
  }
  return obs;
}

Trajectory integrate(const ModelSpec& spec, const ParamState& init,
                     const TargetSpec& target, const InputStatistics& stats,
                     const FlowConfig& cfg,
                     const std::vector<Observer>& observers) {
  cfg.validate();
  validate_state(spec, init);

  const double max_step = cfg.max_step > 0.0 ? cfg.max_step : cfg.t_end / 10.0;
  const double record_every =
      cfg.record_every > 0.0 ? cfg.record_every : cfg.t_end / 200.0;

  ParamState state = init;
  state.t = 0.0;
  Eigen::VectorXd y = flatten(state.layers);
  const Eigen::Index n = y.size();

  auto rhs = [&](const Eigen::VectorXd& point) -> Eigen::VectorXd {
    unflatten(point, state.layers);
    return -flatten(gradient(spec, state, target, stats));
  };

  Trajectory traj;
  for (const Observer& o : observers) traj.series_names.push_back(o.name);
  traj.series.resize(observers.size());

  auto record = [&](double t, const Eigen::VectorXd& point) {
    unflatten(point, state.layers);
    state.t = t;
    traj.times.push_back(t);
    for (std::size_t k = 0; k < observers.size(); ++k)
      traj.series[k].push_back(observers[k].fn(state));
  };

  auto loss_at = [&](const Eigen::VectorXd& point) {
    unflatten(point, state.layers);
    return loss(spec, state, target, stats);
  };

  double t = 0.0;
  record(t, y);

  Eigen::VectorXd k1 = rhs(y);
  // Initial step from the local derivative scale. A floor keeps degenerate
  // guesses (zero initial state) away from the underflow guard; the
  // controller corrects either direction within a few steps.
  double h;
  {
    const double d0 = y.cwiseAbs().maxCoeff() + cfg.abs_tol;
    const double d1 = k1.cwiseAbs().maxCoeff();
    const double cap = std::min(max_step, record_every);
    h = d1 > 0.0 ? 0.01 * d0 / d1 : cap;
    h = std::clamp(h, 1e-6 * cap, cap);
  }

  Eigen::VectorXd k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), y5(n), err_vec(n);
  double err_prev = 1.0;
  double next_record = record_every;
  bool done = false;

  while (!done) {
    if (h < 1e-14 * std::max(1.0, std::abs(t))) {
      unflatten(y, state.layers);
      state.t = t;
      throw StiffnessError("integrate: step size underflow at t = " +
                               std::to_string(t),
                           state, t);
    }
    const double stop = std::min(next_record, cfg.t_end);
    bool hit_stop = false;
    double step = h;
    if (t + step >= stop - 1e-14 * std::max(1.0, stop)) {
      step = stop - t;
      hit_stop = true;
    }

    k2 = rhs(y + step * (kA21 * k1));
    k3 = rhs(y + step * (kA31 * k1 + kA32 * k2));
    k4 = rhs(y + step * (kA41 * k1 + kA42 * k2 + kA43 * k3));
    k5 = rhs(y + step * (kA51 * k1 + kA52 * k2 + kA53 * k3 + kA54 * k4));
    k6 = rhs(y + step *
                     (kA61 * k1 + kA62 * k2 + kA63 * k3 + kA64 * k4 + kA65 * k5));
    y5 = y + step * (kB1 * k1 + kB3 * k3 + kB4 * k4 + kB5 * k5 + kB6 * k6);
    k7 = rhs(y5);
    err_vec = step * (kE1 * k1 + kE3 * k3 + kE4 * k4 + kE5 * k5 + kE6 * k6 +
                      kE7 * k7);

    if (!y5.allFinite()) {
      throw DivergenceError(
          "integrate: non-finite state at t = " + std::to_string(t), t);
    }

    double err_sq = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sc =
          cfg.abs_tol +
          cfg.rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
      const double e = err_vec[i] / sc;
      err_sq += e * e;
    }
    const double err = std::sqrt(err_sq / static_cast<double>(n));
    if (!std::isfinite(err)) {
      h = step * 0.1;
      continue;
    }

    if (err <= 1.0) {
      t += step;
      y.swap(y5);
      k1.swap(k7);  // first-same-as-last

      if (hit_stop) {
        record(t, y);
        if (std::abs(t - cfg.t_end) <= 1e-14 * std::max(1.0, cfg.t_end)) {
          done = true;
        } else {
          next_record = std::min(next_record + record_every, cfg.t_end);
        }
      }

      if (!done && loss_at(y) < kEarlyStopLoss) {
        if (traj.times.empty() || traj.times.back() != t) record(t, y);
        traj.converged = true;
        done = true;
      }

      // PI controller on accepted steps.
      const double factor = std::clamp(
          0.9 * std::pow(err > 0.0 ? err : 1e-10, -0.2) * std::pow(err_prev, 0.08),
          0.2, 5.0);
      h = std::min(step * factor, max_step);
      err_prev = std::max(err, 1e-10);
    } else {
      h = step * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 1.0);
    }
  }

  unflatten(y, state.layers);
  state.t = t;
  traj.final_state = state;
  return traj;
}

AdamOptimizer::AdamOptimizer(double lr, double beta1, double beta2, double eps,
                             double weight_decay)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
      weight_decay_(weight_decay) {}

void AdamOptimizer::step(std::vector<Eigen::MatrixXd>& params,
                         const std::vector<Eigen::MatrixXd>& grads) {
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
      v_.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t l = 0; l < params.size(); ++l) {
    m_[l] = beta1_ * m_[l] + (1.0 - beta1_) * grads[l];
    v_[l] = beta2_ * v_[l] + (1.0 - beta2_) * grads[l].cwiseAbs2();
    const Eigen::ArrayXXd m_hat = m_[l].array() / bc1;
    const Eigen::ArrayXXd v_hat = v_[l].array() / bc2;
    params[l].array() -= lr_ * m_hat / (v_hat.sqrt() + eps_);
    if (weight_decay_ != 0.0) params[l] -= lr_ * weight_decay_ * params[l];
  }
}

void GdConfig::validate() const {
  if (!(lr > 0.0)) throw ShapeError("GdConfig: lr must be > 0");
  if (steps < 1) throw ShapeError("GdConfig: steps must be >= 1");
  if (batch < 0) throw ShapeError("GdConfig: batch must be >= 0");
}

Trajectory discrete_gd(const ModelSpec& spec, const ParamState& init,
                       const TargetSpec& target, const InputStatistics& stats,
                       const GdConfig& cfg,
                       const std::vector<Observer>& observers) {
  cfg.validate();
  validate_state(spec, init);
  if (cfg.batch > 0 && !stats.has_samples())
    throw ShapeError("discrete_gd: minibatch training needs stats.samples");
  if (cfg.batch > 0 && target.kind() != TargetSpec::Kind::kLabels)
    throw ShapeError("discrete_gd: minibatch training needs a labels target");

  ParamState state = init;
  state.t = 0.0;

  Trajectory traj;
  for (const Observer& o : observers) traj.series_names.push_back(o.name);
  traj.series.resize(observers.size());
  const long stride =
      cfg.record_stride > 0 ? cfg.record_stride : std::max<long>(1, cfg.steps / 200);

  auto record = [&](long step_index) {
    state.t = static_cast<double>(step_index) * cfg.lr;
    traj.times.push_back(state.t);
    for (std::size_t k = 0; k < observers.size(); ++k)
      traj.series[k].push_back(observers[k].fn(state));
  };

  Rng rng(cfg.seed);
  const Eigen::Index n_rows = stats.has_samples() ? stats.samples.rows() : 0;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n_rows));
  std::iota(order.begin(), order.end(), 0);

  AdamOptimizer adam(cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps,
                     cfg.weight_decay);

  record(0);
  for (long step = 1; step <= cfg.steps; ++step) {
    std::vector<Eigen::MatrixXd> grads;
    if (cfg.batch > 0 && cfg.batch < n_rows) {
      // Partial Fisher-Yates: a fresh batch without replacement each step.
      for (int i = 0; i < cfg.batch; ++i) {
        const auto j = static_cast<Eigen::Index>(
            rng.uniform_index(static_cast<std::uint64_t>(n_rows - i)));
        std::swap(order[i], order[i + j]);
      }
      Eigen::MatrixXd xb(cfg.batch, stats.samples.cols());
      Eigen::MatrixXd yb(cfg.batch, target.labels.cols());
      for (int i = 0; i < cfg.batch; ++i) {
        xb.row(i) = stats.samples.row(order[i]);
        yb.row(i) = target.labels.row(order[i]);
      }
      InputStatistics batch_stats = stats;
      batch_stats.samples = std::move(xb);
      grads = gradient(spec, state, TargetSpec::Labels(std::move(yb)),
                       batch_stats);
    } else {
      grads = gradient(spec, state, target, stats);
    }

    if (cfg.optimizer == GdConfig::Optimizer::kAdam) {
      adam.step(state.layers, grads);
    } else {
      for (std::size_t l = 0; l < state.layers.size(); ++l) {
        state.layers[l] -= cfg.lr * grads[l];
        if (cfg.weight_decay != 0.0)
          state.layers[l] -= cfg.lr * cfg.weight_decay * state.layers[l];
      }
    }

    if (step % stride == 0 || step == cfg.steps) record(step);
  }

  state.t = static_cast<double>(cfg.steps) * cfg.lr;
  traj.final_state = state;
  return traj;
}

}  // namespace lindyn
