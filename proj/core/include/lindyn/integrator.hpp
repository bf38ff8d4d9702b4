#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lindyn/model.hpp"

// Gradient-flow integration (adaptive embedded Runge-Kutta 4(5) with PI step
// control) and discrete-time gradient descent. The continuous path is the
// numeric oracle for every closed form; the discrete path mirrors how the
// phenomena experiments actually train.

namespace lindyn {

struct FlowConfig {
  double t_end = 1.0;
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 0.0;      // 0 resolves to t_end / 10
  double record_every = 0.0;  // 0 resolves to t_end / 200
  std::uint64_t seed = 0;     // carried for manifest reproducibility

  void validate() const;
};

/// Named scalar probe evaluated on the recording grid.
struct Observer {
  std::string name;
  std::function<double(const ParamState&)> fn;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::string> series_names;
  std::vector<std::vector<double>> series;  // series[k][i] at times[i]
  ParamState final_state;
  bool converged = false;  // loss crossed the early-stop threshold

  const std::vector<double>& series_for(const std::string& name) const;
};

/// Loss threshold below which integrate() stops early and flags convergence.
inline constexpr double kEarlyStopLoss = 1e-14;

/// Loss, per-mode values and conservation drift (sup-norm against the initial
/// conserved quantity; identically zero for one-layer families).
std::vector<Observer> standard_observers(const ModelSpec& spec,
                                         const TargetSpec& target,
                                         const InputStatistics& stats,
                                         const ParamState& init);

/// Integrates d(theta)/dt = -grad L from init to cfg.t_end, recording the
/// observers on the uniform grid (grid points are hit exactly; no
/// interpolation). Throws DivergenceError on non-finite state and
/// StiffnessError on step-size underflow.
Trajectory integrate(const ModelSpec& spec, const ParamState& init,
                     const TargetSpec& target, const InputStatistics& stats,
                     const FlowConfig& cfg,
                     const std::vector<Observer>& observers);

struct DivergenceError : Error {
  DivergenceError(const std::string& what, double t) : Error(what), t_reached(t) {}
  double t_reached;
};

struct StiffnessError : Error {
  StiffnessError(const std::string& what, ParamState last, double t)
      : Error(what), last_state(std::move(last)), t_reached(t) {}
  ParamState last_state;
  double t_reached;
};

/// Reusable Adam with decoupled weight decay (defaults beta1=0.9,
/// beta2=0.999, eps=1e-8); also used by the grokking harness.
class AdamOptimizer {
 public:
  AdamOptimizer(double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8, double weight_decay = 0.0);

  void step(std::vector<Eigen::MatrixXd>& params,
            const std::vector<Eigen::MatrixXd>& grads);

 private:
  double lr_, beta1_, beta2_, eps_, weight_decay_;
  long t_ = 0;
  std::vector<Eigen::MatrixXd> m_, v_;
};

struct GdConfig {
  double lr = 0.01;
  long steps = 1000;
  int batch = 0;  // 0 = full batch (or population gradient)
  enum class Optimizer { kSgd, kAdam } optimizer = Optimizer::kSgd;
  double weight_decay = 0.0;  // decoupled
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  long record_stride = 0;  // 0 resolves to ~steps / 200
  std::uint64_t seed = 0;  // minibatch sampling

  void validate() const;
};

/// Discrete GD/Adam on the same loss; trajectory times are step * lr so the
/// small-lr limit is directly comparable with integrate(). Minibatches are
/// drawn without replacement from stats.samples.
Trajectory discrete_gd(const ModelSpec& spec, const ParamState& init,
                       const TargetSpec& target, const InputStatistics& stats,
                       const GdConfig& cfg,
                       const std::vector<Observer>& observers);

}  // namespace lindyn
