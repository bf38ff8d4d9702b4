#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "lindyn/analytic.hpp"
#include "lindyn/errors.hpp"
#include "lindyn/integrator.hpp"
#include "lindyn/model.hpp"
#include "lindyn/rng.hpp"

using namespace lindyn;

namespace {

ModelSpec diag_spec(int d) {
  ModelSpec spec;
  spec.family = Family::kDiagLnn;
  spec.d = d;
  spec.p = d;
  spec.c = 1;
  spec.validate();
  return spec;
}

struct DiagProblem {
  ModelSpec spec;
  ParamState init;
  TargetSpec target;
  InputStatistics stats;
  std::vector<ModeParams> modes;
};

DiagProblem three_mode_problem(double u0) {
  DiagProblem prob{diag_spec(3), diag_balanced_state(3, u0),
                   TargetSpec::Scales(Eigen::VectorXd::Zero(3)),
                   InputStatistics::Whitened(3), {}};
  Eigen::VectorXd s(3), var(3);
  s << 1.0, 2.0, 0.5;
  var << 1.0, 0.25, 3.0;
  prob.target = TargetSpec::Scales(s);
  prob.stats = InputStatistics::Population(var);
  for (int i = 0; i < 3; ++i) {
    ModeParams m;
    m.s = s(i);
    m.rate = var(i);
    m.u0 = u0;
    prob.modes.push_back(m);
  }
  return prob;
}

double sup_mode_error(const DiagProblem& prob, const Trajectory& traj) {
  double sup = 0.0;
  for (int i = 0; i < 3; ++i) {
    const auto& series = traj.series_for("mode_" + std::to_string(i + 1));
    for (std::size_t k = 0; k < traj.times.size(); ++k)
      sup = std::max(sup, std::abs(series[k] -
                                   sigmoidal_mode(traj.times[k], prob.modes[i])));
  }
  return sup;
}

}  // namespace

TEST_CASE("flow configuration rejects bad tolerances and horizons") {
  FlowConfig cfg;
  cfg.t_end = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ShapeError);
  cfg.t_end = 1.0;
  cfg.rel_tol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ShapeError);
  cfg.rel_tol = 1e-10;
  cfg.record_every = 2.0;
  CHECK_THROWS_AS(cfg.validate(), ShapeError);
}

TEST_CASE("adaptive flow tracks the logistic closed form") {
  const DiagProblem prob = three_mode_problem(1e-4);
  FlowConfig cfg;
  cfg.t_end = 12.0;

  Trajectory tight = integrate(prob.spec, prob.init, prob.target, prob.stats,
                               cfg, standard_observers(prob.spec, prob.target,
                                                       prob.stats, prob.init));
  const double tight_err = sup_mode_error(prob, tight);
  CHECK(tight_err < 1e-8);

  FlowConfig loose = cfg;
  loose.rel_tol = 1e-5;
  loose.abs_tol = 1e-7;
  Trajectory coarse = integrate(prob.spec, prob.init, prob.target, prob.stats,
                                loose, standard_observers(prob.spec, prob.target,
                                                          prob.stats, prob.init));
  CHECK(tight_err <= sup_mode_error(prob, coarse) + 1e-12);
}

TEST_CASE("recording grid is hit exactly and in order") {
  const DiagProblem prob = three_mode_problem(0.3);
  FlowConfig cfg;
  cfg.t_end = 2.0;
  cfg.record_every = 0.25;
  const Trajectory traj =
      integrate(prob.spec, prob.init, prob.target, prob.stats, cfg,
                standard_observers(prob.spec, prob.target, prob.stats, prob.init));
  REQUIRE(traj.times.size() == 9);
  for (int k = 0; k < 9; ++k)
    CHECK(traj.times[k] == doctest::Approx(0.25 * k).epsilon(1e-12));
  CHECK_THROWS_AS(traj.series_for("no_such_series"), ShapeError);
}

TEST_CASE("adaptive flow is bit-reproducible") {
  const DiagProblem prob = three_mode_problem(1e-3);
  FlowConfig cfg;
  cfg.t_end = 8.0;
  const auto obs =
      standard_observers(prob.spec, prob.target, prob.stats, prob.init);
  const Trajectory first =
      integrate(prob.spec, prob.init, prob.target, prob.stats, cfg, obs);
  const Trajectory second =
      integrate(prob.spec, prob.init, prob.target, prob.stats, cfg, obs);
  REQUIRE(first.times.size() == second.times.size());
  for (std::size_t k = 0; k < first.times.size(); ++k)
    CHECK(first.times[k] == second.times[k]);
  for (std::size_t s = 0; s < first.series.size(); ++s)
    for (std::size_t k = 0; k < first.series[s].size(); ++k)
      CHECK(first.series[s][k] == second.series[s][k]);
}

TEST_CASE("two-layer balance is preserved along the flow") {
  Rng rng(404);
  ModelSpec spec;
  spec.family = Family::kLnn;
  spec.d = 5;
  spec.p = 4;
  spec.c = 3;
  spec.validate();
  const ParamState init = balanced_init(5, 4, 3, -0.7, 1.2, 88);
  const TargetSpec target = TargetSpec::Correlation(rng.gaussian(5, 3, 1.0));
  const InputStatistics stats = InputStatistics::Whitened(5);
  FlowConfig cfg;
  cfg.t_end = 6.0;
  const Trajectory traj = integrate(spec, init, target, stats, cfg,
                                    standard_observers(spec, target, stats, init));
  const auto& drift = traj.series_for("conservation_drift");
  for (const double v : drift) CHECK(std::abs(v) < 1e-9);
}

TEST_CASE("early stop fires once the loss underflows the threshold") {
  ModelSpec spec;
  spec.family = Family::kLinear;
  spec.d = 2;
  spec.p = 1;
  spec.c = 1;
  spec.validate();
  Eigen::VectorXd s(2);
  s << 1.0, -0.5;
  const TargetSpec target = TargetSpec::Scales(s);
  const InputStatistics stats = InputStatistics::Whitened(2);
  const ParamState init = make_linear_state(Eigen::MatrixXd::Zero(2, 1));
  FlowConfig cfg;
  cfg.t_end = 100.0;
  const Trajectory traj = integrate(spec, init, target, stats, cfg,
                                    standard_observers(spec, target, stats, init));
  CHECK(traj.converged);
  CHECK(traj.times.back() < cfg.t_end);
  CHECK(traj.series_for("loss").back() <= kEarlyStopLoss);
}

TEST_CASE("full-batch gradient descent is the explicit Euler map") {
  const DiagProblem base = three_mode_problem(0.25);
  ModelSpec spec;
  spec.family = Family::kLinear;
  spec.d = 3;
  spec.p = 1;
  spec.c = 1;
  spec.validate();
  Eigen::VectorXd s(3), var(3), theta(3);
  s << 1.0, 2.0, 0.5;
  var << 1.0, 0.25, 3.0;
  theta << 0.1, -0.4, 0.9;
  GdConfig cfg;
  cfg.lr = 0.05;
  cfg.steps = 5;
  cfg.record_stride = 1;
  const Trajectory traj = discrete_gd(
      spec, make_linear_state(theta), TargetSpec::Scales(s),
      InputStatistics::Population(var), cfg,
      standard_observers(spec, TargetSpec::Scales(s),
                         InputStatistics::Population(var),
                         make_linear_state(theta)));
  REQUIRE(traj.times.size() == 6);
  Eigen::VectorXd hand = theta;
  for (long step = 1; step <= 5; ++step) {
    hand -= cfg.lr * (var.array() * (hand - s).array()).matrix();
    for (int i = 0; i < 3; ++i) {
      const auto& series = traj.series_for("mode_" + std::to_string(i + 1));
      if (step == 5) CHECK(series[5] == doctest::Approx(hand(i)).epsilon(1e-12));
    }
    CHECK(traj.times[step] == doctest::Approx(cfg.lr * step));
  }
}

TEST_CASE("adaptive moment steps match the scalar recurrence") {
  // L = theta^2 / 2, so the gradient equals the parameter itself.
  const double lr = 0.1, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<Eigen::MatrixXd> params{Eigen::MatrixXd::Constant(1, 1, 1.0)};
  AdamOptimizer opt(lr, beta1, beta2, eps);

  double theta = 1.0, m = 0.0, v = 0.0;
  for (int step = 1; step <= 2; ++step) {
    const double g = theta;
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g * g;
    const double m_hat = m / (1.0 - std::pow(beta1, step));
    const double v_hat = v / (1.0 - std::pow(beta2, step));
    theta -= lr * m_hat / (std::sqrt(v_hat) + eps);

    std::vector<Eigen::MatrixXd> grads{params[0]};
    opt.step(params, grads);
    CHECK(params[0](0, 0) == doctest::Approx(theta).epsilon(1e-15));
    // Frozen anchors: first step moves by lr/(1+eps) exactly; the second
    // value comes from evaluating the recurrence in extended precision.
    if (step == 1) CHECK(theta == doctest::Approx(0.9000000010).epsilon(1e-9));
    if (step == 2) CHECK(theta == doctest::Approx(0.8004122297).epsilon(1e-9));
  }
}

TEST_CASE("weight decay is decoupled from the moment estimates") {
  const double lr = 0.1, wd = 0.5;
  std::vector<Eigen::MatrixXd> params{Eigen::MatrixXd::Constant(1, 1, 1.0)};
  AdamOptimizer plain(lr);
  AdamOptimizer decayed(lr, 0.9, 0.999, 1e-8, wd);
  std::vector<Eigen::MatrixXd> params_wd = params;
  const std::vector<Eigen::MatrixXd> grads{params[0]};
  plain.step(params, grads);
  decayed.step(params_wd, grads);
  CHECK(params_wd[0](0, 0) ==
        doctest::Approx(params[0](0, 0) * (1.0 - lr * wd)).epsilon(1e-14));
}

TEST_CASE("minibatch sampling is reproducible under a fixed seed") {
  Rng rng(7);
  ModelSpec spec;
  spec.family = Family::kLinear;
  spec.d = 4;
  spec.p = 1;
  spec.c = 1;
  spec.validate();
  const Eigen::MatrixXd x = rng.gaussian(32, 4, 1.0);
  const Eigen::MatrixXd y = rng.gaussian(32, 1, 1.0);
  const TargetSpec target = TargetSpec::Labels(y);
  const InputStatistics stats = InputStatistics::Samples(x);
  const ParamState init = make_linear_state(Eigen::MatrixXd::Zero(4, 1));
  GdConfig cfg;
  cfg.lr = 0.02;
  cfg.steps = 10;
  cfg.batch = 8;
  cfg.record_stride = 3;
  cfg.seed = 99;
  const auto obs = standard_observers(spec, target, stats, init);
  const Trajectory a = discrete_gd(spec, init, target, stats, cfg, obs);
  const Trajectory b = discrete_gd(spec, init, target, stats, cfg, obs);
  REQUIRE(a.times.size() == b.times.size());
  // steps 0, 3, 6, 9 plus the forced final step
  std::vector<double> expect{0.0, 3 * cfg.lr, 6 * cfg.lr, 9 * cfg.lr,
                             10 * cfg.lr};
  REQUIRE(a.times.size() == expect.size());
  for (std::size_t k = 0; k < expect.size(); ++k)
    CHECK(a.times[k] == doctest::Approx(expect[k]));
  for (std::size_t s = 0; s < a.series.size(); ++s)
    for (std::size_t k = 0; k < a.series[s].size(); ++k)
      CHECK(a.series[s][k] == b.series[s][k]);

  GdConfig other = cfg;
  other.seed = 100;
  const Trajectory c = discrete_gd(spec, init, target, stats, other, obs);
  CHECK(c.series_for("loss").back() != a.series_for("loss").back());
}

TEST_CASE("minibatch training demands samples and labels") {
  ModelSpec spec;
  spec.family = Family::kLinear;
  spec.d = 2;
  spec.p = 1;
  spec.c = 1;
  spec.validate();
  GdConfig cfg;
  cfg.batch = 4;
  const ParamState init = make_linear_state(Eigen::MatrixXd::Zero(2, 1));
  CHECK_THROWS_AS(discrete_gd(spec, init,
                              TargetSpec::Scales(Eigen::VectorXd::Ones(2)),
                              InputStatistics::Whitened(2), cfg, {}),
                  ShapeError);
}
