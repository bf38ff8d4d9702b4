#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "lindyn/analytic.hpp"
#include "lindyn/grokking.hpp"
#include "lindyn/integrator.hpp"
#include "lindyn/model.hpp"
#include "lindyn/regimes.hpp"
#include "lindyn/rng.hpp"

namespace {

using namespace lindyn;

// Adaptive integration of the elementwise family across a full sigmoidal
// transition; dominated by right-hand-side evaluations.
void bm_flow_elementwise(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  ModelSpec spec;
  spec.family = Family::kDiagLnn;
  spec.d = d;
  spec.c = 1;
  const TargetSpec target = TargetSpec::Scales(Eigen::VectorXd::Ones(d));
  const InputStatistics stats =
      InputStatistics::Population(Eigen::VectorXd::Ones(d));
  const ParamState init = diag_balanced_state(d, 1e-6);
  FlowConfig flow;
  flow.t_end = 5.0 * sigmoidal_crossing_time(0.99, {1.0, 1.0, 1e-6});
  flow.record_every = flow.t_end / 50.0;
  const auto observers = standard_observers(spec, target, stats, init);

  for (auto _ : state) {
    Trajectory traj = integrate(spec, init, target, stats, flow, observers);
    benchmark::DoNotOptimize(traj.final_state.layers[0](0, 0));
  }
}
BENCHMARK(bm_flow_elementwise)->Arg(16)->Arg(64)->Arg(256);

// Dense two-layer flow: each right-hand side costs a handful of GEMMs.
void bm_flow_dense(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  Rng rng(7);
  ModelSpec spec;
  spec.family = Family::kLnn;
  spec.d = d;
  spec.p = d;
  spec.c = d;
  Eigen::VectorXd rho(d);
  for (int i = 0; i < d; ++i) rho(i) = 2.0 - 1.5 * i / std::max(1, d - 1);
  const TargetSpec target =
      TargetSpec::Correlation(Eigen::MatrixXd(rho.asDiagonal()));
  const InputStatistics stats = InputStatistics::Whitened(d);
  ParamState init;
  init.t = 0.0;
  init.layers = {rng.gaussian(d, d, 1e-2), rng.gaussian(d, d, 1e-2)};
  FlowConfig flow;
  flow.t_end = 5.0;
  flow.record_every = 0.5;
  const auto observers = standard_observers(spec, target, stats, init);

  for (auto _ : state) {
    Trajectory traj = integrate(spec, init, target, stats, flow, observers);
    benchmark::DoNotOptimize(traj.final_state.layers[0](0, 0));
  }
}
BENCHMARK(bm_flow_dense)->Arg(8)->Arg(16)->Arg(32);

// Tangent-kernel assembly on an n-point probe set: the per-cell cost of the
// sweep grids besides training itself.
void bm_ntk_assembly(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int d = 10, p = 10, c = 10;
  Rng rng(11);
  ModelSpec spec;
  spec.family = Family::kLnn;
  spec.d = d;
  spec.p = p;
  spec.c = c;
  ParamState params;
  params.t = 0.0;
  params.layers = {rng.gaussian(d, p, 0.3), rng.gaussian(p, c, 0.3)};
  const Eigen::MatrixXd x = rng.gaussian(n, d, 1.0);

  for (auto _ : state) {
    Eigen::MatrixXd k = empirical_ntk(spec, params, x);
    benchmark::DoNotOptimize(k(0, 0));
  }
}
BENCHMARK(bm_ntk_assembly)->Arg(16)->Arg(64)->Arg(128);

// One minibatch forward/backward pass of the deep tanh network.
void bm_mlp_batch(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  const int d = 64, classes = 10, depth = 4, batch = 128;
  Rng rng(13);
  const auto layers = mlp_init(d, width, classes, depth, 1.0, 17);
  const Eigen::MatrixXd x = rng.gaussian(batch, d, 1.0);
  const Eigen::MatrixXd y = rng.gaussian(batch, classes, 1.0);
  std::vector<Eigen::MatrixXd> grads;

  for (auto _ : state) {
    const double loss = mlp_forward_backward(layers, x, y, 1.0, grads);
    benchmark::DoNotOptimize(loss);
  }
}
BENCHMARK(bm_mlp_batch)->Arg(128)->Arg(256)->Arg(512);

}  // namespace

BENCHMARK_MAIN();
