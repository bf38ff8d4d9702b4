#include "lindyn/regimes.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>
#include <utility>

#include "lindyn/io.hpp"
#include "lindyn/rng.hpp"

namespace lindyn {

Eigen::MatrixXd empirical_ntk(const ModelSpec& spec, const ParamState& state,
                              const Eigen::MatrixXd& x) {
  if (spec.family != Family::kLnn)
    throw UnsupportedFamilyError(
        "empirical_ntk: only the dense two-layer family has an exact cheap "
        "kernel here");
  validate_state(spec, state);
  if (x.cols() != spec.d)
    throw ShapeError("empirical_ntk: input column count must equal d");
  const Eigen::Index n = x.rows();
  const Eigen::Index c = spec.c;
  const Eigen::MatrixXd& w1 = state.layers[0];
  const Eigen::MatrixXd& w2 = state.layers[1];

  const Eigen::MatrixXd gram_x = x * x.transpose();            // x_i . x_j
  const Eigen::MatrixXd head = w2.transpose() * w2;            // c x c
  const Eigen::MatrixXd xw1 = x * w1;
  const Eigen::MatrixXd gram_feat = xw1 * xw1.transpose();     // x_i^T W1 W1^T x_j
  const Eigen::MatrixXd eye_c = Eigen::MatrixXd::Identity(c, c);

  Eigen::MatrixXd k(n * c, n * c);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      k.block(i * c, j * c, c, c) = gram_x(i, j) * head + gram_feat(i, j) * eye_c;
    }
  }
  return k;
}

double kernel_distance(const Eigen::MatrixXd& k0, const Eigen::MatrixXd& kt) {
  if (k0.rows() != kt.rows() || k0.cols() != kt.cols())
    throw ShapeError("kernel_distance: kernel shapes differ");
  const double n0 = k0.norm();
  const double nt = kt.norm();
  if (!(n0 > 0.0) || !(nt > 0.0))
    throw DegenerateKernelError("kernel_distance: zero-norm kernel");
  return 1.0 - k0.cwiseProduct(kt).sum() / (n0 * nt);
}

double widescalar_kernel_scale(const ModelSpec& spec, const ParamState& state) {
  if (spec.family != Family::kWideScalar)
    throw UnsupportedFamilyError(
        "widescalar_kernel_scale: defined for the width-p scalar family");
  validate_state(spec, state);
  const double sq =
      state.layers[0].squaredNorm() + state.layers[1].squaredNorm();
  return sq / (spec.z * spec.z);
}

double kernel_shift_proxy(double kappa0, double kappa1) {
  if (!(kappa0 > 0.0) || !(kappa1 > 0.0))
    throw DegenerateKernelError("kernel_shift_proxy: kernel scale must be positive");
  const double lo = std::min(kappa0, kappa1);
  const double hi = std::max(kappa0, kappa1);
  return 1.0 - lo / hi;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double shared = 0.5 * static_cast<double>(i + j);  // average rank
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw ShapeError("spearman: need two equal-length vectors of size >= 2");
  for (double v : a)
    if (!std::isfinite(v)) throw DomainError("spearman: non-finite value");
  for (double v : b)
    if (!std::isfinite(v)) throw DomainError("spearman: non-finite value");
  const std::vector<double> ra = average_ranks(a);
  const std::vector<double> rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double mean = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (ra[i] - mean) * (rb[i] - mean);
    va += (ra[i] - mean) * (ra[i] - mean);
    vb += (rb[i] - mean) * (rb[i] - mean);
  }
  if (!(va > 0.0) || !(vb > 0.0))
    throw DomainError("spearman: constant input has no rank ordering");
  return cov / std::sqrt(va * vb);
}

void GridTrainConfig::validate() const {
  if (n <= 0) throw ShapeError("grid: sample count must be positive");
  if (!(input_std > 0.0)) throw DomainError("grid: input_std must be positive");
  if (noise_std < 0.0) throw DomainError("grid: noise_std must be nonnegative");
  if (!(lr > 0.0)) throw DomainError("grid: learning rate must be positive");
  if (batch <= 0 || batch > n)
    throw DomainError("grid: batch must lie in [1, n]");
  if (steps <= 0) throw DomainError("grid: steps must be positive");
  if (threads < 0) throw DomainError("grid: threads must be nonnegative");
}

namespace {

Eigen::VectorXd linspace(double lo, double hi, int count) {
  Eigen::VectorXd v(count);
  for (int i = 0; i < count; ++i)
    v(i) = lo + (hi - lo) * static_cast<double>(i) /
                    static_cast<double>(count > 1 ? count - 1 : 1);
  return v;
}

// Rectangular identity pattern: ones on the main diagonal.
Eigen::MatrixXd eye_pattern(int rows, int cols) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
  for (int i = 0; i < std::min(rows, cols); ++i) m(i, i) = 1.0;
  return m;
}

constexpr int kProbePoints = 64;

struct GridTask {
  Eigen::MatrixXd x;        // n x d training inputs
  Eigen::MatrixXd y;        // n x c labels
  Eigen::MatrixXd x_probe;  // fixed kernel-evaluation inputs
};

// One regression task per grid so cells differ only in their init and batch
// order; the kernel is read on a fixed probe set drawn from the same input law.
GridTask make_grid_task(int d, int c, const Eigen::MatrixXd& teacher,
                        const GridTrainConfig& train) {
  Rng rng(derive_seed(train.seed, 0x7461736bULL));  // task stream
  GridTask task;
  task.x = rng.gaussian(train.n, d, train.input_std);
  task.y = task.x * teacher;
  if (train.noise_std > 0.0) {
    task.y += rng.gaussian(train.n, c, train.noise_std);
  }
  task.x_probe = rng.gaussian(kProbePoints, d, train.input_std);
  return task;
}

void run_cells(int count, int threads, const std::function<void(int)>& fn) {
  if (threads == 0) {
    threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 0) threads = 1;
  }
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

double train_and_measure(const ModelSpec& spec, const ParamState& init,
                         const GridTask& task, const GridTrainConfig& train,
                         std::uint64_t batch_seed) {
  const TargetSpec target = TargetSpec::Labels(task.y);
  const InputStatistics stats = InputStatistics::Samples(task.x);
  GdConfig gd;
  gd.lr = train.lr;
  gd.steps = train.steps;
  gd.batch = train.batch;
  gd.record_stride = train.steps;
  gd.seed = batch_seed;
  const Eigen::MatrixXd k0 = empirical_ntk(spec, init, task.x_probe);
  const Trajectory traj = discrete_gd(spec, init, target, stats, gd, {});
  const Eigen::MatrixXd kt = empirical_ntk(spec, traj.final_state, task.x_probe);
  return kernel_distance(k0, kt);
}

std::uint64_t hash_grid_config(const std::string& tag, int d, int p, int c,
                               const Eigen::VectorXd& axis1,
                               const Eigen::VectorXd& axis2,
                               const GridTrainConfig& train, double extra) {
  std::ostringstream ss;
  ss << tag << '|' << d << 'x' << p << 'x' << c << '|';
  for (Eigen::Index i = 0; i < axis1.size(); ++i)
    ss << format_double(axis1(i)) << ',';
  ss << '|';
  for (Eigen::Index i = 0; i < axis2.size(); ++i)
    ss << format_double(axis2(i)) << ',';
  ss << '|' << train.n << ',' << format_double(train.input_std) << ','
     << format_double(train.noise_std) << ',' << format_double(train.lr) << ','
     << train.batch << ',' << train.steps << ',' << train.seed << ','
     << format_double(extra);
  return fnv1a64(ss.str());
}

}  // namespace

RegimeGrid regime_grid(const RegimeGridConfig& cfg) {
  if (cfg.d != cfg.c)
    throw ShapeError("regime_grid: square network required (d == c)");
  ModelSpec spec;
  spec.family = Family::kLnn;
  spec.d = cfg.d;
  spec.p = cfg.p;
  spec.c = cfg.c;
  spec.validate();
  cfg.train.validate();

  RegimeGrid grid;
  grid.axis1_name = "lambda";
  grid.axis2_name = "absolute_scale";
  grid.axis1 = cfg.lambdas.size() ? cfg.lambdas : linspace(-9.0, 9.0, 13);
  grid.axis2 = cfg.scales.size() ? cfg.scales : linspace(2.0, 20.0, 10);
  const int rows = static_cast<int>(grid.axis1.size());
  const int cols = static_cast<int>(grid.axis2.size());
  grid.cells.setConstant(rows, cols,
                         std::numeric_limits<double>::quiet_NaN());

  const Eigen::MatrixXd teacher =
      eye_pattern(cfg.d, cfg.c) / (cfg.train.input_std * cfg.train.input_std);
  const GridTask task = make_grid_task(cfg.d, cfg.c, teacher, cfg.train);

  run_cells(rows * cols, cfg.train.threads, [&](int cell) {
    const int i = cell / cols;
    const int j = cell % cols;
    const std::uint64_t cell_seed =
        derive_seed(cfg.train.seed, static_cast<std::uint64_t>(cell),
                    0x6c616d62ULL);
    try {
      // Axis convention: lambda labels the conserved imbalance
      // W1^T W1 - W2 W2^T = lambda I, so positive lambda places the surplus
      // norm on the first (input-side) layer. balanced_init takes the
      // second-minus-first orientation, hence the sign flip.
      const ParamState init =
          balanced_init(cfg.d, cfg.p, cfg.c, -grid.axis1(i), grid.axis2(j),
                        derive_seed(cell_seed, 1));
      grid.cells(i, j) = train_and_measure(spec, init, task, cfg.train,
                                           derive_seed(cell_seed, 2));
    } catch (const Error&) {
      // cell stays NaN; the remaining cells are unaffected
    }
  });

  grid.config_hash = hash_grid_config("lambda-scale", cfg.d, cfg.p, cfg.c,
                                      grid.axis1, grid.axis2, cfg.train, 0.0);
  return grid;
}

RegimeGrid funnel_grid(const FunnelGridConfig& cfg) {
  if (!(cfg.wide > cfg.mid && cfg.mid > cfg.narrow && cfg.narrow > 0))
    throw ShapeError("funnel_grid: need wide > mid > narrow > 0");
  const bool is_funnel = cfg.shape == FunnelShape::kFunnel;
  const int d = is_funnel ? cfg.wide : cfg.narrow;
  const int c = is_funnel ? cfg.narrow : cfg.wide;
  const int p = cfg.mid;
  ModelSpec spec;
  spec.family = Family::kLnn;
  spec.d = d;
  spec.p = p;
  spec.c = c;
  spec.validate();
  cfg.train.validate();

  RegimeGrid grid;
  grid.axis1_name = "lambda";
  grid.axis2_name = "absolute_scale";
  grid.axis1 = cfg.lambdas.size() ? cfg.lambdas : linspace(-9.0, 9.0, 13);
  grid.axis2 = cfg.scales.size() ? cfg.scales : linspace(2.0, 20.0, 10);
  const int rows = static_cast<int>(grid.axis1.size());
  const int cols = static_cast<int>(grid.axis2.size());
  grid.cells.setConstant(rows, cols,
                         std::numeric_limits<double>::quiet_NaN());

  const Eigen::MatrixXd teacher =
      eye_pattern(d, c) / (cfg.train.input_std * cfg.train.input_std);
  const GridTask task = make_grid_task(d, c, teacher, cfg.train);

  run_cells(rows * cols, cfg.train.threads, [&](int cell) {
    const int i = cell / cols;
    const int j = cell % cols;
    const std::uint64_t cell_seed =
        derive_seed(cfg.train.seed, static_cast<std::uint64_t>(cell),
                    is_funnel ? 0x66756e6eULL : 0x616e7469ULL);
    try {
      // Same lambda-axis convention as the square grid: positive lambda
      // loads the first layer (balanced_init wants the opposite sign).
      // Rectangular shapes cannot carry every imbalance sign on the
      // rank-limited trailing block; those modes are zero-clamped.
      const ParamState init =
          balanced_init(d, p, c, -grid.axis1(i), grid.axis2(j),
                        derive_seed(cell_seed, 1), /*clamp_infeasible=*/true);
      grid.cells(i, j) = train_and_measure(spec, init, task, cfg.train,
                                           derive_seed(cell_seed, 2));
    } catch (const Error&) {
    }
  });

  grid.config_hash =
      hash_grid_config(is_funnel ? "funnel" : "anti-funnel", d, p, c,
                       grid.axis1, grid.axis2, cfg.train, 0.0);
  return grid;
}

ParamState symmetrized_init(int d, int p, int c, double w1_entry_std,
                            double w2_entry_std, std::uint64_t seed) {
  if (d <= 0 || p <= 0 || c <= 0)
    throw ShapeError("symmetrized_init: dimensions must be positive");
  if (p % 2 != 0)
    throw ShapeError("symmetrized_init: hidden width must be even");
  if (!(w1_entry_std > 0.0) || !(w2_entry_std > 0.0))
    throw DomainError("symmetrized_init: entry scales must be positive");
  Rng rng(seed);
  const int half = p / 2;
  const Eigen::MatrixXd a = rng.gaussian(d, half, w1_entry_std);
  const Eigen::MatrixXd b = rng.gaussian(half, c, w2_entry_std);
  ParamState state;
  state.t = 0.0;
  Eigen::MatrixXd w1(d, p);
  w1 << a, a;
  Eigen::MatrixXd w2(p, c);
  w2 << b, -b;
  state.layers = {std::move(w1), std::move(w2)};
  return state;
}

RatioCellInit ratio_cell_init(const RatioGridConfig& cfg, int imbalance_index,
                              int ratio_index) {
  const Eigen::VectorXd imbalances =
      cfg.imbalances.size() ? cfg.imbalances : linspace(-2.0, 2.0, 5);
  const Eigen::VectorXd ratios =
      cfg.ratios.size() ? cfg.ratios : linspace(-2.0, 4.0, 8);
  if (imbalance_index < 0 || imbalance_index >= imbalances.size() ||
      ratio_index < 0 || ratio_index >= ratios.size())
    throw ShapeError("ratio_cell_init: axis index out of range");
  if (!(cfg.base_norm > 0.0))
    throw DomainError("ratio_cell_init: base_norm must be positive");

  // Axes are stored as log2 values; decode to multiplicative factors.
  const double beta = std::exp2(imbalances(imbalance_index));
  const double ratio = std::exp2(ratios(ratio_index));

  RatioCellInit init;
  const double dp = static_cast<double>(cfg.d) * cfg.p;
  const double pc = static_cast<double>(cfg.p) * cfg.c;
  init.w1_entry_std = cfg.base_norm / std::sqrt(dp + pc * beta * beta);
  init.w2_entry_std = beta * init.w1_entry_std;
  init.sigma0 =
      cfg.base_norm * cfg.base_norm / (2.0 * static_cast<double>(cfg.p));
  init.target_scale = init.sigma0 / ratio;
  return init;
}

RegimeGrid ratio_grid(const RatioGridConfig& cfg) {
  ModelSpec spec;
  spec.family = Family::kLnn;
  spec.d = cfg.d;
  spec.p = cfg.p;
  spec.c = cfg.c;
  spec.validate();
  cfg.train.validate();
  if (cfg.p % 2 != 0)
    throw ShapeError("ratio_grid: hidden width must be even for the "
                     "symmetrized init");

  RegimeGrid grid;
  grid.axis1_name = "log2_imbalance";
  grid.axis2_name = "log2_weight_to_target_ratio";
  grid.axis1 = cfg.imbalances.size() ? cfg.imbalances : linspace(-2.0, 2.0, 5);
  grid.axis2 = cfg.ratios.size() ? cfg.ratios : linspace(-2.0, 4.0, 8);
  const int rows = static_cast<int>(grid.axis1.size());
  const int cols = static_cast<int>(grid.axis2.size());
  grid.cells.setConstant(rows, cols,
                         std::numeric_limits<double>::quiet_NaN());

  // The input law is shared; the teacher is rescaled per column, so the grid
  // needs one task matrix per ratio value.
  std::vector<GridTask> tasks;
  tasks.reserve(static_cast<std::size_t>(cols));
  for (int j = 0; j < cols; ++j) {
    const RatioCellInit cell = ratio_cell_init(cfg, 0, j);
    const Eigen::MatrixXd teacher =
        cell.target_scale * eye_pattern(cfg.d, cfg.c) /
        (cfg.train.input_std * cfg.train.input_std);
    tasks.push_back(make_grid_task(cfg.d, cfg.c, teacher, cfg.train));
  }

  run_cells(rows * cols, cfg.train.threads, [&](int cell) {
    const int i = cell / cols;
    const int j = cell % cols;
    const std::uint64_t cell_seed = derive_seed(
        cfg.train.seed, static_cast<std::uint64_t>(cell), 0x726174ULL);
    try {
      const RatioCellInit ci = ratio_cell_init(cfg, i, j);
      const ParamState init =
          symmetrized_init(cfg.d, cfg.p, cfg.c, ci.w1_entry_std,
                           ci.w2_entry_std, derive_seed(cell_seed, 1));
      grid.cells(i, j) = train_and_measure(spec, init, tasks[j], cfg.train,
                                           derive_seed(cell_seed, 2));
    } catch (const Error&) {
    }
  });

  grid.config_hash =
      hash_grid_config("imbalance-ratio", cfg.d, cfg.p, cfg.c, grid.axis1,
                       grid.axis2, cfg.train, cfg.base_norm);
  return grid;
}

}  // namespace lindyn
