#include "lindyn/model.hpp"

#include <cmath>

#include "lindyn/rng.hpp"

namespace lindyn {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

// Residual of the realized linear map against the population target,
// premultiplied by the input second moments: D * Theta - C. For the sample
// path the residual is (X Theta - Y) / n folded through X^T by the caller.
Eigen::MatrixXd population_residual(const Eigen::MatrixXd& theta,
                                    const TargetSpec& target,
                                    const InputStatistics& stats) {
  return stats.variances.asDiagonal() * theta - target.correlation;
}

double population_loss(const Eigen::MatrixXd& theta, const TargetSpec& target,
                       const InputStatistics& stats) {
  // Realizable target: theta* = D^{-1} C, loss = 1/2 tr[(dTheta)^T D dTheta].
  const Eigen::MatrixXd theta_star =
      stats.variances.cwiseInverse().asDiagonal() * target.correlation;
  const Eigen::MatrixXd diff = theta - theta_star;
  return 0.5 * (stats.variances.asDiagonal() * diff).cwiseProduct(diff).sum();
}

}  // namespace

std::string family_name(Family family) {
  switch (family) {
    case Family::kLinear: return "linear";
    case Family::kDiagLnn: return "diag_lnn";
    case Family::kLnn: return "lnn";
    case Family::kWideScalar: return "wide_scalar";
    case Family::kUfm: return "ufm";
    case Family::kMlpTanh: return "mlp_tanh";
  }
  return "unknown";
}

void ModelSpec::validate() const {
  require(d >= 1 && p >= 1 && c >= 1, "ModelSpec: dimensions must be >= 1");
  require(z > 0.0, "ModelSpec: z must be > 0");
  switch (family) {
    case Family::kDiagLnn:
      require(c == 1, "ModelSpec: diag_lnn is scalar-output (c == 1)");
      break;
    case Family::kWideScalar:
      require(d == 1 && c == 1, "ModelSpec: wide_scalar has d == c == 1");
      break;
    case Family::kMlpTanh:
      require(depth >= 2, "ModelSpec: mlp_tanh needs depth >= 2");
      break;
    default:
      break;
  }
}

int ModelSpec::mode_count() const {
  switch (family) {
    case Family::kLinear: return d;
    case Family::kDiagLnn: return d;
    case Family::kLnn: return std::min(std::min(d, p), c);
    case Family::kWideScalar: return 1;
    case Family::kUfm: return std::min(std::min(d, p), c);
    case Family::kMlpTanh: return c;
  }
  return 0;
}

std::vector<std::pair<Eigen::Index, Eigen::Index>> layer_shapes(
    const ModelSpec& spec) {
  spec.validate();
  switch (spec.family) {
    case Family::kLinear:
      return {{spec.d, spec.c}};
    case Family::kDiagLnn:
      return {{spec.d, 1}, {spec.d, 1}};
    case Family::kLnn:
    case Family::kUfm:
      return {{spec.d, spec.p}, {spec.p, spec.c}};
    case Family::kWideScalar:
      return {{spec.p, 1}, {spec.p, 1}};
    case Family::kMlpTanh:
      throw UnsupportedFamilyError(
          "layer_shapes: mlp_tanh layers are owned by the grokking harness");
  }
  throw UnsupportedFamilyError("layer_shapes: unknown family");
}

void validate_state(const ModelSpec& spec, const ParamState& state) {
  const auto shapes = layer_shapes(spec);
  require(state.layers.size() == shapes.size(),
          "ParamState: wrong layer count for " + family_name(spec.family));
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    require(state.layers[l].rows() == shapes[l].first &&
                state.layers[l].cols() == shapes[l].second,
            "ParamState: layer " + std::to_string(l) + " has wrong shape");
  }
}

TargetSpec TargetSpec::Scales(Eigen::VectorXd s) {
  TargetSpec t;
  t.scales = std::move(s);
  return t;
}

TargetSpec TargetSpec::Correlation(Eigen::MatrixXd c) {
  TargetSpec t;
  t.correlation = std::move(c);
  return t;
}

TargetSpec TargetSpec::Labels(Eigen::MatrixXd y) {
  TargetSpec t;
  t.labels = std::move(y);
  return t;
}

TargetSpec::Kind TargetSpec::kind() const {
  int set = 0;
  Kind kind = Kind::kScales;
  if (scales.size() > 0) {
    ++set;
    kind = Kind::kScales;
  }
  if (correlation.size() > 0) {
    ++set;
    kind = Kind::kCorrelation;
  }
  if (labels.size() > 0) {
    ++set;
    kind = Kind::kLabels;
  }
  require(set == 1, "TargetSpec: exactly one of scales/correlation/labels");
  return kind;
}

InputStatistics InputStatistics::Population(Eigen::VectorXd variances) {
  InputStatistics s;
  s.variances = std::move(variances);
  s.validate();
  return s;
}

InputStatistics InputStatistics::Whitened(int d) {
  InputStatistics s;
  s.variances = Eigen::VectorXd::Ones(d);
  s.whitened = true;
  return s;
}

InputStatistics InputStatistics::Samples(Eigen::MatrixXd x) {
  InputStatistics s;
  require(x.rows() > 0 && x.cols() > 0, "InputStatistics: empty sample matrix");
  s.variances = x.array().square().colwise().mean().transpose();
  s.samples = std::move(x);
  return s;
}

void InputStatistics::validate() const {
  require(variances.size() > 0, "InputStatistics: variances required");
  require((variances.array() > 0.0).all(),
          "InputStatistics: variances must be positive");
  if (whitened)
    require((variances.array() == 1.0).all(),
            "InputStatistics: whitened requires unit variances");
}

double loss(const ModelSpec& spec, const ParamState& state,
            const TargetSpec& target, const InputStatistics& stats) {
  validate_state(spec, state);
  const TargetSpec::Kind kind = target.kind();

  // Sample path: 1/(2n) ||X Theta - Y||_F^2 on the realized map Theta.
  if (kind == TargetSpec::Kind::kLabels) {
    const Eigen::MatrixXd& y = target.labels;
    Eigen::MatrixXd predictions;
    switch (spec.family) {
      case Family::kLinear:
        require(stats.has_samples(), "loss: labels target needs samples");
        predictions = stats.samples * state.layers[0];
        break;
      case Family::kDiagLnn: {
        require(stats.has_samples(), "loss: labels target needs samples");
        const Eigen::VectorXd theta =
            state.layers[0].cwiseProduct(state.layers[1]);
        predictions = stats.samples * theta;
        break;
      }
      case Family::kLnn:
        require(stats.has_samples(), "loss: labels target needs samples");
        predictions = stats.samples * (state.layers[0] * state.layers[1]);
        break;
      case Family::kUfm:
        // The feature rows are the datapoints; no ambient inputs involved.
        predictions = state.layers[0] * state.layers[1];
        break;
      default:
        throw UnsupportedFamilyError("loss: family has no sample path");
    }
    require(predictions.rows() == y.rows() && predictions.cols() == y.cols(),
            "loss: labels shape mismatch");
    return (predictions - y).squaredNorm() / (2.0 * y.rows());
  }

  switch (spec.family) {
    case Family::kLinear: {
      if (kind == TargetSpec::Kind::kScales) {
        require(spec.c == 1 && target.scales.size() == spec.d,
                "loss: scales target needs c == 1 and size d");
        const Eigen::VectorXd diff = state.layers[0].col(0) - target.scales;
        return 0.5 * stats.variances.cwiseProduct(diff.cwiseAbs2()).sum();
      }
      return population_loss(state.layers[0], target, stats);
    }
    case Family::kDiagLnn: {
      require(kind == TargetSpec::Kind::kScales,
              "loss: diag_lnn takes a scales target");
      require(target.scales.size() == spec.d, "loss: scales size mismatch");
      const Eigen::VectorXd diff =
          state.layers[0].cwiseProduct(state.layers[1]).col(0) - target.scales;
      return 0.5 * stats.variances.cwiseProduct(diff.cwiseAbs2()).sum();
    }
    case Family::kLnn: {
      require(kind == TargetSpec::Kind::kCorrelation,
              "loss: lnn takes a correlation or labels target");
      return population_loss(state.layers[0] * state.layers[1], target, stats);
    }
    case Family::kWideScalar: {
      require(kind == TargetSpec::Kind::kScales && target.scales.size() == 1,
              "loss: wide_scalar takes a single target scale");
      require(stats.variances.size() == 1 && stats.variances[0] == 1.0,
              "loss: wide_scalar assumes unit input variance");
      const double theta =
          state.layers[0].cwiseProduct(state.layers[1]).sum() / spec.z;
      const double r = theta - target.scales[0];
      return 0.5 * r * r;
    }
    case Family::kUfm:
      throw ShapeError("loss: ufm takes a labels target");
    case Family::kMlpTanh:
      throw UnsupportedFamilyError(
          "loss: mlp_tanh is evaluated by the grokking harness");
  }
  throw UnsupportedFamilyError("loss: unknown family");
}

std::vector<Eigen::MatrixXd> gradient(const ModelSpec& spec,
                                      const ParamState& state,
                                      const TargetSpec& target,
                                      const InputStatistics& stats) {
  validate_state(spec, state);
  const TargetSpec::Kind kind = target.kind();

  if (kind == TargetSpec::Kind::kLabels) {
    const Eigen::MatrixXd& y = target.labels;
    const double n = static_cast<double>(y.rows());
    switch (spec.family) {
      case Family::kLinear: {
        const Eigen::MatrixXd r = stats.samples * state.layers[0] - y;
        return {stats.samples.transpose() * r / n};
      }
      case Family::kDiagLnn: {
        const Eigen::VectorXd theta =
            state.layers[0].cwiseProduct(state.layers[1]);
        const Eigen::MatrixXd r = stats.samples * theta - y;
        const Eigen::VectorXd g_theta = stats.samples.transpose() * r / n;
        return {g_theta.cwiseProduct(state.layers[1].col(0)),
                g_theta.cwiseProduct(state.layers[0].col(0))};
      }
      case Family::kLnn: {
        const Eigen::MatrixXd xw1 = stats.samples * state.layers[0];
        const Eigen::MatrixXd r = xw1 * state.layers[1] - y;
        return {stats.samples.transpose() * (r * state.layers[1].transpose()) / n,
                xw1.transpose() * r / n};
      }
      case Family::kUfm: {
        const Eigen::MatrixXd r = state.layers[0] * state.layers[1] - y;
        return {r * state.layers[1].transpose() / n,
                state.layers[0].transpose() * r / n};
      }
      default:
        throw UnsupportedFamilyError("gradient: family has no sample path");
    }
  }

  switch (spec.family) {
    case Family::kLinear: {
      if (kind == TargetSpec::Kind::kScales) {
        const Eigen::VectorXd diff = state.layers[0].col(0) - target.scales;
        return {stats.variances.cwiseProduct(diff)};
      }
      return {population_residual(state.layers[0], target, stats)};
    }
    case Family::kDiagLnn: {
      const Eigen::VectorXd a = state.layers[0].col(0);
      const Eigen::VectorXd b = state.layers[1].col(0);
      const Eigen::VectorXd r =
          stats.variances.cwiseProduct(a.cwiseProduct(b) - target.scales);
      return {r.cwiseProduct(b), r.cwiseProduct(a)};
    }
    case Family::kLnn: {
      const Eigen::MatrixXd r = population_residual(
          state.layers[0] * state.layers[1], target, stats);
      return {r * state.layers[1].transpose(),
              state.layers[0].transpose() * r};
    }
    case Family::kWideScalar: {
      const Eigen::VectorXd a = state.layers[0].col(0);
      const Eigen::VectorXd b = state.layers[1].col(0);
      const double r = a.dot(b) / spec.z - target.scales[0];
      return {(r / spec.z) * b, (r / spec.z) * a};
    }
    default:
      throw UnsupportedFamilyError("gradient: unsupported family");
  }
}

Eigen::MatrixXd conserved_quantity(const ModelSpec& spec,
                                   const ParamState& state) {
  validate_state(spec, state);
  switch (spec.family) {
    case Family::kDiagLnn:
    case Family::kWideScalar:
      return state.layers[0].cwiseAbs2() - state.layers[1].cwiseAbs2();
    case Family::kLnn:
    case Family::kUfm:
      return state.layers[0].transpose() * state.layers[0] -
             state.layers[1] * state.layers[1].transpose();
    default:
      throw UnsupportedFamilyError(
          "conserved_quantity: defined for two-layer families only");
  }
}

ParamState balanced_init(int d, int p, int c, double lambda,
                         double absolute_scale, std::uint64_t seed,
                         bool clamp_infeasible) {
  require(d >= 1 && p >= 1 && c >= 1, "balanced_init: dimensions must be >= 1");
  require(absolute_scale > 0.0, "balanced_init: absolute_scale must be > 0");

  const int active = std::min(std::min(d, p), c);
  // One shared magnitude on the active block hits the norm exactly:
  // ||W1 W2||_F^2 = active * sigma^2 (sigma^2 + lambda).
  const double target_sq = absolute_scale * absolute_scale / active;
  const double sigma_sq =
      0.5 * (-lambda + std::sqrt(lambda * lambda + 4.0 * target_sq));
  if (!(sigma_sq >= 0.0) || !(sigma_sq + lambda >= 0.0))
    throw InfeasibleInitError(
        "balanced_init: lambda and absolute_scale are jointly infeasible");

  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd s2 = Eigen::VectorXd::Zero(p);
  for (int i = 0; i < p; ++i) {
    const bool w1_free = i < std::min(d, p);
    const bool w2_free = i < std::min(p, c);
    if (w1_free && w2_free) {
      s1[i] = std::sqrt(sigma_sq);
      s2[i] = std::sqrt(sigma_sq + lambda);
    } else if (w1_free) {
      // W2 is rank-limited to zero here; the residual -s1^2 can only equal
      // lambda when lambda <= 0.
      if (lambda <= 0.0) {
        s1[i] = std::sqrt(-lambda);
      } else if (!clamp_infeasible) {
        throw InfeasibleInitError(
            "balanced_init: positive lambda is infeasible on the trailing "
            "block of a funnel shape");
      }
    } else if (w2_free) {
      if (lambda >= 0.0) {
        s2[i] = std::sqrt(lambda);
      } else if (!clamp_infeasible) {
        throw InfeasibleInitError(
            "balanced_init: negative lambda is infeasible on the trailing "
            "block of an anti-funnel shape");
      }
    } else if (lambda != 0.0 && !clamp_infeasible) {
      throw InfeasibleInitError(
          "balanced_init: nonzero lambda is infeasible where both factors "
          "are rank-limited");
    }
  }

  Rng rng(seed);
  const Eigen::MatrixXd left = random_orthogonal(rng, d);
  const Eigen::MatrixXd inner = random_orthogonal(rng, p);
  const Eigen::MatrixXd right = random_orthogonal(rng, c);

  Eigen::MatrixXd d1 = Eigen::MatrixXd::Zero(d, p);
  Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(p, c);
  for (int i = 0; i < std::min(d, p); ++i) d1(i, i) = s1[i];
  for (int i = 0; i < std::min(p, c); ++i) d2(i, i) = s2[i];

  ParamState state;
  state.layers = {left * d1 * inner.transpose(),
                  inner * d2 * right.transpose()};
  return state;
}

ParamState lambda_balanced_init(int d, int c, double lambda,
                                double absolute_scale, std::uint64_t seed) {
  require(d == c, "lambda_balanced_init: square network requires d == c");
  return balanced_init(d, d, c, lambda, absolute_scale, seed);
}

ParamState diag_balanced_state(int d, double u0) {
  require(u0 > 0.0, "diag_balanced_state: u0 must be > 0");
  ParamState state;
  const Eigen::MatrixXd v =
      Eigen::MatrixXd::Constant(d, 1, std::sqrt(u0));
  state.layers = {v, v};
  return state;
}

ParamState make_diag_state(Eigen::VectorXd a, Eigen::VectorXd b) {
  require(a.size() == b.size() && a.size() > 0,
          "make_diag_state: a and b must have equal positive size");
  ParamState state;
  state.layers = {std::move(a), std::move(b)};
  return state;
}

ParamState make_linear_state(Eigen::MatrixXd theta) {
  ParamState state;
  state.layers = {std::move(theta)};
  return state;
}

Eigen::VectorXd mode_values(const ModelSpec& spec, const ParamState& state) {
  validate_state(spec, state);
  switch (spec.family) {
    case Family::kLinear:
      return state.layers[0].col(0);
    case Family::kDiagLnn:
      return state.layers[0].cwiseProduct(state.layers[1]).col(0);
    case Family::kWideScalar: {
      Eigen::VectorXd v(1);
      v[0] = state.layers[0].cwiseProduct(state.layers[1]).sum() / spec.z;
      return v;
    }
    default:
      throw ShapeError(
          "mode_values: dense families need an explicit singular basis");
  }
}

Eigen::VectorXd mode_values(const ModelSpec& spec, const ParamState& state,
                            const Eigen::MatrixXd& basis_u,
                            const Eigen::MatrixXd& basis_v) {
  validate_state(spec, state);
  require(spec.family == Family::kLnn || spec.family == Family::kUfm,
          "mode_values: basis overload is for dense two-layer families");
  const Eigen::MatrixXd theta = state.layers[0] * state.layers[1];
  require(basis_u.rows() == theta.rows() && basis_v.rows() == theta.cols() &&
              basis_u.cols() == basis_v.cols(),
          "mode_values: basis shape mismatch");
  return (basis_u.transpose() * theta * basis_v).diagonal();
}

}  // namespace lindyn
