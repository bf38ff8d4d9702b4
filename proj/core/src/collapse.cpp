#include "lindyn/collapse.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "lindyn/rng.hpp"

namespace lindyn {

namespace {

Eigen::MatrixXd one_hot_rows(const Eigen::VectorXi& labels, int classes) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(labels.size(), classes);
  for (Eigen::Index i = 0; i < labels.size(); ++i) y(i, labels(i)) = 1.0;
  return y;
}

std::string format_loss(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", value);
  return buf;
}

}  // namespace

ClassStatistics class_statistics(const Eigen::MatrixXd& features,
                                 const Eigen::VectorXi& labels, int classes) {
  const Eigen::Index n = features.rows();
  const Eigen::Index p = features.cols();
  if (classes < 2) throw ShapeError("class_statistics: need at least two classes");
  if (labels.size() != n)
    throw ShapeError("class_statistics: labels/features row count mismatch");
  if (n % classes != 0)
    throw DataError("class_statistics: sample count not divisible by class count");

  const Eigen::Index per_class = n / classes;
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(classes);
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(classes, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels(i);
    if (y < 0 || y >= classes)
      throw DataError("class_statistics: label out of range");
    counts(y) += 1;
    means.row(y) += features.row(i);
  }
  for (int k = 0; k < classes; ++k) {
    if (counts(k) != per_class)
      throw DataError("class_statistics: classes must be balanced");
  }
  means /= static_cast<double>(per_class);

  Eigen::MatrixXd within = features;
  for (Eigen::Index i = 0; i < n; ++i) within.row(i) -= means.row(labels(i));

  ClassStatistics stats;
  stats.means = means;
  stats.global_mean = means.colwise().mean().transpose();
  stats.sigma_w = within.transpose() * within / static_cast<double>(n);
  Eigen::MatrixXd centered = means.rowwise() - stats.global_mean.transpose();
  stats.sigma_b = centered.transpose() * centered / static_cast<double>(classes);
  return stats;
}

int effective_rank(const Eigen::MatrixXd& m, double rel_threshold) {
  if (m.size() == 0) throw ShapeError("effective_rank: empty matrix");
  if (!(rel_threshold > 0.0 && rel_threshold < 1.0))
    throw DomainError("effective_rank: relative threshold must lie in (0, 1)");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (!(sv(0) > 0.0)) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > rel_threshold * sv(0)) ++rank;
  }
  return rank;
}

NCReport nc_report(const Eigen::MatrixXd& features,
                   const Eigen::VectorXi& labels, int classes,
                   const Eigen::MatrixXd& classifier,
                   const Eigen::VectorXd& bias, double rank_threshold) {
  const Eigen::Index n = features.rows();
  const Eigen::Index p = features.cols();
  if (classifier.rows() != p || classifier.cols() != classes)
    throw ShapeError("nc_report: classifier must be feature_dim x classes");
  if (bias.size() != classes)
    throw ShapeError("nc_report: bias size must match class count");

  const ClassStatistics stats = class_statistics(features, labels, classes);
  NCReport report;

  const double tr_between = stats.sigma_b.trace();
  if (!(tr_between > 0.0))
    throw DegenerateGeometryError("nc_report: class means coincide");
  report.nc1_ratio = stats.sigma_w.trace() / tr_between;

  Eigen::MatrixXd centered =
      stats.means.rowwise() - stats.global_mean.transpose();
  Eigen::VectorXd norms(classes);
  for (int k = 0; k < classes; ++k) {
    norms(k) = centered.row(k).norm();
    if (!(norms(k) > 0.0))
      throw DegenerateGeometryError("nc_report: centered class mean vanished");
  }

  // Equal-angle frame: centered-mean cosines approach -1/(c-1) off-diagonal.
  const double target_cos = -1.0 / (classes - 1);
  double nc2 = 0.0;
  for (int j = 0; j < classes; ++j) {
    for (int k = j + 1; k < classes; ++k) {
      const double cosine =
          centered.row(j).dot(centered.row(k)) / (norms(j) * norms(k));
      nc2 = std::max(nc2, std::abs(cosine - target_cos));
    }
  }
  report.nc2_max_dev = nc2;

  double nc3 = 0.0;
  for (int k = 0; k < classes; ++k) {
    const Eigen::VectorXd w = classifier.col(k);
    const double wn = w.norm();
    if (!(wn > 0.0))
      throw DegenerateGeometryError("nc_report: classifier column vanished");
    const Eigen::VectorXd dir = centered.row(k).transpose() / norms(k);
    nc3 = std::max(nc3, (w / wn - dir).norm());
  }
  report.nc3_max_dev = nc3;

  Eigen::MatrixXd logits = features * classifier;
  logits.rowwise() += bias.transpose();
  Eigen::Index agree = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index pred = 0;
    logits.row(i).maxCoeff(&pred);
    Eigen::Index nearest = 0;
    double best = (features.row(i) - stats.means.row(0)).squaredNorm();
    for (int k = 1; k < classes; ++k) {
      const double dist = (features.row(i) - stats.means.row(k)).squaredNorm();
      if (dist < best) {
        best = dist;
        nearest = k;
      }
    }
    if (pred == nearest) ++agree;
  }
  report.nc4_agreement = static_cast<double>(agree) / static_cast<double>(n);

  report.effective_rank = effective_rank(features, rank_threshold);
  return report;
}

CollapseResult train_collapse(const CollapseConfig& cfg) {
  if (cfg.n <= 0 || cfg.p <= 0 || cfg.c < 2)
    throw ShapeError("train_collapse: need n > 0, p > 0, c >= 2");
  if (cfg.n % cfg.c != 0)
    throw ConfigError("train_collapse: n must be a multiple of c for balanced labels");
  if (!(cfg.init_scale > 0.0))
    throw DomainError("train_collapse: init_scale must be positive");
  if (!cfg.features_trainable && cfg.d < cfg.n)
    throw ConfigError(
        "train_collapse: the fixed-input path interpolates one-hot labels "
        "only when d >= n");

  Eigen::VectorXi labels(cfg.n);
  for (int i = 0; i < cfg.n; ++i) labels(i) = i % cfg.c;
  const TargetSpec target = TargetSpec::Labels(one_hot_rows(labels, cfg.c));

  ModelSpec spec;
  spec.family = cfg.features_trainable ? Family::kUfm : Family::kLnn;
  spec.d = cfg.features_trainable ? cfg.n : cfg.d;
  spec.p = cfg.p;
  spec.c = cfg.c;
  spec.validate();

  Rng rng(derive_seed(cfg.seed, 0x636f6c6cULL));
  const InputStatistics stats =
      cfg.features_trainable
          ? InputStatistics::Whitened(spec.d)
          : InputStatistics::Samples(rng.gaussian(cfg.n, cfg.d, 1.0));

  ParamState init;
  init.t = 0.0;
  for (const auto& [rows, cols] : layer_shapes(spec)) {
    // Entry scale set so the layer Frobenius norm concentrates on init_scale.
    const double stddev =
        cfg.init_scale / std::sqrt(static_cast<double>(rows * cols));
    init.layers.push_back(rng.gaussian(rows, cols, stddev));
  }

  const bool ufm = cfg.features_trainable;
  const Eigen::MatrixXd x_fixed = ufm ? Eigen::MatrixXd() : stats.samples;
  auto features_of = [ufm, x_fixed](const ParamState& s) -> Eigen::MatrixXd {
    if (ufm) return s.layers[0];
    return x_fixed * s.layers[0];
  };
  const Eigen::VectorXd zero_bias = Eigen::VectorXd::Zero(cfg.c);
  const int classes = cfg.c;
  auto report_of = [=](const ParamState& s) {
    return nc_report(features_of(s), labels, classes, s.layers[1], zero_bias);
  };

  std::vector<Observer> observers = standard_observers(spec, target, stats, init);
  observers.push_back(
      {"nc1_ratio", [=](const ParamState& s) { return report_of(s).nc1_ratio; }});
  observers.push_back(
      {"nc2_max_dev",
       [=](const ParamState& s) { return report_of(s).nc2_max_dev; }});
  observers.push_back(
      {"nc4_agreement",
       [=](const ParamState& s) { return report_of(s).nc4_agreement; }});
  observers.push_back(
      {"effective_rank", [=](const ParamState& s) {
         return static_cast<double>(report_of(s).effective_rank);
       }});

  CollapseResult out;
  out.trajectory = integrate(spec, init, target, stats, cfg.flow, observers);
  out.final_state = out.trajectory.final_state;
  out.labels = labels;
  out.features = features_of(out.final_state);
  out.final_loss = loss(spec, out.final_state, target, stats);
  if (!(out.final_loss <= cfg.target_loss)) {
    throw NonConvergenceError("train_collapse: final loss " +
                              format_loss(out.final_loss) +
                              " above target " + format_loss(cfg.target_loss));
  }
  out.final_report =
      nc_report(out.features, labels, cfg.c, out.final_state.layers[1], zero_bias);
  return out;
}

}  // namespace lindyn
