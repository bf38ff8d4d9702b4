#include "lindyn/grokking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "lindyn/errors.hpp"
#include "lindyn/integrator.hpp"
#include "lindyn/rng.hpp"

namespace lindyn {

void GrokDataset::validate() const {
  if (classes < 2) throw ShapeError("dataset: need at least two classes");
  if (x_train.rows() == 0 || x_test.rows() == 0)
    throw ShapeError("dataset: empty split");
  if (x_train.cols() != x_test.cols())
    throw ShapeError("dataset: train/test dimension mismatch");
  if (y_train.size() != x_train.rows() || y_test.size() != x_test.rows())
    throw ShapeError("dataset: label count mismatch");
  for (Eigen::Index i = 0; i < y_train.size(); ++i)
    if (y_train(i) < 0 || y_train(i) >= classes)
      throw DataError("dataset: train label out of range");
  for (Eigen::Index i = 0; i < y_test.size(); ++i)
    if (y_test(i) < 0 || y_test(i) >= classes)
      throw DataError("dataset: test label out of range");
}

GrokDataset synthetic_task(int d, int classes, int n_train, int n_test,
                           double margin, std::uint64_t seed) {
  if (d <= 0 || classes < 2 || n_train <= 0 || n_test <= 0)
    throw ShapeError("synthetic_task: dimensions and split sizes must be positive");
  if (!(margin > 0.0))
    throw DomainError("synthetic_task: margin must be positive");

  Rng rng(derive_seed(seed, 0x636c7573ULL));
  Eigen::MatrixXd means(classes, d);
  for (int k = 0; k < classes; ++k) {
    Eigen::VectorXd dir = rng.gaussian_vector(d, 1.0);
    means.row(k) = margin * dir.transpose() / dir.norm();
  }

  auto sample_split = [&](int n, Eigen::MatrixXd& x, Eigen::VectorXi& y) {
    x.resize(n, d);
    y.resize(n);
    for (int i = 0; i < n; ++i) {
      const int k = static_cast<int>(rng.uniform_index(
          static_cast<std::size_t>(classes)));
      y(i) = k;
      x.row(i) =
          means.row(k) + rng.gaussian_vector(d, 1.0).transpose();
    }
  };

  GrokDataset data;
  data.classes = classes;
  data.source = "synthetic";
  sample_split(n_train, data.x_train, data.y_train);
  sample_split(n_test, data.x_test, data.y_test);
  return data;
}

void GrokConfig::validate() const {
  if (width <= 0 || depth <= 0)
    throw ShapeError("grok: width and depth must be positive");
  if (!(weight_init_ratio > 0.0) || !(target_scale > 0.0) ||
      !(input_scale > 0.0) || !(output_scale > 0.0))
    throw DomainError("grok: all scales must be positive");
  if (!(lr > 0.0)) throw DomainError("grok: learning rate must be positive");
  if (weight_decay < 0.0)
    throw DomainError("grok: weight decay must be nonnegative");
  if (batch <= 0 || epochs <= 0)
    throw DomainError("grok: batch and epochs must be positive");
  if (!(acc_threshold > 0.0 && acc_threshold <= 1.0))
    throw DomainError("grok: acc_threshold must lie in (0, 1]");
}

std::vector<Eigen::MatrixXd> mlp_init(int d, int width, int classes, int depth,
                                      double weight_init_ratio,
                                      std::uint64_t seed) {
  if (d <= 0 || width <= 0 || classes <= 0 || depth <= 0)
    throw ShapeError("mlp_init: dimensions must be positive");
  if (!(weight_init_ratio > 0.0))
    throw DomainError("mlp_init: weight_init_ratio must be positive");

  std::vector<int> dims;
  dims.push_back(d);
  for (int l = 0; l < depth - 1; ++l) dims.push_back(width);
  dims.push_back(classes);

  Rng rng(derive_seed(seed, 0x6d6c70ULL));
  std::vector<Eigen::MatrixXd> layers;
  layers.reserve(static_cast<std::size_t>(2 * depth));
  for (int l = 0; l < depth; ++l) {
    const double stddev = weight_init_ratio / std::sqrt(double(dims[l]));
    layers.push_back(rng.gaussian(dims[l], dims[l + 1], stddev));
  }
  for (int l = 0; l < depth; ++l)
    layers.push_back(Eigen::MatrixXd::Zero(dims[l + 1], 1));
  return layers;
}

namespace {

int pack_depth(const std::vector<Eigen::MatrixXd>& layers) {
  if (layers.empty() || layers.size() % 2 != 0)
    throw ShapeError("mlp: layer pack must hold weights then matching biases");
  const int depth = static_cast<int>(layers.size() / 2);
  for (int l = 0; l < depth; ++l) {
    if (layers[depth + l].cols() != 1 ||
        layers[depth + l].rows() != layers[l].cols())
      throw ShapeError("mlp: bias shape does not match its weight layer");
    if (l + 1 < depth && layers[l].cols() != layers[l + 1].rows())
      throw ShapeError("mlp: weight shapes do not chain");
  }
  return depth;
}

}  // namespace

Eigen::MatrixXd mlp_forward(const std::vector<Eigen::MatrixXd>& layers,
                            const Eigen::MatrixXd& x, double output_scale) {
  const int depth = pack_depth(layers);
  if (x.cols() != layers[0].rows())
    throw ShapeError("mlp_forward: input dimension mismatch");
  Eigen::MatrixXd a = x;
  for (int l = 0; l < depth; ++l) {
    a = (a * layers[l]).rowwise() + layers[depth + l].col(0).transpose();
    if (l + 1 < depth) a = a.array().tanh().matrix();
    if (!a.allFinite())
      throw DivergenceError("mlp_forward: non-finite activations", 0.0);
  }
  return output_scale * a;
}

double mlp_forward_backward(const std::vector<Eigen::MatrixXd>& layers,
                            const Eigen::MatrixXd& x,
                            const Eigen::MatrixXd& y_scaled,
                            double output_scale,
                            std::vector<Eigen::MatrixXd>& grads,
                            Eigen::MatrixXd* outputs) {
  const int depth = pack_depth(layers);
  if (x.cols() != layers[0].rows())
    throw ShapeError("mlp_forward_backward: input dimension mismatch");
  if (y_scaled.rows() != x.rows() ||
      y_scaled.cols() != layers[depth - 1].cols())
    throw ShapeError("mlp_forward_backward: target shape mismatch");

  const Eigen::Index batch = x.rows();
  std::vector<Eigen::MatrixXd> acts(static_cast<std::size_t>(depth) + 1);
  acts[0] = x;
  for (int l = 0; l < depth; ++l) {
    acts[l + 1] = (acts[l] * layers[l]).rowwise() +
                  layers[depth + l].col(0).transpose();
    if (l + 1 < depth) acts[l + 1] = acts[l + 1].array().tanh().matrix();
    if (!acts[l + 1].allFinite())
      throw DivergenceError("mlp_forward_backward: non-finite activations", 0.0);
  }

  const Eigen::MatrixXd residual = output_scale * acts[depth] - y_scaled;
  const double loss =
      residual.squaredNorm() / (2.0 * static_cast<double>(batch));
  if (outputs) *outputs = output_scale * acts[depth];

  grads.assign(layers.size(), Eigen::MatrixXd());
  Eigen::MatrixXd dz =
      (output_scale / static_cast<double>(batch)) * residual;
  for (int l = depth - 1; l >= 0; --l) {
    grads[l] = acts[l].transpose() * dz;
    grads[depth + l] = dz.colwise().sum().transpose();
    if (l > 0) {
      // tanh'(z) expressed from the stored activation
      dz = ((dz * layers[l].transpose()).array() *
            (1.0 - acts[l].array().square()))
               .matrix();
    }
  }
  return loss;
}

namespace {

Eigen::MatrixXd one_hot_scaled(const Eigen::VectorXi& labels, int classes,
                               double scale) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(labels.size(), classes);
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    y(i, labels(i)) = scale;
  return y;
}

Eigen::Index count_correct(const Eigen::MatrixXd& outputs,
                           const Eigen::VectorXi& labels) {
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < outputs.rows(); ++i) {
    Eigen::Index argmax = 0;
    outputs.row(i).maxCoeff(&argmax);
    if (argmax == labels(i)) ++correct;
  }
  return correct;
}

}  // namespace

GrokResult run_grok(const GrokConfig& cfg, const GrokDataset& data,
                    std::uint64_t seed) {
  cfg.validate();
  data.validate();

  const int d = static_cast<int>(data.x_train.cols());
  const int n = static_cast<int>(data.x_train.rows());
  const Eigen::MatrixXd x_train = cfg.input_scale * data.x_train;
  const Eigen::MatrixXd x_test = cfg.input_scale * data.x_test;
  const Eigen::MatrixXd y_train =
      one_hot_scaled(data.y_train, data.classes, cfg.target_scale);
  const Eigen::MatrixXd y_test =
      one_hot_scaled(data.y_test, data.classes, cfg.target_scale);

  std::vector<Eigen::MatrixXd> layers =
      mlp_init(d, cfg.width, data.classes, cfg.depth, cfg.weight_init_ratio,
               derive_seed(seed, 0x696e6974ULL));
  AdamOptimizer opt(cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay);
  Rng shuffle_rng(derive_seed(seed, 0x73687566ULL));

  GrokResult result;
  result.train_loss.reserve(cfg.epochs);
  result.test_loss.reserve(cfg.epochs);
  result.train_acc.reserve(cfg.epochs);
  result.test_acc.reserve(cfg.epochs);

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::vector<Eigen::MatrixXd> grads;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(
          shuffle_rng.uniform_index(static_cast<std::size_t>(i) + 1));
      std::swap(order[i], order[j]);
    }

    double loss_sum = 0.0;
    Eigen::Index correct = 0;
    for (int start = 0; start < n; start += cfg.batch) {
      const int bs = std::min(cfg.batch, n - start);
      Eigen::MatrixXd xb(bs, d);
      Eigen::MatrixXd yb(bs, data.classes);
      Eigen::VectorXi lb(bs);
      for (int r = 0; r < bs; ++r) {
        const int src = order[start + r];
        xb.row(r) = x_train.row(src);
        yb.row(r) = y_train.row(src);
        lb(r) = data.y_train(src);
      }
      Eigen::MatrixXd outputs;
      const double batch_loss = mlp_forward_backward(
          layers, xb, yb, cfg.output_scale, grads, &outputs);
      loss_sum += batch_loss * bs;
      correct += count_correct(outputs, lb);
      opt.step(layers, grads);
    }
    result.train_loss.push_back(loss_sum / n);
    result.train_acc.push_back(static_cast<double>(correct) / n);

    const Eigen::MatrixXd test_out =
        mlp_forward(layers, x_test, cfg.output_scale);
    result.test_loss.push_back((test_out - y_test).squaredNorm() /
                               (2.0 * static_cast<double>(x_test.rows())));
    result.test_acc.push_back(
        static_cast<double>(count_correct(test_out, data.y_test)) /
        static_cast<double>(x_test.rows()));

    if (!result.train_reached && result.train_acc.back() >= cfg.acc_threshold) {
      result.train_reached = true;
      result.t_train = epoch;
    }
    if (!result.test_reached && result.test_acc.back() >= cfg.acc_threshold) {
      result.test_reached = true;
      result.t_test = epoch;
    }
  }

  if (result.train_reached && result.test_reached)
    result.gap = result.t_test - result.t_train;
  result.final_layers = std::move(layers);
  return result;
}

}  // namespace lindyn
