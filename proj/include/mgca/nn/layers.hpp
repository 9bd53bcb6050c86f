#pragma once

#include <string>

#include "mgca/common/error.hpp"
#include "mgca/nn/tensor.hpp"

namespace mgca::nn {

/// y = x W^T + b over a batch of row vectors.
template <typename S>
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, int in, int out, bool bias, Rng& rng)
      : weight(name + ".weight", fan_in_uniform<S>(out, in, in, rng)), has_bias_(bias) {
    if (bias) this->bias = Parameter<S>(name + ".bias", fan_in_uniform<S>(1, out, in, rng));
  }

  int in_features() const { return static_cast<int>(weight.value.cols()); }
  int out_features() const { return static_cast<int>(weight.value.rows()); }

  Matrix<S> forward(const Matrix<S>& x) const {
    if (x.cols() != weight.value.cols())
      throw ShapeError(shape_message(weight.name + " input width", weight.value.cols(), x.cols()));
    Matrix<S> y = x * weight.value.transpose();
    if (has_bias_) y.rowwise() += bias.value.row(0);
    return y;
  }

  /// Accumulates parameter gradients and returns dL/dx.
  Matrix<S> backward(const Matrix<S>& x, const Matrix<S>& dy) {
    weight.grad.noalias() += dy.transpose() * x;
    if (has_bias_) bias.grad.row(0) += dy.colwise().sum();
    return dy * weight.value;
  }

  void collect(ParameterList<S>& out) {
    out.push_back(&weight);
    if (has_bias_) out.push_back(&bias);
  }

  Parameter<S> weight;
  Parameter<S> bias;

 private:
  bool has_bias_ = false;
};

/// 1-D batch normalization over the feature axis.
///
/// Training mode normalizes with the batch mean and biased variance and
/// updates running statistics (momentum 0.1, unbiased variance). Evaluation
/// mode, and training batches of one row, use the running statistics.
template <typename S>
class BatchNorm {
 public:
  static constexpr double kEps = 1e-5;
  static constexpr double kMomentum = 0.1;

  struct Cache {
    Matrix<S> xhat;
    RowVector<S> inv_std;
    bool batch_stats = false;
  };

  BatchNorm() = default;
  BatchNorm(const std::string& name, int width)
      : gamma(name + ".gamma", Matrix<S>::Ones(1, width)),
        beta(name + ".beta", Matrix<S>::Zero(1, width)),
        running_mean{name + ".running_mean", Matrix<S>::Zero(1, width)},
        running_var{name + ".running_var", Matrix<S>::Ones(1, width)} {}

  Matrix<S> forward(const Matrix<S>& x, bool training, Cache& cache) {
    const Eigen::Index n = x.rows();
    cache.batch_stats = training && n > 1;
    RowVector<S> mean, var;
    if (cache.batch_stats) {
      mean = x.colwise().mean();
      var = (x.rowwise() - mean).array().square().colwise().mean().matrix();
      const S m = static_cast<S>(kMomentum);
      const S unbias = static_cast<S>(n) / static_cast<S>(n - 1);
      running_mean.value.row(0) = (S(1) - m) * running_mean.value.row(0) + m * mean;
      running_var.value.row(0) = (S(1) - m) * running_var.value.row(0) + m * unbias * var;
    } else {
      mean = running_mean.value.row(0);
      var = running_var.value.row(0);
    }
    cache.inv_std = (var.array() + static_cast<S>(kEps)).rsqrt().matrix();
    cache.xhat = (x.rowwise() - mean).array().rowwise() * cache.inv_std.array();
    Matrix<S> y = cache.xhat.array().rowwise() * gamma.value.row(0).array();
    y.rowwise() += beta.value.row(0);
    return y;
  }

  /// Evaluation-mode transform; leaves the running statistics untouched.
  Matrix<S> infer(const Matrix<S>& x) const {
    const RowVector<S> inv_std = (running_var.value.row(0).array() + static_cast<S>(kEps)).rsqrt().matrix();
    Matrix<S> y = ((x.rowwise() - running_mean.value.row(0)).array().rowwise() *
                   (inv_std.array() * gamma.value.row(0).array()))
                      .matrix();
    y.rowwise() += beta.value.row(0);
    return y;
  }

  Matrix<S> backward(const Cache& cache, const Matrix<S>& dy) {
    gamma.grad.row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
    beta.grad.row(0) += dy.colwise().sum();
    Matrix<S> dxhat = dy.array().rowwise() * gamma.value.row(0).array();
    if (!cache.batch_stats) return dxhat.array().rowwise() * cache.inv_std.array();
    const S n = static_cast<S>(dy.rows());
    const RowVector<S> sum_dxhat = dxhat.colwise().sum();
    const RowVector<S> sum_dxhat_xhat = (dxhat.array() * cache.xhat.array()).colwise().sum().matrix();
    Matrix<S> dx = (n * dxhat.array()).matrix();
    dx.rowwise() -= sum_dxhat;
    dx -= (cache.xhat.array().rowwise() * sum_dxhat_xhat.array()).matrix();
    return (dx.array().rowwise() * (cache.inv_std.array() / n)).matrix();
  }

  void collect(ParameterList<S>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
  }
  void collect_buffers(BufferList<S>& out) {
    out.push_back(&running_mean);
    out.push_back(&running_var);
  }

  Parameter<S> gamma, beta;
  Buffer<S> running_mean, running_var;
};

template <typename S>
Matrix<S> relu(const Matrix<S>& x) {
  return x.cwiseMax(S(0));
}

/// dL/dx of ReLU given its input `x`.
template <typename S>
Matrix<S> relu_backward(const Matrix<S>& x, const Matrix<S>& dy) {
  return (x.array() > S(0)).select(dy, S(0));
}

}  // namespace mgca::nn
