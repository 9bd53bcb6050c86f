#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mgca/common/rng.hpp"

namespace mgca::nn {

template <typename S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <typename S>
using RowVector = Eigen::Matrix<S, 1, Eigen::Dynamic>;

/// Trainable tensor plus its accumulated gradient.
template <typename S>
struct Parameter {
  std::string name;
  Matrix<S> value;
  Matrix<S> grad;

  Parameter() = default;
  Parameter(std::string n, Matrix<S> v) : name(std::move(n)), value(std::move(v)), grad(Matrix<S>::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

/// Non-trainable state saved with the model (batch-norm running statistics).
template <typename S>
struct Buffer {
  std::string name;
  Matrix<S> value;
};

template <typename S>
using ParameterList = std::vector<Parameter<S>*>;
template <typename S>
using BufferList = std::vector<Buffer<S>*>;

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
template <typename S>
Matrix<S> fan_in_uniform(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Matrix<S> m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = static_cast<S>(rng.uniform(-bound, bound));
  return m;
}

template <typename S>
S sigmoid(S x) {
  if (x >= 0) return S(1) / (S(1) + std::exp(-x));
  const S e = std::exp(x);
  return e / (S(1) + e);
}

/// Row-wise softmax of a B x K logit matrix.
template <typename S>
Matrix<S> softmax_rows(const Matrix<S>& logits) {
  Matrix<S> out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const S mx = logits.row(r).maxCoeff();
    S sum = 0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) sum += (out(r, c) = std::exp(logits(r, c) - mx));
    out.row(r) /= sum;
  }
  return out;
}

/// Scales row i of `m` by `s[i]`.
template <typename S>
Matrix<S> scale_rows(const Matrix<S>& m, const Vector<S>& s) {
  return s.asDiagonal() * m;
}

}  // namespace mgca::nn
