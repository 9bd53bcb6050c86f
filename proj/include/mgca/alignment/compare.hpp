#pragma once

#include <string>
#include <utility>

#include "mgca/common/error.hpp"
#include "mgca/nn/tensor.hpp"

namespace mgca {

/// Row-wise comparison features [c1, c2, c1 - c2, c1 * c2] (Hadamard product).
template <typename S>
nn::Matrix<S> comparison_features(const nn::Matrix<S>& c1, const nn::Matrix<S>& c2) {
  if (c1.rows() != c2.rows() || c1.cols() != c2.cols())
    throw ShapeError(shape_message("compare operand width", c1.cols(), c2.cols()));
  const Eigen::Index d = c1.cols();
  nn::Matrix<S> z(c1.rows(), 4 * d);
  z.leftCols(d) = c1;
  z.middleCols(d, d) = c2;
  z.middleCols(2 * d, d) = c1 - c2;
  z.rightCols(d) = c1.cwiseProduct(c2);
  return z;
}

/// Compare-Net on single vectors: W [c1, c2, c1 - c2, c1 * c2].
template <typename S>
nn::Vector<S> compare(const nn::Vector<S>& c1, const nn::Vector<S>& c2, const nn::Matrix<S>& w) {
  if (c1.size() != c2.size()) throw ShapeError(shape_message("compare operand width", c1.size(), c2.size()));
  if (w.cols() != 4 * c1.size()) throw ShapeError(shape_message("compare matrix columns", 4 * c1.size(), w.cols()));
  nn::Vector<S> z(4 * c1.size());
  const Eigen::Index d = c1.size();
  z.segment(0, d) = c1;
  z.segment(d, d) = c2;
  z.segment(2 * d, d) = c1 - c2;
  z.segment(3 * d, d) = c1.cwiseProduct(c2);
  return w * z;
}

/// Trainable Compare-Net projection over a batch of row vectors.
template <typename S>
class CompareLayer {
 public:
  struct Cache {
    nn::Matrix<S> c1, c2, z;
  };

  CompareLayer() = default;
  CompareLayer(const std::string& name, int d, int d_out, Rng& rng)
      : weight(name + ".W_c", nn::fan_in_uniform<S>(d_out, 4 * d, 4 * d, rng)) {}

  int input_width() const { return static_cast<int>(weight.value.cols() / 4); }
  int output_width() const { return static_cast<int>(weight.value.rows()); }

  nn::Matrix<S> forward(const nn::Matrix<S>& c1, const nn::Matrix<S>& c2, Cache& cache) const {
    if (c1.cols() != input_width())
      throw ShapeError(shape_message(weight.name + " operand width", input_width(), c1.cols()));
    cache.c1 = c1;
    cache.c2 = c2;
    cache.z = comparison_features(c1, c2);
    return cache.z * weight.value.transpose();
  }

  /// Accumulates dL/dW and returns (dL/dc1, dL/dc2).
  std::pair<nn::Matrix<S>, nn::Matrix<S>> backward(const Cache& cache, const nn::Matrix<S>& dy) {
    weight.grad.noalias() += dy.transpose() * cache.z;
    const nn::Matrix<S> dz = dy * weight.value;
    const Eigen::Index d = cache.c1.cols();
    nn::Matrix<S> dc1 = dz.leftCols(d) + dz.middleCols(2 * d, d) + dz.rightCols(d).cwiseProduct(cache.c2);
    nn::Matrix<S> dc2 = dz.middleCols(d, d) - dz.middleCols(2 * d, d) + dz.rightCols(d).cwiseProduct(cache.c1);
    return {std::move(dc1), std::move(dc2)};
  }

  void collect(nn::ParameterList<S>& out) { out.push_back(&weight); }

  nn::Parameter<S> weight;
};

/// Temporal alignment: T = W_t T_g, R = W_r [c_r, p_b, c_r - p_b, c_r * p_b, T].
template <typename S>
class TemporalAlignLayer {
 public:
  struct Cache {
    nn::Matrix<S> cr, pb, tg, gap, z;
  };
  struct Output {
    nn::Matrix<S> temporal;     // R, B x d_out
    nn::Matrix<S> gap_feature;  // T, B x d_t
  };
  struct Grads {
    nn::Matrix<S> d_cr, d_pb, d_tg;
  };

  TemporalAlignLayer() = default;
  TemporalAlignLayer(const std::string& name, int d, int d_t, int d_out, Rng& rng)
      : gap_weight(name + ".W_t", nn::fan_in_uniform<S>(d_t, 1, 1, rng)),
        weight(name + ".W_r", nn::fan_in_uniform<S>(d_out, 4 * d + d_t, 4 * d + d_t, rng)) {}

  int input_width() const { return static_cast<int>((weight.value.cols() - gap_weight.value.rows()) / 4); }
  int gap_width() const { return static_cast<int>(gap_weight.value.rows()); }

  /// `tg` is B x 1.
  Output forward(const nn::Matrix<S>& cr, const nn::Matrix<S>& pb, const nn::Matrix<S>& tg, Cache& cache) const {
    if (cr.cols() != input_width())
      throw ShapeError(shape_message(weight.name + " operand width", input_width(), cr.cols()));
    if (tg.cols() != 1) throw ShapeError(shape_message("temporal gap columns", 1, tg.cols()));
    cache.cr = cr;
    cache.pb = pb;
    cache.tg = tg;
    cache.gap = tg * gap_weight.value.transpose();
    const Eigen::Index d = cr.cols();
    cache.z.resize(cr.rows(), 4 * d + gap_width());
    cache.z.leftCols(4 * d) = comparison_features(cr, pb);
    cache.z.rightCols(gap_width()) = cache.gap;
    return {cache.z * weight.value.transpose(), cache.gap};
  }

  Grads backward(const Cache& cache, const nn::Matrix<S>& d_temporal) {
    weight.grad.noalias() += d_temporal.transpose() * cache.z;
    const nn::Matrix<S> dz = d_temporal * weight.value;
    const Eigen::Index d = cache.cr.cols();
    const nn::Matrix<S> dgap = dz.rightCols(gap_width());
    gap_weight.grad.noalias() += dgap.transpose() * cache.tg;
    Grads g;
    g.d_cr = dz.leftCols(d) + dz.middleCols(2 * d, d) + dz.middleCols(3 * d, d).cwiseProduct(cache.pb);
    g.d_pb = dz.middleCols(d, d) - dz.middleCols(2 * d, d) + dz.middleCols(3 * d, d).cwiseProduct(cache.cr);
    g.d_tg = dgap * gap_weight.value;
    return g;
  }

  void collect(nn::ParameterList<S>& out) {
    out.push_back(&gap_weight);
    out.push_back(&weight);
  }

  nn::Parameter<S> gap_weight;  // W_t, d_t x 1
  nn::Parameter<S> weight;      // W_r, d_out x (4d + d_t)
};

}  // namespace mgca
