#pragma once

#include <cmath>
#include <vector>

#include "mgca/nn/tensor.hpp"

namespace mgca::nn {

/// Adaptive-moment optimizer with bias correction (no weight decay).
template <typename S>
class Adam {
 public:
  struct Options {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  Adam(ParameterList<S> params, Options opt) : params_(std::move(params)), opt_(opt) {
    for (auto* p : params_) {
      m_.push_back(Matrix<S>::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix<S>::Zero(p->value.rows(), p->value.cols()));
    }
  }

  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }

  void step() {
    ++t_;
    const S b1 = static_cast<S>(opt_.beta1), b2 = static_cast<S>(opt_.beta2);
    const S bc1 = static_cast<S>(1.0 - std::pow(opt_.beta1, t_));
    const S bc2_sqrt = static_cast<S>(std::sqrt(1.0 - std::pow(opt_.beta2, t_)));
    const S step_size = static_cast<S>(opt_.lr) / bc1;
    const S eps = static_cast<S>(opt_.eps);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& g = params_[i]->grad;
      m_[i] = b1 * m_[i] + (S(1) - b1) * g;
      v_[i] = b2 * v_[i] + (S(1) - b2) * g.cwiseProduct(g);
      params_[i]->value.array() -= step_size * m_[i].array() / (v_[i].array().sqrt() / bc2_sqrt + eps);
    }
  }

  long steps() const { return t_; }

 private:
  ParameterList<S> params_;
  Options opt_;
  std::vector<Matrix<S>> m_, v_;
  long t_ = 0;
};

}  // namespace mgca::nn
