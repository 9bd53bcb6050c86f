#pragma once

#include <string>

#include "mgca/nn/layers.hpp"

namespace mgca::nn {

/// Classifier head: in -> hidden (BatchNorm, ReLU) -> rep (ReLU) -> out.
///
/// The `rep`-wide activation is the penultimate representation exposed for
/// analysis.
template <typename S>
class Mlp {
 public:
  struct Cache {
    Matrix<S> x;
    Matrix<S> h1;
    typename BatchNorm<S>::Cache bn;
    Matrix<S> n1;
    Matrix<S> a1;
    Matrix<S> h2;
    Matrix<S> rep;
  };

  struct Output {
    Matrix<S> logits;
    Matrix<S> rep;
  };

  Mlp() = default;
  Mlp(const std::string& name, int in, int hidden, int rep, int out, Rng& rng)
      : fc1(name + ".fc1", in, hidden, true, rng),
        bn(name + ".bn", hidden),
        fc2(name + ".fc2", hidden, rep, true, rng),
        fc3(name + ".fc3", rep, out, true, rng) {}

  int in_features() const { return fc1.in_features(); }
  int rep_features() const { return fc2.out_features(); }
  int out_features() const { return fc3.out_features(); }

  Output forward(const Matrix<S>& x, bool training, Cache& cache) {
    cache.x = x;
    cache.h1 = fc1.forward(x);
    cache.n1 = bn.forward(cache.h1, training, cache.bn);
    cache.a1 = relu(cache.n1);
    cache.h2 = fc2.forward(cache.a1);
    cache.rep = relu(cache.h2);
    return {fc3.forward(cache.rep), cache.rep};
  }

  Output forward(const Matrix<S>& x, bool training) {
    Cache cache;
    return forward(x, training, cache);
  }

  /// Evaluation-mode forward pass without caches or state updates.
  Output infer(const Matrix<S>& x) const {
    Matrix<S> rep = relu<S>(fc2.forward(relu<S>(bn.infer(fc1.forward(x)))));
    Matrix<S> logits = fc3.forward(rep);
    return {std::move(logits), std::move(rep)};
  }

  Matrix<S> backward(const Cache& cache, const Matrix<S>& dlogits) {
    Matrix<S> d = fc3.backward(cache.rep, dlogits);
    d = relu_backward(cache.h2, d);
    d = fc2.backward(cache.a1, d);
    d = relu_backward(cache.n1, d);
    d = bn.backward(cache.bn, d);
    return fc1.backward(cache.x, d);
  }

  void collect(ParameterList<S>& out) {
    fc1.collect(out);
    bn.collect(out);
    fc2.collect(out);
    fc3.collect(out);
  }
  void collect_buffers(BufferList<S>& out) { bn.collect_buffers(out); }

  Linear<S> fc1;
  BatchNorm<S> bn;
  Linear<S> fc2;
  Linear<S> fc3;
};

}  // namespace mgca::nn
