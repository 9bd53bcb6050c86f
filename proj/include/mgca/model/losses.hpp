#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "mgca/common/error.hpp"

namespace mgca {

/// Probabilities are clamped to [eps, 1 - eps] before taking logs.
inline constexpr double kProbEps = 1e-7;

template <typename S>
S clamp_probability(S p) {
  return std::clamp(p, static_cast<S>(kProbEps), static_cast<S>(1.0 - kProbEps));
}

/// True when `p` lies inside the clamp range, i.e. the loss still has slope.
template <typename S>
bool probability_unclamped(S p) {
  return p >= static_cast<S>(kProbEps) && p <= static_cast<S>(1.0 - kProbEps);
}

template <typename S>
S binary_cross_entropy(S p, int y) {
  const S q = clamp_probability(p);
  return y ? -std::log(q) : -std::log(S(1) - q);
}

/// Loss of one judgment head against the binary label.
inline double aux_loss(double phi, int y_b) { return binary_cross_entropy(phi, y_b); }

/// Mean of the auxiliary losses of the active branches; no active branch, no term.
inline double mean_aux_loss(std::span<const double> aux_losses) {
  if (aux_losses.empty()) return 0.0;
  double s = 0;
  for (double l : aux_losses) s += l;
  return s / static_cast<double>(aux_losses.size());
}

/// Binary cross-entropy of the fused prediction plus the mean auxiliary loss.
inline double detection_loss(double y_b_hat, int y_b, std::span<const double> aux_losses) {
  return binary_cross_entropy(y_b_hat, y_b) + mean_aux_loss(aux_losses);
}

/// Six-class cross-entropy of the true class plus the mean auxiliary loss.
inline double attribution_loss(std::span<const double> y_hat, int y, std::span<const double> aux_losses) {
  if (y < 0 || static_cast<std::size_t>(y) >= y_hat.size()) throw Error("attribution class out of range");
  const double q = std::clamp(y_hat[static_cast<std::size_t>(y)], kProbEps, 1.0 - kProbEps);
  return -std::log(q) + mean_aux_loss(aux_losses);
}

}  // namespace mgca
