#pragma once

#include <tuple>

#include "mgca/alignment/compare.hpp"
#include "mgca/encoding/bundle.hpp"

namespace mgca {

struct AlignmentConfig {
  int d_sem = 768;
  int d_out = 256;
  int d_t = 1;
  bool share_compare = false;  // one W_c for entity and event alignment
};

/// The learnable alignment matrices: W_c for entity and event comparison,
/// W_t for the temporal gap and W_r for temporal comparison. No biases.
template <typename S>
class CompareNetParams {
 private:
  AlignmentConfig config_;

 public:
  CompareNetParams() = default;
  CompareNetParams(const AlignmentConfig& cfg, Rng& rng)
      : config_(cfg),
        entity("align.entity", cfg.d_sem, cfg.d_out, rng),
        temporal("align.temporal", cfg.d_sem, cfg.d_t, cfg.d_out, rng) {
    if (!cfg.share_compare) event_own = CompareLayer<S>("align.event", cfg.d_sem, cfg.d_out, rng);
  }

  const AlignmentConfig& config() const { return config_; }

  CompareLayer<S>& event() { return config_.share_compare ? entity : event_own; }
  const CompareLayer<S>& event() const { return config_.share_compare ? entity : event_own; }

  void collect(nn::ParameterList<S>& out) {
    entity.collect(out);
    if (!config_.share_compare) event_own.collect(out);
    temporal.collect(out);
  }

  CompareLayer<S> entity;
  CompareLayer<S> event_own;
  TemporalAlignLayer<S> temporal;
};

template <typename S>
struct AlignmentFeatures {
  nn::Vector<S> entity;       // consistency of textual vs visual entities
  nn::Vector<S> event;        // consistency of image event vs text
  nn::Vector<S> temporal;     // consistency of retrieved title vs text, with the gap term
  nn::Vector<S> gap_feature;  // W_t T_g
};

namespace detail {

template <typename S>
nn::Matrix<S> as_row(const nn::Vector<S>& v) {
  return v.transpose();
}

}  // namespace detail

template <typename S>
nn::Vector<S> align_entity(const nn::Vector<S>& c_p, const nn::Vector<S>& c_v, const CompareNetParams<S>& p) {
  return compare<S>(c_p, c_v, p.entity.weight.value);
}

template <typename S>
nn::Vector<S> align_event(const nn::Vector<S>& c_s, const nn::Vector<S>& p_b, const CompareNetParams<S>& p) {
  return compare<S>(c_s, p_b, p.event().weight.value);
}

template <typename S>
std::pair<nn::Vector<S>, nn::Vector<S>> align_temporal(const nn::Vector<S>& c_r, const nn::Vector<S>& p_b, S t_g,
                                                       const CompareNetParams<S>& p) {
  typename TemporalAlignLayer<S>::Cache cache;
  nn::Matrix<S> tg(1, 1);
  tg(0, 0) = t_g;
  auto out = p.temporal.forward(detail::as_row(c_r), detail::as_row(p_b), tg, cache);
  return {out.temporal.row(0).transpose(), out.gap_feature.row(0).transpose()};
}

/// Entity, event and temporal alignment of one encoded post.
template <typename S>
AlignmentFeatures<S> align_all(const FeatureBundle& b, const CompareNetParams<S>& p) {
  const int d = p.config().d_sem;
  for (Feature f : {Feature::P_b, Feature::C_p, Feature::C_v, Feature::C_s, Feature::C_r})
    if (b[f].size() != d)
      throw ShapeError(shape_message(std::string(kFeatureNames[static_cast<int>(f)]) + " width", d, b[f].size()));
  auto cast = [](const Eigen::VectorXd& v) -> nn::Vector<S> { return v.cast<S>(); };
  AlignmentFeatures<S> out;
  out.entity = align_entity<S>(cast(b[Feature::C_p]), cast(b[Feature::C_v]), p);
  out.event = align_event<S>(cast(b[Feature::C_s]), cast(b[Feature::P_b]), p);
  std::tie(out.temporal, out.gap_feature) =
      align_temporal<S>(cast(b[Feature::C_r]), cast(b[Feature::P_b]), static_cast<S>(b.T_g), p);
  return out;
}

}  // namespace mgca
