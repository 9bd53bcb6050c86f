#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mgca/alignment/align.hpp"
#include "mgca/common/hash.hpp"
#include "mgca/model/branch.hpp"
#include "mgca/model/losses.hpp"
#include "mgca/nn/mlp.hpp"

namespace mgca {

/// Architecture widths. Everything here determines parameter shapes and
/// therefore the checkpoint compatibility hash.
struct ModelConfig {
  FeatureDims dims;
  int d_out = 256;   // alignment feature width
  int d_t = 1;       // temporal gap feature width
  int hidden = 256;  // MLP hidden width
  int rep = 16;      // penultimate width
  bool share_compare = false;
  bool stop_gradient_gates = false;  // block fusion gradients into the gates

  int branch_width(Branch b) const {
    switch (b) {
      case Branch::manipulation: return dims.manipulation;
      case Branch::visual: return dims.joint;
      default: return d_out;
    }
  }

  /// [P_c, E, S, R, V_m, V_c].
  int fused_width() const { return dims.joint + 3 * d_out + dims.manipulation + dims.joint; }

  /// Column offset of branch `b` inside the fused vector.
  int fused_offset(Branch b) const {
    int off = dims.joint;
    for (Branch k : kAllBranches) {
      if (k == b) return off;
      off += branch_width(k);
    }
    return off;
  }

  AlignmentConfig alignment() const { return {dims.semantic, d_out, d_t, share_compare}; }

  nlohmann::json to_json() const {
    return {{"d_joint", dims.joint}, {"d_sem", dims.semantic}, {"d_manip", dims.manipulation},
            {"d_out", d_out},        {"d_t", d_t},             {"hidden", hidden},
            {"rep", rep},            {"share_compare", share_compare}};
  }

  std::string hash() const { return to_hex(fnv1a64(to_json().dump())); }
};

// Single-sample forms of the head operations.

/// Fake probability and penultimate representation of one branch feature
/// (evaluation mode).
template <typename S>
std::pair<S, nn::Vector<S>> judge_branch(const nn::Vector<S>& feature, const nn::Mlp<S>& head) {
  if (feature.size() != head.in_features())
    throw ShapeError(shape_message("judgment head input width", head.in_features(), feature.size()));
  auto out = head.infer(feature.transpose());
  return {nn::sigmoid(out.logits(0, 0)), out.rep.row(0).transpose()};
}

/// [P_c, E*phi_E, S*phi_S, R*phi_R, V_m*phi_m, V_c*phi_c].
template <typename S>
nn::Vector<S> fuse(const nn::Vector<S>& p_c, const AlignmentFeatures<S>& aligned, const nn::Vector<S>& v_m,
                   const nn::Vector<S>& v_c, const std::array<S, kNumBranches>& phi) {
  const std::array<const nn::Vector<S>*, kNumBranches> parts{&aligned.entity, &aligned.event, &aligned.temporal,
                                                             &v_m, &v_c};
  Eigen::Index n = p_c.size();
  for (const auto* p : parts) n += p->size();
  nn::Vector<S> out(n);
  out.head(p_c.size()) = p_c;
  Eigen::Index off = p_c.size();
  for (int k = 0; k < kNumBranches; ++k) {
    out.segment(off, parts[k]->size()) = phi[k] * *parts[k];
    off += parts[k]->size();
  }
  return out;
}

template <typename S>
std::pair<S, nn::Vector<S>> detect(const nn::Vector<S>& fused, const nn::Mlp<S>& head) {
  if (fused.size() != head.in_features())
    throw ShapeError(shape_message("detection head input width", head.in_features(), fused.size()));
  auto out = head.infer(fused.transpose());
  return {nn::sigmoid(out.logits(0, 0)), out.rep.row(0).transpose()};
}

template <typename S>
std::pair<nn::Vector<S>, nn::Vector<S>> attribute(const nn::Vector<S>& fused, const nn::Mlp<S>& head) {
  if (fused.size() != head.in_features())
    throw ShapeError(shape_message("attribution head input width", head.in_features(), fused.size()));
  auto out = head.infer(fused.transpose());
  return {nn::softmax_rows<S>(out.logits).row(0).transpose(), out.rep.row(0).transpose()};
}

/// Row-stacked features of a batch of posts.
template <typename S>
struct Batch {
  std::array<nn::Matrix<S>, kNumVectorFeatures> x;
  nn::Matrix<S> t_g;     // B x 1
  std::vector<int> y_b;  // binary targets (all tasks)
  std::vector<int> y;    // attribution targets (attribute task)

  Eigen::Index size() const { return t_g.rows(); }
  const nn::Matrix<S>& operator[](Feature f) const { return x[static_cast<std::size_t>(f)]; }
  nn::Matrix<S>& operator[](Feature f) { return x[static_cast<std::size_t>(f)]; }
};

template <typename S>
Batch<S> make_batch(const std::vector<const FeatureBundle*>& bundles, const FeatureDims& dims,
                    std::vector<int> y_b = {}, std::vector<int> y = {}) {
  const auto n = static_cast<Eigen::Index>(bundles.size());
  Batch<S> b;
  for (int f = 0; f < kNumVectorFeatures; ++f) {
    const int w = dims.of(static_cast<Feature>(f));
    b.x[f].resize(n, w);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& v = bundles[static_cast<std::size_t>(i)]->vectors[f];
      if (v.size() != w)
        throw ShapeError(shape_message(std::string(kFeatureNames[f]) + " width of " +
                                           bundles[static_cast<std::size_t>(i)]->id,
                                       w, v.size()));
      b.x[f].row(i) = v.transpose().cast<S>();
    }
  }
  b.t_g.resize(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) b.t_g(i, 0) = static_cast<S>(bundles[static_cast<std::size_t>(i)]->T_g);
  b.y_b = std::move(y_b);
  b.y = std::move(y);
  return b;
}

/// Losses of one batch, averaged over samples.
struct LossReport {
  Task task = Task::detect;
  std::array<std::optional<double>, kNumBranches> aux;  // L_n; empty for masked branches
  double main = 0.0;                                    // fused-head cross-entropy
  double total = 0.0;                                   // main + mean aux (L_b or L)
};

/// Per-sample model output.
struct Prediction {
  std::array<std::optional<double>, kNumBranches> phi;  // empty when the branch is masked
  std::optional<double> y_b_hat;                        // detect task
  std::optional<std::vector<double>> y_hat;             // attribute task
  std::vector<double> rep16_detect;
  std::vector<double> rep16_attr;
};

/// Trainable part of the pipeline: alignment, five judgment heads and the
/// task head over the gated fusion.
template <typename S>
class MgcaModel {
 public:
  struct ForwardPass {
    typename CompareLayer<S>::Cache entity_cache, event_cache;
    typename TemporalAlignLayer<S>::Cache temporal_cache;
    nn::Matrix<S> gap_feature;
    std::array<nn::Matrix<S>, kNumBranches> branch;  // zero when masked
    std::array<typename nn::Mlp<S>::Cache, kNumBranches> judge_cache;
    std::array<nn::Vector<S>, kNumBranches> phi;  // empty when masked
    std::array<nn::Matrix<S>, kNumBranches> judge_rep;
    nn::Matrix<S> fused;
    typename nn::Mlp<S>::Cache head_cache;
    nn::Matrix<S> logits;
    nn::Matrix<S> rep;
  };

  MgcaModel(ModelConfig cfg, Task task, std::uint64_t seed) : config_(cfg), task_(task), seed_(seed) {
    Rng rng(seed);
    align = CompareNetParams<S>(cfg.alignment(), rng);
    for (Branch b : kAllBranches)
      judges[static_cast<std::size_t>(b)] =
          nn::Mlp<S>("judge." + std::string(to_string(b)), cfg.branch_width(b), cfg.hidden, cfg.rep, 1, rng);
    head = nn::Mlp<S>(head_name(task), cfg.fused_width(), cfg.hidden, cfg.rep, num_outputs(task), rng);
  }

  static std::string head_name(Task t) { return t == Task::detect ? "detect_head" : "attr_head"; }

  const ModelConfig& config() const { return config_; }
  Task task() const { return task_; }
  std::uint64_t seed() const { return seed_; }

  nn::ParameterList<S> parameters() {
    nn::ParameterList<S> out;
    align.collect(out);
    for (auto& j : judges) j.collect(out);
    head.collect(out);
    return out;
  }

  nn::BufferList<S> buffers() {
    nn::BufferList<S> out;
    for (auto& j : judges) j.collect_buffers(out);
    head.collect_buffers(out);
    return out;
  }

  void zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
  }

  ForwardPass forward(const Batch<S>& batch, bool training, const BranchMask& mask) {
    ForwardPass fp;
    const Eigen::Index n = batch.size();
    auto zero = [&](Branch b) { return nn::Matrix<S>::Zero(n, config_.branch_width(b)); };

    fp.branch[0] = mask.active(Branch::entity)
                       ? align.entity.forward(batch[Feature::C_p], batch[Feature::C_v], fp.entity_cache)
                       : zero(Branch::entity);
    fp.branch[1] = mask.active(Branch::event)
                       ? align.event().forward(batch[Feature::C_s], batch[Feature::P_b], fp.event_cache)
                       : zero(Branch::event);
    if (mask.active(Branch::temporal)) {
      auto out = align.temporal.forward(batch[Feature::C_r], batch[Feature::P_b], batch.t_g, fp.temporal_cache);
      fp.branch[2] = std::move(out.temporal);
      fp.gap_feature = std::move(out.gap_feature);
    } else {
      fp.branch[2] = zero(Branch::temporal);
      fp.gap_feature = nn::Matrix<S>::Zero(n, config_.d_t);
    }
    fp.branch[3] = mask.active(Branch::manipulation) ? batch[Feature::V_m] : zero(Branch::manipulation);
    fp.branch[4] = mask.active(Branch::visual) ? batch[Feature::V_c] : zero(Branch::visual);

    fp.fused = nn::Matrix<S>::Zero(n, config_.fused_width());
    fp.fused.leftCols(config_.dims.joint) = batch[Feature::P_c];
    for (Branch b : kAllBranches) {
      const auto k = static_cast<std::size_t>(b);
      if (mask.masked(b)) continue;
      auto out = judges[k].forward(fp.branch[k], training, fp.judge_cache[k]);
      fp.phi[k] = out.logits.col(0).unaryExpr([](S z) { return nn::sigmoid(z); });
      fp.judge_rep[k] = std::move(out.rep);
      fp.fused.middleCols(config_.fused_offset(b), config_.branch_width(b)) = nn::scale_rows<S>(fp.branch[k], fp.phi[k]);
    }

    auto out = head.forward(fp.fused, training, fp.head_cache);
    fp.logits = std::move(out.logits);
    fp.rep = std::move(out.rep);
    return fp;
  }

  LossReport loss(const ForwardPass& fp, const Batch<S>& batch, const BranchMask& mask) const {
    check_targets(batch);
    const Eigen::Index n = batch.size();
    LossReport r;
    r.task = task_;
    const int active = mask.active_count();
    double aux_sum = 0;
    for (Branch b : kAllBranches) {
      const auto k = static_cast<std::size_t>(b);
      if (mask.masked(b)) continue;
      double s = 0;
      for (Eigen::Index i = 0; i < n; ++i)
        s += static_cast<double>(binary_cross_entropy<S>(fp.phi[k][i], batch.y_b[static_cast<std::size_t>(i)]));
      r.aux[k] = s / static_cast<double>(n);
      aux_sum += *r.aux[k];
    }
    double main = 0;
    if (task_ == Task::detect) {
      for (Eigen::Index i = 0; i < n; ++i)
        main += static_cast<double>(
            binary_cross_entropy<S>(nn::sigmoid(fp.logits(i, 0)), batch.y_b[static_cast<std::size_t>(i)]));
    } else {
      const nn::Matrix<S> probs = nn::softmax_rows<S>(fp.logits);
      for (Eigen::Index i = 0; i < n; ++i)
        main -= std::log(static_cast<double>(clamp_probability(probs(i, batch.y[static_cast<std::size_t>(i)]))));
    }
    r.main = main / static_cast<double>(n);
    r.total = r.main + (active > 0 ? aux_sum / active : 0.0);
    return r;
  }

  /// Accumulates dL/dθ of the batch-mean loss into every parameter gradient.
  void backward(const ForwardPass& fp, const Batch<S>& batch, const BranchMask& mask) {
    check_targets(batch);
    const Eigen::Index n = batch.size();
    const S inv_n = S(1) / static_cast<S>(n);

    nn::Matrix<S> dlogits(n, head.out_features());
    if (task_ == Task::detect) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const S p = nn::sigmoid(fp.logits(i, 0));
        const int y = batch.y_b[static_cast<std::size_t>(i)];
        dlogits(i, 0) = probability_unclamped(p) ? (p - static_cast<S>(y)) * inv_n : S(0);
      }
    } else {
      const nn::Matrix<S> probs = nn::softmax_rows<S>(fp.logits);
      for (Eigen::Index i = 0; i < n; ++i) {
        const int y = batch.y[static_cast<std::size_t>(i)];
        if (!probability_unclamped(probs(i, y))) {
          dlogits.row(i).setZero();
          continue;
        }
        dlogits.row(i) = probs.row(i) * inv_n;
        dlogits(i, y) -= inv_n;
      }
    }
    const nn::Matrix<S> dfused = head.backward(fp.head_cache, dlogits);

    const int active = mask.active_count();
    for (Branch b : kAllBranches) {
      const auto k = static_cast<std::size_t>(b);
      if (mask.masked(b)) continue;
      const auto block = dfused.middleCols(config_.fused_offset(b), config_.branch_width(b));
      nn::Matrix<S> dfeature = nn::scale_rows<S>(block, fp.phi[k]);

      nn::Matrix<S> dlogit(n, 1);
      for (Eigen::Index i = 0; i < n; ++i) {
        const S phi = fp.phi[k][i];
        S dphi = config_.stop_gradient_gates ? S(0) : block.row(i).dot(fp.branch[k].row(i));
        S g = dphi * phi * (S(1) - phi);
        if (probability_unclamped(phi))
          g += (phi - static_cast<S>(batch.y_b[static_cast<std::size_t>(i)])) * inv_n / static_cast<S>(active);
        dlogit(i, 0) = g;
      }
      dfeature += judges[k].backward(fp.judge_cache[k], dlogit);

      switch (b) {
        case Branch::entity: align.entity.backward(fp.entity_cache, dfeature); break;
        case Branch::event: align.event().backward(fp.event_cache, dfeature); break;
        case Branch::temporal: align.temporal.backward(fp.temporal_cache, dfeature); break;
        default: break;  // V_m and V_c come from frozen encoders
      }
    }
  }

  /// Forward, loss and gradient accumulation for one batch.
  LossReport loss_and_grad(const Batch<S>& batch, const BranchMask& mask, bool training = true) {
    auto fp = forward(batch, training, mask);
    auto report = loss(fp, batch, mask);
    backward(fp, batch, mask);
    return report;
  }

  std::vector<Prediction> predict(const Batch<S>& batch, const BranchMask& mask) {
    auto fp = forward(batch, false, mask);
    std::vector<Prediction> out(static_cast<std::size_t>(batch.size()));
    const nn::Matrix<S> probs = task_ == Task::attribute ? nn::softmax_rows<S>(fp.logits) : nn::Matrix<S>();
    for (Eigen::Index i = 0; i < batch.size(); ++i) {
      auto& p = out[static_cast<std::size_t>(i)];
      for (Branch b : kAllBranches)
        if (mask.active(b)) p.phi[static_cast<std::size_t>(b)] = static_cast<double>(fp.phi[static_cast<std::size_t>(b)][i]);
      std::vector<double> rep(static_cast<std::size_t>(fp.rep.cols()));
      for (Eigen::Index c = 0; c < fp.rep.cols(); ++c) rep[static_cast<std::size_t>(c)] = static_cast<double>(fp.rep(i, c));
      if (task_ == Task::detect) {
        p.y_b_hat = static_cast<double>(nn::sigmoid(fp.logits(i, 0)));
        p.rep16_detect = std::move(rep);
      } else {
        std::vector<double> y(static_cast<std::size_t>(probs.cols()));
        for (Eigen::Index c = 0; c < probs.cols(); ++c) y[static_cast<std::size_t>(c)] = static_cast<double>(probs(i, c));
        p.y_hat = std::move(y);
        p.rep16_attr = std::move(rep);
      }
    }
    return out;
  }

  CompareNetParams<S> align;
  std::array<nn::Mlp<S>, kNumBranches> judges;
  nn::Mlp<S> head;

 private:
  void check_targets(const Batch<S>& batch) const {
    const auto n = static_cast<std::size_t>(batch.size());
    if (batch.y_b.size() != n) throw Error("batch is missing binary targets");
    if (task_ == Task::attribute && batch.y.size() != n) throw Error("batch is missing attribution targets");
  }

  ModelConfig config_;
  Task task_;
  std::uint64_t seed_;
};

}  // namespace mgca
