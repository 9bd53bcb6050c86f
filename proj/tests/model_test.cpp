#include <numeric>

#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace mgca;
using mgca::testing::random_bundle;
using mgca::testing::random_matrix;
using mgca::testing::random_vector;
using mgca::testing::TempDir;
using mgca::testing::tiny_model_config;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

namespace {

/// Straight-loop forward pass of a head in evaluation mode, reading weights
/// out of the layer objects but none of their code.
std::pair<std::vector<double>, std::vector<double>> oracle_head(const nn::Mlp<double>& m, const Vec& x) {
  auto affine = [](const nn::Linear<double>& l, const std::vector<double>& in) {
    std::vector<double> out(static_cast<std::size_t>(l.weight.value.rows()));
    for (std::size_t r = 0; r < out.size(); ++r) {
      double s = l.bias.value(0, static_cast<Eigen::Index>(r));
      for (std::size_t c = 0; c < in.size(); ++c)
        s += l.weight.value(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * in[c];
      out[r] = s;
    }
    return out;
  };
  std::vector<double> in(x.data(), x.data() + x.size());
  auto h = affine(m.fc1, in);
  for (std::size_t j = 0; j < h.size(); ++j) {
    const auto k = static_cast<Eigen::Index>(j);
    const double norm = (h[j] - m.bn.running_mean.value(0, k)) / std::sqrt(m.bn.running_var.value(0, k) + 1e-5);
    h[j] = std::max(0.0, norm * m.bn.gamma.value(0, k) + m.bn.beta.value(0, k));
  }
  auto rep = affine(m.fc2, h);
  for (auto& v : rep) v = std::max(0.0, v);
  return {affine(m.fc3, rep), rep};
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

nn::Mlp<double> hand_set_head(int in, int out, std::uint64_t seed) {
  Rng rng(seed);
  nn::Mlp<double> m("h", in, 256, 16, out, rng);
  m.fc1.weight.value = random_matrix(rng, 256, in, 0.8);
  m.fc1.bias.value = random_matrix(rng, 1, 256, 0.3);
  m.bn.gamma.value = random_matrix(rng, 1, 256, 1.0).array() + 1.5;
  m.bn.beta.value = random_matrix(rng, 1, 256, 0.2);
  m.bn.running_mean.value = random_matrix(rng, 1, 256, 0.5);
  m.bn.running_var.value = random_matrix(rng, 1, 256, 0.5).array() + 1.0;
  m.fc2.weight.value = random_matrix(rng, 16, 256, 0.2);
  m.fc2.bias.value = random_matrix(rng, 1, 16, 0.1);
  m.fc3.weight.value = random_matrix(rng, out, 16, 0.5);
  m.fc3.bias.value = random_matrix(rng, 1, out, 0.1);
  return m;
}

struct TinyData {
  std::vector<FeatureBundle> bundles;
  std::vector<int> y_b, y;

  TinyData(const FeatureDims& dims, int n, std::uint64_t seed) {
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
      bundles.push_back(random_bundle(rng, dims, "s" + std::to_string(i)));
      y.push_back(static_cast<int>(rng.below(6)));
      y_b.push_back(y.back() == 0 ? 0 : 1);
    }
  }

  Batch<double> batch() const {
    std::vector<const FeatureBundle*> ptrs;
    for (const auto& b : bundles) ptrs.push_back(&b);
    return make_batch<double>(ptrs, dims(), y_b, y);
  }

  FeatureDims dims() const {
    return {static_cast<int>(bundles[0][Feature::P_c].size()), static_cast<int>(bundles[0][Feature::P_b].size()),
            static_cast<int>(bundles[0][Feature::V_m].size())};
  }
};

double full_model_gradient_error(Task task, const BranchMask& mask, std::uint64_t seed, std::string* where) {
  ModelConfig cfg = tiny_model_config();
  MgcaModel<double> model(cfg, task, seed);
  TinyData data(cfg.dims, 5, seed + 100);
  const auto batch = data.batch();
  auto loss = [&] { return model.loss(model.forward(batch, true, mask), batch, mask).total; };
  return mgca::testing::worst_parameter_error(model.parameters(), loss,
                                              [&] { model.loss_and_grad(batch, mask); }, where);
}

}  // namespace

TEST(JudgeBranch, ZeroFinalWeightsGiveHalf) {
  Rng rng(1);
  nn::Mlp<double> head("j", 6, 256, 16, 1, rng);
  head.fc3.weight.value.setZero();
  head.fc3.bias.value.setZero();
  auto [phi, rep] = judge_branch<double>(random_vector(rng, 6, 5.0), head);
  EXPECT_EQ(phi, 0.5);
  EXPECT_EQ(rep.size(), 16);
}

TEST(JudgeBranch, HandSetWeightsMatchOracle) {
  auto head = hand_set_head(2, 1, 2);
  for (const Vec& x : {Vec(Eigen::Vector2d(0.3, -1.2)), Vec(Eigen::Vector2d(2.0, 0.7))}) {
    auto [phi, rep] = judge_branch<double>(x, head);
    auto [logits, want_rep] = oracle_head(head, x);
    EXPECT_NEAR(phi, logistic(logits[0]), 1e-10);
    ASSERT_EQ(rep.size(), 16);
    for (int i = 0; i < 16; ++i) EXPECT_NEAR(rep[i], want_rep[static_cast<std::size_t>(i)], 1e-10);
    EXPECT_GT(phi, 0.0);
    EXPECT_LT(phi, 1.0);
  }
}

TEST(JudgeBranch, WidthMismatch) {
  Rng rng(3);
  nn::Mlp<double> head("j", 6, 8, 4, 1, rng);
  EXPECT_THROW(judge_branch<double>(Vec::Zero(5), head), ShapeError);
}

TEST(Losses, AuxExamples) {
  EXPECT_NEAR(aux_loss(0.5, 1), std::log(2.0), 1e-12);
  EXPECT_NEAR(aux_loss(0.8, 0), -std::log(0.2), 1e-12);
  EXPECT_NEAR(aux_loss(0.8, 0), 1.609438, 1e-6);
  EXPECT_LE(aux_loss(1.0, 1), -std::log(1 - 1e-7) + 1e-15);
  EXPECT_TRUE(std::isfinite(aux_loss(0.0, 1)));
}

TEST(Losses, DetectionExample) {
  const std::vector<double> aux(5, aux_loss(0.5, 1));
  EXPECT_NEAR(detection_loss(0.8, 1, aux), -std::log(0.8) + std::log(2.0), 1e-12);
  EXPECT_NEAR(detection_loss(0.8, 1, aux), 0.91629, 1e-5);
  const std::vector<double> zero(5, 0.0);
  EXPECT_NEAR(detection_loss(0.8, 1, zero), -std::log(0.8), 1e-15);
  std::vector<double> perfect(5, aux_loss(1.0, 1));
  EXPECT_LE(detection_loss(1.0, 1, perfect), 6 * 1.2e-7);
}

TEST(Losses, DetectionCompositionOracle) {
  Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    const double p = rng.uniform(0.01, 0.99);
    const int y = static_cast<int>(rng.below(2));
    std::vector<double> phis(5), aux(5);
    double mean = 0;
    for (int k = 0; k < 5; ++k) {
      phis[static_cast<std::size_t>(k)] = rng.uniform(0.01, 0.99);
      const double q = phis[static_cast<std::size_t>(k)];
      aux[static_cast<std::size_t>(k)] = aux_loss(q, y);
      mean += (y ? -std::log(q) : -std::log(1 - q)) / 5;
    }
    const double bce = y ? -std::log(p) : -std::log(1 - p);
    EXPECT_NEAR(detection_loss(p, y, aux), bce + mean, 1e-9);
  }
}

TEST(Losses, AttributionExamples) {
  const std::vector<double> uniform(6, 1.0 / 6);
  for (int y = 0; y < 6; ++y) EXPECT_NEAR(attribution_loss(uniform, y, {}), std::log(6.0), 1e-12);
  EXPECT_NEAR(std::log(6.0), 1.791759, 1e-6);
  const std::vector<double> sharp{0.02, 0.9, 0.02, 0.02, 0.02, 0.02};
  EXPECT_NEAR(attribution_loss(sharp, 1, {}), 0.105361, 1e-6);
  const std::vector<double> onehot{0, 0, 0, 1, 0, 0};
  const std::vector<double> aux{0.1, 0.2, 0.3, 0.4, 0.5};
  EXPECT_LE(attribution_loss(onehot, 3, aux), 1.2e-7 + 0.3);
  EXPECT_THROW(attribution_loss(onehot, 6, aux), Error);
}

TEST(Fuse, Examples) {
  AlignmentFeatures<double> a;
  a.entity = Eigen::Vector2d(2, -4);
  a.event = Eigen::Vector2d(1, 1);
  a.temporal = Eigen::Vector2d(3, 5);
  const Vec pc = Eigen::Vector3d(7, 8, 9), vm = Eigen::Vector2d(-1, 1), vc = Eigen::Vector3d(4, 4, 4);

  Vec ones = fuse<double>(pc, a, vm, vc, {1, 1, 1, 1, 1});
  Vec want(14);
  want << pc, a.entity, a.event, a.temporal, vm, vc;
  EXPECT_EQ(ones, want);

  Vec zeros = fuse<double>(pc, a, vm, vc, {0, 0, 0, 0, 0});
  EXPECT_EQ(zeros.head(3), pc);
  EXPECT_TRUE(zeros.tail(11).isZero(0));

  Vec half = fuse<double>(pc, a, vm, vc, {0.5, 1, 1, 1, 1});
  EXPECT_EQ(half.segment(3, 2), Vec(Eigen::Vector2d(1, -2)));
}

TEST(Detect, ZeroFinalWeightsAndOracle) {
  auto head = hand_set_head(5, 1, 5);
  const Vec x = (Vec(5) << 0.1, -0.4, 0.9, 0.0, 1.3).finished();
  auto [p, rep] = detect<double>(x, head);
  EXPECT_NEAR(p, logistic(oracle_head(head, x).first[0]), 1e-10);
  EXPECT_EQ(rep.size(), 16);
  head.fc3.weight.value.setZero();
  head.fc3.bias.value.setZero();
  EXPECT_EQ(detect<double>(x, head).first, 0.5);
  EXPECT_THROW(detect<double>(Vec::Zero(4), head), ShapeError);
}

TEST(Attribute, SoftmaxOracleAndUniform) {
  auto head = hand_set_head(5, 6, 6);
  const Vec x = (Vec(5) << -0.3, 0.4, 0.2, 1.0, -1.1).finished();
  auto [y, rep] = attribute<double>(x, head);
  auto logits = oracle_head(head, x).first;
  double z = 0;
  for (double l : logits) z += std::exp(l);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(y[i], std::exp(logits[static_cast<std::size_t>(i)]) / z, 1e-10);
  EXPECT_EQ(rep.size(), 16);
  head.fc3.weight.value.setZero();
  head.fc3.bias.value.setZero();
  auto [u, _] = attribute<double>(x, head);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(u[i], 1.0 / 6, 1e-15);
}

TEST(Attribute, SoftmaxNormalizesAnyLogits) {
  Rng rng(7);
  for (int t = 0; t < 500; ++t) {
    const Mat logits = random_matrix(rng, 1, 6, t % 2 ? 1000.0 : 5.0);
    const Mat p = nn::softmax_rows<double>(logits);
    EXPECT_NEAR(p.sum(), 1.0, 1e-6);
    EXPECT_GE(p.minCoeff(), 0.0);
    EXPECT_TRUE(p.allFinite());
  }
}

TEST(MgcaModel, PredictionInvariants) {
  for (Task task : {Task::detect, Task::attribute}) {
    ModelConfig cfg = tiny_model_config();
    MgcaModel<double> model(cfg, task, 8);
    TinyData data(cfg.dims, 6, 9);
    for (const auto& p : model.predict(data.batch(), {})) {
      for (const auto& phi : p.phi) {
        ASSERT_TRUE(phi.has_value());
        EXPECT_GT(*phi, 0.0);
        EXPECT_LT(*phi, 1.0);
      }
      if (task == Task::detect) {
        ASSERT_TRUE(p.y_b_hat.has_value());
        EXPECT_FALSE(p.y_hat.has_value());
        EXPECT_EQ(p.rep16_detect.size(), static_cast<std::size_t>(cfg.rep));
      } else {
        ASSERT_TRUE(p.y_hat.has_value());
        EXPECT_NEAR(std::accumulate(p.y_hat->begin(), p.y_hat->end(), 0.0), 1.0, 1e-6);
        EXPECT_EQ(p.rep16_attr.size(), static_cast<std::size_t>(cfg.rep));
      }
    }
  }
}

TEST(MgcaModel, DefaultWidthsMatchArchitecture) {
  ModelConfig cfg;
  cfg.dims = {8, 6, 4};
  MgcaModel<double> model(cfg, Task::attribute, 1);
  EXPECT_EQ(model.head.rep_features(), 16);
  EXPECT_EQ(model.head.fc1.out_features(), 256);
  EXPECT_EQ(model.head.out_features(), 6);
  EXPECT_EQ(model.head.in_features(), 8 + 3 * 256 + 4 + 8);
  for (const auto& j : model.judges) {
    EXPECT_EQ(j.rep_features(), 16);
    EXPECT_EQ(j.out_features(), 1);
  }
}

TEST(MgcaModel, ZeroGateMakesLogitIgnoreBranch) {
  ModelConfig cfg = tiny_model_config();
  MgcaModel<double> model(cfg, Task::detect, 10);
  // Drive phi_entity to exactly 0: sigmoid(-1e4) underflows.
  auto& j = model.judges[static_cast<std::size_t>(Branch::entity)];
  j.fc3.weight.value.setZero();
  j.fc3.bias.value.setConstant(-1e4);
  TinyData data(cfg.dims, 4, 11);
  auto base = data.batch();
  auto perturbed = base;
  Rng rng(12);
  perturbed[Feature::C_p] += random_matrix(rng, 4, cfg.dims.semantic, 3.0);
  perturbed[Feature::C_v] += random_matrix(rng, 4, cfg.dims.semantic, 3.0);
  const auto a = model.forward(base, false, {});
  const auto b = model.forward(perturbed, false, {});
  EXPECT_TRUE(a.phi[0].isZero(0));
  EXPECT_NE(a.branch[0], b.branch[0]);
  EXPECT_EQ(a.logits, b.logits);
}

TEST(MgcaModel, MaskedBranchInputsDoNotMatter) {
  ModelConfig cfg = tiny_model_config();
  MgcaModel<double> model(cfg, Task::attribute, 13);
  TinyData data(cfg.dims, 6, 14);
  auto base = data.batch();
  auto shuffled = base;
  // Rotate the temporal-branch inputs across samples.
  for (Eigen::Index i = 0; i < 6; ++i) {
    shuffled[Feature::C_r].row(i) = base[Feature::C_r].row((i + 1) % 6);
    shuffled.t_g(i, 0) = base.t_g((i + 2) % 6, 0);
  }
  const auto mask = BranchMask::of({Branch::temporal});
  auto p = model.predict(base, mask), q = model.predict(shuffled, mask);
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_EQ(*p[i].y_hat, *q[i].y_hat);
    EXPECT_EQ(p[i].rep16_attr, q[i].rep16_attr);
    EXPECT_FALSE(p[i].phi[static_cast<std::size_t>(Branch::temporal)].has_value());
  }
  auto r = model.predict(shuffled, {});
  EXPECT_NE(*p[0].y_hat, *r[0].y_hat);
}

TEST(MgcaModel, AllBranchesMaskedDropsAuxTerm) {
  ModelConfig cfg = tiny_model_config();
  MgcaModel<double> model(cfg, Task::detect, 15);
  TinyData data(cfg.dims, 4, 16);
  const auto batch = data.batch();
  const auto report = model.loss(model.forward(batch, false, BranchMask::all()), batch, BranchMask::all());
  EXPECT_EQ(report.total, report.main);
  for (const auto& a : report.aux) EXPECT_FALSE(a.has_value());
}

TEST(MgcaModel, LossReportMatchesPerSampleOracle) {
  ModelConfig cfg = tiny_model_config();
  MgcaModel<double> model(cfg, Task::detect, 17);
  TinyData data(cfg.dims, 5, 18);
  const auto batch = data.batch();
  const auto fp = model.forward(batch, false, {});
  const auto report = model.loss(fp, batch, {});
  double want = 0;
  for (int i = 0; i < 5; ++i) {
    std::vector<double> aux;
    for (int k = 0; k < 5; ++k) aux.push_back(aux_loss(fp.phi[static_cast<std::size_t>(k)][i], data.y_b[static_cast<std::size_t>(i)]));
    want += detection_loss(logistic(fp.logits(i, 0)), data.y_b[static_cast<std::size_t>(i)], aux) / 5;
  }
  EXPECT_NEAR(report.total, want, 1e-12);
}

TEST(ModelGradients, DetectionLossAllParameters) {
  for (std::uint64_t seed : {21, 22, 23}) {
    std::string where;
    EXPECT_LT(full_model_gradient_error(Task::detect, {}, seed, &where), 1e-4) << where;
  }
}

TEST(ModelGradients, AttributionLossAllParameters) {
  for (std::uint64_t seed : {31, 32, 33}) {
    std::string where;
    EXPECT_LT(full_model_gradient_error(Task::attribute, {}, seed, &where), 1e-4) << where;
  }
}

TEST(ModelGradients, WithMaskedBranches) {
  std::string where;
  EXPECT_LT(full_model_gradient_error(Task::attribute, BranchMask::of({Branch::event, Branch::visual}), 41, &where),
            1e-4)
      << where;
  EXPECT_LT(full_model_gradient_error(Task::detect, BranchMask::all(), 42, &where), 1e-4) << where;
}

TEST(ModelGradients, SharedCompareWeights) {
  ModelConfig cfg = tiny_model_config();
  cfg.share_compare = true;
  MgcaModel<double> model(cfg, Task::detect, 51);
  TinyData data(cfg.dims, 4, 52);
  const auto batch = data.batch();
  auto loss = [&] { return model.loss(model.forward(batch, true, {}), batch, {}).total; };
  std::string where;
  EXPECT_LT(mgca::testing::worst_parameter_error(model.parameters(), loss, [&] { model.loss_and_grad(batch, {}); },
                                                 &where),
            1e-4)
      << where;
}

TEST(Checkpoint, RoundTripIsBitIdentical) {
  TempDir dir;
  ModelConfig cfg = tiny_model_config();
  MgcaModel<double> a(cfg, Task::attribute, 61);
  TinyData data(cfg.dims, 4, 62);
  a.loss_and_grad(data.batch(), {});  // moves the batch-norm running statistics
  save_checkpoint(a, dir.path(), 3, BranchMask::of({Branch::visual}));

  MgcaModel<double> b(cfg, Task::attribute, 999);
  auto report = load_checkpoint(b, dir.path());
  EXPECT_TRUE(report.missing.empty());
  EXPECT_TRUE(report.warnings.empty());
  EXPECT_EQ(report.manifest.epoch, 3);
  EXPECT_EQ(report.manifest.seed, 61u);
  EXPECT_EQ(report.manifest.config_hash, cfg.hash());
  EXPECT_EQ(report.manifest.mask, BranchMask::of({Branch::visual}));

  auto pa = a.predict(data.batch(), {}), pb = b.predict(data.batch(), {});
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(*pa[i].y_hat, *pb[i].y_hat);
    EXPECT_EQ(pa[i].rep16_attr, pb[i].rep16_attr);
  }
}

TEST(Checkpoint, ManifestFields) {
  TempDir dir;
  MgcaModel<double> a(tiny_model_config(), Task::detect, 7);
  save_checkpoint(a, dir.path(), 0);
  std::ifstream in(dir / "manifest.json");
  auto j = nlohmann::json::parse(in);
  for (const char* key : {"config_hash", "dims", "task", "seed", "epoch"}) EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["task"], "detect");
  EXPECT_EQ(j["dims"]["d_out"], 3);
}

TEST(Checkpoint, MismatchedWidthRejected) {
  TempDir dir;
  MgcaModel<double> a(tiny_model_config(), Task::detect, 71);
  save_checkpoint(a, dir.path(), 1);
  ModelConfig other = tiny_model_config();
  other.d_out = 4;
  MgcaModel<double> b(other, Task::detect, 71);
  try {
    load_checkpoint(b, dir.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("checkpoint incompatible with configuration"), std::string::npos);
  }
}

TEST(Checkpoint, DetectionWarmStartsAttribution) {
  TempDir dir;
  ModelConfig cfg = tiny_model_config();
  MgcaModel<double> det(cfg, Task::detect, 81);
  save_checkpoint(det, dir.path(), 5);
  MgcaModel<double> attr(cfg, Task::attribute, 82);
  const MgcaModel<double> fresh(cfg, Task::attribute, 82);
  auto report = load_checkpoint(attr, dir.path());
  EXPECT_FALSE(report.warnings.empty());

  std::set<std::string> det_names, attr_names;
  for (auto* p : det.parameters()) det_names.insert(p->name);
  for (auto* p : attr.parameters()) attr_names.insert(p->name);
  std::vector<std::string> expected_missing, expected_unused;
  std::set_difference(attr_names.begin(), attr_names.end(), det_names.begin(), det_names.end(),
                      std::back_inserter(expected_missing));
  std::set_difference(det_names.begin(), det_names.end(), attr_names.begin(), attr_names.end(),
                      std::back_inserter(expected_unused));
  std::set<std::string> missing(report.missing.begin(), report.missing.end());
  std::set<std::string> unused(report.unused.begin(), report.unused.end());
  for (const auto& n : expected_missing) EXPECT_TRUE(missing.contains(n)) << n;
  for (const auto& n : expected_unused) EXPECT_TRUE(unused.contains(n)) << n;

  EXPECT_EQ(attr.judges[2].fc1.weight.value, det.judges[2].fc1.weight.value);
  EXPECT_EQ(attr.align.temporal.gap_weight.value, det.align.temporal.gap_weight.value);
  EXPECT_EQ(attr.head.fc1.weight.value, fresh.head.fc1.weight.value);
}

TEST(Checkpoint, FloatModelRoundTrip) {
  TempDir dir;
  ModelConfig cfg = tiny_model_config();
  MgcaModel<float> a(cfg, Task::detect, 91);
  save_checkpoint(a, dir.path(), 2);
  MgcaModel<float> b(cfg, Task::detect, 92);
  load_checkpoint(b, dir.path());
  EXPECT_EQ(a.head.fc3.weight.value, b.head.fc3.weight.value);
  EXPECT_EQ(read_checkpoint_manifest(dir.path()).dtype, "float32");
}
