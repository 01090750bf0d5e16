// gftlatent - header-only C++20 graph-spectral attribute latents for point clouds
// SPDX-License-Identifier: MIT

#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "gftlatent/nn_kernels.hpp"
#include "nn_oracle.hpp"
#include "test_support.hpp"

namespace gftl {
namespace {

using testing::attention_by_loops;
using testing::central_difference;
using testing::gaussian;
using testing::rel;

TEST(Attention, ScalarCase) {
  Eigen::MatrixXd f(1, 1);
  f << 2.5;
  const AttentionParams p{Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1),
                          Eigen::MatrixXd::Ones(1, 1)};
  EXPECT_EQ(channel_attention(f, p)(0, 0), 2.5);
}

TEST(Attention, HandSetTwoChannelWeights) {
  Eigen::MatrixXd f{{0.5, -1.0}, {2.0, 0.25}, {-0.75, 1.5}};
  AttentionParams p;
  p.w_query = Eigen::MatrixXd{{0.3, -0.2}, {0.1, 0.4}};
  p.w_key = Eigen::MatrixXd{{-0.5, 0.2}, {0.6, 0.1}};
  p.w_value = Eigen::MatrixXd{{1.0, 0.5}, {-0.25, 2.0}};
  EXPECT_LE((channel_attention(f, p) - attention_by_loops(f, p)).cwiseAbs().maxCoeff(), 1e-13);
  const Eigen::MatrixXd e = Eigen::MatrixXd::Constant(3, 2, 10.0);
  EXPECT_LE((attention_fusion(f, e, p) - e - attention_by_loops(f, p)).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Attention, ColumnSoftmaxColumnsSumToOne) {
  std::mt19937_64 rng(51);
  const Eigen::MatrixXd a = column_softmax(gaussian(5, 4, rng, 30.0));
  for (Eigen::Index j = 0; j < 4; ++j) EXPECT_NEAR(a.col(j).sum(), 1.0, 1e-14);
  EXPECT_GE(a.minCoeff(), 0.0);
}

TEST(Attention, RandomInstancesMatchLoops) {
  std::mt19937_64 rng(52);
  for (int t = 0; t < 20; ++t) {
    const Eigen::MatrixXd f = gaussian(1 + t % 7, 1 + t % 4, rng);
    const Eigen::Index d = f.cols();
    const AttentionParams p{gaussian(d, d, rng, 0.5), gaussian(d, d, rng, 0.5), gaussian(d, d, rng, 0.5)};
    EXPECT_LE(rel(channel_attention(f, p), attention_by_loops(f, p)), 1e-12);
  }
}

TEST(Attention, RowPermutationEquivariance) {
  std::mt19937_64 rng(53);
  for (int t = 0; t < 20; ++t) {
    const Eigen::MatrixXd f = gaussian(6, 3, rng);
    const AttentionParams p{gaussian(3, 3, rng), gaussian(3, 3, rng), gaussian(3, 3, rng)};
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(6);
    perm.setIdentity();
    std::shuffle(perm.indices().data(), perm.indices().data() + 6, rng);
    const Eigen::MatrixXd permuted = perm * f;
    const Eigen::MatrixXd a = perm * channel_attention(f, p);
    const Eigen::MatrixXd b = channel_attention(permuted, p);
    // K^T Q sums over rows; reordering the summands may move the last ulp.
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff()));
  }
}

TEST(Attention, ShapeAndValueErrors) {
  Eigen::MatrixXd f = Eigen::MatrixXd::Ones(2, 2);
  const AttentionParams bad{Eigen::MatrixXd::Ones(3, 3), Eigen::MatrixXd::Ones(2, 2),
                            Eigen::MatrixXd::Ones(2, 2)};
  EXPECT_THROW(channel_attention(f, bad), Error);
  const AttentionParams ok{Eigen::MatrixXd::Ones(2, 2), Eigen::MatrixXd::Ones(2, 2),
                           Eigen::MatrixXd::Ones(2, 2)};
  EXPECT_THROW(attention_fusion(f, Eigen::MatrixXd::Ones(3, 2), ok), Error);
  EXPECT_THROW(channel_attention_grad(f, ok, Eigen::MatrixXd::Ones(1, 2)), Error);
  f(0, 0) = std::nan("");
  try {
    channel_attention(f, ok);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumeric);
  }
}

TEST(AttentionGrad, ZeroUpstream) {
  std::mt19937_64 rng(54);
  const Eigen::MatrixXd f = gaussian(4, 3, rng);
  const AttentionParams p{gaussian(3, 3, rng), gaussian(3, 3, rng), gaussian(3, 3, rng)};
  const auto g = channel_attention_grad(f, p, Eigen::MatrixXd::Zero(4, 3));
  EXPECT_EQ(g.features.norm() + g.w_query.norm() + g.w_key.norm() + g.w_value.norm(), 0.0);
}

TEST(AttentionGrad, SingleChannelChainRule) {
  // D=1: softmax over one entry is 1, so out = x * wv and only w_value and x
  // carry gradient.
  Eigen::MatrixXd f{{1.5}, {-2.0}};
  const AttentionParams p{Eigen::MatrixXd::Constant(1, 1, 0.7), Eigen::MatrixXd::Constant(1, 1, -0.3),
                          Eigen::MatrixXd::Constant(1, 1, 1.25)};
  const Eigen::MatrixXd up{{2.0}, {3.0}};
  const auto g = channel_attention_grad(f, p, up);
  EXPECT_NEAR(g.w_value(0, 0), 1.5 * 2.0 - 2.0 * 3.0, 1e-14);
  EXPECT_NEAR(g.features(0, 0), 2.0 * 1.25, 1e-14);
  EXPECT_NEAR(g.features(1, 0), 3.0 * 1.25, 1e-14);
  EXPECT_NEAR(g.w_query(0, 0), 0.0, 1e-14);
  EXPECT_NEAR(g.w_key(0, 0), 0.0, 1e-14);
}

TEST(AttentionGrad, FiniteDifferences) {
  std::mt19937_64 rng(55);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    Eigen::MatrixXd f = gaussian(4, 3, rng);
    AttentionParams p{gaussian(3, 3, rng, 0.5), gaussian(3, 3, rng, 0.5), gaussian(3, 3, rng, 0.5)};
    const Eigen::MatrixXd up = gaussian(4, 3, rng);
    auto loss = [&] { return (attention_by_loops(f, p).array() * up.array()).sum(); };
    const auto g = channel_attention_grad(f, p, up);
    worst = std::max({worst, rel(g.features, central_difference(f, loss)),
                      rel(g.w_query, central_difference(p.w_query, loss)),
                      rel(g.w_key, central_difference(p.w_key, loss)),
                      rel(g.w_value, central_difference(p.w_value, loss))});
  }
  EXPECT_LE(worst, 1e-4);
}

TEST(Mlp, ShapesForLatentWidths) {
  for (int w : {96, 192}) {
    const MlpParams p = make_latent_reducer(w, 7);
    std::mt19937_64 rng(56);
    const MlpOutput o = mlp_forward(gaussian(w, 1, rng).col(0), p);
    EXPECT_EQ(o.latent.size(), w / 3);
    EXPECT_EQ(o.reconstruction.size(), w);
    EXPECT_EQ(p.input_width(), w);
    EXPECT_EQ(p.latent_width(), w / 3);
  }
  EXPECT_THROW(make_latent_reducer(95, 0), Error);
}

TEST(Mlp, ZeroParametersGiveZero) {
  MlpParams p = make_mlp(6, 2, 3);
  for (auto* s : {&p.encoder, &p.decoder})
    for (auto& l : *s) l.weight.setZero();
  const MlpOutput o = mlp_forward(Eigen::VectorXd::Ones(6), p);
  EXPECT_EQ(o.latent, Eigen::VectorXd::Zero(2));
  EXPECT_EQ(o.reconstruction, Eigen::VectorXd::Zero(6));
}

TEST(Mlp, IdentityRig) {
  MlpParams p;
  p.encoder.push_back({Eigen::MatrixXd::Identity(6, 6), Eigen::VectorXd::Zero(6), false});
  p.decoder.push_back({Eigen::MatrixXd::Identity(6, 6), Eigen::VectorXd::Zero(6), false});
  std::mt19937_64 rng(57);
  const Eigen::VectorXd x = gaussian(6, 1, rng).col(0);
  EXPECT_EQ(mlp_forward(x, p).reconstruction, x);
}

TEST(Mlp, Deterministic) {
  const MlpParams a = make_mlp(9, 3, 99), b = make_mlp(9, 3, 99), c = make_mlp(9, 3, 100);
  EXPECT_EQ(a.encoder[0].weight, b.encoder[0].weight);
  EXPECT_NE(a.encoder[0].weight, c.encoder[0].weight);
  EXPECT_EQ(a.parameter_count(), std::size_t(9 * 6 + 6 + 6 * 3 + 3 + 3 * 6 + 6 + 6 * 9 + 9));
}

TEST(MlpGrad, FiniteDifferences) {
  std::mt19937_64 rng(58);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    MlpParams p = make_mlp(6, 2, 1000 + static_cast<std::uint64_t>(t));
    for (auto* s : {&p.encoder, &p.decoder})
      for (auto& l : *s) l.bias = gaussian(l.bias.size(), 1, rng, 0.3).col(0);
    Eigen::MatrixXd x = gaussian(6, 1, rng);
    const Eigen::VectorXd up = gaussian(6, 1, rng).col(0);
    const Eigen::VectorXd up_latent = gaussian(2, 1, rng).col(0);
    auto loss = [&] {
      const MlpOutput o = mlp_forward(x.col(0), p);
      return o.reconstruction.dot(up) + o.latent.dot(up_latent);
    };
    const MlpGradients g = mlp_backward(x.col(0), p, up, &up_latent);
    worst = std::max(worst, rel(g.input, central_difference(x, loss)));
    for (std::size_t i = 0; i < 2; ++i) {
      worst = std::max(worst, rel(g.params.encoder[i].weight, central_difference(p.encoder[i].weight, loss)));
      worst = std::max(worst, rel(g.params.decoder[i].weight, central_difference(p.decoder[i].weight, loss)));
      Eigen::MatrixXd eb = p.encoder[i].bias;
      auto loss_eb = [&] {
        p.encoder[i].bias = eb.col(0);
        return loss();
      };
      worst = std::max(worst, rel(g.params.encoder[i].bias, central_difference(eb, loss_eb)));
      p.encoder[i].bias = eb.col(0);
    }
  }
  EXPECT_LE(worst, 1e-4);
}

TEST(MlpGrad, L1LossGradient) {
  std::mt19937_64 rng(59);
  std::vector<Eigen::VectorXd> samples;
  for (int i = 0; i < 5; ++i) samples.push_back(gaussian(6, 1, rng).col(0));
  MlpParams p = make_mlp(6, 2, 4);
  const MlpParams g = mlp_l1_loss_grad(samples, p);
  auto loss = [&] { return mlp_l1_loss(samples, p); };
  EXPECT_LE(rel(g.decoder[1].weight, central_difference(p.decoder[1].weight, loss)), 1e-4);
  EXPECT_LE(rel(g.encoder[0].weight, central_difference(p.encoder[0].weight, loss)), 1e-4);
}

TEST(MlpTrain, SingleSampleDescends) {
  std::mt19937_64 rng(60);
  const std::vector<Eigen::VectorXd> samples{gaussian(9, 1, rng).col(0)};
  MlpTrainConfig cfg;
  cfg.steps = 10;
  cfg.learning_rate = 1e-3;
  cfg.seed = 5;
  const MlpTrainResult r = mlp_train(samples, cfg);
  for (std::size_t i = 1; i < r.loss_history.size(); ++i) {
    EXPECT_LE(r.loss_history[i], r.loss_history[i - 1] + 1e-9);
  }
}

TEST(MlpTrain, ZeroSamplesReachZeroLoss) {
  const std::vector<Eigen::VectorXd> samples(4, Eigen::VectorXd::Zero(6));
  MlpTrainConfig cfg;
  cfg.steps = 50;
  const MlpTrainResult r = mlp_train(samples, cfg);
  EXPECT_EQ(r.best_loss, 0.0);
  EXPECT_EQ(r.loss_history.size(), 1u);
}

TEST(MlpTrain, RandomSamplesImprove) {
  std::mt19937_64 rng(61);
  std::vector<Eigen::VectorXd> samples;
  for (int i = 0; i < 100; ++i) samples.push_back(gaussian(12, 1, rng).col(0));
  MlpTrainConfig cfg;
  cfg.steps = 500;
  cfg.learning_rate = 1e-2;
  cfg.seed = 9;
  const MlpTrainResult a = mlp_train(samples, cfg);
  EXPECT_LT(a.best_loss, a.initial_loss);
  EXPECT_NEAR(mlp_l1_loss(samples, a.params), a.best_loss, 1e-12);
  const MlpTrainResult b = mlp_train(samples, cfg);
  EXPECT_EQ(a.loss_history, b.loss_history);
}

TEST(Checkpoint, RoundTrip) {
  std::mt19937_64 rng(62);
  MlpParams p = make_latent_reducer(96, 3);
  for (auto* s : {&p.encoder, &p.decoder})
    for (auto& l : *s) l.bias = gaussian(l.bias.size(), 1, rng).col(0);
  testing::TempDir dir("jsgp");
  save_checkpoint(p, dir / "m.jsgp");
  const MlpParams q = load_checkpoint(dir / "m.jsgp");
  ASSERT_EQ(q.encoder.size(), 2u);
  ASSERT_EQ(q.decoder.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(q.encoder[i].weight, p.encoder[i].weight);
    EXPECT_EQ(q.encoder[i].bias, p.encoder[i].bias);
    EXPECT_EQ(q.encoder[i].relu, p.encoder[i].relu);
    EXPECT_EQ(q.decoder[i].weight, p.decoder[i].weight);
    EXPECT_EQ(q.decoder[i].relu, p.decoder[i].relu);
  }
  const Eigen::VectorXd x = gaussian(96, 1, rng).col(0);
  EXPECT_EQ(mlp_forward(x, p).reconstruction, mlp_forward(x, q).reconstruction);
}

TEST(Checkpoint, CorruptInput) {
  std::stringstream ss;
  save_checkpoint(make_mlp(3, 1, 0), ss);
  const std::string good = ss.str();
  for (const std::string& bad : {std::string("JSGX") + good.substr(4), good.substr(0, good.size() - 3),
                                 good.substr(0, 4) + std::string(1, '\x02') + good.substr(5)}) {
    std::istringstream is(bad);
    try {
      load_checkpoint(is);
      ADD_FAILURE();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kParse);
    }
  }
}

TEST(JointLoss, DocumentedValues) {
  EXPECT_EQ(joint_weighting(8, 0, 0), 6.0);
  EXPECT_EQ(joint_weighting(8, 8, 8), 8.0);
  AttrMatrix a = AttrMatrix::Zero(2, 3), b = AttrMatrix::Zero(2, 3);
  b.col(0).setConstant(8.0);
  const LossReport r = joint_l1(a, b);
  EXPECT_EQ(r.l_y, 8.0);
  EXPECT_EQ(r.l_u, 0.0);
  EXPECT_EQ(r.l_joint, 6.0);
  EXPECT_EQ(joint_l1(b, b).l_joint, 0.0);
  EXPECT_THROW(joint_l1(a, AttrMatrix::Zero(3, 3)), Error);
}

}  // namespace
}  // namespace gftl
