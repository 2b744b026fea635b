#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"
#include "timrl/envs/env.hpp"
#include "timrl/inference/context.hpp"
#include "timrl/inference/decoder.hpp"
#include "timrl/inference/encoder.hpp"
#include "timrl/inference/losses.hpp"
#include "timrl/inference/recognition.hpp"
#include "timrl/numerics/errors.hpp"
#include "timrl/numerics/optim.hpp"

namespace timrl::inference {
namespace {

using testing::random_tensor;

constexpr RowLayout kLayout{2, 2};

RecognitionOptions small_recognition() {
  RecognitionOptions o;
  o.transformer.d_model = 16;
  o.transformer.heads = 2;
  o.transformer.layers = 1;
  o.transformer.ff_hidden = 32;
  o.preproc_hidden = 32;
  o.head_hidden = 16;
  return o;
}

EncoderOptions small_encoder() {
  EncoderOptions o;
  o.latent_dim = 3;
  o.feature_hidden = 8;
  o.feature_dim = 6;
  o.trunk_hidden = 8;
  return o;
}

std::vector<std::vector<double>> random_rows(std::size_t n, Rng& rng) {
  std::vector<std::vector<double>> rows(n, std::vector<double>(kLayout.width()));
  for (auto& r : rows)
    for (auto& v : r) v = rng.uniform(-1, 1);
  return rows;
}

TEST(ContextWindow, KeepsMostRecentTransitions) {
  const auto spec = envs::env_spec("PointDirGoal");
  envs::RandomAgent agent(2, 1);
  const auto tr = envs::rollout(spec, agent, envs::sample_task_schedule(spec, 1));
  const auto ctx = ContextWindow::build(std::span(tr).first(20), 16, spec, {2, 2}, nullptr);
  EXPECT_EQ(ctx.length(), 16u);
  EXPECT_EQ(ctx.rows().cols(), context_row_width({2, 2}));
  EXPECT_EQ(ctx.rows().at(15, kLayout.reward_col()), tr[19].reward);
  EXPECT_EQ(ctx.rows().at(0, kLayout.reward_col()), tr[4].reward);
  EXPECT_EQ(ContextWindow::build(std::span(tr).first(3), 16, spec, {2, 2}, nullptr).length(), 3u);
  EXPECT_THROW(ContextWindow::build({}, 16, spec, {2, 2}, nullptr), ContractError);
}

TEST(ContextRow, FieldOrder) {
  const auto spec = envs::env_spec("PointDirGoal");
  const envs::Transition tr{{1, 2}, {0.5, -0.5}, 3.0, {4, 5}, 0};
  EXPECT_EQ(context_row(tr, spec, {3, 2}, nullptr), (std::vector<double>{1, 2, 0, 0.5, -0.5, 3.0, 4, 5, 0}));
}

TEST(ContextBatch, PoolingMatrices) {
  Rng rng(2);
  const auto batch = ContextBatch::stack({random_rows(2, rng), random_rows(3, rng)});
  EXPECT_EQ(batch.rows.rows(), 5u);
  EXPECT_EQ(batch.lengths, (std::vector<std::size_t>{2, 3}));
  EXPECT_DOUBLE_EQ(batch.mean_pool.at(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(batch.mean_pool.at(1, 4), 1.0 / 3.0);
  EXPECT_EQ(batch.mean_pool.at(0, 2), 0.0);
  EXPECT_EQ(batch.expand.at(3, 1), 1.0);
}

TEST(Recognize, ZeroHeadGivesUniformAndIndexZero) {
  Rng rng(3);
  RecognitionNetwork net(kLayout.width(), 3, small_recognition(), rng);
  for (auto& layer : net.head().layers()) {
    for (auto& v : layer.weight.mutable_data()) v = 0.0;
  }
  const auto rec = net.recognize(ContextWindow::from_rows(random_tensor({5, kLayout.width()}, rng)));
  for (double p : rec.probs) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);
  EXPECT_EQ(rec.k, 0);
}

TEST(Recognize, EmptyContextIsContractError) {
  const auto spec = envs::env_spec("PointDirGoal");
  EXPECT_THROW(ContextWindow::build({}, 16, spec, {2, 2}, nullptr), ContractError);
  EXPECT_THROW(ContextBatch::stack({{}}), ContractError);
}

TEST(RecognizeProperty, PermutationInvariantExactly) {
  Rng rng(5);
  RecognitionNetwork net(kLayout.width(), 3, small_recognition(), rng);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng.index(15);
    const auto rows = random_tensor({n, kLayout.width()}, rng);
    const auto perm = testing::random_permutation(n, rng);
    const auto a = net.recognize(ContextWindow::from_rows(rows));
    const auto b = net.recognize(ContextWindow::from_rows(testing::permute_rows(rows, perm)));
    EXPECT_EQ(a.k, b.k);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(a.probs[k], b.probs[k], 1e-14);
  }
}

TEST(Argmax, LowestIndexOnTies) {
  EXPECT_EQ(argmax_lowest(std::vector<double>{0.2, 0.4, 0.4}), 1);
  EXPECT_EQ(argmax_lowest(std::vector<double>{0.5, 0.5}), 0);
}

// Contexts lying inside one schedule segment, labeled with its class.
struct Labeled {
  Tensor rows;
  int label;
};

std::vector<Labeled> toy_contexts(std::size_t episodes, std::uint64_t seed) {
  const auto spec = envs::env_spec("PointDirGoal");
  std::vector<Labeled> out;
  for (std::size_t e = 0; e < episodes; ++e) {
    const auto schedule = envs::sample_task_schedule(spec, seed + e);
    envs::RandomAgent agent(2, seed + 1000 + e);
    const auto tr = envs::rollout(spec, agent, schedule);
    for (int t = 15; t < spec.episode_length; t += 4) {
      if (schedule.class_at(t - 15) != schedule.class_at(t)) continue;
      const auto ctx = ContextWindow::build(std::span(tr).subspan(t - 15, 16), 16, spec, {2, 2}, nullptr);
      out.push_back({ctx.rows(), schedule.class_at(t)});
    }
  }
  return out;
}

TEST(Recognize, SupervisedTrainingOnTwoClassToyEnv) {
  Rng rng(6);
  RecognitionNetwork net(kLayout.width(), 2, small_recognition(), rng);
  ParamList params;
  net.append_params(params);
  Adam opt(tensors_of(params), AdamOptions{3e-3});
  const auto train = toy_contexts(60, 100);
  const auto held_out = toy_contexts(20, 5000);
  for (int step = 0; step < 300; ++step) {
    std::vector<Tensor> probs;
    std::vector<int> labels;
    for (int b = 0; b < 16; ++b) {
      const auto& ex = train[rng.index(train.size())];
      probs.push_back(net.probabilities(ex.rows));
      labels.push_back(ex.label);
    }
    opt.zero_grad();
    backward(recognition_loss(ops::concat_rows(probs), labels));
    opt.step();
  }
  std::size_t correct = 0;
  for (const auto& ex : held_out) correct += net.recognize(ContextWindow::from_rows(ex.rows)).k == ex.label;
  EXPECT_GE(static_cast<double>(correct) / held_out.size(), 0.90);
}

TEST(RecognitionLoss, Examples) {
  const std::vector<int> labels = {1};
  EXPECT_EQ(recognition_loss(Tensor::matrix(1, 2, {0.0, 1.0}), labels).item(), 0.0);
  EXPECT_DOUBLE_EQ(recognition_loss(Tensor::matrix(1, 2, {0.5, 0.5}), labels).item(), 0.25);
  EXPECT_THROW(recognition_loss(Tensor::matrix(1, 2, {0.5, 0.5}), std::vector<int>{2}), ContractError);
}

TEST(RecognitionLoss, GradientMatchesFiniteDifferences) {
  Rng rng(7);
  const auto logits = random_tensor({4, 3}, rng);
  const std::vector<int> labels = {0, 2, 1, 1};
  EXPECT_LT(check_gradients([&] { return recognition_loss(ops::softmax_rows(logits), labels); }, {logits}).max_rel_error,
            1e-4);
  EXPECT_LT(
      check_gradients([&] { return recognition_cross_entropy(ops::softmax_rows(logits), labels); }, {logits}).max_rel_error,
      1e-4);
}

TEST(Encode, ZeroNoiseReturnsMeanAndIsDeterministic) {
  Rng rng(8);
  GmmEncoder enc(kLayout.width(), 3, small_encoder(), rng);
  const auto feats = enc.features(ContextBatch::stack({random_rows(4, rng)}));
  const auto r = encode(enc, feats, 2, Tensor({1, 3}));
  EXPECT_EQ(r.z.to_vector(), r.mu.to_vector());
  EXPECT_EQ(r.embedding.source_component, 2);
  const auto noise = Tensor::matrix(1, 3, {0.3, -1.0, 2.0});
  EXPECT_EQ(encode(enc, feats, 1, noise).z.to_vector(), encode(enc, feats, 1, noise).z.to_vector());
  EXPECT_THROW(encode(enc, feats, 3, noise), ContractError);
  EXPECT_THROW(encode(enc, feats, -1, noise), ContractError);
}

TEST(Encode, SampleMomentsMatchPosterior) {
  Rng rng(9);
  GmmEncoder enc(kLayout.width(), 2, small_encoder(), rng);
  const auto feats = enc.features(ContextBatch::stack({random_rows(6, rng)}));
  const auto post = enc.posterior(feats, 1);
  const std::size_t n = 100000;
  std::vector<double> sum(3), sq(3);
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = encode(enc, feats, 1, Tensor({1, 3}, rng.normal_vector(3))).embedding.z;
    for (std::size_t d = 0; d < 3; ++d) {
      sum[d] += z[d];
      sq[d] += z[d] * z[d];
    }
  }
  for (std::size_t d = 0; d < 3; ++d) {
    const double mean = sum[d] / n, sd = std::sqrt(sq[d] / n - mean * mean);
    EXPECT_NEAR(mean, post.mu[d], 0.02 * std::max(std::abs(post.mu[d]), post.sigma[d]));
    EXPECT_NEAR(sd, post.sigma[d], 0.02 * post.sigma[d]);
  }
}

TEST(GmmEncoder, SigmaClampedAndPriorsDistinct) {
  Rng rng(10);
  GmmEncoder enc(kLayout.width(), 3, small_encoder(), rng);
  for (auto& trunk : enc.trunks()) {
    for (auto& v : trunk.layers().back().bias.mutable_data()) v = 50.0;
  }
  const auto post = enc.posterior(enc.features(ContextBatch::stack({random_rows(3, rng)})), 0);
  for (double s : post.sigma.data()) EXPECT_NEAR(s, kSigmaMax, 1e-12);
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b) EXPECT_NE(enc.prior_mean(a), enc.prior_mean(b));
  EXPECT_EQ(enc.prior_mean(1), (std::vector<double>{0.0, 2.0, 0.0}));
  EXPECT_EQ(enc.prior_variance(1), (std::vector<double>{1.0, 1.0, 1.0}));
}

TEST(GmmEncoder, GradientsFlowThroughMeanAndSigma) {
  Rng rng(11);
  GmmEncoder enc(kLayout.width(), 2, small_encoder(), rng);
  const auto batch = ContextBatch::stack({random_rows(3, rng), random_rows(2, rng)});
  const auto noise = random_tensor({2, 3}, rng, -1, 1, false);
  ParamList params;
  enc.append_params(params);
  const auto loss = [&] { return testing::weighted_sum(encode(enc, enc.features(batch), 0, noise).z); };
  EXPECT_LT(check_gradients(loss, tensors_of(params)).max_rel_error, 1e-4);
}

TEST(ReconstructionLoss, Examples) {
  Rng rng(12);
  MdpDecoder dec(kLayout, 2, 4, rng);
  for (auto* head : {&dec.state_head(), &dec.reward_head()}) {
    for (auto& layer : head->layers()) {
      for (auto& v : layer.weight.mutable_data()) v = 0.0;
    }
  }
  // s=(0,0), a=(0,0), r=2, s'=(1,0).
  const auto rows = Tensor::matrix(1, 7, {0, 0, 0, 0, 2, 1, 0});
  EXPECT_DOUBLE_EQ(reconstruction_loss(dec, rows, Tensor({1, 2})).item(), 5.0);
  const auto zero_rows = Tensor({1, 7});
  EXPECT_EQ(reconstruction_loss(dec, zero_rows, Tensor({1, 2})).item(), 0.0);
  EXPECT_THROW(reconstruction_loss(dec, rows, Tensor({1, 3})), DimensionError);
}

TEST(ReconstructionLoss, FullPipelineGradient) {
  Rng rng(13);
  GmmEncoder enc(kLayout.width(), 2, small_encoder(), rng);
  MdpDecoder dec(kLayout, 3, 6, rng);
  const auto batch = ContextBatch::stack({random_rows(3, rng), random_rows(4, rng)});
  const auto noise = random_tensor({2, 3}, rng, -1, 1, false);
  ParamList params;
  enc.append_params(params);
  dec.append_params(params);
  const auto loss = [&] {
    const auto r = encode(enc, enc.features(batch), 1, noise);
    return reconstruction_loss(dec, batch.rows, ops::matmul(batch.expand, r.z));
  };
  EXPECT_LT(check_gradients(loss, tensors_of(params)).max_rel_error, 1e-4);
}

TEST(RegularizationLoss, Examples) {
  Rng rng(14);
  EncoderOptions o = small_encoder();
  o.latent_dim = 1;
  GmmEncoder enc(kLayout.width(), 1, o, rng);
  // Component 0 prior is N(2, 1).
  const auto at_prior = regularization_loss(enc, {{0, Tensor::matrix(2, 1, {2, 2}), Tensor::matrix(2, 1, {1, 1})}});
  EXPECT_NEAR(at_prior.item(), 0.0, 1e-12);
  const auto shifted = regularization_loss(enc, {{0, Tensor::matrix(1, 1, {3}), Tensor::matrix(1, 1, {1})}});
  EXPECT_NEAR(shifted.item(), 0.5, 1e-12);
  EXPECT_EQ(regularization_loss(enc, {}).item(), 0.0);
}

TEST(RegularizationLossProperty, NonnegativeAndMatchesMonteCarlo) {
  Rng rng(15);
  GmmEncoder enc(kLayout.width(), 2, small_encoder(), rng);
  for (int trial = 0; trial < 5; ++trial) {
    const auto mu = random_tensor({1, 3}, rng, -1, 1, false), sigma = random_tensor({1, 3}, rng, 0.6, 1.4, false);
    const int k = static_cast<int>(rng.index(2));
    const double kl = regularization_loss(enc, {{k, mu, sigma}}).item();
    EXPECT_GE(kl, 0.0);
    const auto& pm = enc.prior_mean(k);
    const auto& pv = enc.prior_variance(k);
    double mc = 0.0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < 3; ++d) {
        const double x = mu[d] + sigma[d] * rng.normal();
        mc += -std::log(sigma[d]) - 0.5 * std::pow((x - mu[d]) / sigma[d], 2) + 0.5 * std::log(pv[d]) +
              0.5 * (x - pm[d]) * (x - pm[d]) / pv[d];
      }
    }
    EXPECT_NEAR(kl, mc / n, 5e-3);
  }
}

TEST(InferenceLoss, Examples) {
  const auto r = Tensor::scalar(2.0, true), g = Tensor::scalar(3.0, true);
  EXPECT_EQ(inference_loss(r, g, 0.0).item(), 2.0);
  EXPECT_NEAR(inference_loss(r, g, 0.1).item(), 2.3, 1e-15);
  backward(inference_loss(r, g, 0.1));
  EXPECT_DOUBLE_EQ(r.grad()[0], 1.0);
  EXPECT_DOUBLE_EQ(g.grad()[0], 0.1);
  EXPECT_THROW(inference_loss(r, g, -1.0), ContractError);
}

TEST(VaeLoss, EveryComponentContributes) {
  Rng rng(16);
  GmmEncoder enc(kLayout.width(), 3, small_encoder(), rng);
  MdpDecoder dec(kLayout, 3, 6, rng);
  const auto batch = ContextBatch::stack({random_rows(3, rng), random_rows(5, rng)});
  Rng noise(1);
  const auto loss = vae_loss(enc, dec, batch, 0.1, noise);
  EXPECT_NEAR(loss.total.item(), loss.recons + 0.1 * loss.regula, 1e-9);
  backward(loss.total);
  for (const auto& trunk : enc.trunks()) EXPECT_TRUE(trunk.layers().front().weight.has_grad());
}

TEST(ProductOfGaussians, Examples) {
  const GaussianFactor f{{0.7, -1.0}, {0.5, 2.0}};
  const auto one = posterior_baseline_product({f});
  EXPECT_EQ(one.mean, f.mean);
  EXPECT_EQ(one.variance, f.variance);
  const auto two = posterior_baseline_product({{{0.0}, {2.0}}, {{0.0}, {2.0}}});
  EXPECT_DOUBLE_EQ(two.mean[0], 0.0);
  EXPECT_DOUBLE_EQ(two.variance[0], 1.0);
}

TEST(ProductOfGaussians, MatchesGridOracle) {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<GaussianFactor> factors;
    const std::size_t n = 1 + rng.index(4);
    for (std::size_t i = 0; i < n; ++i) factors.push_back({{rng.uniform(-2, 2)}, {rng.uniform(0.3, 3)}});
    const auto prod = posterior_baseline_product(factors);
    // Pointwise product on a grid, renormalized by the trapezoid rule.
    const double lo = -12.0, hi = 12.0;
    const int points = 24001;
    const double h = (hi - lo) / (points - 1);
    std::vector<double> dens(points);
    double z = 0.0;
    for (int i = 0; i < points; ++i) {
      const double x = lo + i * h;
      double log_p = 0.0;
      for (const auto& f : factors) log_p += -0.5 * (x - f.mean[0]) * (x - f.mean[0]) / f.variance[0];
      dens[i] = std::exp(log_p);
      z += (i == 0 || i == points - 1 ? 0.5 : 1.0) * dens[i] * h;
    }
    double sup = 0.0;
    for (int i = 0; i < points; ++i) {
      const double x = lo + i * h;
      const double closed = std::exp(-0.5 * (x - prod.mean[0]) * (x - prod.mean[0]) / prod.variance[0]) /
                            std::sqrt(2 * M_PI * prod.variance[0]);
      sup = std::max(sup, std::abs(dens[i] / z - closed));
    }
    EXPECT_LT(sup, 1e-6);
  }
}

TEST(ProductEncoder, SingleComponentPosterior) {
  Rng rng(18);
  ProductEncoder enc(kLayout.width(), small_encoder(), rng);
  EXPECT_EQ(enc.components(), 1u);
  const auto batch = ContextBatch::stack({random_rows(4, rng)});
  const auto post = enc.posterior(enc.features(batch), 0);
  for (double s : post.sigma.data()) EXPECT_GT(s, 0.0);
  EXPECT_EQ(enc.prior_mean(0), (std::vector<double>{0.0, 0.0, 0.0}));
}

}  // namespace
}  // namespace timrl::inference
