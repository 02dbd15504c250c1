#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "feather/attention.hpp"
#include "feather/attention_graph.hpp"
#include "feather/error.hpp"
#include "gradcheck.hpp"

namespace feather {
namespace {

AttentionProjection<double> random_projection(std::size_t outputs, std::size_t query_dim,
                                              std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  AttentionProjection<double> p;
  p.outputs = outputs;
  p.query_dim = query_dim;
  p.weight.resize(outputs * query_dim);
  p.bias.resize(outputs);
  for (double& w : p.weight) w = u(rng);
  for (double& b : p.bias) b = u(rng);
  return p;
}

std::vector<double> random_query(std::size_t n, std::mt19937_64& rng, double scale = 3.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> q(n);
  for (double& v : q) v = u(rng);
  return q;
}

TEST(GaussianAttention, PeakIsExactlyOne) {
  EXPECT_EQ(gaussian_weight(3.0, 3.0, 1.0), 1.0);
  const auto a = gaussian_alignment(3.0, 1.0, 5);
  EXPECT_EQ(a[2], 1.0);  // j = 3
}

TEST(GaussianAttention, OneStepAwayIsExpMinusHalf) {
  const auto a = gaussian_alignment(3.0, 1.0, 5);
  EXPECT_NEAR(a[3], std::exp(-0.5), 1e-15);
  EXPECT_NEAR(a[3], 0.606531, 1e-6);
}

TEST(GaussianAttention, SymmetricAboutMu) {
  const auto a = gaussian_alignment(3.0, 1.0, 5);
  EXPECT_EQ(a[1], a[3]);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> sig(0.1, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double mu = static_cast<double>(trial % 30 + 5);
    const double s = sig(rng);
    for (int t = 1; t <= 4; ++t) {
      EXPECT_LT(std::fabs(gaussian_weight(mu + t, mu, s) - gaussian_weight(mu - t, mu, s)), 1e-6);
    }
  }
}

TEST(GaussianAttention, ZeroDeltaHatAdvancesByLn2) {
  AttentionProjection<double> p{2, 1, {0.0, 0.0}, {0.0, 0.0}};
  const double q[] = {0.7};
  const auto r = gaussian_attend<double>(p, initial_gaussian_state<double>({}), q, 4);
  EXPECT_NEAR(r.state.delta, std::log(2.0), 1e-15);
  EXPECT_NEAR(r.state.mu, 0.693147, 1e-6);
}

TEST(GaussianAttention, Errors) {
  std::mt19937_64 rng(1);
  const auto p = random_projection(2, 3, rng);
  const auto s = initial_gaussian_state<double>({});
  const double q[] = {0.1, 0.2, 0.3};
  EXPECT_THROW(gaussian_attend<double>(p, s, q, 0), ContractError);
  const double bad[] = {0.1, std::numeric_limits<double>::quiet_NaN(), 0.3};
  EXPECT_THROW(gaussian_attend<double>(p, s, bad, 3), NumericError);
  const double inf[] = {std::numeric_limits<double>::infinity(), 0.0, 0.0};
  EXPECT_THROW(gaussian_attend<double>(p, s, inf, 3), NumericError);
}

TEST(GaussianAttention, MonotoneOver1000RandomSteps) {
  std::mt19937_64 rng(7);
  const auto p = random_projection(2, 8, rng, 2.0);
  auto s = initial_gaussian_state<double>({});
  for (int i = 0; i < 1000; ++i) {
    const auto q = random_query(8, rng);
    const auto r = gaussian_attend<double>(p, s, q, 10);
    ASSERT_GT(r.state.mu, s.mu);
    ASSERT_GT(r.state.delta, 0.0);
    ASSERT_GT(r.state.sigma, 0.0);
    ASSERT_EQ(r.state.mu, s.mu + r.state.delta);
    ASSERT_EQ(r.state.step, s.step + 1);
    s = r.state;
  }
}

TEST(GaussianAttention, WeightsBoundedAndPeakNearestMu) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> mu_d(0.0, 12.0), sig_d(0.3, 4.0);
  for (int trial = 0; trial < 500; ++trial) {
    const double mu = mu_d(rng), sigma = sig_d(rng);
    const auto a = gaussian_alignment(mu, sigma, 10);
    std::size_t best = 0;
    for (std::size_t j = 0; j < a.size(); ++j) {
      ASSERT_GT(a[j], 0.0);
      ASSERT_LE(a[j], 1.0);
      if (a[j] > a[best]) best = j;
      const double position = static_cast<double>(j + 1);
      if (a[j] == 1.0) {
        ASSERT_EQ(position, mu);
      }
    }
    const double nearest = std::clamp(std::round(mu), 1.0, 10.0);
    EXPECT_EQ(static_cast<double>(best + 1), nearest) << "mu=" << mu;
  }
}

TEST(GmmAttention, SingleComponentValue) {
  GmmAttentionState<double> s;
  s.mu = {3.0};
  s.sigma = {1.0};
  s.omega = {1.0};
  s.delta = {1.0};
  s.normalizer = {std::sqrt(2.0 * std::numbers::pi)};
  std::vector<double> a(5);
  gmm_alignment<double>(s, a);
  EXPECT_NEAR(a[2], 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(a[2], 0.398942, 1e-6);
}

TEST(GmmAttention, DefaultBiasesGiveDeltaOneSigmaTen) {
  AttentionConfig cfg;
  cfg.mechanism = Mechanism::kGmmV2b;
  EXPECT_NEAR(softplus(cfg.delta_bias), 1.0, 1e-12);
  EXPECT_NEAR(softplus(cfg.sigma_bias), 10.0, 1e-12);
  AttentionProjection<double> zero{15, 2, std::vector<double>(30, 0.0), std::vector<double>(15, 0.0)};
  const double q[] = {0.0, 0.0};
  const auto r = gmmv2b_attend<double>(zero, cfg, initial_gmm_state<double>(cfg), q, 4);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_NEAR(r.state.omega[k], 0.2, 1e-15);
    EXPECT_NEAR(r.state.delta[k], 1.0, 1e-12);
    EXPECT_NEAR(r.state.sigma[k], 10.0, 1e-12);
    EXPECT_NEAR(r.state.normalizer[k], std::sqrt(2.0 * std::numbers::pi * 100.0), 1e-10);
  }
}

TEST(GmmAttention, InitialState) {
  AttentionConfig cfg;
  cfg.mechanism = Mechanism::kGmmV2b;
  const auto s = initial_gmm_state<double>(cfg);
  EXPECT_EQ(s.components(), 5u);
  EXPECT_EQ(s.step, 0);
  for (double w : s.omega) EXPECT_EQ(w, 0.2);
  for (double m : s.mu) EXPECT_EQ(m, 0.0);
  const auto g = initial_gaussian_state<double>({});
  EXPECT_EQ(g.mu, 0.0);
  EXPECT_EQ(g.step, 0);
  cfg.components = 0;
  EXPECT_THROW(initial_gmm_state<double>(cfg), ConfigError);
}

TEST(GmmAttention, PropertiesOverRandomRuns) {
  AttentionConfig cfg;
  cfg.mechanism = Mechanism::kGmmV2b;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    const auto p = random_projection(15, 6, rng, 2.0);
    auto s = initial_gmm_state<double>(cfg);
    for (int i = 0; i < 50; ++i) {
      const auto q = random_query(6, rng);
      const auto r = gmmv2b_attend<double>(p, cfg, s, q, 12);
      double total = 0.0;
      for (std::size_t k = 0; k < 5; ++k) {
        total += r.state.omega[k];
        ASSERT_GE(r.state.mu[k], s.mu[k]);
        ASSERT_GT(r.state.sigma[k], 0.0);
        ASSERT_GE(r.state.delta[k], 0.0);
        ASSERT_NEAR(r.state.normalizer[k], std::sqrt(2 * std::numbers::pi * r.state.sigma[k] * r.state.sigma[k]), 1e-12);
      }
      ASSERT_NEAR(total, 1.0, 1e-6);
      for (double a : r.alignment.weights) ASSERT_GE(a, 0.0);
      s = r.state;
    }
  }
}

TEST(GmmAttention, MonotonePerComponentOver1000Steps) {
  AttentionConfig cfg;
  cfg.mechanism = Mechanism::kGmmV2b;
  std::mt19937_64 rng(21);
  const auto p = random_projection(15, 6, rng, 3.0);
  auto s = initial_gmm_state<double>(cfg);
  for (int i = 0; i < 1000; ++i) {
    const auto r = gmmv2b_attend<double>(p, cfg, s, random_query(6, rng, 5.0), 8);
    for (std::size_t k = 0; k < 5; ++k) ASSERT_GE(r.state.mu[k], s.mu[k]);
    s = r.state;
  }
}

TEST(GmmAttention, SingleComponentIsScaledGaussian) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> mu_d(0.0, 10.0), sig_d(0.2, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    GmmAttentionState<double> s;
    const double mu = mu_d(rng), sigma = sig_d(rng);
    s.mu = {mu};
    s.sigma = {sigma};
    s.omega = {1.0};
    s.delta = {0.0};
    s.normalizer = {std::sqrt(2.0 * std::numbers::pi * sigma * sigma)};
    std::vector<double> a(10);
    gmm_alignment<double>(s, a);
    const auto g = gaussian_alignment(mu, sigma, 10);
    for (std::size_t j = 0; j < 10; ++j) ASSERT_NEAR(a[j], g[j] / s.normalizer[0], 1e-6);
  }
}

TEST(ContextVector, OneHotSelectsRow) {
  const std::vector<double> h = {1, 2, 3, 4, 5, 6, 7, 8, 9};  // J=3, D=3
  AlignmentVector<double> a{{0.0, 1.0, 0.0}, Mechanism::kGaussian, 1};
  EXPECT_EQ(context_vector<double>(a, h, 3), (std::vector<double>{4, 5, 6}));
  AlignmentVector<double> zero{{0.0, 0.0, 0.0}, Mechanism::kGaussian, 1};
  EXPECT_EQ(context_vector<double>(zero, h, 3), (std::vector<double>{0, 0, 0}));
}

TEST(ContextVector, MatchesBruteForceSum) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t length = 1 + trial % 9, dim = 1 + trial % 5;
    std::vector<double> alpha(length), h(length * dim);
    for (double& v : alpha) v = u(rng);
    for (double& v : h) v = u(rng);
    const auto c = context_vector<double>(AlignmentVector<double>{alpha, Mechanism::kGaussian, 1}, h, dim);
    for (std::size_t d = 0; d < dim; ++d) {
      long double expected = 0.0L;
      for (std::size_t j = 0; j < length; ++j) expected += static_cast<long double>(alpha[j]) * h[j * dim + d];
      EXPECT_NEAR(c[d], static_cast<double>(expected), 1e-6);
    }
  }
}

TEST(ContextVector, LengthMismatchIsDimensionError) {
  const std::vector<double> h(6, 1.0);
  AlignmentVector<double> a{{0.5, 0.5, 0.5}, Mechanism::kGaussian, 1};
  EXPECT_THROW(context_vector<double>(a, h, 3), DimensionError);
  Tape tape;
  EXPECT_THROW(graph::context_vector(tape.constant(Tensor(1, 3)), tape.constant(Tensor(2, 3))),
               DimensionError);
}

TEST(AttentionGraph, MatchesValueImplementation) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  // Gaussian
  {
    Tape tape;
    const double dh = u(rng), sh = u(rng);
    GaussianAttentionState<double> prev;
    prev.mu = 1.25;
    GaussianAttentionState<double> next;
    std::vector<double> w(7);
    gaussian_step(prev, dh, sh, next, std::span<double>(w));
    const auto step = graph::gaussian_attend(tape.constant(Tensor::from_rows({{dh, sh}})),
                                             tape.constant(Tensor::scalar(1.25)), 7);
    EXPECT_NEAR(step.mu.item(), next.mu, 1e-14);
    EXPECT_NEAR(step.sigma.item(), next.sigma, 1e-14);
    for (std::size_t j = 0; j < 7; ++j) EXPECT_NEAR(step.alignment.value()[j], w[j], 1e-14);
  }
  // GMMv2b
  {
    AttentionConfig cfg;
    cfg.mechanism = Mechanism::kGmmV2b;
    cfg.components = 3;
    Tape tape;
    std::vector<double> hat(9);
    for (double& v : hat) v = u(rng);
    GmmAttentionState<double> prev = initial_gmm_state<double>(cfg);
    prev.mu = {0.5, 1.0, 2.0};
    GmmAttentionState<double> next;
    std::vector<double> w(6);
    gmm_step<double>(cfg, prev, hat, next, std::span<double>(w));
    const auto step = graph::gmmv2b_attend(cfg, tape.constant(Tensor::row(hat)),
                                           tape.constant(Tensor::row(prev.mu)), 6);
    for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(step.alignment.value()[j], w[j], 1e-14);
    EXPECT_NEAR(step.mean_position.item(), next.mean_position(), 1e-14);
  }
}

TEST(AttentionGraph, GradientOfAlignmentWrtQuery) {
  // Query -> projection -> attention -> scalar, differentiated end to end.
  std::mt19937_64 rng(30);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto result = testing::check_gradients(
        [](Tape&, const std::vector<Var>& v) {
          using namespace ops;
          const Var hat = add(linear(v[0], v[1]), v[2]);
          const auto step = graph::gaussian_attend(hat, v[3], 5);
          return sum(square(step.alignment));
        },
        {testing::random_tensor(1, 4, rng), testing::random_tensor(2, 4, rng),
         testing::random_tensor(1, 2, rng), testing::random_tensor(1, 1, rng, 0.0, 3.0)});
    EXPECT_LT(result.max_relative_error, 1e-4);
  }
}

TEST(Mechanism, ParseAndPrint) {
  EXPECT_EQ(parse_mechanism("gaussian"), Mechanism::kGaussian);
  EXPECT_EQ(parse_mechanism("gmmv2b"), Mechanism::kGmmV2b);
  EXPECT_EQ(to_string(Mechanism::kGmmV2b), "gmmv2b");
  EXPECT_THROW(parse_mechanism("location"), ConfigError);
}

}  // namespace
}  // namespace feather
