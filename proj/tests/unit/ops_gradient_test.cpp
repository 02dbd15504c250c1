#include <random>
#include <string>

#include <gtest/gtest.h>

#include "feather/attention_graph.hpp"
#include "feather/ops.hpp"
#include "gradcheck.hpp"

namespace feather {
namespace {

using namespace ops;
using testing::random_tensor;

struct Case {
  std::string name;
  // Builds the op output from leaf variables.
  std::function<Var(const std::vector<Var>&)> op;
  // Input shapes and sampling range.
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  double lo = -1.0;
  double hi = 1.0;
};

// Projects the op output onto fixed random weights so every element of the
// output contributes with a distinct coefficient.
double check_case(const Case& c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Tensor> inputs;
  for (auto [r, k] : c.shapes) inputs.push_back(random_tensor(r, k, rng, c.lo, c.hi));
  Tape probe;
  std::vector<Var> probe_vars;
  for (const Tensor& t : inputs) probe_vars.push_back(probe.constant(t));
  const Tensor out = c.op(probe_vars).value();
  const Tensor weights = random_tensor(out.rows(), out.cols(), rng);
  const auto result = testing::check_gradients(
      [&](Tape& tape, const std::vector<Var>& v) {
        return sum(mul(c.op(v), tape.constant(weights)));
      },
      inputs);
  return result.max_relative_error;
}

std::vector<Case> cases() {
  const int ids[] = {2, 0, 2, 1};
  const std::vector<int> id_vec(std::begin(ids), std::end(ids));
  return {
      {"matmul", [](auto& v) { return matmul(v[0], v[1]); }, {{3, 4}, {4, 2}}},
      {"linear", [](auto& v) { return linear(v[0], v[1]); }, {{2, 4}, {3, 4}}},
      {"transpose", [](auto& v) { return transpose(v[0]); }, {{2, 3}}},
      {"add", [](auto& v) { return add(v[0], v[1]); }, {{2, 3}, {2, 3}}},
      {"add_bias_row", [](auto& v) { return add(v[0], v[1]); }, {{3, 4}, {1, 4}}},
      {"add_scalar_left", [](auto& v) { return add(v[1], v[0]); }, {{3, 2}, {1, 1}}},
      {"sub", [](auto& v) { return sub(v[0], v[1]); }, {{2, 3}, {2, 3}}},
      {"sub_scalar", [](auto& v) { return sub(v[0], v[1]); }, {{2, 3}, {1, 1}}},
      {"mul", [](auto& v) { return mul(v[0], v[1]); }, {{2, 3}, {2, 3}}},
      {"mul_bias_row", [](auto& v) { return mul(v[0], v[1]); }, {{3, 2}, {1, 2}}},
      {"div", [](auto& v) { return div(v[0], v[1]); }, {{2, 3}, {2, 3}}, 0.5, 2.0},
      {"div_scalar", [](auto& v) { return div(v[0], v[1]); }, {{2, 3}, {1, 1}}, 0.5, 2.0},
      {"scale", [](auto& v) { return scale(v[0], -1.7); }, {{2, 2}}},
      {"add_scalar", [](auto& v) { return add_scalar(v[0], 0.3); }, {{2, 2}}},
      {"neg", [](auto& v) { return neg(v[0]); }, {{2, 2}}},
      {"square", [](auto& v) { return square(v[0]); }, {{2, 3}}},
      {"exp", [](auto& v) { return exp(v[0]); }, {{2, 3}}},
      {"log", [](auto& v) { return log(v[0]); }, {{2, 3}}, 0.2, 3.0},
      {"tanh", [](auto& v) { return tanh(v[0]); }, {{2, 3}}, -3.0, 3.0},
      {"sigmoid", [](auto& v) { return sigmoid(v[0]); }, {{2, 3}}, -4.0, 4.0},
      {"softplus", [](auto& v) { return softplus(v[0]); }, {{2, 3}}, -5.0, 5.0},
      {"abs", [](auto& v) { return abs(v[0]); }, {{2, 3}}},
      {"softmax_rows", [](auto& v) { return softmax(v[0], 1); }, {{3, 4}}, -2.0, 2.0},
      {"softmax_cols", [](auto& v) { return softmax(v[0], 0); }, {{3, 4}}, -2.0, 2.0},
      {"sum", [](auto& v) { return sum(v[0]); }, {{2, 3}}},
      {"mean", [](auto& v) { return mean(v[0]); }, {{2, 3}}},
      {"l1_loss", [](auto& v) { return l1_loss(v[0], v[1]); }, {{3, 3}, {3, 3}}},
      {"concat_rows",
       [](auto& v) {
         const Var parts[] = {v[0], v[1]};
         return concat(parts, 0);
       },
       {{1, 3}, {2, 3}}},
      {"concat_cols",
       [](auto& v) {
         const Var parts[] = {v[0], v[1]};
         return concat(parts, 1);
       },
       {{2, 1}, {2, 3}}},
      {"slice_rows", [](auto& v) { return slice_rows(v[0], 1, 3); }, {{4, 2}}},
      {"slice_cols", [](auto& v) { return slice_cols(v[0], 1, 3); }, {{2, 4}}},
      {"reshape", [](auto& v) { return reshape(v[0], 3, 2); }, {{2, 3}}},
      {"embedding", [id_vec](auto& v) { return embedding(v[0], id_vec); }, {{3, 2}}},
      {"gaussian_attention",
       [](auto& v) { return graph::gaussian_attend(v[0], v[1], 6).alignment; },
       {{1, 2}, {1, 1}}, -1.0, 2.0},
      {"gaussian_attention_mu",
       [](auto& v) { return graph::gaussian_attend(v[0], v[1], 4).mu; },
       {{1, 2}, {1, 1}}},
      {"gmmv2b_attention",
       [](auto& v) {
         AttentionConfig cfg;
         cfg.mechanism = Mechanism::kGmmV2b;
         cfg.components = 3;
         return graph::gmmv2b_attend(cfg, v[0], v[1], 6).alignment;
       },
       {{1, 9}, {1, 3}}, -1.0, 2.0},
      {"gmmv2b_mean_position",
       [](auto& v) {
         AttentionConfig cfg;
         cfg.mechanism = Mechanism::kGmmV2b;
         cfg.components = 2;
         return graph::gmmv2b_attend(cfg, v[0], v[1], 3).mean_position;
       },
       {{1, 6}, {1, 2}}},
      {"context_vector", [](auto& v) { return graph::context_vector(v[0], v[1]); },
       {{1, 4}, {4, 3}}},
  };
}

class OpGradient : public ::testing::TestWithParam<Case> {};

TEST_P(OpGradient, MatchesCentralDifferencesOver100Seeds) {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) worst = std::max(worst, check_case(GetParam(), seed));
  EXPECT_LT(worst, 1e-4) << GetParam().name;
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradient, ::testing::ValuesIn(cases()),
                         [](const auto& info) { return info.param.name; });

TEST(StopGradient, BlocksFlow) {
  Tape tape;
  const Var x = tape.variable(Tensor::scalar(2.0));
  const Gradients g = tape.backward(add(square(x), stop_gradient(square(x))));
  EXPECT_DOUBLE_EQ(g.of(x).item(), 4.0);
}

}  // namespace
}  // namespace feather
