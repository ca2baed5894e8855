#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"
#include "wavenet/error.hpp"
#include "wavenet/network.hpp"

using namespace wavenet;

namespace {

NetworkConfig tiny_config() {
  NetworkConfig c;
  c.paths = 1;
  c.levels = 3;
  c.fc_widths = {4};
  c.classes = 2;
  c.input = {8, 8, 1};
  c.dropout_keep = 1.0;
  return c;
}

Matrix random_batch(std::size_t batch, const InputShape& shape, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(batch, shape.size());
  for (double& v : m.values()) v = u(gen);
  return m;
}

// Weighted sum of logits, so every logit contributes a distinct upstream gradient.
double probe(const Matrix& logits, const Matrix& weights) { return dot(logits.values(), weights.values()); }

}  // namespace

TEST(ParamCount, MatchesShapeArithmetic) {
  const std::pair<std::size_t, std::size_t> rows[] = {
      {2, 66966}, {4, 132514}, {6, 198062}, {8, 263610}, {16, 525802}, {32, 1050186}};
  for (auto [paths, expected] : rows) {
    NetworkConfig c;
    c.paths = paths;
    EXPECT_EQ(param_count(c), expected) << paths << " paths";
    EXPECT_EQ(make_parameters(c).scalar_count(), expected);
  }
}

TEST(ParamCount, OnePathRow) {
  NetworkConfig c;
  c.paths = 1;
  EXPECT_EQ(param_count(c), 34192u);
  c.fc_widths = {32};
  EXPECT_EQ(param_count(c), 6u + (1024u * 32 + 32) + (32u * 10 + 10));
}

TEST(NetworkShape, FlattenedWidthAndLogits) {
  NetworkConfig c;
  EXPECT_EQ(c.flattened_width(), 8192u);
  const InputShape out = c.path_output_shape();
  EXPECT_EQ(out.height, 4u);
  EXPECT_EQ(out.width, 4u);
  EXPECT_EQ(out.channels, 64u);

  Rng rng(5);
  const ParamSet p = initialize_parameters(c, rng);
  std::mt19937_64 gen(1);
  const Matrix logits = network_forward(random_batch(3, c.input, gen), c, p, Mode::Eval, rng);
  EXPECT_EQ(logits.rows(), 3u);
  EXPECT_EQ(logits.cols(), 10u);
}

TEST(NetworkShape, ColourInputShapes) {
  NetworkConfig c;
  c.input = {32, 32, 3};
  EXPECT_EQ(c.path_output_shape().channels, 192u);
  EXPECT_EQ(c.flattened_width(), 8u * 4 * 4 * 192);
}

TEST(NetworkConfig, ValidationRejectsBadFields) {
  NetworkConfig c;
  c.paths = 0;
  EXPECT_THROW(c.validate(), Error);
  c = NetworkConfig{};
  c.classes = 1;
  EXPECT_THROW(c.validate(), Error);
  c = NetworkConfig{};
  c.dropout_keep = 0.0;
  EXPECT_THROW(c.validate(), Error);
  EXPECT_NO_THROW(NetworkConfig{}.validate());
}

TEST(Initialization, RangesAndLayout) {
  NetworkConfig c;
  Rng rng(11);
  const ParamSet p = initialize_parameters(c, rng);
  EXPECT_NO_THROW(check_parameters(c, p));
  for (std::size_t path = 0; path < c.paths; ++path)
    for (double v : p[wavelet_index(path)].values) {
      EXPECT_GE(v, 0.0);
      EXPECT_LT(v, 2.0 * std::numbers::pi);
    }
  const double limit = std::sqrt(6.0 / (8192.0 + 32.0));
  for (double v : p[weight_index(c, 0)].values) EXPECT_LE(std::abs(v), limit);
  for (double v : p[bias_index(c, 0)].values) EXPECT_EQ(v, 0.0);

  NetworkConfig other = c;
  other.paths = 4;
  EXPECT_THROW(check_parameters(other, p), Error);
}

TEST(NetworkForward, EvalIsDeterministic) {
  NetworkConfig c;
  c.paths = 2;
  Rng init(3);
  const ParamSet p = initialize_parameters(c, init);
  std::mt19937_64 gen(2);
  const Matrix x = random_batch(4, c.input, gen);
  Rng a(1), b(99);
  EXPECT_EQ(network_forward(x, c, p, Mode::Eval, a), network_forward(x, c, p, Mode::Eval, b));
}

TEST(NetworkForward, TrainWithKeepOneEqualsEval) {
  NetworkConfig c;
  c.paths = 2;
  c.dropout_keep = 1.0;
  Rng init(4);
  const ParamSet p = initialize_parameters(c, init);
  std::mt19937_64 gen(3);
  const Matrix x = random_batch(4, c.input, gen);
  Rng a(1), b(2);
  EXPECT_EQ(network_forward(x, c, p, Mode::Train, a), network_forward(x, c, p, Mode::Eval, b));
}

TEST(NetworkForward, ParameterMismatchIsConfigurationError) {
  NetworkConfig c = tiny_config();
  NetworkConfig other = c;
  other.fc_widths = {5};
  const ParamSet p = make_parameters(other);
  std::mt19937_64 gen(4);
  Rng rng(1);
  try {
    network_forward(random_batch(1, c.input, gen), c, p, Mode::Eval, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Configuration);
  }
}

TEST(NetworkBackward, EveryGradientMatchesFiniteDifferences) {
  const NetworkConfig c = tiny_config();
  Rng init(7);
  const ParamSet p = initialize_parameters(c, init);
  std::mt19937_64 gen(8);
  const Matrix x = random_batch(3, c.input, gen);
  Matrix w(3, c.classes);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : w.values()) v = u(gen);

  Rng rng(1);
  ForwardTrace trace;
  network_forward(x, c, p, Mode::Train, rng, &trace);
  const ParamSet g = network_backward(w, trace, c, p);
  ASSERT_TRUE(g.same_layout(p));

  std::size_t checked = 0;
  for (std::size_t a = 0; a < p.size(); ++a)
    for (std::size_t i = 0; i < p[a].values.size(); ++i) {
      const double fd = test::central_difference(
          [&](double v) {
            ParamSet q = p;
            q[a].values[i] = v;
            Rng r(1);
            return probe(network_forward(x, c, q, Mode::Eval, r), w);
          },
          p[a].values[i], 1e-5);
      EXPECT_LT(test::relative_error(g[a].values[i], fd, 1e-6), 1e-4) << p[a].name << "[" << i << "]";
      ++checked;
    }
  EXPECT_EQ(checked, param_count(c));
}

TEST(NetworkBackward, LinearInUpstreamGradient) {
  const NetworkConfig c = tiny_config();
  Rng init(9);
  const ParamSet p = initialize_parameters(c, init);
  std::mt19937_64 gen(10);
  const Matrix x = random_batch(2, c.input, gen);
  Rng rng(1);
  ForwardTrace trace;
  const Matrix logits = network_forward(x, c, p, Mode::Train, rng, &trace);

  Matrix g1(logits.rows(), logits.cols());
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : g1.values()) v = u(gen);
  Matrix g2 = g1;
  for (double& v : g2.values()) v *= 2.0;

  const ParamSet a = network_backward(g1, trace, c, p);
  const ParamSet b = network_backward(g2, trace, c, p);
  const ParamSet z = network_backward(Matrix(logits.rows(), logits.cols()), trace, c, p);
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t i = 0; i < a[k].values.size(); ++i) {
      EXPECT_NEAR(b[k].values[i], 2.0 * a[k].values[i], 1e-12 * (1.0 + std::abs(a[k].values[i])));
      EXPECT_EQ(z[k].values[i], 0.0);
    }
}

TEST(NetworkBackward, StaleOrMismatchedTraceIsStateError) {
  const NetworkConfig c = tiny_config();
  const ParamSet p = make_parameters(c);
  ForwardTrace empty;
  try {
    network_backward(Matrix(1, 2), empty, c, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::State);
  }

  std::mt19937_64 gen(11);
  Rng rng(1);
  ForwardTrace trace;
  network_forward(random_batch(2, c.input, gen), c, p, Mode::Train, rng, &trace);
  try {
    network_backward(Matrix(3, 2), trace, c, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::State);
  }
}

TEST(NetworkSymmetry, PermutingPathsWithWeightBlocksKeepsLogits) {
  NetworkConfig c;
  c.paths = 3;
  c.input = {8, 8, 1};
  c.fc_widths = {5, 4};
  c.classes = 3;
  Rng init(12);
  const ParamSet p = initialize_parameters(c, init);
  const std::size_t block = c.path_output_shape().size();
  const std::size_t in = c.flattened_width();
  const std::size_t perm[] = {2, 0, 1};

  ParamSet q = p;
  for (std::size_t k = 0; k < c.paths; ++k) q[wavelet_index(k)].values = p[wavelet_index(perm[k])].values;
  const auto& w = p[weight_index(c, 0)].values;
  auto& wq = q[weight_index(c, 0)].values;
  for (std::size_t o = 0; o < c.fc_widths[0]; ++o)
    for (std::size_t k = 0; k < c.paths; ++k)
      for (std::size_t j = 0; j < block; ++j) wq[o * in + k * block + j] = w[o * in + perm[k] * block + j];

  std::mt19937_64 gen(13);
  const Matrix x = random_batch(2, c.input, gen);
  Rng r1(1), r2(1);
  const Matrix a = network_forward(x, c, p, Mode::Eval, r1);
  const Matrix b = network_forward(x, c, q, Mode::Eval, r2);
  for (std::size_t i = 0; i < a.values().size(); ++i) EXPECT_NEAR(a.values()[i], b.values()[i], 1e-12);
}

TEST(PathDecomposition, LevelShapes) {
  NetworkConfig c;
  c.paths = 2;
  Rng init(14);
  const ParamSet p = initialize_parameters(c, init);
  std::vector<double> image(c.input.size(), 0.25);
  const auto levels = path_decomposition(image, c, p, 1);
  ASSERT_EQ(levels.size(), 3u);
  EXPECT_EQ(levels[0].depth(), 4u);
  EXPECT_EQ(levels[1].depth(), 16u);
  EXPECT_EQ(levels[2].depth(), 64u);
  EXPECT_EQ(levels[0].height(), 14u);
  EXPECT_EQ(levels[2].width(), 4u);
  EXPECT_THROW(path_decomposition(image, c, p, 2), Error);
}
