#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mtlchoice/error.hpp"
#include "mtlchoice/finite_diff.hpp"
#include "mtlchoice/linalg.hpp"
#include "mtlchoice/rng.hpp"

using namespace mtlchoice;

namespace {

DenseLayer random_layer(Index in, Index out, Activation a, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  DenseLayer l;
  l.weights = Matrix::NullaryExpr(out, in, [&] { return n(rng); });
  l.bias = Vector::NullaryExpr(out, [&] { return n(rng); });
  l.activation = a;
  return l;
}

// Plain loops, no Eigen products.
Vector naive_forward(const Vector& x, const LayerStack& layers) {
  std::vector<double> cur(x.data(), x.data() + x.size());
  for (const auto& l : layers) {
    std::vector<double> next(static_cast<std::size_t>(l.out_dim()));
    for (Index r = 0; r < l.out_dim(); ++r) {
      double s = l.bias[r];
      for (Index c = 0; c < l.in_dim(); ++c) s += l.weights(r, c) * cur[static_cast<std::size_t>(c)];
      next[static_cast<std::size_t>(r)] = l.activation == Activation::ReLU ? std::max(s, 0.0) : s;
    }
    cur = next;
  }
  return Eigen::Map<Vector>(cur.data(), static_cast<Index>(cur.size()));
}

}  // namespace

TEST(ForwardStack, ReluClipsNegative) {
  DenseLayer l;
  l.weights.resize(2, 2);
  l.weights << 1, 0, 0, -1;
  l.bias = Vector::Zero(2);
  l.activation = Activation::ReLU;
  const Vector y = forward_stack(Vector(Vector::Ones(2)), LayerStack{l});
  EXPECT_DOUBLE_EQ(y[0], 1.0);
  EXPECT_DOUBLE_EQ(y[1], 0.0);
}

TEST(ForwardStack, ZeroInputZeroBiasGivesZero) {
  Rng rng(1);
  LayerStack layers{random_layer(4, 6, Activation::ReLU, rng), random_layer(6, 3, Activation::Linear, rng)};
  for (auto& l : layers) l.bias.setZero();
  EXPECT_TRUE(forward_stack(Vector(Vector::Zero(4)), layers).isZero(0.0));
}

TEST(ForwardStack, MatchesNaiveEvaluation) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    LayerStack layers{random_layer(5, 7, Activation::ReLU, rng), random_layer(7, 4, Activation::ReLU, rng),
                      random_layer(4, 3, Activation::Linear, rng)};
    std::normal_distribution<double> n;
    const Vector x = Vector::NullaryExpr(5, [&] { return n(rng); });
    EXPECT_LT((forward_stack(x, layers) - naive_forward(x, layers)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ForwardStack, BatchedMatchesPerColumn) {
  Rng rng(3);
  LayerStack layers{random_layer(3, 5, Activation::ReLU, rng), random_layer(5, 2, Activation::Linear, rng)};
  const Matrix X = Matrix::Random(3, 9);
  const Matrix Y = forward_stack(X, layers);
  for (Index c = 0; c < X.cols(); ++c) {
    EXPECT_LT((Y.col(c) - forward_stack(Vector(X.col(c)), layers)).norm(), 1e-13);
  }
}

TEST(ForwardStack, PositivelyHomogeneousWithoutBias) {
  Rng rng(4);
  LayerStack layers{random_layer(4, 8, Activation::ReLU, rng), random_layer(8, 8, Activation::ReLU, rng)};
  for (auto& l : layers) l.bias.setZero();
  const Vector x = Vector::Random(4);
  for (double a : {0.1, 2.0, 37.5}) {
    EXPECT_LT((forward_stack(Vector(a * x), layers) - a * forward_stack(x, layers)).norm(), 1e-10);
  }
}

TEST(ForwardStack, ShapeErrorNamesLayer) {
  Rng rng(5);
  LayerStack layers{random_layer(3, 4, Activation::ReLU, rng), random_layer(5, 2, Activation::Linear, rng)};
  try {
    forward_stack(Vector(Vector::Zero(3)), layers);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_EQ(e.layer(), 1);
  }
  try {
    forward_stack(Vector(Vector::Zero(2)), layers);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_EQ(e.layer(), 0);
  }
}

TEST(Softmax, UniformOnEqualLogits) {
  const Vector p = softmax_t(Vector::Zero(5), 1.0);
  for (Index k = 0; k < 5; ++k) EXPECT_NEAR(p[k], 0.2, 1e-15);
}

TEST(Softmax, TwoLogitsMatchClosedForm) {
  Vector v(2);
  v << 1, 2;
  const Vector p = softmax_t(v, 1.0);
  const double e = std::exp(1.0);
  EXPECT_NEAR(p[0], 1.0 / (1.0 + e), 1e-15);
  EXPECT_NEAR(p[1], e / (1.0 + e), 1e-15);
  EXPECT_NEAR(p[0], 0.2689, 1e-4);
}

TEST(Softmax, LargeTemperatureFlattensButKeepsOrder) {
  Vector v(2);
  v << 1, 2;
  const Vector p = softmax_t(v, 1e6);
  EXPECT_NEAR(p[0], 0.5, 1e-6);
  EXPECT_EQ(argmax(p), 1);
}

TEST(Softmax, SimplexAndOrderOverTemperatureRange) {
  Rng rng(6);
  std::normal_distribution<double> n(0.0, 5.0);
  std::uniform_real_distribution<double> logt(std::log(1e-3), std::log(1e3));
  for (int trial = 0; trial < 500; ++trial) {
    const Vector v = Vector::NullaryExpr(6, [&] { return n(rng); });
    const double t = std::exp(logt(rng));
    const Vector p = softmax_t(v, t);
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    EXPECT_GE(p.minCoeff(), 0.0);
    EXPECT_LE(p.maxCoeff(), 1.0);
    EXPECT_EQ(argmax(p), argmax(v));
  }
}

TEST(Softmax, OverflowSafe) {
  Vector v(3);
  v << 1000, 999, -1000;
  const Vector p = softmax_t(v, 1.0);
  EXPECT_TRUE(p.allFinite());
  EXPECT_NEAR(p[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-12);
}

TEST(Softmax, RejectsBadInput) {
  EXPECT_THROW(softmax_t(Vector::Zero(3), 0.0), DomainError);
  EXPECT_THROW(softmax_t(Vector::Zero(3), -1.0), DomainError);
  Vector v = Vector::Zero(3);
  v[1] = std::nan("");
  EXPECT_THROW(softmax_t(v, 1.0), InputError);
  v[1] = INFINITY;
  EXPECT_THROW(softmax_t(v, 1.0), InputError);
}

TEST(CrossEntropy, PerfectPredictionIsZero) {
  Vector p(3), y(3);
  p << 1, 0, 0;
  y << 1, 0, 0;
  EXPECT_NEAR(cross_entropy(p, y), 0.0, 1e-11);
}

TEST(CrossEntropy, UniformIsLogK) {
  const Vector p = Vector::Constant(5, 0.2);
  for (Index k = 0; k < 5; ++k) EXPECT_NEAR(cross_entropy(p, k), std::log(5.0), 1e-12);
  EXPECT_NEAR(std::log(5.0), 1.6094, 1e-4);
}

TEST(CrossEntropy, MatchesDirectLog) {
  Rng rng(7);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Vector p = Vector::NullaryExpr(4, [&] { return u(rng); });
    p /= p.sum();
    const Index label = trial % 4;
    Vector y = Vector::Zero(4);
    y[label] = 1.0;
    EXPECT_NEAR(cross_entropy(p, y), -std::log(p[label]), 1e-14);
    EXPECT_DOUBLE_EQ(cross_entropy(p, y), cross_entropy(p, label));
  }
}

TEST(CrossEntropy, ClampsZeroProbability) {
  Vector p(2);
  p << 1, 0;
  EXPECT_NEAR(cross_entropy(p, Index{1}), -std::log(kProbabilityFloor), 1e-9);
}

TEST(CrossEntropy, RejectsNonOneHot) {
  const Vector p = Vector::Constant(3, 1.0 / 3);
  Vector y(3);
  y << 1, 1, 0;
  EXPECT_THROW(cross_entropy(p, y), InputError);
  y << 0.5, 0.5, 0;
  EXPECT_THROW(cross_entropy(p, y), InputError);
}

TEST(Argmax, TiesGoToLowestIndex) {
  Vector v(4);
  v << 0.1, 0.4, 0.4, 0.1;
  EXPECT_EQ(argmax(v), 1);
  EXPECT_EQ(argmax(Vector::Constant(5, 0.2)), 0);
}

TEST(BackwardCached, InputGradientMatchesFiniteDifferences) {
  Rng rng(8);
  LayerStack layers{random_layer(4, 6, Activation::ReLU, rng), random_layer(6, 3, Activation::Linear, rng)};
  const Vector x = Vector::Random(4);
  const Vector w = Vector::Random(3);
  StackCache cache;
  forward_cached(Matrix(x), layers, cache);
  const Vector g = backward_cached(layers, cache, Matrix(w), {}).col(0);
  const Vector fd = finite_diff_grad([&](const Vector& z) { return w.dot(forward_stack(z, layers)); }, x, 1e-6);
  EXPECT_LT((g - fd).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(FiniteDiff, Quadratic) {
  Vector x(1);
  x << 3.0;
  const Vector g = finite_diff_grad([](const Vector& z) { return z[0] * z[0]; }, x, 1e-5);
  EXPECT_NEAR(g[0], 6.0, 1e-6);
}

TEST(FiniteDiff, ConstantHasZeroGradient) {
  const Vector g = finite_diff_grad([](const Vector&) { return 4.2; }, Vector::Random(5), 1e-5);
  EXPECT_TRUE(g.isZero(0.0));
}

TEST(FiniteDiff, RejectsNonPositiveStep) {
  EXPECT_THROW(finite_diff_grad([](const Vector&) { return 0.0; }, Vector::Zero(1), 0.0), DomainError);
}

TEST(Rng, DerivedSeedsDiffer) {
  EXPECT_NE(derive_seed(1, 1), derive_seed(1, 2));
  EXPECT_NE(derive_seed(1, 1), derive_seed(2, 1));
  EXPECT_EQ(derive_seed(9, 3), derive_seed(9, 3));
}

TEST(Rng, GumbelMoments) {
  Rng rng(11);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double g = draw_gumbel(rng);
    sum += g;
    sq += g * g;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  // Euler-Mascheroni and pi^2/6
  EXPECT_NEAR(mean, 0.5772156649, 0.01);
  EXPECT_NEAR(var, M_PI * M_PI / 6.0, 0.03);
}
