// Copyright 2026 The Vo-Ve Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vove/autodiff.hpp"

#include <cmath>
#include <functional>
#include <vector>

#include "gtest/gtest.h"
#include "vove/rng.hpp"

namespace vove {
namespace {

using ad::Batch;
using ad::Matrix;
using ad::Tape;
using ad::Vector;

Matrix random_matrix(Pcg32& rng, int rows, int cols, double lo = -1.0,
                     double hi = 1.0) {
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(lo, hi);
  return m;
}

// Keeps elements away from zero (for kinked ops like relu).
Matrix random_matrix_away_from_zero(Pcg32& rng, int rows, int cols) {
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double v = rng.uniform(0.2, 1.0);
      m(r, c) = rng.next_double() < 0.5 ? -v : v;
    }
  return m;
}

using BuildFn = std::function<int(Tape&, const std::vector<int>&)>;

double scalar_loss(const std::vector<Batch>& inputs, const BuildFn& build) {
  Tape t;
  std::vector<int> ids;
  for (const auto& in : inputs) ids.push_back(t.leaf(in, true));
  return t.value(build(t, ids))[0](0, 0);
}

// Central-difference check of every element of every input against the
// tape's analytic gradient.
void check_gradients(const std::vector<Batch>& inputs, const BuildFn& build,
                     double tol = 1e-6) {
  Tape t;
  std::vector<int> ids;
  for (const auto& in : inputs) ids.push_back(t.leaf(in, true));
  const int loss = build(t, ids);
  t.backward(loss);

  for (std::size_t li = 0; li < inputs.size(); ++li) {
    const Batch& analytic = t.grad(ids[li]);
    for (std::size_t item = 0; item < inputs[li].size(); ++item) {
      for (Eigen::Index r = 0; r < inputs[li][item].rows(); ++r) {
        for (Eigen::Index c = 0; c < inputs[li][item].cols(); ++c) {
          const double x0 = inputs[li][item](r, c);
          const double h = 1e-5 * std::max(1.0, std::fabs(x0));
          auto perturbed = inputs;
          perturbed[li][item](r, c) = x0 + h;
          const double fp = scalar_loss(perturbed, build);
          perturbed[li][item](r, c) = x0 - h;
          const double fm = scalar_loss(perturbed, build);
          const double fd = (fp - fm) / (2.0 * h);
          const double an = analytic[item](r, c);
          const double denom =
              std::max(1e-6, std::fabs(fd) + std::fabs(an));
          ASSERT_LT(std::fabs(fd - an) / denom, tol)
              << "input " << li << " item " << item << " (" << r << "," << c
              << "): fd=" << fd << " analytic=" << an;
        }
      }
    }
  }
}

// Random fixed weights make the upstream gradient non-uniform, which
// catches ops that mishandle the incoming gradient.
int weighted_sum(Tape& t, int x, Pcg32& rng) {
  const Batch& v = t.value(x);
  Batch w(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    w[i] = random_matrix(rng, static_cast<int>(v[i].rows()),
                         static_cast<int>(v[i].cols()));
  int wn = t.leaf(w, false);
  return ad::sum_all(t, ad::mul(t, x, wn));
}

// ---------------------------------------------------------------------------

TEST(TapeBasics, ValuesAndScalarGuard) {
  Tape t;
  Matrix m(2, 2);
  m << 1, 2, 3, 4;
  int x = t.leaf(m, true);
  int s = ad::sum_all(t, x);
  EXPECT_DOUBLE_EQ(t.value(s)[0](0, 0), 10.0);
  EXPECT_THROW(t.backward(x), ValidationError);  // non-scalar loss
  EXPECT_THROW(t.grad(x), ValidationError);      // before backward
  t.backward(s);
  EXPECT_DOUBLE_EQ(t.grad(x)[0](0, 0), 1.0);
  EXPECT_DOUBLE_EQ(t.grad(x)[0](1, 1), 1.0);
}

TEST(Elementwise, ReluSigmoidTanhScaleGradients) {
  Pcg32 rng(1, 0);
  Batch x{random_matrix_away_from_zero(rng, 3, 4),
          random_matrix_away_from_zero(rng, 3, 4)};
  Pcg32 wrng(2, 0);
  check_gradients({x}, [&](Tape& t, const std::vector<int>& ids) {
    Pcg32 local = wrng;  // identical weights for every evaluation
    return weighted_sum(t, ad::relu(t, ids[0]), local);
  });
  check_gradients({x}, [&](Tape& t, const std::vector<int>& ids) {
    Pcg32 local = wrng;
    return weighted_sum(t, ad::sigmoid(t, ids[0]), local);
  });
  check_gradients({x}, [&](Tape& t, const std::vector<int>& ids) {
    Pcg32 local = wrng;
    return weighted_sum(t, ad::tanh_op(t, ids[0]), local);
  });
  check_gradients({x}, [&](Tape& t, const std::vector<int>& ids) {
    Pcg32 local = wrng;
    return weighted_sum(t, ad::scale(t, ids[0], -2.5), local);
  });
}

TEST(Elementwise, ForwardValues) {
  Tape t;
  Matrix m(1, 3);
  m << -1.0, 0.0, 2.0;
  int x = t.leaf(m);
  EXPECT_DOUBLE_EQ(t.value(ad::relu(t, x))[0](0, 0), 0.0);
  EXPECT_DOUBLE_EQ(t.value(ad::relu(t, x))[0](0, 2), 2.0);
  // sigmoid(1) pinned to the closed-form value.
  Matrix one(1, 1);
  one << 1.0;
  int o = t.leaf(one);
  EXPECT_NEAR(t.value(ad::sigmoid(t, o))[0](0, 0), 0.7310585786300049, 1e-15);
  EXPECT_NEAR(t.value(ad::tanh_op(t, o))[0](0, 0), std::tanh(1.0), 1e-15);
}

TEST(Arithmetic, AddSubMulGradients) {
  Pcg32 rng(3, 0);
  Batch a{random_matrix(rng, 2, 3), random_matrix(rng, 2, 3)};
  Batch b{random_matrix(rng, 2, 3), random_matrix(rng, 2, 3)};
  Pcg32 wrng(4, 0);
  check_gradients({a, b}, [&](Tape& t, const std::vector<int>& ids) {
    Pcg32 local = wrng;
    return weighted_sum(t, ad::add(t, ids[0], ids[1]), local);
  });
  check_gradients({a, b}, [&](Tape& t, const std::vector<int>& ids) {
    Pcg32 local = wrng;
    return weighted_sum(t, ad::sub(t, ids[0], ids[1]), local);
  });
  check_gradients({a, b}, [&](Tape& t, const std::vector<int>& ids) {
    Pcg32 local = wrng;
    return weighted_sum(t, ad::mul(t, ids[0], ids[1]), local);
  });
}

TEST(Arithmetic, SquareViaSelfMulAndDiamondReuse) {
  Pcg32 rng(5, 0);
  Batch x{random_matrix(rng, 3, 3)};
  Pcg32 wrng(6, 0);
  // x*x: both mul parents are one node; gradient must be 2x * upstream.
  check_gradients({x}, [&](Tape& t, const std::vector<int>& ids) {
    Pcg32 local = wrng;
    return weighted_sum(t, ad::mul(t, ids[0], ids[0]), local);
  });
  // Diamond: x feeds two paths that rejoin.
  check_gradients({x}, [&](Tape& t, const std::vector<int>& ids) {
    Pcg32 local = wrng;
    int sq = ad::mul(t, ids[0], ids[0]);
    int branch = ad::scale(t, ids[0], 3.0);
    return weighted_sum(t, ad::add(t, sq, branch), local);
  });
}

TEST(SqrtEps, GradientAndClamp) {
  Pcg32 rng(7, 0);
  Batch x{random_matrix(rng, 2, 4, 0.1, 2.0)};
  Pcg32 wrng(8, 0);
  check_gradients({x}, [&](Tape& t, const std::vector<int>& ids) {
    Pcg32 local = wrng;
    return weighted_sum(t, ad::sqrt_eps(t, ids[0], 1e-6), local);
  });
  Tape t;
  Matrix neg(1, 1);
  neg << -0.5;  // clamped to 0 before the eps
  int n = t.leaf(neg);
  EXPECT_NEAR(t.value(ad::sqrt_eps(t, n, 1e-4))[0](0, 0), 0.01, 1e-12);
}

TEST(Linear, MatmulAddBiasGradients) {
  Pcg32 rng(9, 0);
  Batch w{random_matrix(rng, 3, 4)};
  Batch x{random_matrix(rng, 4, 5), random_matrix(rng, 4, 5)};
  Batch b{random_matrix(rng, 3, 1)};
  Pcg32 wrng(10, 0);
  check_gradients({w, x, b}, [&](Tape& t, const std::vector<int>& ids) {
    Pcg32 local = wrng;
    int y = ad::add_bias(t, ad::matmul(t, ids[0], ids[1]), ids[2]);
    return weighted_sum(t, y, local);
  });
  Tape t;
  Matrix wm(2, 2), xm(2, 1);
  wm << 1, 2, 3, 4;
  xm << 5, 6;
  int y = ad::matmul(t, t.leaf(wm), t.leaf(xm));
  EXPECT_DOUBLE_EQ(t.value(y)[0](0, 0), 17.0);
  EXPECT_DOUBLE_EQ(t.value(y)[0](1, 0), 39.0);
}

TEST(Linear, BroadcastMulColsGradients) {
  Pcg32 rng(11, 0);
  Batch x{random_matrix(rng, 4, 6), random_matrix(rng, 4, 6)};
  Batch g{random_matrix(rng, 4, 1), random_matrix(rng, 4, 1)};
  Pcg32 wrng(12, 0);
  check_gradients({x, g}, [&](Tape& t, const std::vector<int>& ids) {
    Pcg32 local = wrng;
    return weighted_sum(t, ad::broadcast_mul_cols(t, ids[0], ids[1]), local);
  });
}

TEST(Reductions, RowSumRowMeanGradients) {
  Pcg32 rng(13, 0);
  Batch x{random_matrix(rng, 3, 5), random_matrix(rng, 3, 7)};
  Pcg32 wrng(14, 0);
  check_gradients({x}, [&](Tape& t, const std::vector<int>& ids) {
    Pcg32 local = wrng;
    return weighted_sum(t, ad::row_sum(t, ids[0]), local);
  });
  check_gradients({x}, [&](Tape& t, const std::vector<int>& ids) {
    Pcg32 local = wrng;
    return weighted_sum(t, ad::row_mean(t, ids[0]), local);
  });
}

TEST(Shaping, SliceConcatGradients) {
  Pcg32 rng(15, 0);
  Batch x{random_matrix(rng, 6, 4), random_matrix(rng, 6, 4)};
  Pcg32 wrng(16, 0);
  check_gradients({x}, [&](Tape& t, const std::vector<int>& ids) {
    Pcg32 local = wrng;
    int top = ad::slice_rows(t, ids[0], 0, 2);
    int bottom = ad::slice_rows(t, ids[0], 2, 4);
    int swapped = ad::concat_rows(t, {bottom, top});
    return weighted_sum(t, swapped, local);
  });
  Tape t;
  Matrix m(3, 2);
  m << 1, 2, 3, 4, 5, 6;
  int id = t.leaf(m);
  EXPECT_THROW(ad::slice_rows(t, id, 2, 2), ShapeError);
  auto back = t.value(
      ad::concat_rows(t, {ad::slice_rows(t, id, 0, 1),
                          ad::slice_rows(t, id, 1, 2)}));
  EXPECT_TRUE(back[0].isApprox(m));
}

TEST(Conv1d, MatchesDirectComputation) {
  // 1 input channel, kernel 3, dilation 1, hand-checkable.
  Tape t;
  Matrix x(1, 4);
  x << 1, 2, 3, 4;
  Matrix w(1, 3);
  w << 10, 100, 1000;  // taps: left, center, right
  Matrix b(1, 1);
  b << 0.5;
  int y = ad::conv1d(t, t.leaf(x), t.leaf(w), t.leaf(b), 3, 1);
  // t=0: 10*0 + 100*1 + 1000*2 = 2100 (+0.5)
  EXPECT_DOUBLE_EQ(t.value(y)[0](0, 0), 2100.5);
  // t=1: 10*1 + 100*2 + 1000*3 = 3210 (+0.5)
  EXPECT_DOUBLE_EQ(t.value(y)[0](0, 1), 3210.5);
  // t=3: 10*3 + 100*4 + 1000*0 = 430 (+0.5), right edge zero-padded
  EXPECT_DOUBLE_EQ(t.value(y)[0](0, 3), 430.5);
}

TEST(Conv1d, DilatedGradients) {
  Pcg32 rng(17, 0);
  const int cin = 3, cout = 2, k = 3, T = 7;
  Batch x{random_matrix(rng, cin, T), random_matrix(rng, cin, T)};
  Batch w{random_matrix(rng, cout, cin * k)};
  Batch b{random_matrix(rng, cout, 1)};
  Pcg32 wrng(18, 0);
  for (int dilation : {1, 2, 3}) {
    check_gradients({x, w, b}, [&](Tape& t, const std::vector<int>& ids) {
      Pcg32 local = wrng;
      int y = ad::conv1d(t, ids[0], ids[1], ids[2], k, dilation);
      return weighted_sum(t, y, local);
    });
  }
  // Pointwise (kernel 1) convolution = per-frame linear map.
  Batch w1{random_matrix(rng, cout, cin)};
  check_gradients({x, w1, b}, [&](Tape& t, const std::vector<int>& ids) {
    Pcg32 local = wrng;
    int y = ad::conv1d(t, ids[0], ids[1], ids[2], 1, 1);
    return weighted_sum(t, y, local);
  });
}

TEST(BatchNorm, TrainForwardNormalizesAndTracksRunningStats) {
  Pcg32 rng(19, 0);
  Batch x{random_matrix(rng, 3, 5, -2.0, 2.0),
          random_matrix(rng, 3, 9, -2.0, 2.0)};
  Tape t;
  int xid = t.leaf(x);
  int gamma = t.leaf(Matrix::Ones(3, 1));
  int beta = t.leaf(Matrix::Zero(3, 1));
  Vector rm = Vector::Constant(3, 0.7);
  Vector rv = Vector::Constant(3, 2.0);
  int y = ad::batchnorm(t, xid, gamma, beta, rm, rv, true, 0.1);

  // Pooled per-channel stats of the output: mean 0, biased variance ~1.
  const double n = 5 + 9;
  for (int c = 0; c < 3; ++c) {
    double mean = 0.0, var = 0.0, raw_mean = 0.0, raw_var = 0.0;
    for (const auto& item : t.value(y)) mean += item.row(c).sum();
    mean /= n;
    for (const auto& item : t.value(y))
      var += (item.row(c).array() - mean).square().sum();
    var /= n;
    EXPECT_NEAR(mean, 0.0, 1e-12);
    EXPECT_NEAR(var, 1.0, 1e-3);  // off by var/(var+eps)

    for (const auto& item : x) raw_mean += item.row(c).sum();
    raw_mean /= n;
    for (const auto& item : x)
      raw_var += (item.row(c).array() - raw_mean).square().sum();
    raw_var /= n;
    EXPECT_NEAR(rm(c), 0.9 * 0.7 + 0.1 * raw_mean, 1e-12);
    EXPECT_NEAR(rv(c), 0.9 * 2.0 + 0.1 * raw_var, 1e-12);
  }
}

TEST(BatchNorm, EvalUsesFrozenStats) {
  Tape t;
  Matrix x(2, 2);
  x << 1.0, 3.0, -1.0, 5.0;
  int xid = t.leaf(x);
  Matrix g(2, 1), b(2, 1);
  g << 2.0, 1.0;
  b << 0.5, -0.5;
  Vector rm(2), rv(2);
  rm << 1.0, 2.0;
  rv << 4.0, 1.0;
  Vector rm_copy = rm, rv_copy = rv;
  int y = ad::batchnorm(t, xid, t.leaf(g), t.leaf(b), rm, rv, false);
  // y = gamma * (x - rm) / sqrt(rv + eps) + beta, stats untouched.
  EXPECT_NEAR(t.value(y)[0](0, 0), 2.0 * (1.0 - 1.0) / 2.0 + 0.5, 1e-5);
  EXPECT_NEAR(t.value(y)[0](0, 1), 2.0 * (3.0 - 1.0) / 2.0 + 0.5, 1e-4);
  EXPECT_NEAR(t.value(y)[0](1, 0), 1.0 * (-1.0 - 2.0) / 1.0 - 0.5, 1e-4);
  EXPECT_TRUE(rm.isApprox(rm_copy));
  EXPECT_TRUE(rv.isApprox(rv_copy));
}

TEST(BatchNorm, TrainGradients) {
  Pcg32 rng(20, 0);
  Batch x{random_matrix(rng, 3, 4, -2.0, 2.0),
          random_matrix(rng, 3, 6, -2.0, 2.0)};
  Batch gamma{random_matrix(rng, 3, 1, 0.5, 1.5)};
  Batch beta{random_matrix(rng, 3, 1)};
  Pcg32 wrng(21, 0);
  check_gradients(
      {x, gamma, beta},
      [&](Tape& t, const std::vector<int>& ids) {
        Pcg32 local = wrng;
        Vector rm = Vector::Zero(3), rv = Vector::Ones(3);  // fresh per eval
        int y = ad::batchnorm(t, ids[0], ids[1], ids[2], rm, rv, true);
        return weighted_sum(t, y, local);
      },
      1e-5);
}

TEST(BatchNorm, VectorModeAcrossBatchGradients) {
  // C x 1 items: statistics pool across the batch dimension.
  Pcg32 rng(22, 0);
  Batch x{random_matrix(rng, 4, 1), random_matrix(rng, 4, 1),
          random_matrix(rng, 4, 1)};
  Batch gamma{random_matrix(rng, 4, 1, 0.5, 1.5)};
  Batch beta{random_matrix(rng, 4, 1)};
  Pcg32 wrng(23, 0);
  check_gradients(
      {x, gamma, beta},
      [&](Tape& t, const std::vector<int>& ids) {
        Pcg32 local = wrng;
        Vector rm = Vector::Zero(4), rv = Vector::Ones(4);
        int y = ad::batchnorm(t, ids[0], ids[1], ids[2], rm, rv, true);
        return weighted_sum(t, y, local);
      },
      1e-5);
}

TEST(BatchNorm, EvalGradients) {
  Pcg32 rng(24, 0);
  Batch x{random_matrix(rng, 3, 5)};
  Batch gamma{random_matrix(rng, 3, 1, 0.5, 1.5)};
  Batch beta{random_matrix(rng, 3, 1)};
  Pcg32 wrng(25, 0);
  check_gradients({x, gamma, beta},
                  [&](Tape& t, const std::vector<int>& ids) {
                    Pcg32 local = wrng;
                    Vector rm = Vector::Constant(3, 0.2);
                    Vector rv = Vector::Constant(3, 1.5);
                    int y = ad::batchnorm(t, ids[0], ids[1], ids[2], rm, rv,
                                          false);
                    return weighted_sum(t, y, local);
                  });
}

TEST(SoftmaxTime, RowsSumToOneAndGradientsMatch) {
  Pcg32 rng(26, 0);
  Batch x{random_matrix(rng, 3, 6, -3.0, 3.0)};
  Tape t;
  int y = ad::softmax_time(t, t.leaf(x));
  for (Eigen::Index r = 0; r < 3; ++r)
    EXPECT_NEAR(t.value(y)[0].row(r).sum(), 1.0, 1e-12);
  Pcg32 wrng(27, 0);
  check_gradients({x}, [&](Tape& tt, const std::vector<int>& ids) {
    Pcg32 local = wrng;
    return weighted_sum(tt, ad::softmax_time(tt, ids[0]), local);
  });
}

TEST(BceWithLogits, ValueAndGradient) {
  // Zero logits against targets 0.5 everywhere: every term is log 2.
  Tape t;
  Batch z{Matrix::Zero(5, 1), Matrix::Zero(5, 1)};
  std::vector<Vector> half{Vector::Constant(5, 0.5),
                           Vector::Constant(5, 0.5)};
  int loss = ad::bce_with_logits(t, t.leaf(z), half);
  EXPECT_NEAR(t.value(loss)[0](0, 0), 5.0 * std::log(2.0), 1e-12);

  // Against the naive formula on random safe logits.
  Pcg32 rng(28, 0);
  Batch l{random_matrix(rng, 6, 1, -3.0, 3.0)};
  std::vector<Vector> y{Vector(6)};
  for (int i = 0; i < 6; ++i) y[0](i) = rng.next_double();
  Tape t2;
  int loss2 = ad::bce_with_logits(t2, t2.leaf(l), y);
  double naive = 0.0;
  for (int i = 0; i < 6; ++i) {
    double s = 1.0 / (1.0 + std::exp(-l[0](i, 0)));
    naive += -(y[0](i) * std::log(s) + (1.0 - y[0](i)) * std::log(1.0 - s));
  }
  EXPECT_NEAR(t2.value(loss2)[0](0, 0), naive, 1e-9);

  check_gradients({l}, [&](Tape& tt, const std::vector<int>& ids) {
    return ad::bce_with_logits(tt, ids[0], y);
  });
}

TEST(SoftmaxCrossEntropy, ValueAndGradient) {
  // Uniform logits over n classes cost log(n).
  Tape t;
  Batch z{Matrix::Zero(7, 1)};
  int loss = ad::softmax_cross_entropy(t, t.leaf(z), {3});
  EXPECT_NEAR(t.value(loss)[0](0, 0), std::log(7.0), 1e-12);

  // A dominant correct logit costs nearly nothing.
  Matrix conf = Matrix::Zero(4, 1);
  conf(2, 0) = 30.0;
  Tape t2;
  int loss2 = ad::softmax_cross_entropy(t2, t2.leaf(conf), {2});
  EXPECT_LT(t2.value(loss2)[0](0, 0), 1e-9);

  Pcg32 rng(29, 0);
  Batch l{random_matrix(rng, 5, 1, -2.0, 2.0),
          random_matrix(rng, 5, 1, -2.0, 2.0)};
  std::vector<int> labels{4, 1};
  check_gradients({l}, [&](Tape& tt, const std::vector<int>& ids) {
    return ad::softmax_cross_entropy(tt, ids[0], labels);
  });
  EXPECT_THROW(
      ad::softmax_cross_entropy(t2, t2.leaf(Matrix::Zero(3, 1)), {5}),
      ValidationError);
}

TEST(Composite, ConvAttentionPoolingNetworkGradients) {
  // A miniature of the real network: conv -> relu -> batchnorm -> attentive
  // weighted stats pooling -> linear head -> combined losses.
  Pcg32 rng(30, 0);
  const int M = 4, C = 3, T = 6, A = 5, S = 3;
  Batch x{random_matrix(rng, M, T), random_matrix(rng, M, T)};
  Batch conv_w{random_matrix(rng, C, M * 3, -0.5, 0.5)};
  Batch conv_b{random_matrix(rng, C, 1, -0.2, 0.2)};
  Batch gamma{random_matrix(rng, C, 1, 0.8, 1.2)};
  Batch beta{random_matrix(rng, C, 1, -0.1, 0.1)};
  Batch att_w{random_matrix(rng, C, C, -0.5, 0.5)};
  Batch att_b{random_matrix(rng, C, 1, -0.2, 0.2)};
  Batch head_w{random_matrix(rng, A, 2 * C, -0.5, 0.5)};
  Batch head_b{random_matrix(rng, A, 1, -0.2, 0.2)};
  Batch spk_w{random_matrix(rng, S, A, -0.5, 0.5)};
  Batch spk_b{random_matrix(rng, S, 1, -0.2, 0.2)};

  std::vector<Vector> targets;
  Pcg32 trng(31, 0);
  for (int i = 0; i < 2; ++i) {
    Vector y(A);
    for (int j = 0; j < A; ++j) y(j) = trng.next_double();
    targets.push_back(y);
  }
  std::vector<int> speakers{0, 2};

  check_gradients(
      {x, conv_w, conv_b, gamma, beta, att_w, att_b, head_w, head_b, spk_w,
       spk_b},
      [&](Tape& t, const std::vector<int>& ids) {
        Vector rm = Vector::Zero(C), rv = Vector::Ones(C);
        int h = ad::conv1d(t, ids[0], ids[1], ids[2], 3, 1);
        h = ad::relu(t, h);
        h = ad::batchnorm(t, h, ids[3], ids[4], rm, rv, true);
        int scores = ad::add_bias(t, ad::matmul(t, ids[5], h), ids[6]);
        int alpha = ad::softmax_time(t, ad::tanh_op(t, scores));
        int weighted = ad::mul(t, h, alpha);
        int mu = ad::row_sum(t, weighted);
        int sq = ad::mul(t, h, h);
        int m2 = ad::row_sum(t, ad::mul(t, sq, alpha));
        int var = ad::sub(t, m2, ad::mul(t, mu, mu));
        int sd = ad::sqrt_eps(t, var, 1e-6);
        int pooled = ad::concat_rows(t, {mu, sd});
        int logits = ad::add_bias(t, ad::matmul(t, ids[7], pooled), ids[8]);
        int spk = ad::add_bias(
            t, ad::matmul(t, ids[9], ad::relu(t, logits)), ids[10]);
        int bce = ad::bce_with_logits(t, logits, targets);
        int ce = ad::softmax_cross_entropy(t, spk, speakers);
        return ad::add(t, bce, ce);
      },
      2e-5);
}

}  // namespace
}  // namespace vove
