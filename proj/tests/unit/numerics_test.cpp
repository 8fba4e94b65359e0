/*
 * Copyright 2026 The tsgrec Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "tsgrec/autodiff.hpp"
#include "tsgrec/error.hpp"
#include "tsgrec/numerics.hpp"

using namespace tsgrec;
using tsgrec::testing::RandomMatrix;

TEST_CASE("softmax of a symmetric pair is uniform") {
  const std::vector<double> p = SoftmaxRow(std::vector<double>{0.0, 0.0});
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("softmax of one element is one") {
  CHECK(SoftmaxRow(std::vector<double>{-17.25}) == std::vector<double>{1.0});
}

TEST_CASE("softmax of 1,2,3 matches frozen values") {
  const std::vector<double> p = SoftmaxRow(std::vector<double>{1, 2, 3});
  CHECK(p[0] == doctest::Approx(0.09003057317038046).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx(0.24472847105479767).epsilon(1e-14));
  CHECK(p[2] == doctest::Approx(0.6652409557748219).epsilon(1e-14));
}

TEST_CASE("softmax rejects empty and non-finite input") {
  CHECK_THROWS_AS(SoftmaxRow(std::vector<double>{}), InvalidArgument);
  CHECK_THROWS_AS(SoftmaxRow(std::vector<double>{1.0, NAN}), InvalidArgument);
}

TEST_CASE("softmax properties on random rows with |x| <= 50") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.Index(12);
    std::vector<double> v(n);
    for (double& x : v) x = rng.Uniform(-50, 50);
    const std::vector<double> p = SoftmaxRow(v);
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
    const double k = rng.Uniform(-20, 20);
    std::vector<double> shifted = v;
    for (double& x : shifted) x += k;
    const std::vector<double> q = SoftmaxRow(shifted);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(q[i] == doctest::Approx(p[i]).epsilon(1e-9));
      for (std::size_t j = 0; j < n; ++j) {
        if (v[i] < v[j]) CHECK(p[i] <= p[j]);
      }
    }
  }
}

TEST_CASE("cross entropy of one-hot correct rows is zero") {
  const Matrix p = Matrix::FromRows({{1, 0, 0}, {0, 0, 1}});
  const std::vector<std::size_t> y{0, 2};
  CHECK(CrossEntropy(p, y) == 0.0);
}

TEST_CASE("cross entropy of uniform rows is ln 4") {
  const Matrix p(5, 4, 0.25);
  const std::vector<std::size_t> y{0, 1, 2, 3, 0};
  CHECK(CrossEntropy(p, y) == doctest::Approx(std::log(4.0)).epsilon(1e-14));
}

TEST_CASE("cross entropy on a random 3x4 case matches a scalar loop") {
  Rng rng(3);
  Matrix p(3, 4);
  for (std::size_t r = 0; r < 3; ++r) {
    std::vector<double> logits(4);
    for (double& x : logits) x = rng.Normal();
    const std::vector<double> row = SoftmaxRow(logits);
    for (std::size_t c = 0; c < 4; ++c) p(r, c) = row[c];
  }
  const std::vector<std::size_t> y{2, 0, 3};
  double oracle = 0.0;
  for (std::size_t r = 0; r < 3; ++r) oracle -= std::log(p(r, y[r]));
  oracle /= 3.0;
  CHECK(CrossEntropy(p, y) == doctest::Approx(oracle).epsilon(1e-14));
  CHECK(CrossEntropy(p, y) > 0.0);
}

TEST_CASE("cross entropy rejects out-of-range labels and unnormalised rows") {
  const Matrix p(2, 3, 1.0 / 3.0);
  CHECK_THROWS_AS(CrossEntropy(p, std::vector<std::size_t>{0, 3}), InvalidArgument);
  const Matrix bad(1, 2, 0.7);
  CHECK_THROWS_AS(CrossEntropy(bad, std::vector<std::size_t>{0}), InvalidArgument);
}

TEST_CASE("matrix products agree with naive loops") {
  Rng rng(5);
  const Matrix a = RandomMatrix(rng, 4, 3);
  const Matrix b = RandomMatrix(rng, 3, 5);
  const Matrix c = MatMul(a, b);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 3; ++k) s += a(i, k) * b(k, j);
      CHECK(c(i, j) == doctest::Approx(s).epsilon(1e-13));
    }
  }
  const Matrix bt = Transpose(b);
  const Matrix c2 = MatMulNT(a, bt);
  const Matrix c3 = MatMulTN(Transpose(a), b);
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(c2.data()[i] == doctest::Approx(c.data()[i]).epsilon(1e-13));
    CHECK(c3.data()[i] == doctest::Approx(c.data()[i]).epsilon(1e-13));
  }
  CHECK_THROWS_AS(MatMul(a, a), InvalidArgument);
}

TEST_CASE("matrix shape and finiteness checks") {
  CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1, 2, 3}), InvalidArgument);
  Matrix m(1, 2);
  m(0, 1) = INFINITY;
  CHECK_FALSE(m.AllFinite());
  CHECK_THROWS_AS(RequireFinite(m, "m"), InvalidArgument);
}

TEST_CASE("rng streams are reproducible and forks are independent of consumption") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.NextU64() == b.NextU64());
  Rng c(42);
  const Rng fork_before = c.Fork("stage");
  for (int i = 0; i < 10; ++i) c.Uniform();
  Rng f1 = fork_before, f2 = c.Fork("stage");
  for (int i = 0; i < 10; ++i) CHECK(f1.NextU64() == f2.NextU64());
  CHECK(DeriveSeed(1, "x") != DeriveSeed(1, "y"));
  CHECK(DeriveSeed(1, "x") == DeriveSeed(1, "x"));
}

TEST_CASE("mt19937_64 reference value pins the engine") {
  Rng r(5489);
  for (int i = 0; i < 9999; ++i) r.NextU64();
  CHECK(r.NextU64() == 9981545732273789042ULL);
}

TEST_CASE("rng ranges") {
  Rng r(9);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.Uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(r.Index(7) < 7);
    const int k = r.IntIn(-2, 2);
    CHECK(k >= -2);
    CHECK(k <= 2);
  }
}

TEST_CASE("fnv1a of the empty input and of 'a'") {
  Fnv1a h;
  CHECK(h.value() == 0xcbf29ce484222325ULL);
  h.Update(std::string_view("a"));
  CHECK(h.value() == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("grad check of w'w is exact to 1e-8") {
  Rng rng(1);
  ParameterSet params;
  params.Add("w", RandomMatrix(rng, 1, 6));
  const double err = GradCheck(
      [&](Tape& tape) {
        Var w = tape.Bind(params)[0];
        return ad::Sum(ad::Mul(w, w));
      },
      params, 1e-5);
  CHECK(err < 1e-8);
}

TEST_CASE("grad check rejects a non-finite loss") {
  ParameterSet params;
  params.Add("w", Matrix(1, 1, 1.0));
  CHECK_THROWS_AS(GradCheck(
                      [&](Tape& tape) {
                        Var w = tape.Bind(params)[0];
                        return ad::Scale(w, INFINITY);
                      },
                      params, 1e-5),
                  InvalidArgument);
}

TEST_CASE("backward fills a gradient of identical shape for every parameter") {
  Rng rng(2);
  ParameterSet params;
  params.Add("a", RandomMatrix(rng, 3, 4));
  params.Add("b", RandomMatrix(rng, 4, 2));
  params.Add("unused", RandomMatrix(rng, 2, 2));
  Tape tape;
  std::vector<Var> v = tape.Bind(params);
  tape.Backward(ad::Sum(ad::MatMul(v[0], v[1])));
  for (const Parameter& p : params) CHECK(p.grad.SameShape(p.value));
  CHECK(params.at("unused").grad == Matrix(2, 2));
}

namespace {

// Every differentiable op, each wrapped to a scalar through a fixed random
// projection so that all output entries contribute.
double OpGradError(int op, std::uint64_t seed) {
  Rng rng(seed);
  ParameterSet params;
  params.Add("a", RandomMatrix(rng, 4, 3));
  params.Add("b", RandomMatrix(rng, 4, 3));
  params.Add("r", RandomMatrix(rng, 1, 3));
  params.Add("m", RandomMatrix(rng, 3, 5));
  params.Add("s", RandomMatrix(rng, 6, 1));
  params.Add("x", RandomMatrix(rng, 1, 3));
  params.Add("y", RandomMatrix(rng, 1, 3));
  const Matrix proj = RandomMatrix(rng, 8, 8);
  auto scalarize = [&](Tape& tape, Var out) {
    const Matrix& v = out.value();
    Matrix w(v.rows(), v.cols());
    for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = proj.data()[i % proj.size()];
    return ad::Sum(ad::Mul(out, tape.Constant(w)));
  };
  return GradCheck(
      [&](Tape& tape) {
        std::vector<Var> v = tape.Bind(params);
        Var a = v[0], b = v[1], r = v[2], m = v[3], s = v[4], x = v[5], y = v[6];
        Var out;
        switch (op) {
          case 0: out = ad::MatMul(a, m); break;
          case 1: out = ad::Add(a, b); break;
          case 2: out = ad::Sub(a, b); break;
          case 3: out = ad::AddRow(a, r); break;
          case 4: out = ad::Mul(a, b); break;
          case 5: out = ad::Scale(a, -1.7); break;
          case 6: out = ad::LeakyRelu(a, 0.01); break;
          case 7: out = ad::Tanh(a); break;
          case 8: out = ad::Transpose(a); break;
          case 9: {
            const Var blocks[] = {a, b, r};
            out = ad::VStack(blocks);
            break;
          }
          case 10: out = ad::GatherRows(a, {3, 0, 0, 2, 1}); break;
          case 11: out = ad::MeanRows(a); break;
          case 12: out = ad::Sum(a); break;
          case 13: out = ad::SegmentSoftmax(s, {0, 0, 1, 1, 1, 2}, 3); break;
          case 14: {
            Var w = ad::SegmentSoftmax(s, {0, 0, 1, 1, 1, 2}, 3);
            Var values = ad::VStack(std::vector<Var>{a, ad::GatherRows(b, {0, 1})});
            out = ad::SegmentWeightedSum(w, values, {0, 0, 1, 1, 1, 2}, 3);
            break;
          }
          case 15: out = ad::SoftmaxCrossEntropy(a, {2, 0, 1, 1}); break;
          case 16: out = ad::EuclideanDistance(x, y); break;
          case 17: out = ad::CosineDistance(x, y); break;
          case 18: out = ad::Hinge(ad::EuclideanDistance(x, y), 5.0); break;
          default: out = a;
        }
        return scalarize(tape, out);
      },
      params, 1e-5);
}

}  // namespace

TEST_CASE("every op's backward passes grad check below 1e-4") {
  for (int op = 0; op <= 18; ++op) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      CAPTURE(op);
      CAPTURE(seed);
      CHECK(OpGradError(op, seed) < 1e-4);
    }
  }
}

TEST_CASE("forward plus backward is bit-identical on replay") {
  auto run = [] {
    Rng rng(77);
    ParameterSet params;
    params.Add("a", RandomMatrix(rng, 5, 4));
    params.Add("b", RandomMatrix(rng, 4, 4));
    Tape tape;
    std::vector<Var> v = tape.Bind(params);
    Var loss = ad::Sum(ad::Tanh(ad::MatMul(v[0], v[1])));
    tape.Backward(loss);
    return std::vector<Matrix>{params[0].grad, params[1].grad, loss.value()};
  };
  CHECK(run() == run());
}

TEST_CASE("monotone descent never raises the loss and replays exactly") {
  auto fit = [](double lr) {
    Rng rng(8);
    ParameterSet params;
    params.Add("w", RandomMatrix(rng, 3, 3));
    const Matrix target = RandomMatrix(rng, 3, 3);
    auto evaluate = [&](bool grad) {
      Tape tape;
      std::vector<Var> v = grad ? tape.Bind(params) : std::vector<Var>{tape.Constant(params[0].value)};
      Var d = ad::Sub(ad::Tanh(v[0]), tape.Constant(target));
      Var loss = ad::Sum(ad::Mul(d, d));
      if (grad) {
        params.ZeroGrad();
        tape.Backward(loss);
      }
      return loss.scalar();
    };
    return DescendMonotone(params, evaluate, lr, 60);
  };
  const std::vector<double> losses = fit(5.0);
  for (std::size_t i = 1; i < losses.size(); ++i) CHECK(losses[i] <= losses[i - 1]);
  CHECK(losses.back() < losses.front());
  CHECK(fit(5.0) == losses);
}
