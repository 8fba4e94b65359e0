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

// Dense row-major matrices, a portable seeded RNG and the handful of
// nonlinearities and losses shared by the learning modules.

#ifndef TSGREC_NUMERICS_HPP_
#define TSGREC_NUMERICS_HPP_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace tsgrec {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix FromRows(
      std::initializer_list<std::initializer_list<double>> rows);
  static Matrix Identity(std::size_t n);
  static Matrix RowVector(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool SameShape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool AllFinite() const;
  void Fill(double value);

  // Element-wise in-place updates.
  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double scale);

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Products backed by Eigen's GEMM kernels. The _nt / _tn variants multiply
// by the transpose of the second / first operand without materialising it.
Matrix MatMul(const Matrix& a, const Matrix& b);
Matrix MatMulNT(const Matrix& a, const Matrix& b);
Matrix MatMulTN(const Matrix& a, const Matrix& b);
Matrix Transpose(const Matrix& m);
Matrix VStack(std::span<const Matrix> blocks);
Matrix Log1p(const Matrix& m);

// Throws InvalidArgument if any entry is NaN or infinite.
void RequireFinite(const Matrix& m, std::string_view what);

// Deterministic random stream. The engine is mt19937_64, whose output is
// fixed by the standard; the distributions are implemented here because the
// std:: ones are allowed to differ between library vendors.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t NextU64() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Uniform integer in [0, n). n must be positive.
  std::size_t Index(std::size_t n);
  // Uniform integer in [lo, hi].
  int IntIn(int lo, int hi);
  double Normal();
  bool Bernoulli(double p) { return Uniform() < p; }

  template <typename T>
  void Shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[Index(i)]);
    }
  }

  // Child stream keyed by a stage label, independent of how much of this
  // stream has been consumed.
  Rng Fork(std::string_view label) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

std::uint64_t DeriveSeed(std::uint64_t root, std::string_view label);

// Incremental 64-bit FNV-1a. Doubles and integers are hashed by their
// little-endian byte patterns.
class Fnv1a {
 public:
  void Update(std::string_view bytes);
  void Update(std::uint64_t value);
  void Update(double value);
  void Update(const Matrix& m);
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

// Glorot-uniform initialisation for a fan_in x fan_out weight matrix.
Matrix GlorotUniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

// Max-shifted softmax. Throws on empty or non-finite input.
std::vector<double> SoftmaxRow(std::span<const double> values);

// Mean negative log-likelihood of `labels` under the row distributions of
// `probabilities`. Rows must sum to 1 within 1e-6.
double CrossEntropy(const Matrix& probabilities,
                    std::span<const std::size_t> labels);

inline double LeakyRelu(double x, double slope) { return x > 0 ? x : slope * x; }

}  // namespace tsgrec

#endif  // TSGREC_NUMERICS_HPP_
