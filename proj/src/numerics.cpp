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

#include "tsgrec/numerics.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "tsgrec/error.hpp"

namespace tsgrec {

namespace {

using RowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using Map = Eigen::Map<RowMajor>;

ConstMap View(const Matrix& m) {
  return ConstMap(m.data().data(), static_cast<Eigen::Index>(m.rows()),
                  static_cast<Eigen::Index>(m.cols()));
}

Map View(Matrix& m) {
  return Map(m.data().data(), static_cast<Eigen::Index>(m.rows()),
             static_cast<Eigen::Index>(m.cols()));
}

std::string Shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw InvalidArgument("matrix data length " + std::to_string(data_.size()) +
                          " does not match shape " + std::to_string(rows) +
                          "x" + std::to_string(cols));
  }
}

Matrix Matrix::FromRows(
    std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw InvalidArgument("ragged matrix literal");
    std::copy(row.begin(), row.end(), m.row(i++).begin());
  }
  return m;
}

Matrix Matrix::Identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::RowVector(std::span<const double> values) {
  return Matrix(1, values.size(),
                std::vector<double>(values.begin(), values.end()));
}

bool Matrix::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

void Matrix::Fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Matrix& Matrix::operator+=(const Matrix& other) {
  if (!SameShape(other)) {
    throw InvalidArgument("shape mismatch in +=: " + Shape(*this) + " vs " +
                          Shape(other));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  if (!SameShape(other)) {
    throw InvalidArgument("shape mismatch in -=: " + Shape(*this) + " vs " +
                          Shape(other));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double scale) {
  for (double& v : data_) v *= scale;
  return *this;
}

Matrix MatMul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw InvalidArgument("matmul shape mismatch: " + Shape(a) + " * " +
                          Shape(b));
  }
  Matrix out(a.rows(), b.cols());
  if (out.empty() || a.cols() == 0) return out;
  View(out).noalias() = View(a) * View(b);
  return out;
}

Matrix MatMulNT(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw InvalidArgument("matmul_nt shape mismatch: " + Shape(a) + " * " +
                          Shape(b) + "^T");
  }
  Matrix out(a.rows(), b.rows());
  if (out.empty() || a.cols() == 0) return out;
  View(out).noalias() = View(a) * View(b).transpose();
  return out;
}

Matrix MatMulTN(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw InvalidArgument("matmul_tn shape mismatch: " + Shape(a) + "^T * " +
                          Shape(b));
  }
  Matrix out(a.cols(), b.cols());
  if (out.empty() || a.rows() == 0) return out;
  View(out).noalias() = View(a).transpose() * View(b);
  return out;
}

Matrix Transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out(c, r) = m(r, c);
  }
  return out;
}

Matrix VStack(std::span<const Matrix> blocks) {
  if (blocks.empty()) return {};
  const std::size_t cols = blocks.front().cols();
  std::size_t rows = 0;
  for (const Matrix& b : blocks) {
    if (b.cols() != cols) throw InvalidArgument("vstack column mismatch");
    rows += b.rows();
  }
  Matrix out(rows, cols);
  std::size_t offset = 0;
  for (const Matrix& b : blocks) {
    std::copy(b.data().begin(), b.data().end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(offset));
    offset += b.size();
  }
  return out;
}

Matrix Log1p(const Matrix& m) {
  Matrix out = m;
  for (double& v : out.data()) v = std::log1p(v);
  return out;
}

void RequireFinite(const Matrix& m, std::string_view what) {
  if (!m.AllFinite()) {
    throw InvalidArgument(std::string(what) + " contains NaN or Inf");
  }
}

double Rng::Uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t Rng::Index(std::size_t n) {
  if (n == 0) throw InvalidArgument("Rng::Index on empty range");
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

int Rng::IntIn(int lo, int hi) {
  if (hi < lo) throw InvalidArgument("Rng::IntIn with hi < lo");
  return lo + static_cast<int>(Index(static_cast<std::size_t>(hi - lo) + 1));
}

double Rng::Normal() {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return spare_normal_;
  }
  // Box-Muller on (0, 1].
  const double u1 = 1.0 - Uniform();
  const double u2 = Uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_normal_ = radius * std::sin(angle);
  has_spare_normal_ = true;
  return radius * std::cos(angle);
}

Rng Rng::Fork(std::string_view label) const {
  return Rng(DeriveSeed(seed_, label));
}

void Fnv1a::Update(std::string_view bytes) {
  for (unsigned char ch : bytes) {
    hash_ ^= ch;
    hash_ *= 0x100000001b3ULL;
  }
}

void Fnv1a::Update(std::uint64_t value) {
  for (int i = 0; i < 8; ++i) {
    hash_ ^= (value >> (8 * i)) & 0xffU;
    hash_ *= 0x100000001b3ULL;
  }
}

void Fnv1a::Update(double value) { Update(std::bit_cast<std::uint64_t>(value)); }

void Fnv1a::Update(const Matrix& m) {
  Update(static_cast<std::uint64_t>(m.rows()));
  Update(static_cast<std::uint64_t>(m.cols()));
  for (double x : m.data()) Update(x);
}

std::uint64_t DeriveSeed(std::uint64_t root, std::string_view label) {
  // FNV-1a over the label, folded into the root with a splitmix64 finaliser.
  Fnv1a fnv;
  fnv.Update(label);
  const std::uint64_t h = fnv.value();
  std::uint64_t z = root ^ (h + 0x9e3779b97f4a7c15ULL + (root << 6) + (root >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Matrix GlorotUniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit =
      std::sqrt(6.0 / static_cast<double>(std::max<std::size_t>(1, fan_in + fan_out)));
  Matrix m(fan_in, fan_out);
  for (double& v : m.data()) v = rng.Uniform(-limit, limit);
  return m;
}

std::vector<double> SoftmaxRow(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("softmax of an empty vector");
  double max_value = -std::numeric_limits<double>::infinity();
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidArgument("softmax input is not finite");
    max_value = std::max(max_value, v);
  }
  std::vector<double> out(values.size());
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = std::exp(values[i] - max_value);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

double CrossEntropy(const Matrix& probabilities,
                    std::span<const std::size_t> labels) {
  if (labels.size() != probabilities.rows()) {
    throw InvalidArgument("cross_entropy: " + std::to_string(labels.size()) +
                          " labels for " +
                          std::to_string(probabilities.rows()) + " rows");
  }
  if (labels.empty()) throw InvalidArgument("cross_entropy of zero rows");
  double total = 0.0;
  for (std::size_t r = 0; r < probabilities.rows(); ++r) {
    const auto row = probabilities.row(r);
    double sum = 0.0;
    for (double p : row) {
      if (!(p >= 0.0)) throw InvalidArgument("cross_entropy: negative probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw InvalidArgument("cross_entropy: row " + std::to_string(r) +
                            " does not sum to 1");
    }
    if (labels[r] >= row.size()) {
      throw InvalidArgument("cross_entropy: label " +
                            std::to_string(labels[r]) + " out of range");
    }
    const double p = std::max(row[labels[r]], std::numeric_limits<double>::min());
    total -= std::log(p);
  }
  return total / static_cast<double>(labels.size());
}

}  // namespace tsgrec
