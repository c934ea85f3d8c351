// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sea/error.hpp"

namespace sea {

enum class Provenance { synthetic, exported };

/// Dense row-major float32 storage for patch features, word features and
/// embedding tables. Arithmetic on it always accumulates in double.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t cols,
                  Provenance provenance = Provenance::synthetic);
  EmbeddingMatrix(std::size_t rows, std::size_t cols, std::vector<float> data,
                  Provenance provenance = Provenance::synthetic);

  /// Row-of-rows literal, handy for small fixtures.
  static EmbeddingMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  Provenance provenance() const noexcept { return provenance_; }
  void set_provenance(Provenance p) noexcept { provenance_ = p; }
  bool normalized() const noexcept { return normalized_; }

  /// Sets the flag after checking every row norm is within 1e-5 of one.
  void mark_normalized();

  std::span<float> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const float> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  float& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  float operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const float> data() const noexcept { return data_; }
  std::span<float> data() noexcept { return data_; }

  bool operator==(const EmbeddingMatrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
  Provenance provenance_ = Provenance::synthetic;
  bool normalized_ = false;
};

/// Dense row-major double matrix used on every gradient-carrying path.
/// Zero-sized shapes are allowed here (e.g. an empty alignment batch).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);
  static Matrix from_embedding(const EmbeddingMatrix& m);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Rounds to float storage.
EmbeddingMatrix to_embedding(const Matrix& m, Provenance provenance = Provenance::synthetic);

inline constexpr double kZeroRowThreshold = 1e-12;

EmbeddingMatrix row_l2_normalize(const EmbeddingMatrix& m);

/// Entry (i, j) is cos(a_i, b_j).
EmbeddingMatrix cosine_similarity_matrix(const EmbeddingMatrix& a, const EmbeddingMatrix& b);

EmbeddingMatrix log_softmax_rows(const EmbeddingMatrix& s);

/// Double-precision overloads used by the loss and model code.
Matrix cosine_similarity_matrix(const Matrix& a, const Matrix& b);
Matrix log_softmax_rows(const Matrix& s);

}  // namespace sea

namespace sea {

/// Exact Gaussian-error gating, 0.5 x (1 + erf(x / sqrt 2)).
double gelu(double x) noexcept;
double gelu_grad(double x) noexcept;

}  // namespace sea
