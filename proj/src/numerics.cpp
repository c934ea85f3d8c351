// SPDX-License-Identifier: Apache-2.0
#include "sea/numerics.hpp"

#include <cmath>
#include <string>

#include "sea/kernels.hpp"

namespace sea {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroRow: return "ZeroRow";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::WordIdOutOfRange: return "WordIdOutOfRange";
    case ErrorCode::EmptyLabelSet: return "EmptyLabelSet";
    case ErrorCode::UnknownPiece: return "UnknownPiece";
    case ErrorCode::TokenIdOutOfRange: return "TokenIdOutOfRange";
    case ErrorCode::MismatchedBatch: return "MismatchedBatch";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::TargetOutOfRange: return "TargetOutOfRange";
    case ErrorCode::NegativeLambda: return "NegativeLambda";
    case ErrorCode::NonFiniteFunction: return "NonFiniteFunction";
    case ErrorCode::StepOutOfRange: return "StepOutOfRange";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::CheckpointWriteFailure: return "CheckpointWriteFailure";
    case ErrorCode::MissingGroundTruth: return "MissingGroundTruth";
    case ErrorCode::EmptyScores: return "EmptyScores";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionUnsupported: return "VersionUnsupported";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::MissingEntry: return "MissingEntry";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t cols, Provenance provenance)
    : EmbeddingMatrix(rows, cols, std::vector<float>(rows * cols, 0.0f), provenance) {}

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t cols, std::vector<float> data,
                                 Provenance provenance)
    : rows_(rows), cols_(cols), data_(std::move(data)), provenance_(provenance) {
  if (rows == 0 || cols == 0) {
    throw Error(ErrorCode::InvalidArgument, "EmbeddingMatrix needs rows >= 1 and cols >= 1");
  }
  if (data_.size() != rows * cols) {
    throw Error(ErrorCode::DimensionMismatch,
                "data length " + std::to_string(data_.size()) + " != " +
                    std::to_string(rows) + "x" + std::to_string(cols));
  }
}

EmbeddingMatrix EmbeddingMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty() || rows.front().empty()) {
    throw Error(ErrorCode::InvalidArgument, "from_rows: empty");
  }
  const std::size_t cols = rows.front().size();
  std::vector<float> data;
  data.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw Error(ErrorCode::DimensionMismatch, "ragged rows");
    for (double v : r) data.push_back(static_cast<float>(v));
  }
  return EmbeddingMatrix(rows.size(), cols, std::move(data));
}

void EmbeddingMatrix::mark_normalized() {
  for (std::size_t r = 0; r < rows_; ++r) {
    double acc = 0.0;
    for (float v : row(r)) acc += static_cast<double>(v) * v;
    if (std::abs(std::sqrt(acc) - 1.0) > 1e-5) {
      throw Error(ErrorCode::InvalidArgument,
                  "row " + std::to_string(r) + " is not unit norm");
    }
  }
  normalized_ = true;
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw Error(ErrorCode::DimensionMismatch, "Matrix data length mismatch");
  }
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  const std::size_t cols = rows.front().size();
  std::vector<double> data;
  data.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw Error(ErrorCode::DimensionMismatch, "ragged rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Matrix(rows.size(), cols, std::move(data));
}

Matrix Matrix::from_embedding(const EmbeddingMatrix& m) {
  std::vector<double> data(m.data().begin(), m.data().end());
  return Matrix(m.rows(), m.cols(), std::move(data));
}

EmbeddingMatrix to_embedding(const Matrix& m, Provenance provenance) {
  std::vector<float> data(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) data[i] = static_cast<float>(m.data()[i]);
  return EmbeddingMatrix(m.rows(), m.cols(), std::move(data), provenance);
}

EmbeddingMatrix row_l2_normalize(const EmbeddingMatrix& m) {
  auto out = to_embedding(kernels::normalize_rows(Matrix::from_embedding(m)), m.provenance());
  out.mark_normalized();
  return out;
}

EmbeddingMatrix cosine_similarity_matrix(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
  return to_embedding(cosine_similarity_matrix(Matrix::from_embedding(a), Matrix::from_embedding(b)));
}

Matrix cosine_similarity_matrix(const Matrix& a, const Matrix& b) {
  return kernels::cosine(a, b);
}

EmbeddingMatrix log_softmax_rows(const EmbeddingMatrix& s) {
  return to_embedding(log_softmax_rows(Matrix::from_embedding(s)), s.provenance());
}

Matrix log_softmax_rows(const Matrix& s) { return kernels::log_softmax_rows(s); }

}  // namespace sea

namespace sea {

double gelu(double x) noexcept { return 0.5 * x * (1.0 + std::erf(x * 0.70710678118654752440)); }

double gelu_grad(double x) noexcept {
  const double cdf = 0.5 * (1.0 + std::erf(x * 0.70710678118654752440));
  const double pdf = 0.39894228040143267794 * std::exp(-0.5 * x * x);
  return cdf + x * pdf;
}

}  // namespace sea
