// SPDX-License-Identifier: Apache-2.0
#include "sea/kernels.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace sea::kernels {
namespace {

void require_same_cols(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                "cols " + std::to_string(a.cols()) + " vs " + std::to_string(b.cols()));
  }
}

void require_inner(std::size_t lhs, std::size_t rhs) {
  if (lhs != rhs) {
    throw Error(ErrorCode::DimensionMismatch,
                "inner dims " + std::to_string(lhs) + " vs " + std::to_string(rhs));
  }
}

double checked_norm(std::span<const double> row, std::size_t index) {
  double acc = 0.0;
  for (double v : row) acc += v * v;
  const double n = std::sqrt(acc);
  if (!(n >= kZeroRowThreshold)) {
    throw Error(ErrorCode::ZeroRow, "row " + std::to_string(index));
  }
  return n;
}

void check_finite(const Matrix& s) {
  for (double v : s.data()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "log_softmax_rows");
  }
}

}  // namespace

namespace serial {

std::vector<double> row_norms(const Matrix& a) {
  std::vector<double> out(a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < a.cols(); ++c) acc += a(r, c) * a(r, c);
    out[r] = std::sqrt(acc);
  }
  return out;
}

Matrix gemm_nt(const Matrix& a, const Matrix& b) {
  require_same_cols(a, b);
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(j, k);
      c(i, j) = acc;
    }
  return c;
}

Matrix gemm_nn(const Matrix& a, const Matrix& b) {
  require_inner(a.cols(), b.rows());
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  return c;
}

Matrix gemm_tn(const Matrix& a, const Matrix& b) {
  require_inner(a.rows(), b.rows());
  Matrix c(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.rows(); ++k) acc += a(k, i) * b(k, j);
      c(i, j) = acc;
    }
  return c;
}

Matrix normalize_rows(const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double n = checked_norm(a.row(r), r);
    for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) = a(r, c) / n;
  }
  return out;
}

Matrix cosine(const Matrix& a, const Matrix& b) {
  require_same_cols(a, b);
  return gemm_nt(normalize_rows(a), normalize_rows(b));
}

Matrix log_softmax_rows(const Matrix& s) {
  check_finite(s);
  Matrix out(s.rows(), s.cols());
  for (std::size_t r = 0; r < s.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < s.cols(); ++c) mx = std::max(mx, s(r, c));
    double sum = 0.0;
    for (std::size_t c = 0; c < s.cols(); ++c) sum += std::exp(s(r, c) - mx);
    const double lse = mx + std::log(sum);
    for (std::size_t c = 0; c < s.cols(); ++c) out(r, c) = s(r, c) - lse;
  }
  return out;
}

}  // namespace serial

namespace omp {

std::vector<double> row_norms(const Matrix& a) {
  std::vector<double> out(a.rows());
  const auto rows = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (double v : a.row(r)) acc += v * v;
    out[r] = std::sqrt(acc);
  }
  return out;
}

Matrix gemm_nt(const Matrix& a, const Matrix& b) {
  require_same_cols(a, b);
  Matrix c(a.rows(), b.rows());
  const auto rows = static_cast<std::ptrdiff_t>(a.rows());
  const std::size_t n = b.rows(), k = a.cols();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const double* ai = a.row(i).data();
    double* ci = c.row(i).data();
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b.row(j).data();
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += ai[t] * bj[t];
      ci[j] = acc;
    }
  }
  return c;
}

Matrix gemm_nn(const Matrix& a, const Matrix& b) {
  require_inner(a.cols(), b.rows());
  Matrix c(a.rows(), b.cols());
  const auto rows = static_cast<std::ptrdiff_t>(a.rows());
  const std::size_t n = b.cols(), k = a.cols();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    double* ci = c.row(i).data();
    for (std::size_t t = 0; t < k; ++t) {
      const double av = a(i, t);
      const double* bt = b.row(t).data();
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bt[j];
    }
  }
  return c;
}

Matrix gemm_tn(const Matrix& a, const Matrix& b) {
  require_inner(a.rows(), b.rows());
  Matrix c(a.cols(), b.cols());
  const auto rows = static_cast<std::ptrdiff_t>(a.cols());
  const std::size_t n = b.cols(), k = a.rows();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    double* ci = c.row(i).data();
    for (std::size_t t = 0; t < k; ++t) {
      const double av = a(t, i);
      const double* bt = b.row(t).data();
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bt[j];
    }
  }
  return c;
}

Matrix normalize_rows(const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  const auto rows = static_cast<std::ptrdiff_t>(a.rows());
  // Exceptions may not cross the parallel region; record the first bad row.
  std::ptrdiff_t bad = -1;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (double v : a.row(r)) acc += v * v;
    const double n = std::sqrt(acc);
    if (!(n >= kZeroRowThreshold)) {
#pragma omp critical
      if (bad < 0 || r < bad) bad = r;
      continue;
    }
    for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) = a(r, c) / n;
  }
  if (bad >= 0) throw Error(ErrorCode::ZeroRow, "row " + std::to_string(bad));
  return out;
}

Matrix cosine(const Matrix& a, const Matrix& b) {
  require_same_cols(a, b);
  return gemm_nt(normalize_rows(a), normalize_rows(b));
}

Matrix log_softmax_rows(const Matrix& s) {
  check_finite(s);
  Matrix out(s.rows(), s.cols());
  const auto rows = static_cast<std::ptrdiff_t>(s.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const auto in = s.row(r);
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : in) mx = std::max(mx, v);
    double sum = 0.0;
    for (double v : in) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    auto o = out.row(r);
    for (std::size_t c = 0; c < in.size(); ++c) o[c] = in[c] - lse;
  }
  return out;
}

}  // namespace omp
}  // namespace sea::kernels
