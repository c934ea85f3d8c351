// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "sea/numerics.hpp"

// Dense kernels in two flavours: a straightforward serial reference and an
// OpenMP row-parallel version. Every output element is reduced by exactly one
// thread in ascending index order, so both flavours agree bit for bit
// regardless of thread count.
namespace sea::kernels {

namespace serial {

std::vector<double> row_norms(const Matrix& a);
Matrix gemm_nt(const Matrix& a, const Matrix& b);  // a * b^T
Matrix gemm_nn(const Matrix& a, const Matrix& b);  // a * b
Matrix gemm_tn(const Matrix& a, const Matrix& b);  // a^T * b
Matrix normalize_rows(const Matrix& a);
Matrix cosine(const Matrix& a, const Matrix& b);
Matrix log_softmax_rows(const Matrix& s);

}  // namespace serial

namespace omp {

std::vector<double> row_norms(const Matrix& a);
Matrix gemm_nt(const Matrix& a, const Matrix& b);
Matrix gemm_nn(const Matrix& a, const Matrix& b);
Matrix gemm_tn(const Matrix& a, const Matrix& b);
Matrix normalize_rows(const Matrix& a);
Matrix cosine(const Matrix& a, const Matrix& b);
Matrix log_softmax_rows(const Matrix& s);

}  // namespace omp

// The library default.
using omp::cosine;
using omp::gemm_nn;
using omp::gemm_nt;
using omp::gemm_tn;
using omp::log_softmax_rows;
using omp::normalize_rows;
using omp::row_norms;

}  // namespace sea::kernels
