// SPDX-License-Identifier: Apache-2.0
#include "sea/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sea/kernels.hpp"

namespace sea {
namespace {

double logsumexp(std::span<const double> xs) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : xs) mx = std::max(mx, x);
  double sum = 0.0;
  for (double x : xs) sum += std::exp(x - mx);
  return mx + std::log(sum);
}

// Gradient through x -> x / |x| for each row.
Matrix through_normalization(const Matrix& raw, const Matrix& unit, const Matrix& dunit) {
  const auto norms = kernels::row_norms(raw);
  Matrix out(raw.rows(), raw.cols());
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    double dot = 0.0;
    for (std::size_t c = 0; c < raw.cols(); ++c) dot += unit(r, c) * dunit(r, c);
    for (std::size_t c = 0; c < raw.cols(); ++c) {
      out(r, c) = (dunit(r, c) - unit(r, c) * dot) / norms[r];
    }
  }
  return out;
}

}  // namespace

double TemperatureParam::tau() const noexcept { return std::exp(log_tau); }

const Matrix& LossBundle::grad(GradGroup g) const {
  auto it = grads.find(g);
  if (it == grads.end()) throw Error(ErrorCode::MissingEntry, "gradient group not present");
  return it->second;
}

LossBundle alignment_loss(const Matrix& visual_tokens, const Matrix& text_features,
                          const TemperatureParam& temp, bool text_grad) {
  const std::size_t n = visual_tokens.rows();
  if (n != text_features.rows()) {
    throw Error(ErrorCode::MismatchedBatch, std::to_string(n) + " visual tokens vs " +
                                                std::to_string(text_features.rows()) + " labels");
  }
  if (n == 0) throw Error(ErrorCode::MismatchedBatch, "alignment batch is empty");
  if (visual_tokens.cols() != text_features.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "visual and text feature dims differ");
  }
  const double tau = temp.tau();
  const Matrix vn = kernels::normalize_rows(visual_tokens);
  const Matrix tn = kernels::normalize_rows(text_features);
  Matrix z = kernels::gemm_nt(vn, tn);
  for (double& v : z.data()) v /= tau;

  std::vector<double> row_lse(n), col_lse(n), column(n);
  for (std::size_t i = 0; i < n; ++i) row_lse[i] = logsumexp(z.row(i));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) column[i] = z(i, j);
    col_lse[j] = logsumexp(column);
  }

  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += (z(i, i) - row_lse[i]) + (z(i, i) - col_lse[i]);
  const double inv_2n = 1.0 / (2.0 * static_cast<double>(n));

  // dL/dz_ab = (P_ab + Q_ab - 2 [a == b]) / 2N with P row-softmax, Q column-softmax.
  Matrix ds(n, n);
  double dlog_tau = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const double p = std::exp(z(a, b) - row_lse[a]);
      const double q = std::exp(z(a, b) - col_lse[b]);
      const double dz = (p + q - (a == b ? 2.0 : 0.0)) * inv_2n;
      dlog_tau -= dz * z(a, b);
      ds(a, b) = dz / tau;
    }
  }

  LossBundle out;
  out.value = -acc * inv_2n;
  out.grads[GradGroup::visual_tokens] =
      through_normalization(visual_tokens, vn, kernels::gemm_nn(ds, tn));
  out.grads[GradGroup::log_tau] = Matrix(1, 1, dlog_tau);
  if (text_grad) {
    out.grads[GradGroup::text_features] =
        through_normalization(text_features, tn, kernels::gemm_tn(ds, vn));
  }
  return out;
}

LossBundle generation_loss(const Matrix& logits, std::span<const std::uint32_t> targets,
                           std::span<const std::uint8_t> mask) {
  if (targets.size() != logits.rows() || mask.size() != logits.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "targets/mask length must equal logit rows");
  }
  const std::size_t count = static_cast<std::size_t>(std::count_if(
      mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; }));
  if (count == 0) throw Error(ErrorCode::EmptyMask, "no supervised positions");

  LossBundle out;
  Matrix grad(logits.rows(), logits.cols());
  const double inv = 1.0 / static_cast<double>(count);
  double total = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    if (!mask[r]) continue;
    if (targets[r] >= logits.cols()) {
      throw Error(ErrorCode::TargetOutOfRange, "target " + std::to_string(targets[r]));
    }
    const auto row = logits.row(r);
    const double lse = logsumexp(row);
    total += lse - row[targets[r]];
    auto g = grad.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) g[c] = std::exp(row[c] - lse) * inv;
    g[targets[r]] -= inv;
  }
  out.value = total * inv;
  out.grads[GradGroup::logits] = std::move(grad);
  return out;
}

LossBundle combined_loss(const LossBundle& lg, const LossBundle& la, double lambda) {
  if (!(lambda >= 0.0)) throw Error(ErrorCode::NegativeLambda, std::to_string(lambda));
  if (lambda == 0.0) return lg;
  LossBundle out = lg;
  out.value = lg.value + lambda * la.value;
  for (const auto& [group, g] : la.grads) {
    auto it = out.grads.find(group);
    if (it == out.grads.end()) {
      Matrix scaled = g;
      for (double& v : scaled.data()) v *= lambda;
      out.grads.emplace(group, std::move(scaled));
      continue;
    }
    Matrix& dst = it->second;
    if (dst.rows() != g.rows() || dst.cols() != g.cols()) {
      throw Error(ErrorCode::DimensionMismatch, "gradient groups have different shapes");
    }
    for (std::size_t i = 0; i < dst.size(); ++i) dst.data()[i] += lambda * g.data()[i];
  }
  return out;
}

FdResult finite_difference_check(const ScalarFunction& f, std::span<const double> point,
                                 std::span<const double> analytic, FdOptions options) {
  if (analytic.size() != point.size()) {
    throw Error(ErrorCode::DimensionMismatch, "analytic gradient length differs from point");
  }
  FdResult result;
  result.numeric.resize(point.size());
  std::vector<double> x(point.begin(), point.end());
  const auto eval = [&](std::size_t i) {
    const double v = f(x);
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::NonFiniteFunction, "at coordinate " + std::to_string(i));
    }
    return v;
  };
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + options.eps;
    const double up = eval(i);
    x[i] = saved - options.eps;
    const double down = eval(i);
    x[i] = saved;
    const double numeric = (up - down) / (2.0 * options.eps);
    result.numeric[i] = numeric;
    const double abs_err = std::abs(numeric - analytic[i]);
    const double rel =
        abs_err / std::max({std::abs(numeric), std::abs(analytic[i]), options.floor});
    result.max_abs_error = std::max(result.max_abs_error, abs_err);
    if (rel > result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst_index = i;
    }
  }
  return result;
}

}  // namespace sea
