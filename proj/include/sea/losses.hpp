// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "sea/numerics.hpp"

namespace sea {

/// tau = exp(log_tau), so the temperature can never reach zero.
struct TemperatureParam {
  double log_tau = 0.0;
  double tau() const noexcept;
};

enum class GradGroup { visual_tokens, text_features, log_tau, logits };

struct LossBundle {
  double value = 0.0;
  std::map<GradGroup, Matrix> grads;

  bool has(GradGroup g) const { return grads.contains(g); }
  const Matrix& grad(GradGroup g) const;
};

/// Symmetric InfoNCE over cosine similarities: the mean of the visual->text
/// and text->visual cross-entropies, matched rows being the positives.
/// Gradients are produced for visual tokens and log_tau; text features are
/// constants unless `text_grad` is set.
LossBundle alignment_loss(const Matrix& visual_tokens, const Matrix& text_features,
                          const TemperatureParam& temp, bool text_grad = false);

/// Mean next-token NLL over rows where mask is set. targets[r] is the id that
/// logits row r should predict.
LossBundle generation_loss(const Matrix& logits, std::span<const std::uint32_t> targets,
                           std::span<const std::uint8_t> mask);

/// lg + lambda * la, gradients summed group by group.
LossBundle combined_loss(const LossBundle& lg, const LossBundle& la, double lambda);

struct FdOptions {
  double eps = 1e-4;
  /// Denominator floor in |a - n| / max(|a|, |n|, floor).
  double floor = 1e-6;
};

struct FdResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t worst_index = 0;
  std::vector<double> numeric;
};

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Central differences per coordinate, compared against `analytic`.
FdResult finite_difference_check(const ScalarFunction& f, std::span<const double> point,
                                 std::span<const double> analytic, FdOptions options = {});

}  // namespace sea
