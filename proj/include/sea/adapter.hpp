// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "sea/numerics.hpp"

namespace sea {

class TensorSet;

enum class AdapterArch { linear, mlp2 };

std::string_view to_string(AdapterArch arch);
AdapterArch parse_adapter_arch(std::string_view text);

/// Projector from vision-feature space (d_v) into the LM embedding space
/// (d_llm). linear: x W1^T + b1 with W1 d_llm x d_v. mlp2: gelu(x W1^T + b1)
/// W2^T + b2 with W1 d_h x d_v and W2 d_llm x d_h.
struct AdapterParams {
  AdapterArch arch = AdapterArch::mlp2;
  Matrix w1, b1, w2, b2;  // biases are 1 x width; w2/b2 empty for linear

  std::size_t d_in() const noexcept { return w1.cols(); }
  std::size_t d_out() const noexcept { return arch == AdapterArch::linear ? w1.rows() : w2.rows(); }
  bool operator==(const AdapterParams&) const = default;
};

/// Fan-in scaled uniform init, U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases included.
AdapterParams init_adapter(AdapterArch arch, std::size_t d_v, std::size_t d_h, std::size_t d_llm,
                           std::uint64_t seed);

/// Same shapes as the parameters.
using AdapterGrads = AdapterParams;

AdapterGrads zeros_like(const AdapterParams& p);

Matrix adapter_forward(const AdapterParams& p, const Matrix& patches);

struct AdapterBackward {
  AdapterGrads params;
  Matrix input;
};

AdapterBackward adapter_backward(const AdapterParams& p, const Matrix& patches,
                                 const Matrix& upstream);

/// Adds "adapter.w1" etc. (float64) to a tensor set, and reads them back.
void append_adapter(TensorSet& set, const AdapterParams& p, std::string_view prefix = "adapter");
AdapterParams load_adapter(const TensorSet& set, std::string_view prefix = "adapter");

}  // namespace sea
