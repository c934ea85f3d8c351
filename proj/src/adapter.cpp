// SPDX-License-Identifier: Apache-2.0
#include "sea/adapter.hpp"

#include <cmath>
#include <string>

#include "sea/kernels.hpp"
#include "sea/rng.hpp"
#include "sea/tensor_file.hpp"

namespace sea {
namespace {

Matrix uniform_fan_in(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Matrix m(rows, cols);
  for (double& v : m.data()) v = bound * (2.0 * rng.uniform() - 1.0);
  return m;
}

Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
  Matrix y = kernels::gemm_nt(x, w);
  for (std::size_t r = 0; r < y.rows(); ++r)
    for (std::size_t c = 0; c < y.cols(); ++c) y(r, c) += b(0, c);
  return y;
}

Matrix column_sums(const Matrix& g) {
  Matrix s(1, g.cols());
  for (std::size_t r = 0; r < g.rows(); ++r)
    for (std::size_t c = 0; c < g.cols(); ++c) s(0, c) += g(r, c);
  return s;
}

}  // namespace

std::string_view to_string(AdapterArch arch) {
  return arch == AdapterArch::linear ? "linear" : "mlp2";
}

AdapterArch parse_adapter_arch(std::string_view text) {
  if (text == "linear") return AdapterArch::linear;
  if (text == "mlp2") return AdapterArch::mlp2;
  throw Error(ErrorCode::InvalidArgument, "unknown adapter architecture '" + std::string(text) + "'");
}

AdapterParams init_adapter(AdapterArch arch, std::size_t d_v, std::size_t d_h, std::size_t d_llm,
                           std::uint64_t seed) {
  if (d_v == 0 || d_llm == 0 || (arch == AdapterArch::mlp2 && d_h == 0)) {
    throw Error(ErrorCode::InvalidArgument, "adapter dimensions must be >= 1");
  }
  const Rng base(seed);
  const auto stream = [&](std::uint64_t id) { return base.derive({stream_tag::adapter_init, id}); };
  AdapterParams p;
  p.arch = arch;
  const std::size_t width = arch == AdapterArch::linear ? d_llm : d_h;
  p.w1 = uniform_fan_in(width, d_v, d_v, stream(1));
  p.b1 = uniform_fan_in(1, width, d_v, stream(2));
  if (arch == AdapterArch::mlp2) {
    p.w2 = uniform_fan_in(d_llm, d_h, d_h, stream(3));
    p.b2 = uniform_fan_in(1, d_llm, d_h, stream(4));
  }
  return p;
}

AdapterGrads zeros_like(const AdapterParams& p) {
  AdapterGrads g;
  g.arch = p.arch;
  g.w1 = Matrix(p.w1.rows(), p.w1.cols());
  g.b1 = Matrix(p.b1.rows(), p.b1.cols());
  g.w2 = Matrix(p.w2.rows(), p.w2.cols());
  g.b2 = Matrix(p.b2.rows(), p.b2.cols());
  return g;
}

Matrix adapter_forward(const AdapterParams& p, const Matrix& patches) {
  if (patches.rows() > 0 && patches.cols() != p.d_in()) {
    throw Error(ErrorCode::DimensionMismatch, "patch dim " + std::to_string(patches.cols()) +
                                                  ", adapter expects " + std::to_string(p.d_in()));
  }
  if (patches.rows() == 0) return Matrix(0, p.d_out());
  Matrix pre = affine(patches, p.w1, p.b1);
  if (p.arch == AdapterArch::linear) return pre;
  for (double& v : pre.data()) v = gelu(v);
  return affine(pre, p.w2, p.b2);
}

AdapterBackward adapter_backward(const AdapterParams& p, const Matrix& patches,
                                 const Matrix& upstream) {
  if (patches.rows() > 0 && patches.cols() != p.d_in()) {
    throw Error(ErrorCode::DimensionMismatch, "patch dim");
  }
  if (upstream.rows() != patches.rows() || (upstream.rows() > 0 && upstream.cols() != p.d_out())) {
    throw Error(ErrorCode::DimensionMismatch, "upstream gradient shape differs from output");
  }
  AdapterBackward out{zeros_like(p), Matrix(patches.rows(), p.d_in())};
  if (patches.rows() == 0) return out;

  if (p.arch == AdapterArch::linear) {
    out.params.w1 = kernels::gemm_tn(upstream, patches);
    out.params.b1 = column_sums(upstream);
    out.input = kernels::gemm_nn(upstream, p.w1);
    return out;
  }
  const Matrix pre = affine(patches, p.w1, p.b1);
  Matrix hidden(pre.rows(), pre.cols());
  for (std::size_t i = 0; i < pre.size(); ++i) hidden.data()[i] = gelu(pre.data()[i]);

  out.params.w2 = kernels::gemm_tn(upstream, hidden);
  out.params.b2 = column_sums(upstream);
  Matrix dpre = kernels::gemm_nn(upstream, p.w2);
  for (std::size_t i = 0; i < dpre.size(); ++i) dpre.data()[i] *= gelu_grad(pre.data()[i]);
  out.params.w1 = kernels::gemm_tn(dpre, patches);
  out.params.b1 = column_sums(dpre);
  out.input = kernels::gemm_nn(dpre, p.w1);
  return out;
}

void append_adapter(TensorSet& set, const AdapterParams& p, std::string_view prefix) {
  const std::string pre(prefix);
  set.add_scalar(pre + ".arch", p.arch == AdapterArch::linear ? 0.0 : 1.0);
  set.add(pre + ".w1", p.w1);
  set.add(pre + ".b1", p.b1);
  if (p.arch == AdapterArch::mlp2) {
    set.add(pre + ".w2", p.w2);
    set.add(pre + ".b2", p.b2);
  }
}

AdapterParams load_adapter(const TensorSet& set, std::string_view prefix) {
  const std::string pre(prefix);
  AdapterParams p;
  p.arch = set.scalar(pre + ".arch") == 0.0 ? AdapterArch::linear : AdapterArch::mlp2;
  p.w1 = set.matrix(pre + ".w1");
  p.b1 = set.matrix(pre + ".b1");
  if (p.arch == AdapterArch::mlp2) {
    p.w2 = set.matrix(pre + ".w2");
    p.b2 = set.matrix(pre + ".b2");
  }
  return p;
}

}  // namespace sea
