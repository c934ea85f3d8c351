// SPDX-License-Identifier: Apache-2.0
#include "sea/gradcheck.hpp"

#include <algorithm>

#include "sea/adapter.hpp"
#include "sea/losses.hpp"
#include "sea/rng.hpp"
#include "sea/toylm.hpp"

namespace sea {
namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (double& v : m.data()) v = scale * rng.normal();
  return m;
}

std::vector<double> flat(const Matrix& m) { return {m.data().begin(), m.data().end()}; }

Matrix reshape(std::span<const double> x, std::size_t r, std::size_t c) {
  return Matrix(r, c, std::vector<double>(x.begin(), x.end()));
}

double weighted_sum(const Matrix& a, const Matrix& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * w.data()[i];
  return s;
}

void record(GradcheckEntry& e, const FdResult& r) {
  e.max_rel_error = std::max(e.max_rel_error, r.max_rel_error);
}

// Checks one tensor of the adapter, holding the others fixed.
FdResult check_adapter_tensor(const AdapterParams& p, const Matrix& x, const Matrix& upstream,
                              Matrix AdapterParams::*member, const Matrix& analytic,
                              const FdOptions& opts) {
  const Matrix& t = p.*member;
  const auto f = [&](std::span<const double> v) {
    AdapterParams q = p;
    q.*member = reshape(v, t.rows(), t.cols());
    return weighted_sum(adapter_forward(q, x), upstream);
  };
  return finite_difference_check(f, flat(t), flat(analytic), opts);
}

}  // namespace

std::vector<GradcheckEntry> run_gradcheck(std::uint64_t seed, std::size_t instances) {
  GradcheckEntry align_v{"alignment_loss/visual_tokens", 0, kGradTolerance, instances};
  GradcheckEntry align_tau{"alignment_loss/log_tau", 0, kGradTolerance, instances};
  GradcheckEntry align_t{"alignment_loss/text_features", 0, kGradTolerance, instances};
  GradcheckEntry gen{"generation_loss/logits", 0, kGradTolerance, instances};
  GradcheckEntry adapter_params{"adapter_mlp2/parameters", 0, kGradTolerance, instances};
  GradcheckEntry adapter_input{"adapter_mlp2/input", 0, kGradTolerance, instances};
  GradcheckEntry adapter_linear{"adapter_linear/all", 0, kGradTolerance, instances};
  GradcheckEntry lm_input{"toy_lm/input", 0, kLmGradTolerance, instances};

  const FdOptions opts{};
  const FdOptions adapter_opts{1e-5, 1e-6};
  const Rng base(seed);
  for (std::size_t inst = 0; inst < instances; ++inst) {
    Rng rng = base.derive({inst});

    {  // alignment loss
      const std::size_t n = 2 + inst % 7, d = 4 + inst % 13;
      const Matrix v = random_matrix(n, d, rng), t = random_matrix(n, d, rng);
      const TemperatureParam temp{rng.uniform() * 1.5 - 1.0};
      const LossBundle la = alignment_loss(v, t, temp, true);
      record(align_v, finite_difference_check(
                          [&](std::span<const double> x) {
                            return alignment_loss(reshape(x, n, d), t, temp).value;
                          },
                          flat(v), flat(la.grad(GradGroup::visual_tokens)), opts));
      record(align_t, finite_difference_check(
                          [&](std::span<const double> x) {
                            return alignment_loss(v, reshape(x, n, d), temp).value;
                          },
                          flat(t), flat(la.grad(GradGroup::text_features)), opts));
      const std::vector<double> lt{temp.log_tau};
      record(align_tau, finite_difference_check(
                            [&](std::span<const double> x) {
                              return alignment_loss(v, t, TemperatureParam{x[0]}).value;
                            },
                            lt, flat(la.grad(GradGroup::log_tau)), opts));
    }

    {  // generation loss
      const std::size_t positions = 5, vocab = 7;
      const Matrix logits = random_matrix(positions, vocab, rng, 2.0);
      std::vector<std::uint32_t> targets(positions);
      std::vector<std::uint8_t> mask(positions);
      for (std::size_t i = 0; i < positions; ++i) {
        targets[i] = static_cast<std::uint32_t>(rng.uniform_index(vocab));
        mask[i] = rng.uniform() < 0.7 ? 1 : 0;
      }
      mask[inst % positions] = 1;
      const LossBundle lg = generation_loss(logits, targets, mask);
      record(gen, finite_difference_check(
                      [&](std::span<const double> x) {
                        return generation_loss(reshape(x, positions, vocab), targets, mask).value;
                      },
                      flat(logits), flat(lg.grad(GradGroup::logits)), opts));
    }

    {  // adapters
      const std::size_t rows = 1 + inst % 8, d_v = 6 + inst % 11, d_h = 5 + inst % 12,
                        d_out = 4 + inst % 13;
      const Matrix x = random_matrix(rows, d_v, rng);
      for (auto arch : {AdapterArch::mlp2, AdapterArch::linear}) {
        const AdapterParams p = init_adapter(arch, d_v, d_h, d_out, rng.next_u64());
        const Matrix upstream = random_matrix(rows, d_out, rng);
        const auto back = adapter_backward(p, x, upstream);
        auto& entry = arch == AdapterArch::mlp2 ? adapter_params : adapter_linear;
        record(entry, check_adapter_tensor(p, x, upstream, &AdapterParams::w1, back.params.w1, adapter_opts));
        record(entry, check_adapter_tensor(p, x, upstream, &AdapterParams::b1, back.params.b1, adapter_opts));
        if (arch == AdapterArch::mlp2) {
          record(entry, check_adapter_tensor(p, x, upstream, &AdapterParams::w2, back.params.w2, adapter_opts));
          record(entry, check_adapter_tensor(p, x, upstream, &AdapterParams::b2, back.params.b2, adapter_opts));
        }
        auto& input_entry = arch == AdapterArch::mlp2 ? adapter_input : adapter_linear;
        record(input_entry, finite_difference_check(
                                [&](std::span<const double> v) {
                                  return weighted_sum(adapter_forward(p, reshape(v, rows, d_v)), upstream);
                                },
                                flat(x), flat(back.input), adapter_opts));
      }
    }

    {  // toy LM input gradient
      const std::size_t d = inst % 2 == 0 ? 8 : 16, len = 2 + inst % 5;
      const Tokenizer tok(TokenizerSpec{"abc", 2, UnknownPolicy::strict});
      const std::uint64_t lm_seed = rng.next_u64();
      const ToyLm lm(init_toy_lm({d, 2, 2 * d}, lm_seed),
                     init_embedding_table(tok.vocab_size(), d, lm_seed));
      ModelInput input{random_matrix(len, d, rng), len / 2};
      std::vector<std::size_t> positions(len);
      for (std::size_t t = 0; t < len; ++t) positions[t] = t;
      const LmPass pass = lm.forward_pass(input, positions);
      const Matrix weights = random_matrix(len, lm.vocab_size(), rng);
      const Matrix dx = lm.backward_input(pass, weights);
      record(lm_input, finite_difference_check(
                           [&](std::span<const double> v) {
                             ModelInput in{reshape(v, len, d), input.boundary};
                             return weighted_sum(lm.forward(in), weights);
                           },
                           flat(input.vectors), flat(dx), opts));
    }
  }
  return {align_v, align_tau, align_t, gen, adapter_params, adapter_input, adapter_linear, lm_input};
}

}  // namespace sea
