// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "sea/error.hpp"
#include "sea/losses.hpp"
#include "support.hpp"

using namespace sea;

namespace {

std::vector<double> flat(const Matrix& m) { return {m.data().begin(), m.data().end()}; }

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected sea::Error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("alignment loss of a single pair is exactly zero") {
  Rng rng(1);
  for (int i = 0; i < 10; ++i) {
    const auto la = alignment_loss(test::random_matrix(1, 5, rng), test::random_matrix(1, 5, rng),
                                   TemperatureParam{rng.normal()});
    CHECK(la.value == 0.0);
  }
}

TEST_CASE("alignment loss of the 2x2 identity case is softplus(-1)") {
  const Matrix eye = Matrix::from_rows({{1, 0}, {0, 1}});
  const auto la = alignment_loss(eye, eye, TemperatureParam{0.0});
  CHECK(std::abs(la.value - std::log1p(std::exp(-1.0))) < 1e-12);
  CHECK(std::abs(la.value - 0.3133) < 1e-4);
}

TEST_CASE("alignment loss matches the two-loop oracle") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(12), d = 1 + rng.uniform_index(16);
    const Matrix v = test::random_matrix(n, d, rng), t = test::random_matrix(n, d, rng);
    const double log_tau = rng.uniform() * 3.0 - 2.0;
    const double got = alignment_loss(v, t, TemperatureParam{log_tau}).value;
    const double want = test::alignment_two_loop(v, t, log_tau);
    if (n == 1) {
      CHECK(got == 0.0);
    } else {
      CHECK(test::rel_diff(got, want) < 1e-9);
    }
  }
}

TEST_CASE("alignment gradients match finite differences on a 6x8 instance") {
  Rng rng(3);
  const Matrix v = test::random_matrix(6, 8, rng), t = test::random_matrix(6, 8, rng);
  const TemperatureParam temp{-0.3};
  const auto la = alignment_loss(v, t, temp, true);
  const auto fv = [&](std::span<const double> x) {
    return alignment_loss(Matrix(6, 8, {x.begin(), x.end()}), t, temp).value;
  };
  CHECK(finite_difference_check(fv, flat(v), flat(la.grad(GradGroup::visual_tokens))).max_rel_error < 1e-4);
  const auto ft = [&](std::span<const double> x) {
    return alignment_loss(v, Matrix(6, 8, {x.begin(), x.end()}), temp).value;
  };
  CHECK(finite_difference_check(ft, flat(t), flat(la.grad(GradGroup::text_features))).max_rel_error < 1e-4);
  const auto fl = [&](std::span<const double> x) {
    return alignment_loss(v, t, TemperatureParam{x[0]}).value;
  };
  const std::vector<double> lt{temp.log_tau};
  CHECK(finite_difference_check(fl, lt, flat(la.grad(GradGroup::log_tau))).max_rel_error < 1e-4);
  CHECK_FALSE(alignment_loss(v, t, temp).has(GradGroup::text_features));
}

TEST_CASE("alignment loss is invariant to positive row scaling and joint permutation") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(8), d = 3 + rng.uniform_index(6);
    const Matrix v = test::random_matrix(n, d, rng), t = test::random_matrix(n, d, rng);
    const TemperatureParam temp{rng.normal() * 0.5};
    const double base = alignment_loss(v, t, temp).value;

    Matrix vs = v, ts = t;
    for (std::size_t r = 0; r < n; ++r) {
      const double a = std::exp(rng.normal()), b = std::exp(rng.normal());
      for (double& x : vs.row(r)) x *= a;
      for (double& x : ts.row(r)) x *= b;
    }
    CHECK(std::abs(alignment_loss(vs, ts, temp).value - base) < 1e-6);

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.uniform_index(i)]);
    Matrix vp(n, d), tp(n, d);
    for (std::size_t r = 0; r < n; ++r) {
      std::ranges::copy(v.row(perm[r]), vp.row(r).begin());
      std::ranges::copy(t.row(perm[r]), tp.row(r).begin());
    }
    CHECK(std::abs(alignment_loss(vp, tp, temp).value - base) < 1e-12);
  }
}

TEST_CASE("gradient descent on a fixed instance decreases the alignment loss") {
  Rng rng(5);
  Matrix v = test::random_matrix(5, 6, rng);
  const Matrix t = test::random_matrix(5, 6, rng);
  const TemperatureParam temp{std::log(0.1)};
  double prev = alignment_loss(v, t, temp).value;
  for (int step = 0; step < 100; ++step) {
    const auto la = alignment_loss(v, t, temp);
    const Matrix& g = la.grad(GradGroup::visual_tokens);
    for (std::size_t i = 0; i < v.size(); ++i) v.data()[i] -= 0.01 * g.data()[i];
    const double now = alignment_loss(v, t, temp).value;
    CHECK(now < prev);
    prev = now;
  }
}

TEST_CASE("alignment loss errors") {
  Rng rng(6);
  const Matrix a = test::random_matrix(3, 4, rng);
  CHECK(code_of([&] { alignment_loss(a, test::random_matrix(2, 4, rng), {}); }) == ErrorCode::MismatchedBatch);
  CHECK(code_of([&] { alignment_loss(Matrix(0, 4), Matrix(0, 4), {}); }) == ErrorCode::MismatchedBatch);
  CHECK(code_of([&] { alignment_loss(a, test::random_matrix(3, 5, rng), {}); }) == ErrorCode::DimensionMismatch);
  Matrix z = a;
  for (double& x : z.row(1)) x = 0.0;
  CHECK(code_of([&] { alignment_loss(z, a, {}); }) == ErrorCode::ZeroRow);
}

TEST_CASE("generation loss of uniform logits is log vocab") {
  for (std::size_t vocab : {2u, 4u, 7u, 704u}) {
    const Matrix logits(3, vocab, 0.25);
    const std::vector<std::uint32_t> targets{0, 1, static_cast<std::uint32_t>(vocab - 1)};
    const std::vector<std::uint8_t> mask{1, 1, 1};
    CHECK(std::abs(generation_loss(logits, targets, mask).value - std::log(static_cast<double>(vocab))) < 1e-9);
  }
}

TEST_CASE("generation loss with a dominant correct class is tiny") {
  Matrix logits(1, 4);
  logits(0, 2) = 30.0;
  const std::vector<std::uint32_t> targets{2};
  const std::vector<std::uint8_t> mask{1};
  CHECK(generation_loss(logits, targets, mask).value < 1e-12);
}

TEST_CASE("generation loss matches a per-position oracle and finite differences") {
  Rng rng(7);
  const Matrix logits = test::random_matrix(5, 7, rng, 2.0);
  const std::vector<std::uint32_t> targets{3, 0, 6, 2, 2};
  const std::vector<std::uint8_t> mask{1, 0, 1, 1, 0};
  const auto lg = generation_loss(logits, targets, mask);
  long double sum = 0;
  for (std::size_t r : {0u, 2u, 3u}) {
    long double z = 0;
    for (double x : logits.row(r)) z += std::exp(static_cast<long double>(x));
    sum += std::log(z) - logits(r, targets[r]);
  }
  CHECK(test::rel_diff(lg.value, static_cast<double>(sum / 3)) < 1e-12);
  const Matrix& g = lg.grad(GradGroup::logits);
  for (std::size_t c = 0; c < 7; ++c) {
    CHECK(g(1, c) == 0.0);
    CHECK(g(4, c) == 0.0);
  }
  const auto f = [&](std::span<const double> x) {
    return generation_loss(Matrix(5, 7, {x.begin(), x.end()}), targets, mask).value;
  };
  CHECK(finite_difference_check(f, flat(logits), flat(g)).max_rel_error < 1e-4);
}

TEST_CASE("generation loss errors") {
  const Matrix logits(2, 3);
  const std::vector<std::uint32_t> targets{0, 1};
  const std::vector<std::uint8_t> none{0, 0};
  const std::vector<std::uint8_t> all{1, 1};
  CHECK(code_of([&] { generation_loss(logits, targets, none); }) == ErrorCode::EmptyMask);
  const std::vector<std::uint32_t> bad{0, 3};
  CHECK(code_of([&] { generation_loss(logits, bad, all); }) == ErrorCode::TargetOutOfRange);
}

TEST_CASE("combined loss is linear in lambda and reduces exactly at zero") {
  Rng rng(8);
  const Matrix v = test::random_matrix(4, 5, rng), t = test::random_matrix(4, 5, rng);
  const auto la = alignment_loss(v, t, TemperatureParam{0.2});
  LossBundle lg;
  lg.value = 1.25;
  lg.grads[GradGroup::visual_tokens] = test::random_matrix(4, 5, rng);

  const auto l0 = combined_loss(lg, la, 0.0);
  CHECK(l0.value == lg.value);
  CHECK(l0.grad(GradGroup::visual_tokens) == lg.grad(GradGroup::visual_tokens));
  CHECK_FALSE(l0.has(GradGroup::log_tau));

  const auto l1 = combined_loss(lg, la, 1.0);
  const auto l2 = combined_loss(lg, la, 2.0);
  CHECK(l1.value == doctest::Approx(lg.value + la.value));
  CHECK(l2.value - l1.value == doctest::Approx(l1.value - l0.value));
  const auto& g0 = l0.grad(GradGroup::visual_tokens);
  const auto& g1 = l1.grad(GradGroup::visual_tokens);
  const auto& g2 = l2.grad(GradGroup::visual_tokens);
  for (std::size_t i = 0; i < g0.size(); ++i) {
    CHECK(g2.data()[i] - g1.data()[i] == doctest::Approx(g1.data()[i] - g0.data()[i]).epsilon(1e-12));
  }
  CHECK(l2.grad(GradGroup::log_tau)(0, 0) == doctest::Approx(2 * la.grad(GradGroup::log_tau)(0, 0)));
  CHECK(code_of([&] { combined_loss(lg, la, -0.1); }) == ErrorCode::NegativeLambda);
}

TEST_CASE("finite difference checker on simple functions") {
  const auto sq = [](std::span<const double> x) { return x[0] * x[0]; };
  const std::vector<double> at3{3.0};
  const std::vector<double> six{6.0};
  const auto r = finite_difference_check(sq, at3, six);
  CHECK(std::abs(r.numeric[0] - 6.0) < 1e-8);
  CHECK(r.max_rel_error < 1e-9);
  const auto flat_fn = [](std::span<const double>) { return 4.0; };
  const std::vector<double> zero{0.0, 0.0};
  const std::vector<double> pt{1.0, -2.0};
  const auto c = finite_difference_check(flat_fn, pt, zero);
  CHECK(c.numeric == zero);
  CHECK(c.max_rel_error == 0.0);
  const auto bad = [](std::span<const double> x) { return x[0] > 1.0 ? NAN : 0.0; };
  const std::vector<double> edge{1.0};
  const std::vector<double> g{0.0};
  CHECK(code_of([&] { finite_difference_check(bad, edge, g); }) == ErrorCode::NonFiniteFunction);
}
