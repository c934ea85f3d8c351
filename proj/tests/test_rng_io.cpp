// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "sea/error.hpp"
#include "sea/histogram.hpp"
#include "sea/io.hpp"
#include "sea/rng.hpp"
#include "support.hpp"

using namespace sea;

TEST_CASE("rng streams are pure functions of seed, stream and counter") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(43);
  Rng d(42);
  CHECK(c.next_u64() != d.next_u64());
  const Rng base(7);
  Rng x = base.derive({1, 2, 3});
  Rng y = base.derive({1, 2, 3});
  Rng z = base.derive({1, 3, 2});
  CHECK(x.next_u64() == y.next_u64());
  CHECK(x.next_u64() != z.next_u64());
}

TEST_CASE("derived streams do not depend on draws from the parent") {
  Rng parent(5);
  const Rng before = parent.derive({9});
  for (int i = 0; i < 10; ++i) parent.next_u64();
  Rng after = parent.derive({9});
  Rng copy = before;
  CHECK(copy.next_u64() == after.next_u64());
}

TEST_CASE("uniform draws lie in [0, 1) with the right mean") {
  Rng rng(1);
  double sum = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("uniform_index covers the range and stays below n") {
  Rng rng(3);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto v = rng.uniform_index(7);
    REQUIRE(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
  CHECK(rng.uniform_index(1) == 0);
}

TEST_CASE("normal draws have unit variance") {
  Rng rng(4);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal();
    s += v;
    s2 += v * v;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("histogram bins, clamps and renders") {
  const std::vector<double> scores{-0.5, 0.05, 0.15, 0.15, 0.95, 1.0, 2.0};
  const auto h = similarity_histogram(scores, 10, 0.0, 1.0);
  REQUIRE(h.counts.size() == 10);
  CHECK(h.counts[0] == 2);
  CHECK(h.counts[1] == 2);
  CHECK(h.counts[9] == 3);
  CHECK(h.total() == scores.size());
  CHECK(h.bin_center(0) == doctest::Approx(0.05));
  const auto text = h.to_gnuplot();
  CHECK(text.rfind("# bin_center count", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 11);
  CHECK_FALSE(h.to_text(20).empty());
}

TEST_CASE("histogram errors") {
  const std::vector<double> one{0.5};
  const std::vector<double> none;
  const std::vector<double> nan{NAN};
  CHECK_THROWS_AS(similarity_histogram(one, 0, 0, 1), Error);
  CHECK_THROWS_AS(similarity_histogram(one, 4, 1, 1), Error);
  try {
    similarity_histogram(none, 4, 0, 1);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyScores);
  }
  try {
    similarity_histogram(nan, 4, 0, 1);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteInput);
  }
}

TEST_CASE("fnv1a matches published test vectors") {
  CHECK(fnv1a(std::string_view{}) == 0xcbf29ce484222325ULL);
  CHECK(fnv1a(std::string_view{"a"}) == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a(std::string_view{"foobar"}) == 0x85944171f73967e8ULL);
  CHECK(fnv1a("bar", fnv1a("foo")) == fnv1a("foobar"));
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("atomic write replaces content and leaves no temp file") {
  test::TempDir dir("io");
  const auto p = dir / "f.txt";
  write_file_atomic(p, "first");
  write_file_atomic(p, "second");
  CHECK(read_file(p) == "second");
  CHECK_FALSE(std::filesystem::exists(dir / "f.txt.tmp"));
  CHECK_THROWS_AS(read_file(dir / "missing"), Error);
  CHECK_THROWS_AS(write_file_atomic(dir / "no/such/dir/f", "x"), Error);
}
