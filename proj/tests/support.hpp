// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "sea/labeling.hpp"
#include "sea/numerics.hpp"
#include "sea/rng.hpp"
#include "sea/synthetic.hpp"

namespace sea::test {

/// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("sea_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = scale * rng.normal();
  return m;
}

inline EmbeddingMatrix random_embedding(std::size_t rows, std::size_t cols, Rng& rng) {
  EmbeddingMatrix m(rows, cols);
  for (float& v : m.data()) v = static_cast<float>(rng.normal());
  return m;
}

inline double rel_diff(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

/// Cosine computed straight from the definition, in long double.
inline long double cosine_ld(std::span<const float> a, std::span<const float> b) {
  long double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += static_cast<long double>(a[i]) * b[i];
    aa += static_cast<long double>(a[i]) * a[i];
    bb += static_cast<long double>(b[i]) * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

/// Labels by full sort of every word, then truncation and positivity filter.
inline std::vector<SemanticLabelSet> brute_force_labels(const EmbeddingMatrix& patches,
                                                        const EmbeddingMatrix& words, std::size_t n,
                                                        bool negate) {
  std::vector<SemanticLabelSet> out;
  for (std::size_t p = 0; p < patches.rows(); ++p) {
    std::vector<std::pair<double, std::uint32_t>> all;
    for (std::size_t w = 0; w < words.rows(); ++w) {
      const double c = static_cast<double>(cosine_ld(patches.row(p), words.row(w)));
      all.emplace_back(negate ? -c : c, static_cast<std::uint32_t>(w));
    }
    std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) {
      return x.first != y.first ? x.first > y.first : x.second < y.second;
    });
    SemanticLabelSet s;
    s.patch_index = p;
    for (std::size_t i = 0; i < std::min(n, all.size()); ++i) {
      if (all[i].first > 0.0) s.labels.push_back({all[i].second, all[i].first});
    }
    out.push_back(std::move(s));
  }
  return out;
}

/// Symmetric InfoNCE by explicit double loops over pairs.
inline double alignment_two_loop(const Matrix& v, const Matrix& t, double log_tau) {
  const std::size_t n = v.rows(), d = v.cols();
  const double tau = std::exp(log_tau);
  std::vector<double> phi(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      long double ab = 0, aa = 0, bb = 0;
      for (std::size_t k = 0; k < d; ++k) {
        ab += static_cast<long double>(v(i, k)) * t(j, k);
        aa += static_cast<long double>(v(i, k)) * v(i, k);
        bb += static_cast<long double>(t(j, k)) * t(j, k);
      }
      phi[i * n + j] = static_cast<double>(ab / std::sqrt(aa * bb)) / tau;
    }
  }
  long double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    long double row = 0, col = 0;
    for (std::size_t j = 0; j < n; ++j) {
      row += std::exp(static_cast<long double>(phi[i * n + j]));
      col += std::exp(static_cast<long double>(phi[j * n + i]));
    }
    total += (phi[i * n + i] - std::log(row)) + (phi[i * n + i] - std::log(col));
  }
  return static_cast<double>(-total / (2.0L * n));
}

/// A corpus small enough for many training steps inside a unit test.
inline SyntheticCorpusSpec tiny_spec(std::uint64_t seed = 3) {
  SyntheticCorpusSpec s;
  s.vocab_size = 12;
  s.d_v = 8;
  s.d_llm = 16;
  s.height = 4;
  s.width = 4;
  s.images = 12;
  s.noise_sigma = 0.05;
  s.seed = seed;
  return s;
}

}  // namespace sea::test
