// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sea/numerics.hpp"

namespace sea {

// Binary layout, all integers little-endian:
//   "SEA1" | u32 version | u64 entry_count |
//   entry*: u32 name_len | name bytes | u32 dtype | u32 rank | u64 dims[rank] | payload
// dtype 0 is float32, 1 is float64. Payloads are row-major.
inline constexpr char kTensorMagic[4] = {'S', 'E', 'A', '1'};
inline constexpr std::uint32_t kTensorFormatVersion = 1;

enum class DType : std::uint32_t { f32 = 0, f64 = 1 };

struct Tensor {
  std::string name;
  DType dtype = DType::f32;
  std::vector<std::uint64_t> dims;
  std::vector<float> f32;
  std::vector<double> f64;

  std::uint64_t element_count() const;
  bool operator==(const Tensor&) const = default;
};

/// Ordered collection of uniquely named tensors.
class TensorSet {
 public:
  void add(Tensor t);
  void add(std::string name, const EmbeddingMatrix& m);
  void add(std::string name, const Matrix& m);
  /// float32 tensor with explicit dims (e.g. an h x w x d patch grid).
  void add(std::string name, std::vector<std::uint64_t> dims, std::vector<float> data);
  void add_scalar(std::string name, double value);

  bool contains(std::string_view name) const;
  const Tensor& at(std::string_view name) const;
  /// Leading dims flatten into rows; the last dim is cols.
  EmbeddingMatrix embedding(std::string_view name) const;
  Matrix matrix(std::string_view name) const;
  double scalar(std::string_view name) const;

  const std::vector<Tensor>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool operator==(const TensorSet&) const = default;

 private:
  std::vector<Tensor> entries_;
};

std::string serialize_tensors(const TensorSet& set);
TensorSet deserialize_tensors(std::string_view bytes);

void save_tensors(const std::filesystem::path& path, const TensorSet& set);
TensorSet load_tensors(const std::filesystem::path& path);

}  // namespace sea
