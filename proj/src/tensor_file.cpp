// SPDX-License-Identifier: Apache-2.0
#include "sea/tensor_file.hpp"

#include <bit>
#include <cstring>

#include "sea/io.hpp"

namespace sea {
namespace {

template <typename T>
void put(std::string& out, T value) {
  static_assert(std::is_unsigned_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
  }
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      value |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return value;
  }

  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorCode::TruncatedPayload,
                  "need " + std::to_string(n) + " bytes at offset " + std::to_string(pos_));
    }
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::uint64_t product(const std::vector<std::uint64_t>& dims) {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

}  // namespace

std::uint64_t Tensor::element_count() const { return product(dims); }

void TensorSet::add(Tensor t) {
  if (contains(t.name)) throw Error(ErrorCode::InvalidArgument, "duplicate tensor name " + t.name);
  const auto n = t.element_count();
  const auto have = t.dtype == DType::f32 ? t.f32.size() : t.f64.size();
  if (have != n) throw Error(ErrorCode::DimensionMismatch, "payload size for " + t.name);
  entries_.push_back(std::move(t));
}

void TensorSet::add(std::string name, const EmbeddingMatrix& m) {
  add(std::move(name), {m.rows(), m.cols()}, {m.data().begin(), m.data().end()});
}

void TensorSet::add(std::string name, const Matrix& m) {
  Tensor t{std::move(name), DType::f64, {m.rows(), m.cols()}, {}, {m.data().begin(), m.data().end()}};
  add(std::move(t));
}

void TensorSet::add(std::string name, std::vector<std::uint64_t> dims, std::vector<float> data) {
  add(Tensor{std::move(name), DType::f32, std::move(dims), std::move(data), {}});
}

void TensorSet::add_scalar(std::string name, double value) {
  add(Tensor{std::move(name), DType::f64, {}, {}, {value}});
}

bool TensorSet::contains(std::string_view name) const {
  for (const auto& e : entries_)
    if (e.name == name) return true;
  return false;
}

const Tensor& TensorSet::at(std::string_view name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e;
  throw Error(ErrorCode::MissingEntry, std::string(name));
}

EmbeddingMatrix TensorSet::embedding(std::string_view name) const {
  const auto& t = at(name);
  if (t.dtype != DType::f32 || t.dims.empty()) {
    throw Error(ErrorCode::DimensionMismatch, std::string(name) + " is not a float32 matrix");
  }
  const std::uint64_t cols = t.dims.back();
  return EmbeddingMatrix(cols == 0 ? 0 : t.element_count() / cols, cols, t.f32);
}

Matrix TensorSet::matrix(std::string_view name) const {
  const auto& t = at(name);
  if (t.dims.empty()) throw Error(ErrorCode::DimensionMismatch, std::string(name) + " is a scalar");
  const std::uint64_t cols = t.dims.back();
  const std::uint64_t rows = cols == 0 ? 0 : t.element_count() / cols;
  if (t.dtype == DType::f64) return Matrix(rows, cols, t.f64);
  return Matrix(rows, cols, std::vector<double>(t.f32.begin(), t.f32.end()));
}

double TensorSet::scalar(std::string_view name) const {
  const auto& t = at(name);
  if (t.element_count() != 1) throw Error(ErrorCode::DimensionMismatch, std::string(name));
  return t.dtype == DType::f64 ? t.f64.front() : t.f32.front();
}

std::string serialize_tensors(const TensorSet& set) {
  std::string out(kTensorMagic, 4);
  put<std::uint32_t>(out, kTensorFormatVersion);
  put<std::uint64_t>(out, set.size());
  for (const auto& t : set.entries()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.dtype));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) put<std::uint64_t>(out, d);
    if (t.dtype == DType::f32) {
      for (float v : t.f32) put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
    } else {
      for (double v : t.f64) put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    }
  }
  return out;
}

TensorSet deserialize_tensors(std::string_view bytes) {
  Reader in(bytes);
  if (in.remaining() < 4 || std::memcmp(bytes.data(), kTensorMagic, 4) != 0) {
    throw Error(ErrorCode::BadMagic, "not a SEA1 tensor file");
  }
  in.take(4);
  const auto version = in.get<std::uint32_t>();
  if (version != kTensorFormatVersion) {
    throw Error(ErrorCode::VersionUnsupported, "version " + std::to_string(version));
  }
  const auto count = in.get<std::uint64_t>();
  TensorSet set;
  for (std::uint64_t e = 0; e < count; ++e) {
    Tensor t;
    t.name = std::string(in.take(in.get<std::uint32_t>()));
    const auto dtype = in.get<std::uint32_t>();
    if (dtype > 1) throw Error(ErrorCode::VersionUnsupported, "dtype " + std::to_string(dtype));
    t.dtype = static_cast<DType>(dtype);
    const auto rank = in.get<std::uint32_t>();
    for (std::uint32_t r = 0; r < rank; ++r) t.dims.push_back(in.get<std::uint64_t>());
    const auto n = t.element_count();
    const std::size_t width = t.dtype == DType::f32 ? 4 : 8;
    if (n > in.remaining() / width) {
      throw Error(ErrorCode::TruncatedPayload, "payload of " + t.name);
    }
    if (t.dtype == DType::f32) {
      t.f32.resize(n);
      for (auto& v : t.f32) v = std::bit_cast<float>(in.get<std::uint32_t>());
    } else {
      t.f64.resize(n);
      for (auto& v : t.f64) v = std::bit_cast<double>(in.get<std::uint64_t>());
    }
    set.add(std::move(t));
  }
  return set;
}

void save_tensors(const std::filesystem::path& path, const TensorSet& set) {
  write_file_atomic(path, serialize_tensors(set));
}

TensorSet load_tensors(const std::filesystem::path& path) {
  return deserialize_tensors(read_file(path));
}

}  // namespace sea
