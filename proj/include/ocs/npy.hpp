#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ocs::npy {

/// Element types of the supported NPY v1.0 subset (little-endian only).
enum class DType { f32, f64, i32, i64 };

std::string descr(DType t);
std::size_t item_size(DType t);

/// A 1-D or 2-D C-order array as stored on disk. `payload` holds the raw
/// little-endian element bytes exactly as read, so f32 data survives a
/// load/save cycle bit for bit.
struct Array {
  DType dtype = DType::f64;
  std::vector<std::size_t> shape;
  std::vector<std::byte> payload;

  std::size_t size() const;
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() == 2 ? shape[1] : 1; }

  /// Elements widened to double.
  std::vector<double> to_doubles() const;
  /// Elements as integers; float payloads must hold integral values.
  std::vector<std::int64_t> to_ints() const;
};

Array read(const std::filesystem::path& path);
Array parse(std::span<const std::byte> bytes);

void write(const std::filesystem::path& path, const Array& array);
std::vector<std::byte> serialize(const Array& array);

/// Builds an array of the given dtype from doubles (narrowing for f32 / ints).
Array from_doubles(std::span<const double> values, std::vector<std::size_t> shape,
                   DType dtype = DType::f64);
Array from_ints(std::span<const std::int64_t> values, std::vector<std::size_t> shape,
                DType dtype = DType::i64);

}  // namespace ocs::npy
