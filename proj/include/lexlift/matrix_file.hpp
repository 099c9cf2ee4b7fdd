#pragma once

#include <cstdint>
#include <filesystem>
#include <span>

#include "lexlift/embedding.hpp"

namespace lexlift {

// On-disk layout, little-endian, no padding:
//   "GLEX" | u32 version | u64 rows | u64 cols | rows*cols float32 row-major
inline constexpr char kMatrixMagic[4] = {'G', 'L', 'E', 'X'};
inline constexpr std::uint32_t kMatrixVersion = 1;
inline constexpr std::size_t kMatrixHeaderBytes = 4 + 4 + 8 + 8;

struct MatrixHeader {
  std::uint32_t version = kMatrixVersion;
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
};

void write_matrix(const std::filesystem::path& path, const EmbeddingTable& table);
void write_matrix(const std::filesystem::path& path, std::uint64_t rows, std::uint64_t cols,
                  std::span<const float> values);

/// Validates magic, version and that the payload size matches the header.
MatrixHeader read_matrix_header(const std::filesystem::path& path);
EmbeddingTable read_matrix(const std::filesystem::path& path);

/// Read-only memory map of a matrix file. The payload is exposed in place when
/// the host is little-endian.
class MappedMatrix {
 public:
  explicit MappedMatrix(const std::filesystem::path& path);
  ~MappedMatrix();
  MappedMatrix(const MappedMatrix&) = delete;
  MappedMatrix& operator=(const MappedMatrix&) = delete;
  MappedMatrix(MappedMatrix&& other) noexcept;
  MappedMatrix& operator=(MappedMatrix&& other) noexcept;

  const MatrixHeader& header() const noexcept { return header_; }
  std::span<const std::byte> bytes() const noexcept;
  /// Decoded payload; copies only on big-endian hosts.
  EmbeddingTable to_table() const;

 private:
  void release() noexcept;

  void* base_ = nullptr;
  std::size_t length_ = 0;
  MatrixHeader header_;
};

}  // namespace lexlift
