#include "lexlift/matrix_file.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <utility>

#include "lexlift/error.hpp"

namespace lexlift {
namespace {

template <class T>
void store_le(std::byte* out, T value) {
  std::array<std::byte, sizeof(T)> raw;
  std::memcpy(raw.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
  std::memcpy(out, raw.data(), sizeof(T));
}

template <class T>
T load_le(const std::byte* in) {
  std::array<std::byte, sizeof(T)> raw;
  std::memcpy(raw.data(), in, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
  T value;
  std::memcpy(&value, raw.data(), sizeof(T));
  return value;
}

std::array<std::byte, kMatrixHeaderBytes> encode_header(std::uint64_t rows, std::uint64_t cols) {
  std::array<std::byte, kMatrixHeaderBytes> header{};
  std::memcpy(header.data(), kMatrixMagic, 4);
  store_le<std::uint32_t>(header.data() + 4, kMatrixVersion);
  store_le<std::uint64_t>(header.data() + 8, rows);
  store_le<std::uint64_t>(header.data() + 16, cols);
  return header;
}

MatrixHeader decode_header(std::span<const std::byte> bytes, std::uint64_t file_size,
                           const std::filesystem::path& path) {
  if (bytes.size() < kMatrixHeaderBytes) {
    throw FormatError(path.string() + ": truncated matrix header");
  }
  if (std::memcmp(bytes.data(), kMatrixMagic, 4) != 0) {
    throw FormatError(path.string() + ": bad magic, expected GLEX");
  }
  MatrixHeader header;
  header.version = load_le<std::uint32_t>(bytes.data() + 4);
  header.rows = load_le<std::uint64_t>(bytes.data() + 8);
  header.cols = load_le<std::uint64_t>(bytes.data() + 16);
  if (header.version != kMatrixVersion) {
    throw FormatError(path.string() + ": unsupported matrix version " +
                      std::to_string(header.version));
  }
  const auto max_values = (std::numeric_limits<std::uint64_t>::max() - kMatrixHeaderBytes) / 4;
  if (header.cols != 0 && header.rows > max_values / header.cols) {
    throw FormatError(path.string() + ": matrix dimensions overflow");
  }
  const std::uint64_t expected = kMatrixHeaderBytes + header.rows * header.cols * 4;
  if (file_size != expected) {
    throw FormatError(path.string() + ": payload size " + std::to_string(file_size) +
                      " does not match header " + std::to_string(header.rows) + "x" +
                      std::to_string(header.cols));
  }
  return header;
}

}  // namespace

void write_matrix(const std::filesystem::path& path, const EmbeddingTable& table) {
  write_matrix(path, table.rows(), table.dim(), table.data());
}

void write_matrix(const std::filesystem::path& path, std::uint64_t rows, std::uint64_t cols,
                  std::span<const float> values) {
  if (values.size() != rows * cols) {
    throw DimensionError("matrix payload does not match " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write matrix file " + path.string());
  const auto header = encode_header(rows, cols);
  out.write(reinterpret_cast<const char*>(header.data()), header.size());
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size_bytes()));
  } else {
    std::array<std::byte, 4> buf;
    for (float v : values) {
      store_le<float>(buf.data(), v);
      out.write(reinterpret_cast<const char*>(buf.data()), 4);
    }
  }
  out.flush();
  if (!out) throw IoError("error writing matrix file " + path.string());
}

MatrixHeader read_matrix_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open matrix file " + path.string());
  std::array<std::byte, kMatrixHeaderBytes> raw{};
  in.read(reinterpret_cast<char*>(raw.data()), raw.size());
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw IoError("cannot stat matrix file " + path.string());
  return decode_header(std::span(raw.data(), static_cast<std::size_t>(in.gcount())), size, path);
}

EmbeddingTable read_matrix(const std::filesystem::path& path) {
  return MappedMatrix(path).to_table();
}

MappedMatrix::MappedMatrix(const std::filesystem::path& path) {
  const int fd = ::open(path.c_str(), O_RDONLY);
  if (fd < 0) throw IoError("cannot open matrix file " + path.string());
  struct stat st {};
  if (::fstat(fd, &st) != 0) {
    ::close(fd);
    throw IoError("cannot stat matrix file " + path.string());
  }
  length_ = static_cast<std::size_t>(st.st_size);
  if (length_ > 0) {
    base_ = ::mmap(nullptr, length_, PROT_READ, MAP_PRIVATE, fd, 0);
    if (base_ == MAP_FAILED) {
      base_ = nullptr;
      ::close(fd);
      throw IoError("cannot map matrix file " + path.string());
    }
  }
  ::close(fd);
  try {
    header_ = decode_header(bytes(), length_, path);
  } catch (...) {
    release();
    throw;
  }
}

MappedMatrix::~MappedMatrix() { release(); }

MappedMatrix::MappedMatrix(MappedMatrix&& other) noexcept
    : base_(std::exchange(other.base_, nullptr)),
      length_(std::exchange(other.length_, 0)),
      header_(other.header_) {}

MappedMatrix& MappedMatrix::operator=(MappedMatrix&& other) noexcept {
  if (this != &other) {
    release();
    base_ = std::exchange(other.base_, nullptr);
    length_ = std::exchange(other.length_, 0);
    header_ = other.header_;
  }
  return *this;
}

void MappedMatrix::release() noexcept {
  if (base_ != nullptr) ::munmap(base_, length_);
  base_ = nullptr;
  length_ = 0;
}

std::span<const std::byte> MappedMatrix::bytes() const noexcept {
  return {static_cast<const std::byte*>(base_), length_};
}

EmbeddingTable MappedMatrix::to_table() const {
  const std::size_t n = header_.rows * header_.cols;
  std::vector<float> values(n);
  const std::byte* payload = bytes().data() + kMatrixHeaderBytes;
  if constexpr (std::endian::native == std::endian::little) {
    if (n > 0) std::memcpy(values.data(), payload, n * sizeof(float));
  } else {
    for (std::size_t i = 0; i < n; ++i) values[i] = load_le<float>(payload + 4 * i);
  }
  return EmbeddingTable(header_.rows, header_.cols, std::move(values));
}

}  // namespace lexlift
