#pragma once

// Shared helpers for the unit and acceptance tests: seeded generators,
// scratch directories, a tiny wordpiece vocabulary and independent oracles.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lexlift/embedding.hpp"
#include "lexlift/vocab.hpp"
#include "lexlift/wordpiece.hpp"

namespace testsupport {

namespace fs = std::filesystem;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double normal(double mean = 0.0, double sd = 1.0) { return std::normal_distribution<double>(mean, sd)(engine_); }
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {  // inclusive
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
  }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(integer(0, static_cast<std::int64_t>(n) - 1)); }
  bool coin(double p = 0.5) { return uniform() < p; }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const noexcept { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

void write_file(const fs::path& path, const std::string& text);
std::string read_file(const fs::path& path);

/// Specials plus enough pieces that "dementia" splits as dem ##ent ##ia and
/// "euthymia" as e ##uth ##ym ##ia.
lexlift::wordpiece::WordpieceVocab fixture_wordpiece_vocab();

/// rows x cols table with N(0, sd) entries.
lexlift::EmbeddingTable random_table(Rng& rng, std::size_t rows, std::size_t cols, double sd = 1.0);

using LdMatrix = std::vector<std::vector<long double>>;  // row-major rows

/// Moore-Penrose pseudo-inverse (cols x rows) from a one-sided Jacobi SVD in
/// long double. Independent of Eigen.
LdMatrix jacobi_pseudo_inverse(const LdMatrix& a);

/// Minimum-norm least-squares W (d_out x d_in) with A W^T ~= B.
LdMatrix oracle_least_squares(const LdMatrix& a, const LdMatrix& b);

/// Location of the published cased BERT vocabulary, if present.
std::optional<fs::path> bert_cased_vocab_path();

}  // namespace testsupport
