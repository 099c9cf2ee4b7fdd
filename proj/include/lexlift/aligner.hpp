#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lexlift/embedding.hpp"
#include "lexlift/vocab.hpp"

namespace lexlift::align {

enum class MapKind { least_squares, identity, random };

std::string_view to_string(MapKind kind) noexcept;
MapKind parse_map_kind(std::string_view text);

/// W in R^{d_lm x d_w2v}, carrying Word2Vec vectors into the wordpiece space.
struct LinearMap {
  Eigen::MatrixXd matrix;  // d_lm rows, d_w2v cols
  MapKind kind = MapKind::least_squares;
  // For MapKind::random: seed of the random-init rule applied at extension.
  std::uint64_t seed = 0;

  std::size_t d_lm() const noexcept { return static_cast<std::size_t>(matrix.rows()); }
  std::size_t d_w2v() const noexcept { return static_cast<std::size_t>(matrix.cols()); }
};

/// Row i of `w2v` and `lm` belong to tokens[i].
struct TrainingPairs {
  std::vector<std::string> tokens;
  Eigen::MatrixXd w2v;  // n x d_w2v
  Eigen::MatrixXd lm;   // n x d_lm

  std::size_t size() const noexcept { return tokens.size(); }
};

/// Exact, case-sensitive string intersection of the two vocabularies, in
/// LM-vocabulary id order. Throws DataError when the intersection is empty.
TrainingPairs intersect_vocab(const Vocab& lm_vocab, const Vocab& w2v_vocab,
                              const EmbeddingTable& lm_table, const EmbeddingTable& w2v_table);

struct FitDiagnostics {
  bool used_pseudo_inverse = false;
  double condition_estimate = 0.0;
  std::size_t rank = 0;
  double residual_rms = 0.0;
};

/// Condition estimate above which the QR solution is replaced by the
/// minimum-norm pseudo-inverse solution.
inline constexpr double kConditionLimit = 1e12;

/// Unconstrained least squares: W = argmin sum_x ||W a_x - b_x||^2, solved as
/// A W^T ~= B by column-pivoted QR, falling back to an SVD pseudo-inverse
/// (with a logged warning) when A is rank-deficient or ill-conditioned.
LinearMap fit_linear_map(const TrainingPairs& pairs, FitDiagnostics* diagnostics = nullptr);

/// sum_x ||W a_x - b_x||^2.
double objective(const Eigen::MatrixXd& map, const TrainingPairs& pairs);

Eigen::VectorXd apply_map(const LinearMap& map, std::span<const double> vec);
/// float overload used on embedding rows; accumulates in double.
void apply_map(const LinearMap& map, std::span<const float> vec, std::span<float> out);

/// identity: W = I (requires d_lm == d_w2v). random: W = 0, marked so that
/// extension draws fresh vectors from `seed` instead of using Word2Vec values.
LinearMap make_ablation_map(MapKind kind, std::size_t d_lm, std::size_t d_w2v, std::uint64_t seed);

struct Neighbor {
  std::string token;
  double cosine = 0.0;
};

/// Nearest neighbours of one query token. The `*_query_*` lists are empty
/// when the query is absent from the corresponding space.
struct QueryReport {
  std::string query;
  bool found = false;
  bool in_lm = false;
  bool in_w2v = false;
  bool training_pair = false;
  std::vector<Neighbor> lm_query_in_lm;    // E_LM(q) vs E_LM[L_LM]
  std::vector<Neighbor> lm_query_in_w2v;   // E_LM(q) vs W E_W2V[L_W2V]
  std::vector<Neighbor> w2v_query_in_lm;   // W E_W2V(q) vs E_LM[L_LM]
  std::vector<Neighbor> w2v_query_in_w2v;  // W E_W2V(q) vs W E_W2V[L_W2V]
};

/// Top-k cosine neighbours within and across the original wordpiece space and
/// the aligned Word2Vec space. The query's own vector is excluded from its
/// own space; cross-space hits on the same token are kept.
std::vector<QueryReport> alignment_report(const LinearMap& map, const TrainingPairs& pairs,
                                          const Vocab& w2v_vocab, const EmbeddingTable& w2v_table,
                                          const Vocab& lm_vocab, const EmbeddingTable& lm_table,
                                          std::span<const std::string> queries, std::size_t k,
                                          int workers = 1);

struct MapMetadata {
  MapKind kind = MapKind::least_squares;
  std::size_t d_lm = 0;
  std::size_t d_w2v = 0;
  std::size_t n_pairs = 0;
  double residual_rms = 0.0;
  std::uint64_t seed = 0;
};

/// Writes the matrix file plus `<path>.json`. The on-disk matrix is float32.
void save_map(const std::filesystem::path& path, const LinearMap& map, const MapMetadata& meta);
struct LoadedMap {
  LinearMap map;
  MapMetadata meta;
};
LoadedMap load_map(const std::filesystem::path& path);
std::filesystem::path map_sidecar(const std::filesystem::path& path);

}  // namespace lexlift::align
