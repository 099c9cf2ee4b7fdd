#include "lexlift/aligner.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include "json.hpp"
#include <unordered_set>

#include "lexlift/error.hpp"
#include "lexlift/kernels/dense.hpp"
#include "lexlift/log.hpp"
#include "lexlift/matrix_file.hpp"

namespace lexlift::align {

std::string_view to_string(MapKind kind) noexcept {
  switch (kind) {
    case MapKind::least_squares: return "least_squares";
    case MapKind::identity: return "identity";
    case MapKind::random: return "random";
  }
  return "least_squares";
}

MapKind parse_map_kind(std::string_view text) {
  if (text == "least_squares") return MapKind::least_squares;
  if (text == "identity") return MapKind::identity;
  if (text == "random") return MapKind::random;
  throw ConfigError("unknown map kind '" + std::string(text) + "'");
}

TrainingPairs intersect_vocab(const Vocab& lm_vocab, const Vocab& w2v_vocab,
                              const EmbeddingTable& lm_table, const EmbeddingTable& w2v_table) {
  if (lm_table.rows() != lm_vocab.size()) {
    throw DimensionError("LM table has " + std::to_string(lm_table.rows()) + " rows for " +
                         std::to_string(lm_vocab.size()) + " vocabulary entries");
  }
  if (w2v_table.rows() != w2v_vocab.size()) {
    throw DimensionError("Word2Vec table has " + std::to_string(w2v_table.rows()) + " rows for " +
                         std::to_string(w2v_vocab.size()) + " vocabulary entries");
  }
  std::vector<std::pair<std::size_t, std::size_t>> rows;
  for (std::size_t i = 0; i < lm_vocab.size(); ++i) {
    if (auto j = w2v_vocab.find(lm_vocab.token(static_cast<TokenId>(i)))) {
      rows.emplace_back(i, static_cast<std::size_t>(*j));
    }
  }
  if (rows.empty()) throw DataError("vocabulary intersection is empty; alignment is impossible");

  TrainingPairs pairs;
  const auto n = static_cast<Eigen::Index>(rows.size());
  pairs.w2v.resize(n, static_cast<Eigen::Index>(w2v_table.dim()));
  pairs.lm.resize(n, static_cast<Eigen::Index>(lm_table.dim()));
  pairs.tokens.reserve(rows.size());
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto [lm_row, w2v_row] = rows[static_cast<std::size_t>(r)];
    pairs.tokens.push_back(lm_vocab.token(static_cast<TokenId>(lm_row)));
    const auto a = w2v_table.row(w2v_row);
    const auto b = lm_table.row(lm_row);
    for (std::size_t c = 0; c < a.size(); ++c) pairs.w2v(r, static_cast<Eigen::Index>(c)) = a[c];
    for (std::size_t c = 0; c < b.size(); ++c) pairs.lm(r, static_cast<Eigen::Index>(c)) = b[c];
  }
  return pairs;
}

LinearMap fit_linear_map(const TrainingPairs& pairs, FitDiagnostics* diagnostics) {
  const Eigen::MatrixXd& a = pairs.w2v;
  const Eigen::MatrixXd& b = pairs.lm;
  if (pairs.size() == 0 || a.rows() == 0) throw DataError("cannot fit a linear map on zero pairs");
  if (a.rows() != b.rows() || static_cast<std::size_t>(a.rows()) != pairs.size()) {
    throw DimensionError("training pair matrices disagree on the number of rows");
  }

  FitDiagnostics diag;
  Eigen::MatrixXd solution;  // d_w2v x d_lm, i.e. W^T
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::Index k = std::min(a.rows(), a.cols());
  const double r_max = std::abs(qr.matrixR()(0, 0));
  const double r_min = std::abs(qr.matrixR()(k - 1, k - 1));
  diag.condition_estimate = r_min > 0.0 ? r_max / r_min : std::numeric_limits<double>::infinity();
  diag.rank = static_cast<std::size_t>(qr.rank());

  const bool full_rank = a.rows() >= a.cols() && qr.rank() == a.cols();
  if (full_rank && diag.condition_estimate <= kConditionLimit) {
    solution = qr.solve(b);
  } else {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    solution = svd.solve(b);
    diag.used_pseudo_inverse = true;
    diag.rank = static_cast<std::size_t>(svd.rank());
    log::warn("alignment system is rank-deficient or ill-conditioned (rank " + std::to_string(diag.rank) +
              " of " + std::to_string(a.cols()) + ", condition estimate " +
              std::to_string(diag.condition_estimate) + "); using the minimum-norm pseudo-inverse solution");
  }

  LinearMap map{solution.transpose(), MapKind::least_squares, 0};
  diag.residual_rms = std::sqrt(objective(map.matrix, pairs) / static_cast<double>(b.size()));
  if (diagnostics != nullptr) *diagnostics = diag;
  return map;
}

double objective(const Eigen::MatrixXd& map, const TrainingPairs& pairs) {
  if (map.cols() != pairs.w2v.cols() || map.rows() != pairs.lm.cols()) {
    throw DimensionError("map shape does not match the training pairs");
  }
  return (pairs.w2v * map.transpose() - pairs.lm).squaredNorm();
}

Eigen::VectorXd apply_map(const LinearMap& map, std::span<const double> vec) {
  if (vec.size() != map.d_w2v()) {
    throw DimensionError("vector of length " + std::to_string(vec.size()) + " applied to map expecting " +
                         std::to_string(map.d_w2v()));
  }
  Eigen::VectorXd out(map.matrix.rows());
  for (Eigen::Index r = 0; r < map.matrix.rows(); ++r) {
    double acc = 0.0;
    for (Eigen::Index c = 0; c < map.matrix.cols(); ++c) acc += map.matrix(r, c) * vec[static_cast<std::size_t>(c)];
    out(r) = acc;
  }
  return out;
}

void apply_map(const LinearMap& map, std::span<const float> vec, std::span<float> out) {
  if (vec.size() != map.d_w2v() || out.size() != map.d_lm()) {
    throw DimensionError("apply_map: expected " + std::to_string(map.d_w2v()) + " -> " +
                         std::to_string(map.d_lm()) + ", got " + std::to_string(vec.size()) + " -> " +
                         std::to_string(out.size()));
  }
  for (Eigen::Index r = 0; r < map.matrix.rows(); ++r) {
    double acc = 0.0;
    for (Eigen::Index c = 0; c < map.matrix.cols(); ++c) {
      acc += map.matrix(r, c) * static_cast<double>(vec[static_cast<std::size_t>(c)]);
    }
    out[static_cast<std::size_t>(r)] = static_cast<float>(acc);
  }
}

LinearMap make_ablation_map(MapKind kind, std::size_t d_lm, std::size_t d_w2v, std::uint64_t seed) {
  const auto rows = static_cast<Eigen::Index>(d_lm);
  const auto cols = static_cast<Eigen::Index>(d_w2v);
  switch (kind) {
    case MapKind::identity:
      if (d_lm != d_w2v) {
        throw DimensionError("identity map requires d_lm == d_w2v (got " + std::to_string(d_lm) + " and " +
                             std::to_string(d_w2v) + ")");
      }
      return {Eigen::MatrixXd::Identity(rows, cols), MapKind::identity, seed};
    case MapKind::random:
      return {Eigen::MatrixXd::Zero(rows, cols), MapKind::random, seed};
    case MapKind::least_squares:
      break;
  }
  throw ConfigError("least-squares maps are fitted, not constructed as ablations");
}

namespace {

// Row-major copy for the kernels.
std::vector<double> row_major(const Eigen::MatrixXd& m) {
  std::vector<double> out(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out[static_cast<std::size_t>(r * m.cols() + c)] = m(r, c);
  }
  return out;
}

std::vector<double> as_double(std::span<const float> row) { return {row.begin(), row.end()}; }

}  // namespace

std::vector<QueryReport> alignment_report(const LinearMap& map, const TrainingPairs& pairs,
                                          const Vocab& w2v_vocab, const EmbeddingTable& w2v_table,
                                          const Vocab& lm_vocab, const EmbeddingTable& lm_table,
                                          std::span<const std::string> queries, std::size_t k, int workers) {
  if (map.d_lm() != lm_table.dim() || map.d_w2v() != w2v_table.dim()) {
    throw DimensionError("map shape does not match the embedding tables");
  }
  const std::vector<double> w = row_major(map.matrix);
  const kernels::MatrixView view{w, map.d_lm(), map.d_w2v()};
  const EmbeddingTable projected = kernels::normalized_rows(
      workers > 1 ? kernels::omp::project_rows(view, w2v_table, workers)
                  : kernels::serial::project_rows(view, w2v_table));
  const EmbeddingTable lm = kernels::normalized_rows(lm_table);
  const std::unordered_set<std::string> trained(pairs.tokens.begin(), pairs.tokens.end());

  auto search = [&](const EmbeddingTable& space, const Vocab& vocab, std::span<const double> q,
                    std::optional<std::size_t> exclude) {
    const auto hits = workers > 1 ? kernels::omp::top_k_dot(space, q, k, exclude, workers)
                                  : kernels::serial::top_k_dot(space, q, k, exclude);
    std::vector<Neighbor> out;
    out.reserve(hits.size());
    for (const auto& h : hits) out.push_back({vocab.token(static_cast<TokenId>(h.row)), h.score});
    return out;
  };

  std::vector<QueryReport> reports;
  reports.reserve(queries.size());
  for (const auto& query : queries) {
    QueryReport rep;
    rep.query = query;
    const auto lm_id = lm_vocab.find(query);
    const auto w2v_id = w2v_vocab.find(query);
    rep.in_lm = lm_id.has_value();
    rep.in_w2v = w2v_id.has_value();
    rep.found = rep.in_lm || rep.in_w2v;
    rep.training_pair = trained.contains(query);
    if (lm_id) {
      const auto row = static_cast<std::size_t>(*lm_id);
      const auto q = as_double(lm.row(row));
      rep.lm_query_in_lm = search(lm, lm_vocab, q, row);
      rep.lm_query_in_w2v = search(projected, w2v_vocab, q, std::nullopt);
    }
    if (w2v_id) {
      const auto row = static_cast<std::size_t>(*w2v_id);
      const auto q = as_double(projected.row(row));
      rep.w2v_query_in_lm = search(lm, lm_vocab, q, std::nullopt);
      rep.w2v_query_in_w2v = search(projected, w2v_vocab, q, row);
    }
    reports.push_back(std::move(rep));
  }
  return reports;
}

std::filesystem::path map_sidecar(const std::filesystem::path& path) {
  auto sidecar = path;
  sidecar += ".json";
  return sidecar;
}

void save_map(const std::filesystem::path& path, const LinearMap& map, const MapMetadata& meta) {
  const auto values = row_major(map.matrix);
  std::vector<float> narrowed(values.begin(), values.end());
  write_matrix(path, map.d_lm(), map.d_w2v(), narrowed);
  nlohmann::json j = {
      {"kind", to_string(meta.kind)}, {"d_lm", meta.d_lm},
      {"d_w2v", meta.d_w2v},          {"n_pairs", meta.n_pairs},
      {"residual_rms", meta.residual_rms}, {"seed", meta.seed},
  };
  std::ofstream out(map_sidecar(path), std::ios::trunc);
  if (!out) throw IoError("cannot write " + map_sidecar(path).string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("error writing " + map_sidecar(path).string());
}

LoadedMap load_map(const std::filesystem::path& path) {
  const EmbeddingTable m = read_matrix(path);
  std::ifstream in(map_sidecar(path));
  if (!in) throw IoError("cannot open map sidecar " + map_sidecar(path).string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(map_sidecar(path).string() + ": " + e.what());
  }
  LoadedMap loaded;
  try {
    loaded.meta.kind = parse_map_kind(j.at("kind").get<std::string>());
    loaded.meta.d_lm = j.at("d_lm").get<std::size_t>();
    loaded.meta.d_w2v = j.at("d_w2v").get<std::size_t>();
    loaded.meta.n_pairs = j.value("n_pairs", std::size_t{0});
    loaded.meta.residual_rms = j.value("residual_rms", 0.0);
    loaded.meta.seed = j.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(map_sidecar(path).string() + ": " + e.what());
  }
  if (m.rows() != loaded.meta.d_lm || m.dim() != loaded.meta.d_w2v) {
    throw FormatError(path.string() + ": matrix is " + std::to_string(m.rows()) + "x" + std::to_string(m.dim()) +
                      " but sidecar declares " + std::to_string(loaded.meta.d_lm) + "x" +
                      std::to_string(loaded.meta.d_w2v));
  }
  loaded.map.kind = loaded.meta.kind;
  loaded.map.seed = loaded.meta.seed;
  loaded.map.matrix.resize(static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.dim()));
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.dim(); ++c) {
      loaded.map.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m.row(r)[c];
    }
  }
  return loaded;
}

}  // namespace lexlift::align
