#include "support.hpp"

#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace testsupport {

TempDir::TempDir() {
  std::string pattern = (fs::temp_directory_path() / "lexlift-test-XXXXXX").string();
  if (::mkdtemp(pattern.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
  path_ = pattern;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

lexlift::wordpiece::WordpieceVocab fixture_wordpiece_vocab() {
  std::vector<std::string> tokens{"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
                                  "the",   "patient", "has", "a",    "mild",   "case",  "of",    "dem",
                                  "##ent", "##ia",  "e",    "##uth", "##ym",  "##s",  "##ed",  ".",
                                  ",",     "'",     "s",    "It",   "-",     "19",   "Co",    "##vid",
                                  "was",   "first", "in",   "2012", "(",     ")",    "virus", "##es",
                                  "x",     "##x",   "un",   "##able", "able", "to",   "is",    "and"};
  return lexlift::wordpiece::WordpieceVocab(lexlift::Vocab::from_tokens(tokens));
}

lexlift::EmbeddingTable random_table(Rng& rng, std::size_t rows, std::size_t cols, double sd) {
  lexlift::EmbeddingTable t(rows, cols);
  for (auto& v : t.data()) v = static_cast<float>(rng.normal(0.0, sd));
  return t;
}

LdMatrix jacobi_pseudo_inverse(const LdMatrix& a) {
  const std::size_t m = a.size();
  const std::size_t n = m == 0 ? 0 : a[0].size();
  // Columns of U, rotated in place until mutually orthogonal; V accumulates
  // the rotations so that A V = U.
  std::vector<std::vector<long double>> u(n, std::vector<long double>(m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) u[j][i] = a[i][j];
  std::vector<std::vector<long double>> v(n, std::vector<long double>(n, 0.0L));
  for (std::size_t j = 0; j < n; ++j) v[j][j] = 1.0L;

  const long double eps = std::numeric_limits<long double>::epsilon();
  for (int sweep = 0; sweep < 100; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        long double alpha = 0, beta = 0, gamma = 0;
        for (std::size_t i = 0; i < m; ++i) {
          alpha += u[p][i] * u[p][i];
          beta += u[q][i] * u[q][i];
          gamma += u[p][i] * u[q][i];
        }
        if (gamma == 0.0L || std::fabs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const long double zeta = (beta - alpha) / (2.0L * gamma);
        const long double t = (zeta >= 0 ? 1.0L : -1.0L) / (std::fabs(zeta) + std::sqrt(1.0L + zeta * zeta));
        const long double c = 1.0L / std::sqrt(1.0L + t * t);
        const long double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const long double up = u[p][i], uq = u[q][i];
          u[p][i] = c * up - s * uq;
          u[q][i] = s * up + c * uq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const long double vp = v[p][i], vq = v[q][i];
          v[p][i] = c * vp - s * vq;
          v[q][i] = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<long double> sigma(n);
  long double sigma_max = 0;
  for (std::size_t j = 0; j < n; ++j) {
    long double norm = 0;
    for (std::size_t i = 0; i < m; ++i) norm += u[j][i] * u[j][i];
    sigma[j] = std::sqrt(norm);
    sigma_max = std::max(sigma_max, sigma[j]);
  }
  const long double cutoff = sigma_max * static_cast<long double>(std::max(m, n)) * eps;

  // pinv = sum_j v_j u_j^T / sigma_j^2 (u_j unnormalized, so one sigma^2).
  LdMatrix pinv(n, std::vector<long double>(m, 0.0L));
  for (std::size_t j = 0; j < n; ++j) {
    if (sigma[j] <= cutoff) continue;
    const long double inv = 1.0L / (sigma[j] * sigma[j]);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < m; ++c) pinv[r][c] += v[j][r] * u[j][c] * inv;
  }
  return pinv;
}

LdMatrix oracle_least_squares(const LdMatrix& a, const LdMatrix& b) {
  const auto pinv = jacobi_pseudo_inverse(a);  // d_in x n
  const std::size_t d_in = pinv.size();
  const std::size_t n = a.size();
  const std::size_t d_out = b.empty() ? 0 : b[0].size();
  LdMatrix w(d_out, std::vector<long double>(d_in, 0.0L));
  for (std::size_t o = 0; o < d_out; ++o)
    for (std::size_t i = 0; i < d_in; ++i) {
      long double acc = 0;
      for (std::size_t k = 0; k < n; ++k) acc += pinv[i][k] * b[k][o];
      w[o][i] = acc;
    }
  return w;
}

std::optional<fs::path> bert_cased_vocab_path() {
  if (const char* env = std::getenv("LEXLIFT_BERT_CASED_VOCAB"); env != nullptr && *env != '\0') {
    if (fs::is_regular_file(env)) return fs::path(env);
  }
  const fs::path bundled = fs::path(LEXLIFT_TEST_DATA_DIR) / "bert-base-cased-vocab.txt";
  if (fs::is_regular_file(bundled)) return bundled;
  return std::nullopt;
}

}  // namespace testsupport
