// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numeric>
#include <sstream>

#include "lexlift/aligner.hpp"
#include "lexlift/error.hpp"
#include "lexlift/lexicon.hpp"
#include "lexlift/log.hpp"
#include "lexlift/matrix_file.hpp"
#include "lexlift/pipeline.hpp"
#include "lexlift/task/qa.hpp"
#include "lexlift/task/squad.hpp"
#include "lexlift/w2v.hpp"
#include "lexlift/wordpiece.hpp"
#include "support.hpp"

using namespace lexlift;
using testsupport::Rng;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(const std::string& name, double budget_seconds, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (seconds > budget_seconds) {
    out.pass = false;
    out.detail += "; over the " + std::to_string(static_cast<int>(budget_seconds)) + " s budget";
  }
  if (!out.pass) ++failures;
  std::printf("%s %s: %s (%.2f s)\n", out.pass ? "PASS" : "FAIL", name.c_str(), out.detail.c_str(), seconds);
  std::fflush(stdout);
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

Eigen::MatrixXd gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols, double sd = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, sd);
  return m;
}

testsupport::LdMatrix to_ld(const Eigen::MatrixXd& m) {
  testsupport::LdMatrix out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out[static_cast<std::size_t>(r)].push_back(m(r, c));
  return out;
}

Outcome least_squares_oracle() {
  Rng rng(1001);
  double worst = 0;
  for (int sys = 0; sys < 100; ++sys) {
    align::TrainingPairs pairs;
    pairs.w2v = gaussian(rng, 64, 8);
    pairs.lm = gaussian(rng, 64, 12);
    pairs.tokens.resize(64);
    const auto map = align::fit_linear_map(pairs);
    const auto oracle = testsupport::oracle_least_squares(to_ld(pairs.w2v), to_ld(pairs.lm));
    for (Eigen::Index r = 0; r < 12; ++r)
      for (Eigen::Index c = 0; c < 8; ++c)
        worst = std::max(worst, static_cast<double>(std::fabs(map.matrix(r, c) - oracle[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)])));
  }
  return {worst < 1e-8, "max |W - W_oracle| = " + fmt(worst) + " over 100 systems"};
}

Outcome planted_recovery() {
  Rng rng(1002);
  double worst = 0;
  for (const Eigen::Index d : {4, 8, 16, 32, 64}) {
    align::TrainingPairs pairs;
    pairs.w2v = gaussian(rng, 4 * d, d);
    const Eigen::MatrixXd planted = gaussian(rng, d, d);
    pairs.lm = pairs.w2v * planted.transpose();
    pairs.tokens.resize(static_cast<std::size_t>(4 * d));
    align::FitDiagnostics diag;
    const auto map = align::fit_linear_map(pairs, &diag);
    if (diag.rank != static_cast<std::size_t>(d)) return {false, "design matrix not full rank"};
    worst = std::max(worst, (map.matrix - planted).cwiseAbs().maxCoeff());
  }
  return {worst < 1e-6, "max |W - W*| = " + fmt(worst) + " for d in {4..64}, n = 4d"};
}

Outcome synthetic_alignment() {
  Rng rng(1003);
  testsupport::TempDir dir;
  const std::size_t n_lm = 500, d = 32, held_out = 100;
  // LM lexicon: the specials plus 495 words.
  std::vector<std::string> lm_tokens{"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};
  while (lm_tokens.size() < n_lm) lm_tokens.push_back("tok" + std::to_string(lm_tokens.size()));
  const auto lm_table = testsupport::random_table(rng, n_lm, d);
  write_vocab_file(dir / "lm_vocab.txt", Vocab::from_tokens(lm_tokens));
  write_matrix(dir / "lm.bin", lm_table);

  // Word2Vec space: a planted linear image of the LM vectors plus noise.
  const Eigen::MatrixXd planted = gaussian(rng, d, d);
  auto w2v_image = [&](std::size_t lm_row) {
    std::vector<float> v(d);
    for (std::size_t o = 0; o < d; ++o) {
      double acc = 0;
      for (std::size_t c = 0; c < d; ++c) acc += planted(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(c)) * lm_table.row(lm_row)[c];
      v[o] = static_cast<float>(acc + rng.normal(0.0, 0.01));
    }
    return v;
  };
  std::vector<std::size_t> shared(n_lm - 5);
  std::iota(shared.begin(), shared.end(), 5);
  std::shuffle(shared.begin(), shared.end(), rng.engine());
  const std::vector<std::size_t> test_rows(shared.begin(), shared.begin() + held_out);
  const std::vector<std::size_t> train_rows(shared.begin() + held_out, shared.end());

  // The fitting run only sees the training words.
  Vocab train_vocab;
  EmbeddingTable train_table(0, d);
  for (auto r : train_rows) {
    train_vocab.push_back(lm_tokens[r]);
    train_table.append_row(w2v_image(r));
  }
  Vocab full_vocab = train_vocab;
  EmbeddingTable full_table = train_table;
  for (auto r : test_rows) {
    full_vocab.push_back(lm_tokens[r]);
    full_table.append_row(w2v_image(r));
  }
  w2v::save_vectors((dir / "w2v_train.bin").string(), train_table, train_vocab);

  const auto lm = pipeline::load_lm(dir / "lm_vocab.txt", dir / "lm.bin");
  const auto train_vectors = w2v::load_vectors((dir / "w2v_train.bin").string());
  pipeline::align_spaces(lm, train_vectors, dir / "map.bin", align::MapKind::least_squares, 0);
  const auto map = align::load_map(dir / "map.bin").map;

  const auto pairs = align::intersect_vocab(lm.vocab.entries(), full_vocab, lm.table, full_table);
  std::vector<std::string> queries;
  for (auto r : test_rows) queries.push_back(lm_tokens[r]);
  const auto reports = align::alignment_report(map, pairs, full_vocab, full_table, lm.vocab.entries(), lm.table,
                                               queries, 1);
  std::size_t hits = 0;
  for (const auto& rep : reports)
    if (!rep.w2v_query_in_lm.empty() && rep.w2v_query_in_lm[0].token == rep.query) ++hits;
  const double rate = static_cast<double>(hits) / held_out;
  return {rate >= 0.95, std::to_string(hits) + "/100 held-out tokens have their LM counterpart as top-1"};
}

Outcome tokenizer_fidelity() {
  const auto path = testsupport::bert_cased_vocab_path();
  if (!path) {
    return {false,
            "published cased vocabulary not found (set LEXLIFT_BERT_CASED_VOCAB or place "
            "tests/data/bert-base-cased-vocab.txt)"};
  }
  const auto vocab = wordpiece::WordpieceVocab::from_file(*path);
  using Words = std::vector<std::string>;
  const bool dem = wordpiece::wordpiece_tokenize("dementia", vocab) == Words{"dem", "##ent", "##ia"};
  const bool eut = wordpiece::wordpiece_tokenize("euthymia", vocab) == Words{"e", "##uth", "##ym", "##ia"};
  const Words words{"The", "patient", "has", "dementia", "and", "euthymia", "."};
  const auto added = Vocab::from_tokens({"dementia", "euthymia"});
  const auto s = wordpiece::tokenize_standard(words, vocab);
  const auto e = wordpiece::tokenize_extended(words, vocab, added);
  const bool single = e.word_spans[3].size() == 1 && e.word_spans[5].size() == 1 && e.pieces[3] == "dementia";
  const auto initial = [](const std::vector<bool>& v) { return std::count(v.begin(), v.end(), true); };
  const bool counts = initial(s.word_initial) == initial(e.word_initial) &&
                      initial(s.word_initial) == static_cast<long>(words.size());
  std::string detail = std::string("dementia split ") + (dem ? "ok" : "wrong") + ", euthymia split " +
                       (eut ? "ok" : "wrong") + ", added words single-piece " + (single ? "yes" : "no") +
                       ", word-initial counts equal " + (counts ? "yes" : "no");
  return {dem && eut && single && counts, detail};
}

Outcome extension_preserves_rows() {
  Rng rng(1005);
  const std::size_t d_lm = 64, d_w2v = 48, n_w2v = 3000;
  std::vector<std::string> base_tokens{"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};
  for (int i = 0; i < 995; ++i) base_tokens.push_back(i % 3 ? "w" + std::to_string(i) : "##c" + std::to_string(i));
  const wordpiece::WordpieceVocab base(Vocab::from_tokens(base_tokens));
  const auto base_table = testsupport::random_table(rng, base.size(), d_lm);
  Vocab w2v_vocab;
  for (std::size_t i = 0; i < n_w2v; ++i) w2v_vocab.push_back("w" + std::to_string(i));
  const auto w2v_table = testsupport::random_table(rng, n_w2v, d_w2v);
  align::LinearMap map{gaussian(rng, d_lm, d_w2v), align::MapKind::least_squares, 0};

  testsupport::TempDir dir;
  lexicon::export_lexicon(lexicon::extend_embeddings(base_table, base, w2v_table, w2v_vocab, map), dir / "lex");
  const auto lex = lexicon::import_lexicon(dir / "lex");

  std::size_t base_mismatch = 0;
  for (std::size_t r = 0; r < base.size(); ++r)
    if (std::memcmp(lex.table.row(r).data(), base_table.row(r).data(), d_lm * sizeof(float)) != 0) ++base_mismatch;
  double worst = 0;
  for (std::size_t i = 0; i < lex.n_added(); ++i) {
    const auto src = w2v_table.row(*w2v_vocab.find(lex.added_tokens[i]));
    const auto got = lex.table.row(base.size() + i);
    for (std::size_t o = 0; o < d_lm; ++o) {
      long double acc = 0;
      for (std::size_t c = 0; c < d_w2v; ++c)
        acc += static_cast<long double>(map.matrix(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(c))) * src[c];
      worst = std::max(worst, std::fabs(static_cast<double>(got[o]) - static_cast<double>(static_cast<float>(acc))));
    }
  }
  const bool ok = base_mismatch == 0 && worst <= 1e-10 && lex.n_added() > 0;
  return {ok, std::to_string(base_mismatch) + " base rows changed; " + std::to_string(lex.n_added()) +
                  " added rows, max deviation from the float32-stored oracle " + fmt(worst)};
}

Outcome window_tiling() {
  Rng rng(1006);
  std::size_t bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t q = static_cast<std::size_t>(rng.integer(1, 507));
    const std::size_t c = static_cast<std::size_t>(rng.integer(1, 5000));
    const auto plan = task::plan_windows(q, c);
    std::size_t next = 1;
    bool ok = plan.stride == (509 - q) / 2;
    for (std::size_t n = 0; n < plan.steps.size(); ++n) {
      const auto& s = plan.steps[n];
      ok = ok && s.active_left == next && s.active_right >= s.active_left && s.slice_first() >= 1 &&
           s.slice_last() <= c && plan.input_length(n) <= 512;
      if (c >= 509 - q) ok = ok && plan.input_length(n) == 512;
      next = s.active_right + 1;
    }
    ok = ok && next == c + 1;
    bad += !ok;
  }
  const auto example = task::plan_windows(83, 1000);
  const bool n213 = example.stride == 213 && example.steps.size() == 5;
  return {bad == 0 && n213, std::to_string(bad) + "/1000 plans violate tiling or length; q=83 gives N=" +
                                std::to_string(example.stride)};
}

Outcome span_decode_oracle() {
  Rng rng(1007);
  std::size_t mismatches = 0, infeasible = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = static_cast<std::size_t>(rng.integer(1, 200));
    std::vector<double> s(n), e(n);
    std::vector<std::size_t> chars(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = rng.coin(0.1) ? 1.0 : rng.normal();
      e[i] = rng.coin(0.1) ? 1.0 : rng.normal();
      chars[i] = rng.coin(0.03) ? static_cast<std::size_t>(rng.integer(501, 900))
                                : static_cast<std::size_t>(rng.integer(1, 30));
    }
    bool found = false;
    double best = 0;
    std::size_t bk = 0, bk2 = 0;
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t k2 = k; k2 < n; ++k2) {
        std::size_t len = k2 - k;
        for (std::size_t i = k; i <= k2; ++i) len += chars[i];
        if (len > 500) continue;
        if (!found || s[k] + e[k2] > best) {
          found = true;
          best = s[k] + e[k2];
          bk = k;
          bk2 = k2;
        }
      }
    if (!found) {
      ++infeasible;
      try {
        task::decode_span(s, e, chars);
        ++mismatches;
      } catch (const DataError&) {
      }
      continue;
    }
    const auto got = task::decode_span(s, e, chars);
    if (got.first != bk || got.last != bk2) ++mismatches;
  }
  return {mismatches == 0, std::to_string(mismatches) + "/200 disagreements with exhaustive search (" +
                               std::to_string(infeasible) + " infeasible instances)"};
}

Outcome w2v_quality() {
  // Lines draw from one of two disjoint five-word topics.
  Rng rng(1008);
  std::vector<std::string> lines;
  std::size_t bytes = 0;
  while (bytes < 10'000'000) {
    const char topic = rng.coin() ? 'a' : 'b';
    std::string line;
    for (int j = 0; j < 20; ++j) {
      if (j) line += ' ';
      line += topic;
      line += std::to_string(rng.integer(1, 5));
    }
    bytes += line.size() + 1;
    lines.push_back(std::move(line));
  }
  const auto vocab = build_vocab(lines, 5);
  const auto corpus = w2v::encode_corpus(lines, vocab);
  w2v::W2VConfig cfg;
  cfg.dim = 100;
  cfg.table_size = 1'000'000;
  cfg.seed = 7;
  cfg.workers = 1;

  const auto a = w2v::train(corpus, vocab, cfg);
  const auto b = w2v::train(corpus, vocab, cfg);
  const bool deterministic = a.input_vectors == b.input_vectors && a.output_vectors == b.output_vectors;

  const auto unit = [&](const std::string& w) {
    const auto row = a.input_vectors.row(*vocab.find(w));
    std::vector<double> v(row.begin(), row.end());
    double n = 0;
    for (double x : v) n += x * x;
    for (double& x : v) x /= std::sqrt(n);
    return v;
  };
  double within = 0, across = 0;
  int n_within = 0, n_across = 0;
  for (char t1 : {'a', 'b'})
    for (int i = 1; i <= 5; ++i)
      for (char t2 : {'a', 'b'})
        for (int j = 1; j <= 5; ++j) {
          if (t1 == t2 && i >= j) continue;
          if (t1 != t2 && t1 == 'b') continue;
          const auto x = unit(std::string(1, t1) + std::to_string(i));
          const auto y = unit(std::string(1, t2) + std::to_string(j));
          const double cos = std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
          if (t1 == t2) {
            within += cos;
            ++n_within;
          } else {
            across += cos;
            ++n_across;
          }
        }
  within /= n_within;
  across /= n_across;
  return {deterministic && within - across >= 0.2,
          "within " + fmt(within) + ", across " + fmt(across) + ", gap " + fmt(within - across) +
              "; repeated single-worker runs " + (deterministic ? "identical" : "differ")};
}

Outcome qa_metrics() {
  const std::vector<std::string> year_gold{
      "(MERS-CoV) was first isolated in 2012, in a 60-year-old man who died in Jeddah, KSA due to severe acute "
      "pneumonia and multiple organ failure"};
  const std::vector<std::string> rate_gold{"13.3% (95% CI 6.9-23.6%)"};
  const auto year = task::qa_score("2012", year_gold);
  const auto rate = task::qa_score("13.3%, 10/75", rate_gold);
  const bool ok = year.em == 0 && year.substr == 1 && rate.em == 0 && rate.substr == 0;
  return {ok, "\"2012\": em=" + fmt(year.em) + " substr=" + fmt(year.substr) + " f1=" + fmt(year.f1) +
                  "; \"13.3%, 10/75\": em=" + fmt(rate.em) + " substr=" + fmt(rate.substr) + " f1=" + fmt(rate.f1)};
}

}  // namespace

int main() {
  log::set_sink([](std::string_view, std::string_view) {});
  criterion("least-squares matches the pseudo-inverse oracle", 5, least_squares_oracle);
  criterion("planted transform is recovered", 5, planted_recovery);
  criterion("synthetic alignment finds held-out counterparts", 30, synthetic_alignment);
  criterion("tokenizer fidelity on the published cased vocabulary", 1, tokenizer_fidelity);
  criterion("extension keeps base rows and maps added rows", 5, extension_preserves_rows);
  criterion("window plans tile the context", 5, window_tiling);
  criterion("span decoding matches exhaustive search", 10, span_decode_oracle);
  criterion("word2vec separates the two topic clusters", 300, w2v_quality);
  criterion("QA scorer reproduces the annotated examples", 1, qa_metrics);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
