#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "lexlift/aligner.hpp"
#include "lexlift/corpus.hpp"
#include "lexlift/embedding.hpp"
#include "lexlift/w2v.hpp"
#include "lexlift/wordpiece.hpp"

namespace lexlift::pipeline {

namespace fs = std::filesystem;

std::string_view version() noexcept;

enum class Stage { ingest, train_w2v, align, extend };
std::string_view to_string(Stage s) noexcept;
Stage parse_stage(std::string_view text);

/// Exit statuses shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;

/// Worker count after applying the LEXLIFT_THREADS cap (and at least 1).
int effective_threads(int requested);

struct PipelineConfig {
  std::string corpus;  // comma-separated globs
  fs::path lm_vocab;
  fs::path lm_embeddings;
  fs::path out_dir;
  corpus::BasicTokenizerConfig basic;
  w2v::W2VConfig w2v;
  align::MapKind map_kind = align::MapKind::least_squares;
  std::uint64_t seed = 1;
  int threads = 1;
  std::vector<Stage> stages{Stage::ingest, Stage::train_w2v, Stage::align, Stage::extend};
  bool resume = false;

  /// Recognized keys, in the order `describe()` prints them.
  static const std::vector<std::string>& keys();
  /// Throws ConfigError on unknown keys or malformed values.
  static PipelineConfig from_pairs(const std::map<std::string, std::string>& pairs);
  std::map<std::string, std::string> to_pairs() const;

  /// Checks inputs and cross-stage dimensions without touching the output
  /// directory. Throws ConfigError.
  void validate() const;
};

/// `key = value` lines; '#' starts a comment. Throws ConfigError on a line
/// without '=' or a repeated key.
std::map<std::string, std::string> read_config_file(const fs::path& path);
/// Applies `key=value` overrides on top of `pairs`.
void apply_overrides(std::map<std::string, std::string>& pairs, const std::vector<std::string>& overrides);

/// Artifact locations inside out_dir.
struct Layout {
  fs::path root;
  fs::path tokens() const { return root / "corpus.tok.txt"; }
  fs::path vectors() const { return root / "w2v.bin"; }
  fs::path map() const { return root / "map.bin"; }
  fs::path lexicon() const { return root / "lexicon"; }
  fs::path manifest() const { return root / "run_manifest.json"; }
};

/// Runs the configured stages in dependency order and writes the run
/// manifest. Returns an exit status; errors are logged, not thrown.
int run_pipeline(const PipelineConfig& config);

// Individual stages, shared with the single-stage subcommands.

/// Basic-tokenizes every corpus line and writes one space-joined line each.
std::uint64_t ingest_corpus(const corpus::CorpusSource& source, const fs::path& out,
                            const corpus::BasicTokenizerConfig& basic);

struct TrainSummary {
  std::size_t vocab_size = 0;
  std::uint64_t processed_tokens = 0;
};
TrainSummary train_vectors(const fs::path& tokens, const fs::path& out, const w2v::W2VConfig& config);

struct LmLexicon {
  wordpiece::WordpieceVocab vocab;
  EmbeddingTable table;
};
/// Throws DimensionError when the row count differs from the vocabulary size.
LmLexicon load_lm(const fs::path& vocab, const fs::path& embeddings);

align::FitDiagnostics align_spaces(const LmLexicon& lm, const w2v::LoadedVectors& vectors, const fs::path& out,
                                   align::MapKind kind, std::uint64_t seed);

/// Returns the number of added tokens.
std::size_t extend_lexicon(const LmLexicon& lm, const w2v::LoadedVectors& vectors, const fs::path& map,
                           const fs::path& out_dir);

}  // namespace lexlift::pipeline
