#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lexlift/aligner.hpp"
#include "lexlift/embedding.hpp"
#include "lexlift/vocab.hpp"
#include "lexlift/wordpiece.hpp"

namespace lexlift::lexicon {

using wordpiece::WordpieceVocab;

enum class Provenance : std::uint8_t { aligned, random };

std::string_view to_string(Provenance p) noexcept;

/// Standard deviation of the random-init ablation vectors.
inline constexpr double kRandomInitStddev = 0.02;

/// Extended wordpiece embedding layer: the base rows untouched, followed by
/// one row per Word2Vec word that is not already a whole-word entry.
struct ExtendedModelLexicon {
  WordpieceVocab base_vocab;
  std::vector<std::string> added_tokens;  // ids continue after the base vocab
  EmbeddingTable table;                   // (n_base + n_added) x d_lm
  std::vector<Provenance> provenance;     // one per added token
  align::MapKind map_kind = align::MapKind::least_squares;

  std::size_t n_base() const noexcept { return base_vocab.size(); }
  std::size_t n_added() const noexcept { return added_tokens.size(); }
  std::size_t dim() const noexcept { return table.dim(); }

  /// Added tokens as a vocabulary (id = index), for extended tokenization.
  Vocab added_vocab() const;

  friend bool operator==(const ExtendedModelLexicon&, const ExtendedModelLexicon&) = default;
};

/// Rows of the base table are copied bit for bit. Every Word2Vec token that is
/// not already a base entry is appended in Word2Vec id order with
/// W * E_W2V(x), or, for a random map, an i.i.d. N(0, 0.02^2) vector drawn
/// from the map's seed.
ExtendedModelLexicon extend_embeddings(const EmbeddingTable& base_table, const WordpieceVocab& base_vocab,
                                       const EmbeddingTable& w2v_table, const Vocab& w2v_vocab,
                                       const align::LinearMap& map, int workers = 1);

inline constexpr std::string_view kVocabFile = "vocab.txt";
inline constexpr std::string_view kEmbeddingsFile = "embeddings.bin";
inline constexpr std::string_view kManifestFile = "manifest.json";
inline constexpr int kManifestVersion = 1;

/// Writes vocab.txt, embeddings.bin and manifest.json into `out_dir`. Files
/// are staged in a sibling directory and moved into place only after all of
/// them were written; a failure leaves no partial files behind.
void export_lexicon(const ExtendedModelLexicon& lex, const std::filesystem::path& out_dir);

/// Verifies the manifest checksums, matrix header and dimensions before
/// reconstructing the lexicon. Throws FormatError with a description on any
/// mismatch.
ExtendedModelLexicon import_lexicon(const std::filesystem::path& in_dir);

}  // namespace lexlift::lexicon
