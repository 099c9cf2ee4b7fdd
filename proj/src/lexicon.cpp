#include "lexlift/lexicon.hpp"

#include <fstream>
#include <random>
#include <sstream>
#include <unistd.h>

#include "json.hpp"
#include "lexlift/error.hpp"
#include "lexlift/log.hpp"
#include "lexlift/matrix_file.hpp"
#include "lexlift/sha256.hpp"

namespace lexlift::lexicon {
namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Provenance p) noexcept { return p == Provenance::aligned ? "aligned" : "random"; }

namespace {

Provenance parse_provenance(std::string_view text) {
  if (text == "aligned") return Provenance::aligned;
  if (text == "random") return Provenance::random;
  throw FormatError("unknown provenance '" + std::string(text) + "'");
}

json provenance_runs(const std::vector<Provenance>& provenance) {
  json runs = json::array();
  for (std::size_t i = 0; i < provenance.size();) {
    std::size_t j = i;
    while (j < provenance.size() && provenance[j] == provenance[i]) ++j;
    runs.push_back({{"kind", to_string(provenance[i])}, {"count", j - i}});
    i = j;
  }
  return runs;
}

std::vector<Provenance> expand_runs(const json& runs) {
  std::vector<Provenance> out;
  for (const auto& run : runs) {
    const auto kind = parse_provenance(run.at("kind").get<std::string>());
    out.insert(out.end(), run.at("count").get<std::size_t>(), kind);
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

void write_lexicon_vocab(const fs::path& path, const ExtendedModelLexicon& lex) {
  std::string text;
  for (const auto& t : lex.base_vocab.entries().tokens()) (text += t) += '\n';
  for (const auto& t : lex.added_tokens) (text += t) += '\n';
  write_text(path, text);
}

fs::path staging_path(const fs::path& out_dir) {
  auto name = out_dir.filename().string();
  if (name.empty()) name = out_dir.parent_path().filename().string();
  return out_dir.parent_path() / ("." + name + ".staging-" + std::to_string(::getpid()));
}

}  // namespace

Vocab ExtendedModelLexicon::added_vocab() const { return Vocab::from_tokens(added_tokens); }

ExtendedModelLexicon extend_embeddings(const EmbeddingTable& base_table, const WordpieceVocab& base_vocab,
                                       const EmbeddingTable& w2v_table, const Vocab& w2v_vocab,
                                       const align::LinearMap& map, int /*workers*/) {
  if (base_table.rows() != base_vocab.size())
    throw DimensionError("base table has " + std::to_string(base_table.rows()) + " rows but the vocabulary has " +
                         std::to_string(base_vocab.size()) + " entries");
  if (w2v_table.rows() != w2v_vocab.size())
    throw DimensionError("word2vec table has " + std::to_string(w2v_table.rows()) +
                         " rows but the vocabulary has " + std::to_string(w2v_vocab.size()) + " entries");
  if (map.d_lm() != base_table.dim())
    throw DimensionError("map output dimension " + std::to_string(map.d_lm()) + " != base dimension " +
                         std::to_string(base_table.dim()));
  const bool random = map.kind == align::MapKind::random;
  if (!random && map.d_w2v() != w2v_table.dim())
    throw DimensionError("map input dimension " + std::to_string(map.d_w2v()) + " != word2vec dimension " +
                         std::to_string(w2v_table.dim()));

  ExtendedModelLexicon lex{base_vocab, {}, base_table, {}, map.kind};
  const std::size_t d = base_table.dim();
  std::vector<float> row(d);
  std::mt19937_64 rng(map.seed);
  std::normal_distribution<double> normal(0.0, kRandomInitStddev);
  std::size_t collisions = 0;

  for (std::size_t id = 0; id < w2v_vocab.size(); ++id) {
    const auto& token = w2v_vocab.token(static_cast<TokenId>(id));
    if (base_vocab.is_whole_word(token)) {
      ++collisions;
      continue;
    }
    // A continuation piece spelled like a corpus word cannot become a second
    // vocabulary line with the same text.
    if (base_vocab.find(token)) continue;
    if (random) {
      for (auto& v : row) v = static_cast<float>(normal(rng));
    } else {
      align::apply_map(map, w2v_table.row(id), row);
    }
    lex.table.append_row(row);
    lex.added_tokens.push_back(token);
    lex.provenance.push_back(random ? Provenance::random : Provenance::aligned);
  }
  if (collisions > 0) {
    log::info(std::to_string(collisions) + " word2vec tokens already exist as whole words and keep their original rows");
  }
  return lex;
}

void export_lexicon(const ExtendedModelLexicon& lex, const fs::path& out_dir) {
  if (lex.table.rows() != lex.n_base() + lex.n_added() || lex.provenance.size() != lex.n_added())
    throw DataError("inconsistent lexicon: table rows, vocabulary and provenance disagree");

  const fs::path target = out_dir.filename().empty() ? out_dir.parent_path() : out_dir;
  if (!target.parent_path().empty()) fs::create_directories(target.parent_path());
  const fs::path staging = staging_path(target);
  fs::remove_all(staging);
  fs::create_directories(staging);
  try {
    const auto vocab_path = staging / kVocabFile;
    const auto embed_path = staging / kEmbeddingsFile;
    write_lexicon_vocab(vocab_path, lex);
    write_matrix(embed_path, lex.table);

    json manifest = {
        {"format_version", kManifestVersion},
        {"d_lm", lex.dim()},
        {"n_base", lex.n_base()},
        {"n_added", lex.n_added()},
        {"map_kind", align::to_string(lex.map_kind)},
        {"provenance", provenance_runs(lex.provenance)},
        {"sha256", {{std::string(kVocabFile), sha256_file(vocab_path)},
                    {std::string(kEmbeddingsFile), sha256_file(embed_path)}}},
    };
    write_text(staging / kManifestFile, manifest.dump(2) + "\n");

    if (!fs::exists(target)) {
      fs::rename(staging, target);
    } else {
      // Manifest last, so a reader never sees a manifest for stale payloads.
      for (auto name : {kVocabFile, kEmbeddingsFile, kManifestFile}) fs::rename(staging / name, target / name);
      fs::remove_all(staging);
    }
  } catch (const fs::filesystem_error& e) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    throw IoError(std::string("export failed: ") + e.what());
  } catch (...) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    throw;
  }
}

ExtendedModelLexicon import_lexicon(const fs::path& in_dir) {
  const auto manifest_path = in_dir / kManifestFile;
  const auto vocab_path = in_dir / kVocabFile;
  const auto embed_path = in_dir / kEmbeddingsFile;
  for (const auto& p : {manifest_path, vocab_path, embed_path}) {
    if (!fs::exists(p)) throw IoError("missing lexicon file " + p.string());
  }

  json manifest;
  {
    std::ifstream in(manifest_path);
    try {
      manifest = json::parse(in);
    } catch (const json::exception& e) {
      throw FormatError(manifest_path.string() + ": " + e.what());
    }
  }

  try {
    if (manifest.at("format_version").get<int>() != kManifestVersion)
      throw FormatError("unsupported manifest version " + manifest.at("format_version").dump());

    const auto& sums = manifest.at("sha256");
    for (const auto& [name, path] : {std::pair{kVocabFile, vocab_path}, std::pair{kEmbeddingsFile, embed_path}}) {
      const auto expected = sums.at(std::string(name)).get<std::string>();
      const auto actual = sha256_file(path);
      if (expected != actual)
        throw FormatError("checksum mismatch for " + path.string() + ": manifest " + expected + ", file " + actual);
    }

    const auto d_lm = manifest.at("d_lm").get<std::size_t>();
    const auto n_base = manifest.at("n_base").get<std::size_t>();
    const auto n_added = manifest.at("n_added").get<std::size_t>();
    const auto kind = align::parse_map_kind(manifest.at("map_kind").get<std::string>());
    auto provenance = expand_runs(manifest.at("provenance"));
    if (provenance.size() != n_added)
      throw FormatError("manifest provenance covers " + std::to_string(provenance.size()) + " tokens, expected " +
                        std::to_string(n_added));

    const auto header = read_matrix_header(embed_path);
    if (header.rows != n_base + n_added || header.cols != d_lm)
      throw FormatError(embed_path.string() + " is " + std::to_string(header.rows) + "x" +
                        std::to_string(header.cols) + " but the manifest declares " +
                        std::to_string(n_base + n_added) + "x" + std::to_string(d_lm));

    const auto all = read_vocab_file(vocab_path);
    if (all.size() != n_base + n_added)
      throw FormatError(vocab_path.string() + " has " + std::to_string(all.size()) + " lines, expected " +
                        std::to_string(n_base + n_added));
    std::vector<std::string> base(all.tokens().begin(), all.tokens().begin() + static_cast<std::ptrdiff_t>(n_base));
    std::vector<std::string> added(all.tokens().begin() + static_cast<std::ptrdiff_t>(n_base), all.tokens().end());

    return ExtendedModelLexicon{WordpieceVocab(Vocab::from_tokens(std::move(base))), std::move(added),
                                MappedMatrix(embed_path).to_table(), std::move(provenance), kind};
  } catch (const json::exception& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
}

}  // namespace lexlift::lexicon
