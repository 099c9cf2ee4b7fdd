#include "lexlift/pipeline.hpp"

#include <Eigen/Core>
#include <openssl/opensslv.h>
#include <unicode/uvernum.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>

#include "json.hpp"
#include "lexlift/error.hpp"
#include "lexlift/lexicon.hpp"
#include "lexlift/log.hpp"
#include "lexlift/matrix_file.hpp"
#include "lexlift/sha256.hpp"

#ifndef LEXLIFT_VERSION
#define LEXLIFT_VERSION "0.0.0"
#endif

namespace lexlift::pipeline {
using nlohmann::json;

std::string_view version() noexcept { return LEXLIFT_VERSION; }

std::string_view to_string(Stage s) noexcept {
  switch (s) {
    case Stage::ingest: return "ingest";
    case Stage::train_w2v: return "train-w2v";
    case Stage::align: return "align";
    case Stage::extend: return "extend";
  }
  return "?";
}

Stage parse_stage(std::string_view text) {
  for (auto s : {Stage::ingest, Stage::train_w2v, Stage::align, Stage::extend})
    if (to_string(s) == text) return s;
  throw ConfigError("unknown stage '" + std::string(text) + "'");
}

int effective_threads(int requested) {
  int n = std::max(1, requested);
  if (const char* cap = std::getenv("LEXLIFT_THREADS"); cap != nullptr && *cap != '\0') {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(cap, cap + std::char_traits<char>::length(cap), value);
    if (ec != std::errc() || *ptr != '\0' || value < 1)
      throw ConfigError("LEXLIFT_THREADS must be a positive integer, got '" + std::string(cap) + "'");
    n = std::min(n, value);
  }
  return n;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError("config key '" + key + "': '" + value + "' is not a valid number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + value + "'");
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::vector<std::string> split_commas(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i <= text.size()) {
    const auto j = std::min(text.find(',', i), text.size());
    if (auto part = trim(text.substr(i, j - i)); !part.empty()) out.push_back(std::move(part));
    i = j + 1;
  }
  return out;
}

using Clock = std::chrono::steady_clock;

}  // namespace

const std::vector<std::string>& PipelineConfig::keys() {
  static const std::vector<std::string> k{
      "corpus", "lm_vocab", "lm_embeddings", "out_dir", "stages", "seed", "threads", "map_kind",
      "lower_case", "strip_accents", "dim", "window", "negatives", "subsample", "min_count", "epochs", "lr",
      "unigram_power", "table_size", "resume"};
  return k;
}

PipelineConfig PipelineConfig::from_pairs(const std::map<std::string, std::string>& pairs) {
  PipelineConfig c;
  const auto& known = keys();
  for (const auto& [key, value] : pairs) {
    if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigError("unknown config key '" + key + "'");
    if (key == "corpus") c.corpus = value;
    else if (key == "lm_vocab") c.lm_vocab = value;
    else if (key == "lm_embeddings") c.lm_embeddings = value;
    else if (key == "out_dir") c.out_dir = value;
    else if (key == "stages") {
      c.stages.clear();
      for (const auto& s : split_commas(value)) c.stages.push_back(parse_stage(s));
      if (c.stages.empty()) throw ConfigError("config key 'stages' is empty");
    } else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "threads") c.threads = parse_number<int>(key, value);
    else if (key == "map_kind") c.map_kind = align::parse_map_kind(value);
    else if (key == "lower_case") c.basic.lower_case = parse_bool(key, value);
    else if (key == "strip_accents") c.basic.strip_accents = parse_bool(key, value);
    else if (key == "dim") c.w2v.dim = parse_number<int>(key, value);
    else if (key == "window") c.w2v.window = parse_number<int>(key, value);
    else if (key == "negatives") c.w2v.negatives = parse_number<int>(key, value);
    else if (key == "subsample") c.w2v.subsample_threshold = parse_number<double>(key, value);
    else if (key == "min_count") c.w2v.min_count = parse_number<std::uint64_t>(key, value);
    else if (key == "epochs") c.w2v.epochs = parse_number<int>(key, value);
    else if (key == "lr") c.w2v.initial_lr = parse_number<double>(key, value);
    else if (key == "unigram_power") c.w2v.unigram_power = parse_number<double>(key, value);
    else if (key == "table_size") c.w2v.table_size = parse_number<std::uint64_t>(key, value);
    else if (key == "resume") c.resume = parse_bool(key, value);
  }
  std::sort(c.stages.begin(), c.stages.end());
  c.stages.erase(std::unique(c.stages.begin(), c.stages.end()), c.stages.end());
  c.w2v.seed = c.seed;
  return c;
}

std::map<std::string, std::string> PipelineConfig::to_pairs() const {
  std::string stage_list;
  for (auto s : stages) {
    if (!stage_list.empty()) stage_list += ',';
    stage_list += to_string(s);
  }
  return {
      {"corpus", corpus},
      {"lm_vocab", lm_vocab.string()},
      {"lm_embeddings", lm_embeddings.string()},
      {"out_dir", out_dir.string()},
      {"stages", stage_list},
      {"seed", std::to_string(seed)},
      {"threads", std::to_string(threads)},
      {"map_kind", std::string(align::to_string(map_kind))},
      {"lower_case", basic.lower_case ? "true" : "false"},
      {"strip_accents", basic.strip_accents ? "true" : "false"},
      {"dim", std::to_string(w2v.dim)},
      {"window", std::to_string(w2v.window)},
      {"negatives", std::to_string(w2v.negatives)},
      {"subsample", format_double(w2v.subsample_threshold)},
      {"min_count", std::to_string(w2v.min_count)},
      {"epochs", std::to_string(w2v.epochs)},
      {"lr", format_double(w2v.initial_lr)},
      {"unigram_power", format_double(w2v.unigram_power)},
      {"table_size", std::to_string(w2v.table_size)},
      {"resume", resume ? "true" : "false"},
  };
}

void PipelineConfig::validate() const {
  auto wants = [&](Stage s) { return std::find(stages.begin(), stages.end(), s) != stages.end(); };
  auto require_file = [](const fs::path& p, std::string_view key) {
    if (p.empty()) throw ConfigError("config key '" + std::string(key) + "' is required");
    if (!fs::is_regular_file(p)) throw ConfigError(std::string(key) + ": no such file " + p.string());
  };
  if (out_dir.empty()) throw ConfigError("config key 'out_dir' is required");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  w2v.validate(0);
  const Layout layout{out_dir};

  if (wants(Stage::ingest)) {
    if (corpus.empty()) throw ConfigError("config key 'corpus' is required");
    try {
      corpus::CorpusSource::from_paths(corpus::expand_glob(corpus)).validate();
    } catch (const IoError& e) {
      throw ConfigError(e.what());
    }
  } else if (wants(Stage::train_w2v) && !fs::exists(layout.tokens())) {
    throw ConfigError("train-w2v needs " + layout.tokens().string() + "; add the ingest stage");
  }
  if (!wants(Stage::train_w2v) && (wants(Stage::align) || wants(Stage::extend)) && !fs::exists(layout.vectors()))
    throw ConfigError("align/extend need " + layout.vectors().string() + "; add the train-w2v stage");
  if (wants(Stage::extend) && !wants(Stage::align) && !fs::exists(layout.map()))
    throw ConfigError("extend needs " + layout.map().string() + "; add the align stage");

  if (wants(Stage::align) || wants(Stage::extend)) {
    require_file(lm_vocab, "lm_vocab");
    require_file(lm_embeddings, "lm_embeddings");
    MatrixHeader header;
    try {
      header = read_matrix_header(lm_embeddings);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
    if (header.cols != static_cast<std::uint64_t>(w2v.dim))
      throw ConfigError("word2vec dimension " + std::to_string(w2v.dim) + " must equal the LM embedding dimension " +
                        std::to_string(header.cols));
  }
}

std::map<std::string, std::string> read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::map<std::string, std::string> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    auto key = trim(std::string_view(line).substr(0, eq));
    if (!pairs.emplace(key, trim(std::string_view(line).substr(eq + 1))).second)
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": repeated key '" + key + "'");
  }
  return pairs;
}

void apply_overrides(std::map<std::string, std::string>& pairs, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + o + "' is not key=value");
    pairs[trim(std::string_view(o).substr(0, eq))] = trim(std::string_view(o).substr(eq + 1));
  }
}

std::uint64_t ingest_corpus(const corpus::CorpusSource& source, const fs::path& out,
                            const corpus::BasicTokenizerConfig& basic) {
  source.validate();
  std::ofstream os(out, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + out.string() + " for writing");
  corpus::LineReader reader(source);
  std::string line;
  std::uint64_t written = 0;
  while (reader.next(line)) {
    const auto words = corpus::basic_tokenize(line, basic);
    if (words.empty()) continue;
    os << corpus::join(words) << '\n';
    ++written;
  }
  os.flush();
  if (!os) throw IoError("write failed: " + out.string());
  return written;
}

TrainSummary train_vectors(const fs::path& tokens, const fs::path& out, const w2v::W2VConfig& config) {
  const auto lines = corpus::read_lines(corpus::CorpusSource::from_paths({tokens}));
  const auto vocab = build_vocab(lines, config.min_count, config.workers);
  const auto encoded = w2v::encode_corpus(lines, vocab);
  const auto trained = w2v::train(encoded, vocab, config);
  if (!trained.input_vectors.all_finite()) throw DataError("word2vec training produced non-finite vectors");
  w2v::save_vectors(out.string(), trained.input_vectors, vocab);
  return {vocab.size(), trained.processed_tokens};
}

LmLexicon load_lm(const fs::path& vocab, const fs::path& embeddings) {
  LmLexicon lm{wordpiece::WordpieceVocab::from_file(vocab), read_matrix(embeddings)};
  if (lm.table.rows() != lm.vocab.size())
    throw DimensionError(embeddings.string() + " has " + std::to_string(lm.table.rows()) + " rows but " +
                         vocab.string() + " has " + std::to_string(lm.vocab.size()) + " entries");
  return lm;
}

align::FitDiagnostics align_spaces(const LmLexicon& lm, const w2v::LoadedVectors& vectors, const fs::path& out,
                                   align::MapKind kind, std::uint64_t seed) {
  align::FitDiagnostics diag;
  align::LinearMap map;
  align::MapMetadata meta;
  if (kind == align::MapKind::least_squares) {
    const auto pairs = align::intersect_vocab(lm.vocab.entries(), vectors.vocab, lm.table, vectors.table);
    map = align::fit_linear_map(pairs, &diag);
    meta.n_pairs = pairs.size();
  } else {
    map = align::make_ablation_map(kind, lm.table.dim(), vectors.table.dim(), seed);
  }
  meta.kind = map.kind;
  meta.d_lm = map.d_lm();
  meta.d_w2v = map.d_w2v();
  meta.residual_rms = diag.residual_rms;
  meta.seed = seed;
  align::save_map(out, map, meta);
  return diag;
}

std::size_t extend_lexicon(const LmLexicon& lm, const w2v::LoadedVectors& vectors, const fs::path& map_path,
                           const fs::path& out_dir) {
  const auto loaded = align::load_map(map_path);
  const auto lex = lexicon::extend_embeddings(lm.table, lm.vocab, vectors.table, vectors.vocab, loaded.map);
  lexicon::export_lexicon(lex, out_dir);
  return lex.n_added();
}

namespace {

json file_digests(const std::vector<fs::path>& files) {
  json out = json::object();
  for (const auto& f : files)
    if (fs::is_regular_file(f)) out[f.string()] = sha256_file(f);
  return out;
}

struct StagePlan {
  Stage stage;
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;
  json params;
  std::function<json()> run;
};

std::string stage_key(const StagePlan& plan) {
  const json keyed = {{"stage", to_string(plan.stage)}, {"params", plan.params}, {"inputs", file_digests(plan.inputs)}};
  const auto text = keyed.dump();
  return sha256_hex(std::as_bytes(std::span(text.data(), text.size())));
}

bool outputs_match(const json& previous, const StagePlan& plan) {
  if (!previous.contains("outputs")) return false;
  const auto& recorded = previous["outputs"];
  for (const auto& f : plan.outputs) {
    if (!fs::is_regular_file(f) || !recorded.contains(f.string())) return false;
    if (recorded[f.string()] != sha256_file(f)) return false;
  }
  return true;
}

json library_versions() {
  return {{"lexlift", std::string(version())},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"icu", U_ICU_VERSION},
          {"openssl", OPENSSL_VERSION_TEXT},
          {"compiler", __VERSION__}};
}

void write_manifest(const fs::path& path, const json& manifest) {
  const auto tmp = fs::path(path).concat(".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << manifest.dump(2) << '\n';
  }
  fs::rename(tmp, path);
}

}  // namespace

int run_pipeline(const PipelineConfig& input_config) {
  PipelineConfig config = input_config;
  try {
    config.threads = effective_threads(config.threads);
    config.w2v.workers = config.threads;
    config.w2v.seed = config.seed;
    config.validate();
  } catch (const Error& e) {
    log::warn(std::string("configuration rejected: ") + e.what());
    return kExitConfig;
  }

  const Layout layout{config.out_dir};
  fs::create_directories(layout.root);

  json previous;
  if (config.resume && fs::is_regular_file(layout.manifest())) {
    try {
      std::ifstream in(layout.manifest());
      previous = json::parse(in);
    } catch (const json::exception&) {
      log::warn("ignoring unreadable run manifest " + layout.manifest().string());
    }
  }

  // Lazily loaded shared inputs.
  std::optional<LmLexicon> lm;
  auto get_lm = [&]() -> const LmLexicon& {
    if (!lm) lm = load_lm(config.lm_vocab, config.lm_embeddings);
    return *lm;
  };
  auto lm_inputs = std::vector<fs::path>{config.lm_vocab, config.lm_embeddings};
  const auto vectors_vocab = fs::path(w2v::vocab_sidecar(layout.vectors().string()));

  std::vector<StagePlan> plans;
  for (auto stage : config.stages) {
    StagePlan p{stage, {}, {}, json::object(), {}};
    switch (stage) {
      case Stage::ingest: {
        p.inputs = corpus::expand_glob(config.corpus);
        p.outputs = {layout.tokens()};
        p.params = {{"lower_case", config.basic.lower_case}, {"strip_accents", config.basic.strip_accents}};
        p.run = [&config, &layout, inputs = p.inputs]() -> json {
          const auto lines = ingest_corpus(corpus::CorpusSource::from_paths(inputs), layout.tokens(), config.basic);
          return {{"lines", lines}};
        };
        break;
      }
      case Stage::train_w2v: {
        p.inputs = {layout.tokens()};
        p.outputs = {layout.vectors(), vectors_vocab};
        const auto pairs = config.to_pairs();
        for (const auto* k : {"dim", "window", "negatives", "subsample", "min_count", "epochs", "lr", "unigram_power",
                              "table_size", "seed"})
          p.params[k] = pairs.at(k);
        // Hogwild updates are only reproducible with one worker.
        p.params["workers"] = config.w2v.workers;
        p.run = [&config, &layout]() -> json {
          const auto s = train_vectors(layout.tokens(), layout.vectors(), config.w2v);
          return {{"vocab_size", s.vocab_size}, {"processed_tokens", s.processed_tokens}};
        };
        break;
      }
      case Stage::align: {
        p.inputs = {config.lm_vocab, config.lm_embeddings, layout.vectors(), vectors_vocab};
        p.outputs = {layout.map(), align::map_sidecar(layout.map())};
        p.params = {{"map_kind", align::to_string(config.map_kind)}, {"seed", config.seed}};
        p.run = [&config, &layout, &get_lm]() -> json {
          const auto vectors = w2v::load_vectors(layout.vectors().string());
          const auto diag = align_spaces(get_lm(), vectors, layout.map(), config.map_kind, config.seed);
          return {{"pseudo_inverse", diag.used_pseudo_inverse},
                  {"condition_estimate", diag.condition_estimate},
                  {"rank", diag.rank},
                  {"residual_rms", diag.residual_rms}};
        };
        break;
      }
      case Stage::extend: {
        p.inputs = {config.lm_vocab, config.lm_embeddings, layout.vectors(), vectors_vocab, layout.map(),
                    align::map_sidecar(layout.map())};
        const auto dir = layout.lexicon();
        p.outputs = {dir / lexicon::kVocabFile, dir / lexicon::kEmbeddingsFile, dir / lexicon::kManifestFile};
        p.run = [&layout, &get_lm]() -> json {
          const auto vectors = w2v::load_vectors(layout.vectors().string());
          return {{"added_tokens", extend_lexicon(get_lm(), vectors, layout.map(), layout.lexicon())}};
        };
        break;
      }
    }
    plans.push_back(std::move(p));
  }

  json manifest = {{"versions", library_versions()},
                   {"config", config.to_pairs()},
                   {"seed", config.seed},
                   {"threads", config.threads},
                   {"stages", json::array()},
                   {"status", "running"}};
  int exit_code = kExitOk;
  for (auto& plan : plans) {
    const auto name = std::string(to_string(plan.stage));
    json entry = {{"name", name}};
    const auto t0 = Clock::now();
    try {
      entry["key"] = stage_key(plan);
      entry["inputs"] = file_digests(plan.inputs);
      json prior;
      if (previous.contains("stages"))
        for (const auto& s : previous["stages"])
          if (s.value("name", "") == name && s.value("status", "") != "failed") prior = s;
      if (config.resume && !prior.is_null() && prior.value("key", "") == entry["key"] && outputs_match(prior, plan)) {
        entry["status"] = "skipped";
        entry["outputs"] = prior["outputs"];
        entry["result"] = prior.value("result", json::object());
        log::info("stage " + name + " unchanged; skipped");
      } else {
        log::info("stage " + name + " running");
        entry["result"] = plan.run();
        entry["status"] = "ok";
        entry["outputs"] = file_digests(plan.outputs);
      }
    } catch (const std::exception& e) {
      entry["status"] = "failed";
      entry["error"] = e.what();
      json partial = json::array();
      for (const auto& f : plan.outputs)
        if (fs::exists(f)) partial.push_back(f.string());
      entry["partial_outputs"] = partial;
      log::warn("stage " + name + " failed: " + e.what());
      exit_code = dynamic_cast<const ConfigError*>(&e) != nullptr ? kExitConfig : kExitFailure;
    }
    entry["seconds"] = std::chrono::duration<double>(Clock::now() - t0).count();
    manifest["stages"].push_back(entry);
    if (exit_code != kExitOk) break;
  }
  manifest["status"] = exit_code == kExitOk ? "ok" : "failed";
  try {
    write_manifest(layout.manifest(), manifest);
  } catch (const std::exception& e) {
    log::warn(std::string("cannot write run manifest: ") + e.what());
    return kExitFailure;
  }
  return exit_code;
}

}  // namespace lexlift::pipeline
