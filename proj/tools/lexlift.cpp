// lexlift command-line interface.

#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lexlift/aligner.hpp"
#include "lexlift/corpus.hpp"
#include "lexlift/error.hpp"
#include "lexlift/lexicon.hpp"
#include "lexlift/log.hpp"
#include "lexlift/pipeline.hpp"
#include "lexlift/task/ner.hpp"
#include "lexlift/task/qa.hpp"
#include "lexlift/task/squad.hpp"
#include "lexlift/w2v.hpp"
#include "lexlift/wordpiece.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lexlift;

namespace {

// Accepts an exported lexicon vocab.txt (the base vocabulary followed by the
// added tokens) or a bare list of added tokens.
Vocab load_added_tokens(const fs::path& path, const wordpiece::WordpieceVocab& base) {
  const auto all = read_vocab_file(path);
  const auto& base_tokens = base.entries().tokens();
  const bool has_base_prefix = all.size() >= base_tokens.size() &&
                               std::equal(base_tokens.begin(), base_tokens.end(), all.tokens().begin());
  if (!has_base_prefix) return all;
  return Vocab::from_tokens({all.tokens().begin() + static_cast<std::ptrdiff_t>(base_tokens.size()), all.tokens().end()});
}

void write_json(const std::string& path, const json& j) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

json neighbors_json(const std::vector<align::Neighbor>& list) {
  json out = json::array();
  for (const auto& n : list) out.push_back({{"token", n.token}, {"cosine", n.cosine}});
  return out;
}

struct W2VOptions {
  w2v::W2VConfig config;
  int threads = 1;
};

void add_w2v_options(CLI::App* cmd, W2VOptions& o) {
  cmd->add_option("--dim", o.config.dim, "Vector size (must equal the LM embedding size)")->capture_default_str();
  cmd->add_option("--window", o.config.window, "Maximum context window")->capture_default_str();
  cmd->add_option("--negatives", o.config.negatives, "Negative samples per target")->capture_default_str();
  cmd->add_option("--subsample", o.config.subsample_threshold, "Subsampling threshold (0 disables)")
      ->capture_default_str();
  cmd->add_option("--min-count", o.config.min_count, "Drop tokens rarer than this")->capture_default_str();
  cmd->add_option("--epochs", o.config.epochs, "Passes over the corpus")->capture_default_str();
  cmd->add_option("--lr", o.config.initial_lr, "Initial learning rate")->capture_default_str();
  cmd->add_option("--unigram-power", o.config.unigram_power, "Exponent of the negative-sampling distribution")
      ->capture_default_str();
  cmd->add_option("--table-size", o.config.table_size, "Entries in the negative-sampling table")
      ->capture_default_str();
  cmd->add_option("--seed", o.config.seed, "Random seed")->capture_default_str();
  cmd->add_option("--threads", o.threads, "Worker threads (capped by LEXLIFT_THREADS)")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vocabulary extension for wordpiece language models via aligned Word2Vec vectors"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(pipeline::version()));

  // ingest
  std::string ingest_corpus, ingest_out;
  corpus::BasicTokenizerConfig ingest_basic;
  auto* ingest = app.add_subcommand("ingest", "Basic-tokenize a plain or gzipped corpus into one line per input line");
  ingest->add_option("--corpus", ingest_corpus, "Input file glob(s), comma-separated")->required();
  ingest->add_option("--out", ingest_out, "Tokenized output file")->required();
  ingest->add_flag("--lower-case", ingest_basic.lower_case, "Lowercase and strip accents");

  // train-w2v
  std::string train_corpus, train_out;
  W2VOptions train_opts;
  auto* train = app.add_subcommand("train-w2v", "Train CBOW Word2Vec vectors on a tokenized corpus");
  train->add_option("--corpus", train_corpus, "Tokenized corpus (output of ingest)")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--out", train_out, "Output vectors; the vocabulary goes to <out>.vocab.txt")->required();
  add_w2v_options(train, train_opts);

  // align
  std::string align_lm_embed, align_lm_vocab, align_w2v, align_out, align_kind = "least_squares";
  std::uint64_t align_seed = 1;
  auto* align_cmd = app.add_subcommand("align", "Fit the linear map from Word2Vec space to the LM embedding space");
  align_cmd->add_option("--lm-embed", align_lm_embed, "LM embedding matrix")->required()->check(CLI::ExistingFile);
  align_cmd->add_option("--lm-vocab", align_lm_vocab, "LM wordpiece vocabulary")->required()->check(CLI::ExistingFile);
  align_cmd->add_option("--w2v", align_w2v, "Word2Vec vectors")->required()->check(CLI::ExistingFile);
  align_cmd->add_option("--out", align_out, "Output map; metadata goes to <out>.json")->required();
  align_cmd->add_option("--kind", align_kind, "least_squares, identity or random")->capture_default_str();
  align_cmd->add_option("--seed", align_seed, "Seed of the random ablation")->capture_default_str();

  // extend
  std::string ext_lm_embed, ext_lm_vocab, ext_w2v, ext_map, ext_out;
  auto* extend = app.add_subcommand("extend", "Append aligned Word2Vec vectors to the LM lexicon and export it");
  extend->add_option("--lm-embed", ext_lm_embed, "LM embedding matrix")->required()->check(CLI::ExistingFile);
  extend->add_option("--lm-vocab", ext_lm_vocab, "LM wordpiece vocabulary")->required()->check(CLI::ExistingFile);
  extend->add_option("--w2v", ext_w2v, "Word2Vec vectors")->required()->check(CLI::ExistingFile);
  extend->add_option("--map", ext_map, "Map written by align")->required()->check(CLI::ExistingFile);
  extend->add_option("--out", ext_out, "Output directory")->required();

  // tokenize
  std::string tok_vocab, tok_extended, tok_mode = "standard";
  bool tok_lower = false;
  auto* tokenize = app.add_subcommand("tokenize", "Wordpiece-tokenize lines read from stdin");
  tokenize->add_option("--vocab", tok_vocab, "Base wordpiece vocabulary")->required()->check(CLI::ExistingFile);
  tokenize->add_option("--extended", tok_extended, "Extended vocabulary (exported vocab.txt or list of added words)")
      ->check(CLI::ExistingFile);
  tokenize->add_option("--mode", tok_mode, "standard, extended or both")
      ->check(CLI::IsMember({"standard", "extended", "both"}))
      ->capture_default_str();
  tokenize->add_flag("--lower-case", tok_lower, "Lowercase and strip accents before wordpiece splitting");

  // encode-ner
  std::string ner_conll, ner_vocab, ner_extended, ner_out, ner_labels;
  auto* encode_ner = app.add_subcommand("encode-ner", "Chunk and encode a CoNLL file into JSON lines");
  encode_ner->add_option("--conll", ner_conll, "Two-column token/tag file")->required()->check(CLI::ExistingFile);
  encode_ner->add_option("--vocab", ner_vocab, "Base wordpiece vocabulary")->required()->check(CLI::ExistingFile);
  encode_ner->add_option("--extended", ner_extended,
                         "Extended vocabulary; when given, odd examples use the extended tokenizer")
      ->check(CLI::ExistingFile);
  encode_ner->add_option("--labels", ner_labels,
                         "Label list, one per line; read if it exists, otherwise derived and written");
  encode_ner->add_option("--out", ner_out, "Output JSON lines")->required();

  // qa-infer
  std::string qa_dataset, qa_vocab, qa_extended, qa_logits, qa_requests, qa_out;
  bool qa_lower = false;
  auto* qa_infer = app.add_subcommand("qa-infer", "Sliding-window QA decoding over precomputed encoder logits");
  qa_infer->add_option("--dataset", qa_dataset, "SQuAD-format JSON")->required()->check(CLI::ExistingFile);
  qa_infer->add_option("--vocab", qa_vocab, "Base wordpiece vocabulary")->required()->check(CLI::ExistingFile);
  qa_infer->add_option("--extended", qa_extended, "Extended vocabulary; enables dual-tokenizer pooling")
      ->check(CLI::ExistingFile);
  qa_infer->add_flag("--lower-case", qa_lower, "Lowercase and strip accents (uncased models)");
  auto* logits_opt = qa_infer->add_option("--logits", qa_logits, "JSON lines {ids, start, end}")->check(CLI::ExistingFile);
  auto* requests_opt = qa_infer->add_option("--dump-requests", qa_requests,
                                            "Write every encoder input as JSON lines {ids} and stop");
  logits_opt->excludes(requests_opt);
  qa_infer->add_option("--out", qa_out, "Predictions JSON {question id: answer}");

  // score
  std::string score_dataset, score_predictions, score_out;
  auto* score = app.add_subcommand("score", "EM, F1 and substring metrics of QA predictions");
  score->add_option("--dataset", score_dataset, "SQuAD-format JSON")->required()->check(CLI::ExistingFile);
  score->add_option("--predictions", score_predictions, "Predictions JSON")->required()->check(CLI::ExistingFile);
  score->add_option("--out", score_out, "Metrics JSON (default stdout)");

  // report
  std::string rep_lm_embed, rep_lm_vocab, rep_w2v, rep_map, rep_out;
  std::vector<std::string> rep_queries;
  std::size_t rep_k = 10;
  int rep_threads = 1;
  auto* report = app.add_subcommand("report", "Nearest neighbours within and across the aligned spaces");
  report->add_option("--lm-embed", rep_lm_embed, "LM embedding matrix")->required()->check(CLI::ExistingFile);
  report->add_option("--lm-vocab", rep_lm_vocab, "LM wordpiece vocabulary")->required()->check(CLI::ExistingFile);
  report->add_option("--w2v", rep_w2v, "Word2Vec vectors")->required()->check(CLI::ExistingFile);
  report->add_option("--map", rep_map, "Map written by align")->required()->check(CLI::ExistingFile);
  report->add_option("--query", rep_queries, "Query token (repeatable)")->required();
  report->add_option("-k", rep_k, "Neighbours per list")->capture_default_str();
  report->add_option("--threads", rep_threads, "Worker threads")->capture_default_str();
  report->add_option("--out", rep_out, "Report JSON (default stdout)");

  // pipeline
  std::string pipe_config;
  std::vector<std::string> pipe_overrides;
  bool pipe_resume = false;
  std::uint64_t pipe_seed = 0;
  auto* pipe = app.add_subcommand("pipeline", "Run ingest, train-w2v, align and extend from one config file");
  pipe->add_option("--config", pipe_config, "key = value config file")->required()->check(CLI::ExistingFile);
  pipe->add_option("--set", pipe_overrides, "Override a config key (key=value, repeatable)");
  auto* seed_opt = pipe->add_option("--seed", pipe_seed, "Override the config seed");
  pipe->add_flag("--resume", pipe_resume, "Skip stages whose inputs and outputs are unchanged");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : pipeline::kExitConfig;
  }

  try {
    if (*ingest) {
      const auto lines = pipeline::ingest_corpus(
          corpus::CorpusSource::from_paths(corpus::expand_glob(ingest_corpus)), ingest_out, ingest_basic);
      log::info("wrote " + std::to_string(lines) + " lines to " + ingest_out);
    } else if (*train) {
      train_opts.config.workers = pipeline::effective_threads(train_opts.threads);
      const auto s = pipeline::train_vectors(train_corpus, train_out, train_opts.config);
      log::info("trained " + std::to_string(s.vocab_size) + " vectors over " + std::to_string(s.processed_tokens) +
                " tokens");
    } else if (*align_cmd) {
      const auto lm = pipeline::load_lm(align_lm_vocab, align_lm_embed);
      const auto vectors = w2v::load_vectors(align_w2v);
      const auto kind = align::parse_map_kind(align_kind);
      const auto diag = pipeline::align_spaces(lm, vectors, align_out, kind, align_seed);
      if (kind == align::MapKind::least_squares)
        log::info("fitted map, residual rms " + std::to_string(diag.residual_rms) + ", rank " +
                  std::to_string(diag.rank));
    } else if (*extend) {
      const auto lm = pipeline::load_lm(ext_lm_vocab, ext_lm_embed);
      const auto vectors = w2v::load_vectors(ext_w2v);
      const auto added = pipeline::extend_lexicon(lm, vectors, ext_map, ext_out);
      log::info("exported lexicon with " + std::to_string(added) + " added tokens to " + ext_out);
    } else if (*tokenize) {
      const auto vocab = wordpiece::WordpieceVocab::from_file(tok_vocab);
      if (tok_mode != "standard" && tok_extended.empty()) throw ConfigError("--mode " + tok_mode + " needs --extended");
      const auto added = tok_extended.empty() ? Vocab{} : load_added_tokens(tok_extended, vocab);
      const wordpiece::Tokenizer standard(vocab);
      const wordpiece::Tokenizer extended(vocab, added);
      const corpus::BasicTokenizerConfig basic{.lower_case = tok_lower};
      std::string line;
      while (std::getline(std::cin, line)) {
        const auto words = corpus::basic_tokenize(line, basic);
        if (tok_mode == "standard" || tok_mode == "both") {
          const auto r = standard(words);
          std::cout << (tok_mode == "both" ? "standard\t" : "") << corpus::join(r.pieces) << '\n';
        }
        if (tok_mode == "extended" || tok_mode == "both") {
          const auto r = extended(words);
          std::cout << (tok_mode == "both" ? "extended\t" : "") << corpus::join(r.pieces) << '\n';
        }
      }
    } else if (*encode_ner) {
      const auto vocab = wordpiece::WordpieceVocab::from_file(ner_vocab);
      const auto added = ner_extended.empty() ? Vocab{} : load_added_tokens(ner_extended, vocab);
      const auto sentences = task::read_conll(ner_conll);
      task::LabelSet labels;
      if (!ner_labels.empty() && fs::exists(ner_labels)) {
        labels = task::LabelSet::from_names(read_vocab_file(ner_labels).tokens());
      } else {
        labels = task::LabelSet::from_sentences(sentences);
        if (!ner_labels.empty()) write_vocab_file(ner_labels, Vocab::from_tokens(labels.names()));
      }
      const wordpiece::Tokenizer standard(vocab);
      const wordpiece::Tokenizer extended(vocab, added);
      const auto examples =
          task::encode_ner_dataset(sentences, standard, ner_extended.empty() ? standard : extended, labels);
      task::write_ner_jsonl(ner_out, examples);
      log::info("wrote " + std::to_string(examples.size()) + " examples to " + ner_out);
    } else if (*qa_infer) {
      if (qa_logits.empty() && qa_requests.empty()) throw ConfigError("qa-infer needs --logits or --dump-requests");
      if (!qa_logits.empty() && qa_out.empty()) throw ConfigError("qa-infer --logits needs --out");
      const auto vocab = wordpiece::WordpieceVocab::from_file(qa_vocab);
      const auto added = qa_extended.empty() ? Vocab{} : load_added_tokens(qa_extended, vocab);
      const wordpiece::Tokenizer standard(vocab);
      const wordpiece::Tokenizer extended(vocab, added);
      const wordpiece::Tokenizer* second = qa_extended.empty() ? nullptr : &extended;
      const corpus::BasicTokenizerConfig basic{.lower_case = qa_lower};
      const auto examples = task::read_squad(qa_dataset);

      if (!qa_requests.empty()) {
        std::ofstream out(qa_requests, std::ios::trunc);
        if (!out) throw IoError("cannot open " + qa_requests + " for writing");
        std::set<std::vector<TokenId>> seen;
        for (const auto& ex : examples) {
          const auto q = corpus::split_whitespace(ex.question);
          const auto c = corpus::split_whitespace(ex.context);
          for (const auto* tok : {&standard, second}) {
            if (tok == nullptr) continue;
            for (auto& ids : task::window_inputs(q, c, *tok, basic))
              if (seen.insert(ids).second) out << json{{"ids", ids}}.dump() << '\n';
          }
        }
        log::info("wrote " + std::to_string(seen.size()) + " encoder requests to " + qa_requests);
      } else {
        const auto encoder = task::PrecomputedEncoder::from_file(qa_logits);
        std::map<std::string, std::string> predictions;
        for (const auto& ex : examples)
          predictions[ex.id] =
              task::answer_question(ex.question, ex.context, standard, second, basic, std::cref(encoder)).text;
        task::write_predictions(qa_out, predictions);
      }
    } else if (*score) {
      const auto m = task::evaluate(task::read_squad(score_dataset), task::read_predictions(score_predictions));
      if (m.missing > 0) log::warn(std::to_string(m.missing) + " questions have no prediction and score zero");
      write_json(score_out, {{"em", m.em}, {"f1", m.f1}, {"substr", m.substr}, {"total", m.total}});
    } else if (*report) {
      const auto lm = pipeline::load_lm(rep_lm_vocab, rep_lm_embed);
      const auto vectors = w2v::load_vectors(rep_w2v);
      const auto loaded = align::load_map(rep_map);
      const auto pairs = align::intersect_vocab(lm.vocab.entries(), vectors.vocab, lm.table, vectors.table);
      const auto reports =
          align::alignment_report(loaded.map, pairs, vectors.vocab, vectors.table, lm.vocab.entries(), lm.table,
                                  rep_queries, rep_k, pipeline::effective_threads(rep_threads));
      json out = json::array();
      for (const auto& r : reports) {
        if (!r.found) log::warn("query '" + r.query + "' is in neither vocabulary");
        out.push_back({{"query", r.query},
                       {"in_lm", r.in_lm},
                       {"in_w2v", r.in_w2v},
                       {"training_pair", r.training_pair},
                       {"lm_query_in_lm", neighbors_json(r.lm_query_in_lm)},
                       {"lm_query_in_w2v", neighbors_json(r.lm_query_in_w2v)},
                       {"w2v_query_in_lm", neighbors_json(r.w2v_query_in_lm)},
                       {"w2v_query_in_w2v", neighbors_json(r.w2v_query_in_w2v)}});
      }
      write_json(rep_out, out);
    } else if (*pipe) {
      auto pairs = pipeline::read_config_file(pipe_config);
      pipeline::apply_overrides(pairs, pipe_overrides);
      auto config = pipeline::PipelineConfig::from_pairs(pairs);
      if (*seed_opt) {
        config.seed = pipe_seed;
        config.w2v.seed = pipe_seed;
      }
      if (pipe_resume) config.resume = true;
      return pipeline::run_pipeline(config);
    }
  } catch (const ConfigError& e) {
    log::warn(e.what());
    return pipeline::kExitConfig;
  } catch (const std::exception& e) {
    log::warn(e.what());
    return pipeline::kExitFailure;
  }
  return pipeline::kExitOk;
}
