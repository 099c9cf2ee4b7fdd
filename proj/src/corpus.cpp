#include "lexlift/corpus.hpp"

#include <glob.h>
#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>
#include <zlib.h>

#include <algorithm>
#include <array>
#include <fstream>

#include "lexlift/error.hpp"

namespace lexlift::corpus {

CorpusSource CorpusSource::from_paths(std::vector<std::filesystem::path> paths) {
  CorpusSource source{std::move(paths), Compression::plain};
  if (!source.paths.empty()) {
    std::ifstream in(source.paths.front(), std::ios::binary);
    std::array<unsigned char, 2> magic{};
    if (in.read(reinterpret_cast<char*>(magic.data()), 2) && magic[0] == 0x1f && magic[1] == 0x8b) {
      source.format = Compression::gzip;
    }
  }
  return source;
}

void CorpusSource::validate() const {
  for (const auto& path : paths) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
      throw IoError("corpus file not found or not a regular file: " + path.string());
    }
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("corpus file not readable: " + path.string());
  }
}

std::vector<std::filesystem::path> expand_glob(std::string_view patterns) {
  std::vector<std::filesystem::path> out;
  std::size_t start = 0;
  while (start <= patterns.size()) {
    const auto comma = patterns.find(',', start);
    const auto end = comma == std::string_view::npos ? patterns.size() : comma;
    const std::string pattern(patterns.substr(start, end - start));
    if (!pattern.empty()) {
      glob_t g{};
      const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
      if (rc == 0) {
        std::vector<std::filesystem::path> matches(g.gl_pathv, g.gl_pathv + g.gl_pathc);
        std::sort(matches.begin(), matches.end());
        out.insert(out.end(), matches.begin(), matches.end());
      } else {
        out.emplace_back(pattern);
      }
      ::globfree(&g);
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

struct LineReader::State {
  CorpusSource source;
  std::size_t next_file = 0;
  gzFile current = nullptr;
  std::filesystem::path current_path;

  ~State() {
    if (current != nullptr) gzclose(current);
  }

  bool open_next() {
    if (current != nullptr) {
      gzclose(current);
      current = nullptr;
    }
    if (next_file >= source.paths.size()) return false;
    current_path = source.paths[next_file++];
    current = gzopen(current_path.c_str(), "rb");
    if (current == nullptr) throw IoError("cannot open corpus file " + current_path.string());
    gzbuffer(current, 1 << 17);
    return true;
  }

  // Reads one raw line (without the newline). Returns false at end of file.
  bool read_raw(std::string& line) {
    line.clear();
    std::array<char, 1 << 14> buf{};
    bool got_any = false;
    while (gzgets(current, buf.data(), static_cast<int>(buf.size())) != nullptr) {
      got_any = true;
      std::string_view chunk(buf.data());
      if (!chunk.empty() && chunk.back() == '\n') {
        chunk.remove_suffix(1);
        line.append(chunk);
        return true;
      }
      line.append(chunk);
    }
    int err = 0;
    const char* msg = gzerror(current, &err);
    if (err != Z_OK && err != Z_BUF_ERROR) {
      throw IoError("error reading corpus file " + current_path.string() + ": " + msg);
    }
    return got_any;
  }
};

LineReader::LineReader(CorpusSource source) : state_(std::make_unique<State>()) {
  source.validate();
  state_->source = std::move(source);
}

LineReader::~LineReader() = default;

bool LineReader::next(std::string& line) {
  for (;;) {
    if (state_->current == nullptr && !state_->open_next()) return false;
    while (state_->read_raw(line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    if (!state_->open_next()) return false;
  }
}

std::vector<std::string> read_lines(const CorpusSource& source) {
  LineReader reader(source);
  std::vector<std::string> lines;
  std::string line;
  while (reader.next(line)) lines.push_back(line);
  return lines;
}

namespace {

bool is_control(UChar32 c) {
  if (c == '\t' || c == '\n' || c == '\r') return false;
  return (U_GET_GC_MASK(c) & U_GC_C_MASK) != 0;
}

bool is_whitespace(UChar32 c) {
  if (c == ' ' || c == '\t' || c == '\n' || c == '\r') return true;
  return u_charType(c) == U_SPACE_SEPARATOR;
}

// Separators that survive cleaning but still split words.
bool is_separator(UChar32 c) {
  return c == ' ' || u_charType(c) == U_LINE_SEPARATOR || u_charType(c) == U_PARAGRAPH_SEPARATOR;
}

bool is_punctuation(UChar32 c) {
  if ((c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) ||
      (c >= 123 && c <= 126)) {
    return true;
  }
  return (U_GET_GC_MASK(c) & U_GC_P_MASK) != 0;
}

bool is_cjk(UChar32 c) {
  return (c >= 0x4E00 && c <= 0x9FFF) || (c >= 0x3400 && c <= 0x4DBF) ||
         (c >= 0x20000 && c <= 0x2A6DF) || (c >= 0x2A700 && c <= 0x2B73F) ||
         (c >= 0x2B740 && c <= 0x2B81F) || (c >= 0x2B820 && c <= 0x2CEAF) ||
         (c >= 0xF900 && c <= 0xFAFF) || (c >= 0x2F800 && c <= 0x2FA1F);
}

std::vector<UChar32> decode_utf8(std::string_view text) {
  std::vector<UChar32> out;
  out.reserve(text.size());
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    out.push_back(c < 0 ? 0xFFFD : c);
  }
  return out;
}

void append_utf8(std::string& out, UChar32 c) {
  std::array<uint8_t, U8_MAX_LENGTH> buf{};
  int32_t n = 0;
  U8_APPEND_UNSAFE(buf.data(), n, c);
  out.append(reinterpret_cast<const char*>(buf.data()), static_cast<std::size_t>(n));
}

std::vector<UChar32> to_code_points(const icu::UnicodeString& s) {
  std::vector<UChar32> out;
  out.reserve(static_cast<std::size_t>(s.length()));
  for (int32_t i = 0; i < s.length(); i = s.moveIndex32(i, 1)) out.push_back(s.char32At(i));
  return out;
}

icu::UnicodeString to_unicode(const std::vector<UChar32>& cps) {
  icu::UnicodeString s;
  for (UChar32 c : cps) s.append(c);
  return s;
}

std::vector<UChar32> normalize_word(const std::vector<UChar32>& word, const BasicTokenizerConfig& config) {
  if (!config.lower_case && !config.strips_accents()) return word;
  icu::UnicodeString s = to_unicode(word);
  if (config.lower_case) s.toLower(icu::Locale::getRoot());
  if (config.strips_accents()) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* nfd = icu::Normalizer2::getNFDInstance(status);
    if (U_FAILURE(status)) throw Error("ICU NFD normalizer unavailable");
    icu::UnicodeString decomposed = nfd->normalize(s, status);
    if (U_FAILURE(status)) throw Error("ICU NFD normalization failed");
    std::vector<UChar32> out;
    for (UChar32 c : to_code_points(decomposed)) {
      if (u_charType(c) != U_NON_SPACING_MARK) out.push_back(c);
    }
    return out;
  }
  return to_code_points(s);
}

}  // namespace

std::vector<std::string> basic_tokenize(std::string_view text, const BasicTokenizerConfig& config) {
  std::vector<UChar32> cleaned;
  for (UChar32 c : decode_utf8(text)) {
    if (c == 0 || c == 0xFFFD || is_control(c)) continue;
    if (is_whitespace(c)) {
      cleaned.push_back(' ');
    } else if (config.isolate_cjk && is_cjk(c)) {
      cleaned.push_back(' ');
      cleaned.push_back(c);
      cleaned.push_back(' ');
    } else {
      cleaned.push_back(c);
    }
  }

  std::vector<std::string> out;
  std::vector<UChar32> word;
  auto flush_word = [&] {
    if (word.empty()) return;
    std::string piece;
    for (UChar32 c : normalize_word(word, config)) {
      if (is_separator(c)) {
        if (!piece.empty()) out.push_back(std::exchange(piece, {}));
      } else if (is_punctuation(c)) {
        if (!piece.empty()) out.push_back(std::exchange(piece, {}));
        std::string p;
        append_utf8(p, c);
        out.push_back(std::move(p));
      } else {
        append_utf8(piece, c);
      }
    }
    if (!piece.empty()) out.push_back(std::move(piece));
    word.clear();
  };
  for (UChar32 c : cleaned) {
    if (is_separator(c)) {
      flush_word();
    } else {
      word.push_back(c);
    }
  }
  flush_word();
  return out;
}

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

std::string join(const std::vector<std::string>& words, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out.append(sep);
    out.append(words[i]);
  }
  return out;
}

std::size_t utf8_length(std::string_view text) noexcept {
  return static_cast<std::size_t>(std::count_if(
      text.begin(), text.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

}  // namespace lexlift::corpus
