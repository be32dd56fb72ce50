#include "lyricscope/compress.hpp"

#include <ostream>
#include <unordered_map>

#include "lyricscope/corpus.hpp"
#include "lyricscope/error.hpp"

namespace lyricscope {

namespace {

bool is_word_byte(unsigned char ch) {
  // Bytes >= 0x80 belong to multi-byte UTF-8 letters; they are kept verbatim.
  return (ch >= '0' && ch <= '9') || (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
         ch >= 0x80;
}

bool is_space(unsigned char ch) {
  return ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\f' || ch == '\v';
}

void flush_token(std::string& raw, TokenSequence& out) {
  // Keep apostrophes only when a word character sits on both sides.
  std::string token;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto ch = static_cast<unsigned char>(raw[i]);
    if (ch == '\'') {
      if (!token.empty() && i + 1 < raw.size() &&
          is_word_byte(static_cast<unsigned char>(raw[i + 1])) &&
          token.back() != '\'') {
        token.push_back('\'');
      }
    } else {
      token.push_back(raw[i]);
    }
  }
  if (!token.empty()) out.push_back(std::move(token));
  raw.clear();
}

}  // namespace

TokenSequence tokenize(std::string_view text) {
  TokenSequence out;
  std::string raw;
  int bracket_depth = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    auto ch = static_cast<unsigned char>(text[i]);
    if (ch == '[') {
      ++bracket_depth;
      flush_token(raw, out);
      continue;
    }
    if (ch == ']') {
      if (bracket_depth > 0) --bracket_depth;
      flush_token(raw, out);
      continue;
    }
    if (bracket_depth > 0) continue;
    if (is_space(ch)) {
      flush_token(raw, out);
      continue;
    }
    // U+2019 RIGHT SINGLE QUOTATION MARK is the usual typographic apostrophe.
    if (ch == 0xE2 && i + 2 < text.size() && static_cast<unsigned char>(text[i + 1]) == 0x80 &&
        static_cast<unsigned char>(text[i + 2]) == 0x99) {
      raw.push_back('\'');
      i += 2;
      continue;
    }
    if (ch == '\'') {
      raw.push_back('\'');
    } else if (is_word_byte(ch)) {
      raw.push_back(ch >= 'A' && ch <= 'Z' ? static_cast<char>(ch - 'A' + 'a') : static_cast<char>(ch));
    }
  }
  flush_token(raw, out);
  return out;
}

std::ostream& operator<<(std::ostream& os, const LzSymbol& symbol) {
  if (const auto* lit = std::get_if<Literal>(&symbol)) return os << "Lit(" << lit->token << ")";
  const auto& ref = std::get<Reference>(symbol);
  return os << "Ref(" << ref.offset << "," << ref.length << ")";
}

std::vector<LzSymbol> lz77_compress(std::span<const std::string> tokens,
                                    const CompressOptions& options) {
  const std::size_t min_match = options.min_match < 1 ? 1 : options.min_match;

  // Intern tokens so the match loop compares integers.
  std::unordered_map<std::string_view, std::size_t> ids;
  std::vector<std::size_t> seq;
  seq.reserve(tokens.size());
  for (const auto& tok : tokens) {
    auto [it, inserted] = ids.try_emplace(tok, ids.size());
    seq.push_back(it->second);
  }

  std::vector<LzSymbol> out;
  const std::size_t n = seq.size();
  std::size_t pos = 0;
  while (pos < n) {
    std::size_t best_len = 0;
    std::size_t best_offset = 0;
    for (std::size_t offset = 1; offset <= pos; ++offset) {
      const std::size_t start = pos - offset;
      std::size_t len = 0;
      while (pos + len < n && seq[start + len] == seq[pos + len]) ++len;
      if (len > best_len) {
        best_len = len;
        best_offset = offset;
        if (pos + len == n) break;
      }
    }
    if (best_len >= min_match) {
      out.emplace_back(Reference{best_offset, best_len});
      pos += best_len;
    } else {
      out.emplace_back(Literal{tokens[pos]});
      ++pos;
    }
  }
  return out;
}

TokenSequence lz77_decompress(std::span<const LzSymbol> symbols) {
  TokenSequence out;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (const auto* lit = std::get_if<Literal>(&symbols[i])) {
      out.push_back(lit->token);
      continue;
    }
    const auto& ref = std::get<Reference>(symbols[i]);
    if (ref.offset == 0 || ref.length == 0 || ref.offset > out.size()) {
      throw MalformedStreamError("symbol " + std::to_string(i) + ": reference (offset " +
                                 std::to_string(ref.offset) + ", length " +
                                 std::to_string(ref.length) + ") reaches before position 0");
    }
    const std::size_t start = out.size() - ref.offset;
    for (std::size_t k = 0; k < ref.length; ++k) out.push_back(out[start + k]);
  }
  return out;
}

CompressionResult score_tokens(std::span<const std::string> tokens,
                               const CompressOptions& options) {
  if (tokens.empty()) throw MissingLyricsError("lyrics contain no tokens");
  CompressionResult result;
  result.symbols = lz77_compress(tokens, options);
  result.original_len = tokens.size();
  result.compressed_len = result.symbols.size();
  result.aic = result.compressed_len;
  result.compressibility = 1.0 - static_cast<double>(result.compressed_len) /
                                     static_cast<double>(result.original_len);
  return result;
}

CompressionResult score(const LyricsRecord& record, const CompressOptions& options) {
  if (record.instrumental) {
    CompressionResult result;
    result.compressibility = 1.0;
    result.aic = 0;
    result.instrumental = true;
    return result;
  }
  const auto tokens = tokenize(record.text);
  if (tokens.empty()) {
    throw MissingLyricsError("track " + record.track_id + ": non-instrumental lyrics are empty");
  }
  return score_tokens(tokens, options);
}

}  // namespace lyricscope
