#pragma once

// Word-level LZ77 over lyric text, plus the Compressibility and Absolute
// Information Content (AIC) scores derived from the compressed length.
//
// Cost model: every output symbol (literal token or back-reference) costs one
// unit, so compressed length is a symbol count and
//   compressibility = 1 - compressed_len / token_count
//   aic             = compressed_len
// Purely instrumental tracks score compressibility 1, aic 0.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace lyricscope {

struct LyricsRecord;

using TokenSequence = std::vector<std::string>;

// Case-folds ASCII, drops "[...]" section markers, strips punctuation except
// apostrophes between word characters, and splits on whitespace.
TokenSequence tokenize(std::string_view text);

struct Literal {
  std::string token;
  friend bool operator==(const Literal&, const Literal&) = default;
};

// Copy `length` tokens starting `offset` positions back. May overlap the
// output being produced (offset < length).
struct Reference {
  std::size_t offset = 0;
  std::size_t length = 0;
  friend bool operator==(const Reference&, const Reference&) = default;
};

using LzSymbol = std::variant<Literal, Reference>;

std::ostream& operator<<(std::ostream& os, const LzSymbol& symbol);

inline constexpr std::size_t kDefaultMinMatch = 2;

struct CompressOptions {
  std::size_t min_match = kDefaultMinMatch;
};

// Greedy longest match over the whole already-scanned prefix. Ties go to the
// smallest offset. Matches shorter than min_match are emitted as literals.
std::vector<LzSymbol> lz77_compress(std::span<const std::string> tokens,
                                    const CompressOptions& options = {});

// Throws MalformedStreamError when a reference reaches before the start.
TokenSequence lz77_decompress(std::span<const LzSymbol> symbols);

struct CompressionResult {
  std::vector<LzSymbol> symbols;
  std::size_t original_len = 0;
  std::size_t compressed_len = 0;
  double compressibility = 0.0;
  std::size_t aic = 0;
  bool instrumental = false;
};

// Throws MissingLyricsError for a non-instrumental record with no tokens.
CompressionResult score(const LyricsRecord& record, const CompressOptions& options = {});
CompressionResult score_tokens(std::span<const std::string> tokens,
                               const CompressOptions& options = {});

}  // namespace lyricscope
