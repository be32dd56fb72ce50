#pragma once

// Small helpers shared by the CSV/JSONL readers and writers.

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lyricscope::io {

using Timestamp = std::chrono::sys_seconds;

// Splits one delimiter-separated line. Double-quoted fields may contain the
// delimiter and "" escapes. Returns nullopt on an unterminated quote.
std::optional<std::vector<std::string>> split_row(std::string_view line, char delim);

// Quotes a field only when it contains the delimiter, a quote or a newline.
std::string quote_field(std::string_view field, char delim = ',');

// Shortest representation that round-trips through strtod.
std::string format_double(double value);

std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

// ISO-8601 "YYYY-MM-DDTHH:MM:SS" with optional fractional seconds and an
// optional "Z" or "+HH:MM"/"-HH:MM" offset; a space may replace the "T".
std::optional<Timestamp> parse_iso8601(std::string_view text);
std::optional<Timestamp> parse_epoch(std::string_view text);
std::string format_iso8601(Timestamp ts);

bool looks_like_epoch(std::string_view text);

std::string_view trim(std::string_view text);

// Reads a whole file. Throws ConfigError naming the path when unreadable.
std::string read_file(const std::string& path);

}  // namespace lyricscope::io
