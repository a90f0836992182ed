#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace leakeval {

std::string trim(std::string_view s);

/// Splits on runs of whitespace; no empty tokens.
std::vector<std::string> split_ws(std::string_view s);

/// Splits into lines on '\n', stripping a trailing '\r' per line. The final
/// line is dropped if empty (trailing newline convention).
std::vector<std::string> split_lines(std::string_view text);

std::string lower_copy(std::string_view s);

/// Lowercases and collapses all whitespace runs to single spaces; used for
/// the paraphrase-distinctness check.
std::string normalize_for_compare(std::string_view s);

/// Replaces every occurrence of `from` with `to`.
std::string replace_all(std::string text, std::string_view from, std::string_view to);

/// Keeps at most `max_tokens` whitespace-delimited tokens, rejoined with
/// single spaces.
std::string truncate_tokens(std::string_view s, std::size_t max_tokens);

/// Lossy UTF-8 cleanup: any invalid byte sequence is replaced with U+FFFD.
/// Legacy TREC data contains raw Latin-1 bytes that would otherwise make
/// JSON serialization fail.
std::string sanitize_utf8(std::string_view s);

/// Formats a double with enough digits to round-trip exactly (shortest form).
std::string format_double(double value);

/// Fixed-point formatting, e.g. format_fixed(0.55218, 4) == "0.5522".
std::string format_fixed(double value, int decimals);

}  // namespace leakeval
