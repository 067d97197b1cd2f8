#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace gsv::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Trim, collapse internal whitespace runs to one space, lowercase.
std::string normalize_title(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

/// "a", "a or b", "a, b, or c" (serial comma from three items on).
std::string join_serial(const std::vector<std::string>& items, std::string_view conjunction);

std::string join(const std::vector<std::string>& items, std::string_view sep);

bool iequals(std::string_view a, std::string_view b);

/// Returns true when `word` occurs in `haystack` with non-alphanumeric characters
/// (or the string boundary) on both sides. Comparison is case-insensitive.
bool contains_whole_word(std::string_view haystack, std::string_view word);

/// RFC 4180 field quoting: quote when the field holds a comma, quote, CR or LF.
std::string csv_field(std::string_view field);

/// Fixed four decimals; exact zero prints as "0".
std::string format_ratio(double value);

/// Current time as "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_timestamp();

}  // namespace gsv::text
