#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace reidaudit {

// The redaction token. Five ASCII asterisks, bit-exact everywhere.
inline constexpr std::string_view kMaskToken = "*****";

// Byte range [begin, end) of one token within its source text.
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Whitespace tokenizer with punctuation split off into standalone tokens.
// '-', '/' and ':' stay inside a token when both neighbours are
// alphanumeric, so "03/30/1942", "10432-3243" and "09:30" are atomic.
// A run of exactly five '*' is one token; longer runs split into
// five-star groups plus single-star leftovers, so replacing adjacent
// tokens with "*****" never changes the token count.
std::vector<TokenSpan> tokenize_spans(std::string_view text);
std::vector<std::string> tokenize(std::string_view text);

// Lowercases and collapses every punctuation/whitespace run to a single
// space; leading and trailing spaces trimmed. The equality used by
// relevancy and verbatim-hit matching.
std::string normalize(std::string_view s);

// Normalized token sequence of `value` (normalize + split on spaces).
std::vector<std::string> normalize_words(std::string_view value);

struct Date {
  int year = 0;
  int month = 0;
  int day = 0;
};

// Accepts YYYY-MM-DD and M/D/YYYY (calendar-validated).
std::optional<Date> parse_date(std::string_view s);
std::string format_date_iso(const Date& d);  // 1942-03-30
std::string format_date_us(const Date& d);   // 03/30/1942

bool is_ascii_digit(char c);
bool is_word_char(char c);  // alnum or any non-ASCII byte
bool all_digits(std::string_view s);

}  // namespace reidaudit
