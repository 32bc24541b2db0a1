#include "reidaudit/text.hpp"

#include <cctype>
#include <cstdio>

namespace reidaudit {

bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }

bool is_word_char(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  return std::isalnum(u) != 0 || u >= 0x80;
}

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!is_ascii_digit(c)) return false;
  return true;
}

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_joiner(char c) { return c == '-' || c == '/' || c == ':'; }

}  // namespace

std::vector<TokenSpan> tokenize_spans(std::string_view text) {
  std::vector<TokenSpan> out;
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    char c = text[i];
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (c == '*') {
      std::size_t j = i;
      while (j < n && text[j] == '*') ++j;
      std::size_t run = j - i;
      while (run >= 5) {
        out.push_back({i, i + 5});
        i += 5;
        run -= 5;
      }
      while (run > 0) {
        out.push_back({i, i + 1});
        ++i;
        --run;
      }
      continue;
    }
    if (is_word_char(c)) {
      std::size_t j = i + 1;
      while (j < n) {
        if (is_word_char(text[j])) {
          ++j;
        } else if (is_joiner(text[j]) && j + 1 < n && is_word_char(text[j + 1])) {
          j += 2;  // joiner is flanked by word chars; keep the run atomic
        } else {
          break;
        }
      }
      out.push_back({i, j});
      i = j;
      continue;
    }
    out.push_back({i, i + 1});  // standalone punctuation
    ++i;
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (const TokenSpan& s : tokenize_spans(text))
    out.emplace_back(text.substr(s.begin, s.end - s.begin));
  return out;
}

std::string normalize(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::isalnum(u) != 0 || u >= 0x80) {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(static_cast<char>(std::tolower(u)));
    } else {
      pending_space = true;
    }
  }
  return out;
}

std::vector<std::string> normalize_words(std::string_view value) {
  std::vector<std::string> words;
  std::string norm = normalize(value);
  std::size_t i = 0;
  while (i < norm.size()) {
    std::size_t j = norm.find(' ', i);
    if (j == std::string::npos) j = norm.size();
    if (j > i) words.push_back(norm.substr(i, j - i));
    i = j + 1;
  }
  return words;
}

namespace {

bool valid_ymd(int y, int m, int d) {
  if (y < 1 || m < 1 || m > 12 || d < 1) return false;
  static const int days[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  int dm = days[m - 1];
  bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  if (m == 2 && leap) dm = 29;
  return d <= dm;
}

bool parse_int(std::string_view s, int& out) {
  if (s.empty() || s.size() > 4) return false;
  int v = 0;
  for (char c : s) {
    if (!is_ascii_digit(c)) return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  return true;
}

}  // namespace

std::optional<Date> parse_date(std::string_view s) {
  // YYYY-MM-DD
  if (s.size() == 10 && s[4] == '-' && s[7] == '-') {
    int y, m, d;
    if (parse_int(s.substr(0, 4), y) && parse_int(s.substr(5, 2), m) &&
        parse_int(s.substr(8, 2), d) && valid_ymd(y, m, d))
      return Date{y, m, d};
    return std::nullopt;
  }
  // M/D/YYYY with 1-2 digit month/day
  std::size_t s1 = s.find('/');
  if (s1 == std::string_view::npos) return std::nullopt;
  std::size_t s2 = s.find('/', s1 + 1);
  if (s2 == std::string_view::npos || s.find('/', s2 + 1) != std::string_view::npos)
    return std::nullopt;
  int m, d, y;
  if (parse_int(s.substr(0, s1), m) && parse_int(s.substr(s1 + 1, s2 - s1 - 1), d) &&
      s.size() - s2 - 1 == 4 && parse_int(s.substr(s2 + 1), y) && valid_ymd(y, m, d))
    return Date{y, m, d};
  return std::nullopt;
}

std::string format_date_iso(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
  return buf;
}

std::string format_date_us(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02d/%02d/%04d", d.month, d.day, d.year);
  return buf;
}

}  // namespace reidaudit
