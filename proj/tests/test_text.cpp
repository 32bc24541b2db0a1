#include <doctest.h>

#include "reidaudit/text.hpp"

using namespace reidaudit;

TEST_CASE("whitespace and punctuation splitting") {
  CHECK(tokenize("DOB: 03/30/1942") ==
        std::vector<std::string>{"DOB", ":", "03/30/1942"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("   \t\n ").empty());
  CHECK(tokenize("a,b") == std::vector<std::string>{"a", ",", "b"});
  CHECK(tokenize("Fax:(531)132-5313") ==
        std::vector<std::string>{"Fax", ":", "(", "531", ")", "132-5313"});
}

TEST_CASE("joiners stay atomic inside alphanumeric runs") {
  CHECK(tokenize("10432-3243") == std::vector<std::string>{"10432-3243"});
  CHECK(tokenize("09:30") == std::vector<std::string>{"09:30"});
  CHECK(tokenize("2014-01-02 03:30:00") ==
        std::vector<std::string>{"2014-01-02", "03:30:00"});
  CHECK(tokenize("a-b-c") == std::vector<std::string>{"a-b-c"});
  // joiner with no word char on one side splits off
  CHECK(tokenize("x- y") == std::vector<std::string>{"x", "-", "y"});
  CHECK(tokenize("-5") == std::vector<std::string>{"-", "5"});
}

TEST_CASE("mask token is atomic") {
  CHECK(tokenize("***** *****") == std::vector<std::string>{"*****", "*****"});
  CHECK(tokenize("**********") == std::vector<std::string>{"*****", "*****"});
  CHECK(tokenize("***") == std::vector<std::string>{"*", "*", "*"});
  CHECK(tokenize("*****.") == std::vector<std::string>{"*****", "."});
}

TEST_CASE("token spans map back to the source bytes") {
  std::string text = "MRN: 1234943.";
  auto spans = tokenize_spans(text);
  auto tokens = tokenize(text);
  REQUIRE(spans.size() == tokens.size());
  for (std::size_t i = 0; i < spans.size(); ++i)
    CHECK(text.substr(spans[i].begin, spans[i].end - spans[i].begin) == tokens[i]);
}

TEST_CASE("normalize folds case and punctuation") {
  CHECK(normalize("NEW YORK") == "new york");
  CHECK(normalize("03/30/1942") == "03 30 1942");
  CHECK(normalize("  A--b  ") == "a b");
  CHECK(normalize("*****") == "");
  CHECK(normalize_words("Not Hispanic or Latino") ==
        std::vector<std::string>{"not", "hispanic", "or", "latino"});
}

TEST_CASE("date parsing accepts both generated formats") {
  auto iso = parse_date("1942-03-30");
  REQUIRE(iso.has_value());
  CHECK(iso->year == 1942);
  CHECK(iso->month == 3);
  CHECK(iso->day == 30);
  auto us = parse_date("03/30/1942");
  REQUIRE(us.has_value());
  CHECK(us->year == 1942);
  CHECK(format_date_iso(*us) == "1942-03-30");
  CHECK(format_date_us(*iso) == "03/30/1942");

  CHECK_FALSE(parse_date("13/30/1942").has_value());
  CHECK_FALSE(parse_date("1942-02-30").has_value());
  CHECK_FALSE(parse_date("not a date").has_value());
  CHECK(parse_date("2000-02-29").has_value());  // leap day
}
