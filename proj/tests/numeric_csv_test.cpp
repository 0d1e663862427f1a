// Copyright 2026 The co2track Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <clocale>
#include <cmath>
#include <limits>
#include <random>

#include "co2track/csv.hpp"
#include "co2track/errors.hpp"
#include "co2track/numeric.hpp"

namespace co2track {
namespace {

TEST(ParseDouble, AcceptsPlainDecimals) {
  EXPECT_EQ(parse_double("1.5"), 1.5);
  EXPECT_EQ(parse_double(" 42 "), 42.0);
  EXPECT_EQ(parse_double("+0.25"), 0.25);
  EXPECT_EQ(parse_double("-3"), -3.0);
  EXPECT_EQ(parse_double("1e3"), 1000.0);
}

TEST(ParseDouble, RejectsJunk) {
  EXPECT_FALSE(parse_double(""));
  EXPECT_FALSE(parse_double("   "));
  EXPECT_FALSE(parse_double("1,5"));
  EXPECT_FALSE(parse_double("1.5kg"));
  EXPECT_FALSE(parse_double("nan"));
  EXPECT_FALSE(parse_double("inf"));
  EXPECT_FALSE(parse_double("1e999"));
}

TEST(ParseInteger, Basics) {
  EXPECT_EQ(parse_integer("124"), 124);
  EXPECT_EQ(parse_integer(" 8 "), 8);
  EXPECT_FALSE(parse_integer("1.0"));
  EXPECT_FALSE(parse_integer("x"));
}

TEST(FormatFixed, SixPlaces) {
  EXPECT_EQ(format_fixed(1.0, 6), "1.000000");
  EXPECT_EQ(format_fixed(0.4365, 6), "0.436500");
  EXPECT_EQ(format_fixed(3.02679, 6), "3.026790");
  EXPECT_EQ(format_fixed(-0.0000001, 6), "0.000000");
  EXPECT_EQ(format_fixed(1234567.5, 1), "1234567.5");
}

TEST(FormatFixed, IgnoresLocale) {
  const char* old = std::setlocale(LC_NUMERIC, nullptr);
  const std::string saved = old ? old : "C";
  if (std::setlocale(LC_NUMERIC, "de_DE.UTF-8") == nullptr) {
    GTEST_SKIP() << "de_DE locale not installed";
  }
  EXPECT_EQ(format_fixed(1.5, 2), "1.50");
  EXPECT_EQ(parse_double("1.5"), 1.5);
  std::setlocale(LC_NUMERIC, saved.c_str());
}

TEST(FormatShortest, RoundTrips) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-1e6, 1e6);
  for (int i = 0; i < 2000; ++i) {
    const double v = dist(rng);
    EXPECT_EQ(parse_double(format_shortest(v)), v);
  }
}

TEST(Csv, EscapeQuotesOnlyWhenNeeded) {
  EXPECT_EQ(csv::escape("plain"), "plain");
  EXPECT_EQ(csv::escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv::escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv::escape("two\nlines"), "\"two\nlines\"");
  EXPECT_EQ(csv::escape(""), "");
}

TEST(Csv, ParseHandlesQuotesAndLineNumbers) {
  const auto rows = csv::parse("a,b\n\n\"x,1\",\"multi\nline\"\nlast,\"q\"\"q\"\n");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].line, 1u);
  EXPECT_EQ(rows[1].fields, (std::vector<std::string>{"x,1", "multi\nline"}));
  EXPECT_EQ(rows[1].line, 3u);
  EXPECT_EQ(rows[2].fields, (std::vector<std::string>{"last", "q\"q"}));
  EXPECT_EQ(rows[2].line, 5u);
}

TEST(Csv, CrLfAndBom) {
  const auto rows = csv::parse("\xEF\xBB\xBFh1,h2\r\n1,2\r\n");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].fields, (std::vector<std::string>{"h1", "h2"}));
  EXPECT_EQ(rows[1].fields, (std::vector<std::string>{"1", "2"}));
}

TEST(Csv, EmptyTrailingField) {
  const auto rows = csv::parse("a,,\n");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].fields, (std::vector<std::string>{"a", "", ""}));
}

TEST(Csv, UnterminatedQuoteThrows) {
  EXPECT_THROW(csv::parse("a,\"open\n"), ParseError);
}

TEST(Csv, FormatParseRoundTrip) {
  std::mt19937_64 rng(11);
  const std::string alphabet = "ab,\"\n \r;x";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::uniform_int_distribution<int> len(0, 8);
  for (int i = 0; i < 500; ++i) {
    std::vector<std::string> fields(4);
    for (auto& f : fields) {
      const int n = len(rng);
      for (int k = 0; k < n; ++k) f.push_back(alphabet[pick(rng)]);
    }
    fields[0] = "k" + fields[0];  // a row of empty fields would be a blank line
    const auto rows = csv::parse(csv::format_row(fields) + "\n");
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].fields, fields);
  }
}

}  // namespace
}  // namespace co2track
