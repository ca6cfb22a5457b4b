#include <doctest.h>

#include <sstream>
#include <string>
#include <vector>

#include "stancecred/csv.hpp"

using namespace stancecred;

TEST_CASE("csv parse handles plain rows") {
  auto rows = csv::parse_string("a,b,c\n1,2,3\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"a", "b", "c"});
  CHECK(rows[1] == std::vector<std::string>{"1", "2", "3"});
}

TEST_CASE("csv parse handles quoted fields with commas and newlines") {
  auto rows = csv::parse_string("id,text\n1,\"hello, world\"\n2,\"line\nbreak\"\n");
  REQUIRE(rows.size() == 3);
  CHECK(rows[1][1] == "hello, world");
  CHECK(rows[2][1] == "line\nbreak");
}

TEST_CASE("csv parse handles doubled-quote escapes") {
  auto rows = csv::parse_string("a\n\"say \"\"hi\"\"\"\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[1][0] == "say \"hi\"");
}

TEST_CASE("csv parse accepts CRLF line endings") {
  auto rows = csv::parse_string("a,b\r\n1,2\r\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[1] == std::vector<std::string>{"1", "2"});
}

TEST_CASE("csv parse of empty input yields no rows") {
  CHECK(csv::parse_string("").empty());
}

TEST_CASE("csv parse keeps empty fields") {
  auto rows = csv::parse_string("a,,c\n,,\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"a", "", "c"});
  CHECK(rows[1] == std::vector<std::string>{"", "", ""});
}

TEST_CASE("csv escape quotes only when needed") {
  CHECK(csv::escape("plain") == "plain");
  CHECK(csv::escape("with,comma") == "\"with,comma\"");
  CHECK(csv::escape("with\"quote") == "\"with\"\"quote\"");
  CHECK(csv::escape("with\nnewline") == "\"with\nnewline\"");
}

TEST_CASE("csv join then parse roundtrips") {
  std::vector<std::string> fields{"a", "b,c", "d\"e", "f\ng", ""};
  auto line = csv::join_row(fields);
  auto rows = csv::parse_string(line + "\n");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0] == fields);
}

TEST_CASE("csv parse from stream matches parse_string") {
  std::string text = "x,y\n\"a,b\",c\n";
  std::istringstream in(text);
  CHECK(csv::parse(in) == csv::parse_string(text));
}
