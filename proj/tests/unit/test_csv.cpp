#include <cmath>
#include <limits>
#include <sstream>

#include "dbhdist/csv.hpp"
#include "dbhdist/error.hpp"
#include "doctest.h"

using namespace dbhdist;

TEST_CASE("doubles round trip through text") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.123456789, 0.0}) {
    CHECK(parse_double(format_double(v), "v") == v);
  }
  CHECK(format_double(15.0) == "15");
  CHECK(format_fixed(2.0 / 3.0, 2) == "0.67");
  CHECK(std::isnan(parse_double("NA", "v")));
  CHECK(std::isinf(parse_double("Inf", "v")));
  CHECK_THROWS_AS(parse_double("12abc", "row 3"), ValidationError);
  CHECK_THROWS_AS(parse_double("", "row 3"), ValidationError);
  CHECK(parse_int("-42", "n") == -42);
  CHECK_THROWS_AS(parse_int("4.2", "n"), ValidationError);
}

TEST_CASE("writer quotes fields that need it and the reader undoes it") {
  std::ostringstream os;
  CsvWriter w(os);
  w.row({"chain", "mu.te(X,Y).3", "say \"hi\""});
  w.row({"1", "2.5", "plain"});
  CHECK(os.str() == "chain,\"mu.te(X,Y).3\",\"say \"\"hi\"\"\"\n1,2.5,plain\n");
  const auto t = CsvTable::parse(os.str(), "mem");
  CHECK(t.header()[1] == "mu.te(X,Y).3");
  CHECK(t.header()[2] == "say \"hi\"");
  CHECK(t.rows()[0][2] == "plain");
  CHECK(t.column("chain") == 0);
  CHECK_THROWS_AS(t.column("missing"), ValidationError);
  CHECK(t.where(0) == "mem line 2");
}

TEST_CASE("ragged rows are rejected") {
  CHECK_THROWS_AS(CsvTable::parse("a,b\n1\n", "bad"), ValidationError);
  const auto t = CsvTable::parse("a,b\r\n1,2\r\n\r\n", "crlf");
  CHECK(t.rows().size() == 1);
  CHECK(t.rows()[0][1] == "2");
}
