#include <string>

#include "dbhdist/config.hpp"
#include "dbhdist/error.hpp"
#include "doctest.h"

using namespace dbhdist;

TEST_CASE("config lines, comments and whitespace") {
  const Config c = Config::parse("# header\n a = 1 \nb=two words # trailing\n\n  c =\n", "mem");
  CHECK(c.get("a", "") == "1");
  CHECK(c.get("b", "") == "two words");
  CHECK(c.has("c"));
  CHECK(c.get("c", "x").empty());
  CHECK(c.get("missing", "fallback") == "fallback");
  CHECK(c.keys() == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("config rejects duplicates and malformed lines with their location") {
  try {
    Config::parse("a = 1\nb = 2\na = 3\n", "run.cfg");
    FAIL("duplicate accepted");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("run.cfg line 3") != std::string::npos);
    CHECK(msg.find("line 1") != std::string::npos);
  }
  CHECK_THROWS_AS(Config::parse("just text\n", "mem"), ValidationError);
  CHECK_THROWS_AS(Config::parse(" = 4\n", "mem"), ValidationError);
}

TEST_CASE("overrides replace values and keep first-seen order") {
  Config c = Config::parse("seed = 1\nchains = 2\n", "mem");
  c.apply_override("seed=9");
  c.apply_override(" thin = 3 ");
  CHECK(c.get_int("seed", 0) == 9);
  CHECK(c.get_int("thin", 0) == 3);
  CHECK(c.keys() == std::vector<std::string>{"seed", "chains", "thin"});
  CHECK_THROWS_AS(c.apply_override("novalue"), ValidationError);
  CHECK_THROWS_AS(c.apply_override("=3"), ValidationError);
}

TEST_CASE("typed getters") {
  const Config c = Config::parse(
      "x = 2.5\nn = 7\nbig = 18446744073709551615\nneg = -1\nyes = true\nno = off\nbad = 1.5.2\n", "mem");
  CHECK(c.get_double("x", 0) == 2.5);
  CHECK(c.get_int("n", 0) == 7);
  CHECK(c.get_seed("big", 0) == 18446744073709551615ULL);
  CHECK_THROWS_AS(c.get_seed("neg", 0), ValidationError);
  CHECK(c.get_bool("yes", false));
  CHECK_FALSE(c.get_bool("no", true));
  CHECK_THROWS_AS(c.get_bool("x", true), ValidationError);
  CHECK_THROWS_AS(c.get_double("bad", 0), ValidationError);
  CHECK_THROWS_AS(c.require("absent"), ValidationError);
  CHECK(c.get_double("absent", 4.0) == 4.0);
}

TEST_CASE("canonical text is sorted and independent of input order") {
  const Config a = Config::parse("b = 2\na = 1\n", "mem");
  const Config b = Config::parse("a = 1\n# note\nb = 2\n", "mem");
  CHECK(a.canonical() == "a=1\nb=2\n");
  CHECK(a.canonical() == b.canonical());
  CHECK(a.canonical({"b"}) == "a=1\n");
}

TEST_CASE("unknown keys are rejected unless a prefix admits them") {
  const Config c = Config::parse("seed = 1\nmodel.m1.mu = s(MVH)\n", "mem");
  CHECK_NOTHROW(c.check_keys({"seed"}, {"model."}));
  CHECK_THROWS_AS(c.check_keys({"seed"}), ValidationError);
}

TEST_CASE("relative paths resolve against the base directory") {
  Config c = Config::parse("trees = data/trees.csv\nabs = /x/y.csv\nempty =\n", "mem");
  c.set_base_dir("/srv/run");
  CHECK(*c.get_path("trees") == std::filesystem::path("/srv/run/data/trees.csv"));
  CHECK(*c.get_path("abs") == std::filesystem::path("/x/y.csv"));
  CHECK_FALSE(c.get_path("empty").has_value());
  CHECK_FALSE(c.get_path("none").has_value());
}
