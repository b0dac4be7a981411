#include <doctest.h>

#include "tret/text.hpp"

using namespace tret;

TEST_SUITE("text") {

TEST_CASE("split_whitespace") {
  auto toks = split_whitespace("  one\ttwo \n three  ");
  REQUIRE(toks.size() == 3);
  CHECK(toks[0] == "one");
  CHECK(toks[1] == "two");
  CHECK(toks[2] == "three");
  CHECK(split_whitespace("").empty());
  CHECK(split_whitespace(" \t\n ").empty());
  CHECK(split_whitespace("single").size() == 1);
}

TEST_CASE("whitespace_tokens") {
  CHECK(whitespace_tokens("") == 0);
  CHECK(whitespace_tokens("   ") == 0);
  CHECK(whitespace_tokens("a") == 1);
  CHECK(whitespace_tokens("a b  c\nd") == 4);
}

TEST_CASE("truncate keeps input when under budget") {
  CHECK(truncate_tokens("a b c", 3) == "a b c");
  CHECK(truncate_tokens("a b c", 10) == "a b c");
  CHECK(truncate_tokens("  padded   text  ", 2) == "  padded   text  ");
  CHECK(truncate_tokens("", 5) == "");
}

TEST_CASE("truncate cuts on whole-token boundary") {
  CHECK(truncate_tokens("a b c d", 2) == "a b");
  CHECK(truncate_tokens("  a   bb ccc d", 3) == "  a   bb ccc");
  CHECK(truncate_tokens("alpha beta", 1) == "alpha");
}

TEST_CASE("truncate never drops below one token") {
  CHECK(truncate_tokens("alpha beta", 0) == "alpha");
  CHECK(truncate_tokens("alpha beta", -4) == "alpha");
}

}  // TEST_SUITE
