// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "critplan/error.hpp"
#include "critplan/text.hpp"
#include "support.hpp"

using namespace critplan;

TEST_CASE("tokenize lowercases and splits on punctuation") {
  CHECK(tokenize("Hello, World! O(n^2)") ==
        std::vector<std::string>{"hello", "world", "o", "n", "2"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("  ...  ").empty());
  CHECK(tokenize("naïve café") == std::vector<std::string>{"naïve", "café"});
}

TEST_CASE("digest is stable and content addressed") {
  CHECK(digest("abc") == digest("abc"));
  CHECK(digest("abc") != digest("abd"));
  CHECK(digest("").size() == 16);
  // FNV-1a 64 of the empty string is the offset basis.
  CHECK(digest("") == "cbf29ce484222325");
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("normalize_answer trims, collapses and case-folds") {
  CHECK(normalize_answer("  Forty\t\tTWO \n") == "forty two");
  CHECK(normalize_answer("") == "");
}

TEST_CASE("last_fenced_block") {
  CHECK(last_fenced_block("no fence").has_value() == false);
  CHECK(*last_fenced_block("x ```42``` y") == "42");
  CHECK(*last_fenced_block("```python\nprint(1)\n```") == "print(1)");
  CHECK(*last_fenced_block("```a``` then ```b```") == "b");
  CHECK_FALSE(last_fenced_block("```unterminated").has_value());
}

TEST_CASE("write_file creates parents and read_file round-trips") {
  testing::TempDir dir("text");
  write_file(dir / "a/b/c.txt", "payload\nline2");
  CHECK(read_file(dir / "a/b/c.txt") == "payload\nline2");
  CHECK(read_lines(dir / "a/b/c.txt") == std::vector<std::string>{"payload", "line2"});
  CHECK_THROWS_AS(read_file(dir / "missing"), Error);
}
