// Copyright 2026 The scholex Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "scholex/doi.hpp"

using namespace scholex;

TEST_SUITE("doi") {
  TEST_CASE("validity") {
    CHECK(doi::is_valid("10.1186/s12920-019-0613-5"));
    CHECK(doi::is_valid("10.5281/zenodo.5874955"));
    CHECK_FALSE(doi::is_valid("10.123/abc"));  // 3 registrant digits
    CHECK_FALSE(doi::is_valid("10.5281/"));
    CHECK_FALSE(doi::is_valid("10.5281/zenodo.1."));
    CHECK_FALSE(doi::is_valid("11.5281/zenodo.1"));
    CHECK_FALSE(doi::is_valid("10.5281/a b"));
  }

  TEST_CASE("normalize strips resolver prefixes and trailing punctuation") {
    CHECK(doi::normalize("https://doi.org/10.1186/s12920-019-0613-5") == "10.1186/s12920-019-0613-5");
    CHECK(doi::normalize("http://dx.doi.org/10.1186/ABC") == "10.1186/ABC");
    CHECK(doi::normalize("doi:10.5281/zenodo.5874955.") == "10.5281/zenodo.5874955");
    CHECK_FALSE(doi::normalize("https://example.org/paper").has_value());
  }

  TEST_CASE("find_all trims trailing period") {
    auto found = doi::find_all("see 10.5281/zenodo.5874955. and (10.1000/xyz)");
    REQUIRE(found.size() == 2);
    CHECK(found[0].doi == "10.5281/zenodo.5874955");
    CHECK(found[0].offset == 4);
    CHECK(found[1].doi == "10.1000/xyz");
  }

  TEST_CASE("canonical key and slug") {
    CHECK(doi::canonical_key("10.1186/S12920-019-0613-5") == "10.1186/s12920-019-0613-5");
    CHECK(doi::slug("10.1186/s12920") == "10.1186_s12920");
  }

  TEST_CASE("unparseable mentions") {
    CHECK(doi::count_unparseable_mentions("doi:TBD and https://doi.org/10.1/x") == 2);
    CHECK(doi::count_unparseable_mentions("doi:10.5281/zenodo.1") == 0);
    CHECK(doi::count_unparseable_mentions("") == 0);
  }
}
