// Copyright 2026 The diarkit Authors.
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

#include <doctest.h>

#include <random>

#include "diarkit/timeline.h"
#include "oracles.h"

using namespace diarkit;

TEST_CASE("rttm line maps fields directly") {
  const auto anns = rttm_parse("SPEAKER M030 1 12.340 2.500 <NA> <NA> spk01 <NA> <NA>\n");
  REQUIRE(anns.size() == 1);
  CHECK(anns[0].recording_id() == "M030");
  REQUIRE(anns[0].size() == 1);
  CHECK(anns[0].entries()[0].segment.onset() == 12340);
  CHECK(anns[0].entries()[0].segment.duration() == 2500);
  CHECK(anns[0].entries()[0].label == "spk01");
}

TEST_CASE("rttm write is byte exact") {
  Annotation a("M030");
  a.add(Segment(12340, 2500), "spk01");
  CHECK(rttm_write(a) == "SPEAKER M030 1 12.340 2.500 <NA> <NA> spk01 <NA> <NA>\n");
}

TEST_CASE("empty rttm gives no annotations") {
  CHECK(rttm_parse("").empty());
  CHECK(rttm_parse(";; just a comment\n\n").empty());
}

TEST_CASE("adjacent segments stay unmerged on parse") {
  const auto anns = rttm_parse(
      "SPEAKER r 1 0.000 1.000 <NA> <NA> A <NA> <NA>\n"
      "SPEAKER r 1 1.000 1.000 <NA> <NA> A <NA> <NA>\n");
  REQUIRE(anns.size() == 1);
  CHECK(anns[0].size() == 2);
  CHECK(anns[0].merged().size() == 1);
}

TEST_CASE("entries are written sorted whatever the insertion order") {
  Annotation a("r");
  a.add(Segment(5000, 1000), "B");
  a.add(Segment(0, 1000), "A");
  a.add(Segment(2000, 500), "A");
  const std::string text = rttm_write(a);
  CHECK(text.find("0.000") < text.find("2.000"));
  CHECK(text.find("2.000") < text.find("5.000"));
}

TEST_CASE("parse write parse round trip") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    std::vector<Annotation> anns;
    anns.push_back(oracle::random_annotation(rng, "a", 4, 10, 20000));
    anns.push_back(oracle::random_annotation(rng, "b", 4, 10, 20000));
    const auto once = rttm_parse(rttm_write(anns));
    CHECK(rttm_parse(rttm_write(once)) == once);
  }
}

TEST_CASE("malformed rttm reports the line") {
  try {
    rttm_parse("SPEAKER r 1 0.000 1.000 <NA> <NA> A <NA> <NA>\nSPEAKER r 1 zero\n");
    FAIL("expected ParseError");
  } catch (const ParseError &e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(rttm_parse("SPEAKER r 1 0.000 -1.000 <NA> <NA> A <NA> <NA>\n"), DataError);
}

TEST_CASE("times are stored as whole milliseconds") {
  CHECK(seconds_to_millis(12.3456) == 12346);
  CHECK(format_millis(12346) == "12.346");
  CHECK(format_millis(5) == "0.005");
  CHECK(format_millis(0) == "0.000");
}

TEST_CASE("crop examples") {
  Uem u("r", {Segment::from_bounds(5000, 20000)});
  Annotation a("r");
  a.add(Segment::from_bounds(0, 10000), "A");
  a.add(Segment::from_bounds(30000, 40000), "B");
  const Annotation c = crop(a, u);
  REQUIRE(c.size() == 1);
  CHECK(c.entries()[0].segment == Segment::from_bounds(5000, 10000));

  Uem two("r", {Segment::from_bounds(0, 2000), Segment::from_bounds(3000, 5000)});
  Annotation s("r");
  s.add(Segment::from_bounds(1000, 4000), "A");
  CHECK(crop(s, two).size() == 2);
}

TEST_CASE("crop is idempotent and never adds time") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 100; ++i) {
    const Annotation a = oracle::random_annotation(rng, "r", 3, 12, 10000);
    Uem u("r", {Segment::from_bounds(1000, 4000), Segment::from_bounds(6000, 9000)});
    const Annotation once = crop(a, u);
    CHECK(crop(once, u) == once);
    CHECK(once.total_duration() <= a.total_duration());
  }
}

TEST_CASE("boundaries examples") {
  Annotation a("r"), b("r");
  a.add(Segment::from_bounds(0, 5000), "A");
  b.add(Segment::from_bounds(3000, 4000), "B");
  b.add(Segment::from_bounds(4000, 5000), "C");
  const std::vector<Annotation> both{a, b};
  CHECK(boundaries(both) == std::vector<Millis>{0, 3000, 4000, 5000});
  CHECK(boundaries(std::span<const Annotation>{}).empty());
}

TEST_CASE("uem parse and write") {
  const auto u = uem_parse("r2 1 0.000 10.000\nr1 1 5.000 6.500\nr1 1 0.000 1.000\n");
  REQUIRE(u.size() == 2);
  CHECK(u[0].recording_id() == "r1");
  CHECK(u[0].regions().size() == 2);
  CHECK(uem_parse(uem_write(u)) == u);
  CHECK_THROWS_AS(uem_parse("r 1 0 5\nr 1 4 6\n"), DataError);
}

TEST_CASE("default uem spans both annotations") {
  Annotation r("x"), h("x");
  r.add(Segment::from_bounds(1000, 3000), "A");
  h.add(Segment::from_bounds(2000, 7000), "B");
  const Uem u = default_uem(r, h);
  REQUIRE(u.regions().size() == 1);
  CHECK(u.regions()[0] == Segment::from_bounds(0, 7000));
}

TEST_CASE("duplicate entries are rejected") {
  Annotation a("r");
  a.add(Segment(0, 100), "A");
  CHECK_THROWS_AS(a.add(Segment(0, 100), "A"), DataError);
  CHECK_FALSE(a.try_add(Segment(0, 100), "A"));
  CHECK(a.try_add(Segment(0, 100), "B"));
}
