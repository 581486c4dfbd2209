#include "doctest.h"

#include <set>

#include "mdcsa/random.hpp"

using namespace mdcsa;

TEST_CASE("seed streams are deterministic") {
  SeedStream a(42), b(42);
  CHECK(a.derive("init") == b.derive("init"));
  CHECK(a.derive("batch", 3) == b.derive("batch", 3));
}

TEST_CASE("named streams differ from each other and across indices") {
  SeedStream s(42);
  std::set<std::uint64_t> seen;
  for (const char* name : {"init", "batch", "bootstrap", "dropout"}) {
    for (std::uint64_t i = 0; i < 8; ++i) {
      seen.insert(s.derive(name, i));
    }
  }
  CHECK(seen.size() == 32);
}

TEST_CASE("different roots give different streams") {
  CHECK(SeedStream(1).derive("init") != SeedStream(2).derive("init"));
}

TEST_CASE("fnv1a64 matches reference values") {
  // Published FNV-1a test vector.
  const char* s = "a";
  CHECK(fnv1a64(s, 1) == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("", 0) == 0xcbf29ce484222325ull);
}
