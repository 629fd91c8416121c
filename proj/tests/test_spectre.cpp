#include <doctest.h>

#include <set>

#include "fesim/spectre.hpp"

using namespace fesim;

TEST_SUITE("spectre") {
  TEST_CASE("boundary chunks and a middle one are recovered without L1I misses") {
    for (std::uint32_t chunk : {0u, 21u, 31u}) {
      SpectreScenario s({}, 1);
      s.warm_up();
      const auto r = s.leak(chunk);
      CHECK(r.recovered == static_cast<int>(chunk));
      CHECK_FALSE(r.ambiguous);
      CHECK(r.added_l1i_misses == 0);
      REQUIRE(r.per_set_cycles.size() == 32);
      // Only the encoded set is slow.
      for (std::uint32_t k = 0; k < 32; ++k)
        if (k != chunk) CHECK(r.per_set_cycles[k] < r.per_set_cycles[chunk]);
    }
  }

  TEST_CASE("no encoding means no outlier") {
    SpectreScenario s({}, 1);
    s.warm_up();
    s.prime();
    const auto r = s.probe_all_sets();
    CHECK(r.ambiguous);
    CHECK(r.recovered == -1);
    const std::set<std::uint64_t> distinct(r.per_set_cycles.begin(), r.per_set_cycles.end());
    CHECK(distinct.size() == 1);
  }

  TEST_CASE("property: every chunk maps to its own set") {
    SpectreScenario s({}, 3);
    s.warm_up();
    std::set<int> seen;
    for (std::uint32_t c = 0; c < 32; ++c) {
      const auto r = s.leak(c);
      CHECK(r.recovered == static_cast<int>(c));
      CHECK(r.added_l1i_misses == 0);
      seen.insert(r.recovered);
    }
    CHECK(seen.size() == 32);
  }

  TEST_CASE("out-of-range chunk is rejected") {
    SpectreScenario s({}, 1);
    CHECK_THROWS_AS(s.transient_encode(32), ValidationError);
  }

  TEST_CASE("training only counts") {
    SpectreScenario s({}, 1, SpectreParams{5, std::nullopt});
    s.warm_up();
    const auto before = s.core().frontend().counters();
    s.train();
    CHECK(s.trained_iterations() == 5);
    CHECK(s.core().frontend().counters() == before);
  }

  TEST_CASE("hex secrets split into 5-bit chunks") {
    // 0xff -> 11111 111(00)
    CHECK(chunks_from_hex("ff") == std::vector<std::uint32_t>{31, 28});
    CHECK(chunks_from_hex("0xFF") == chunks_from_hex("ff"));
    // 0x84210 is 10000 10000 10000 10000.
    CHECK(chunks_from_hex("84210") == std::vector<std::uint32_t>{16, 16, 16, 16});
    CHECK_THROWS_AS(chunks_from_hex(""), ValidationError);
    CHECK_THROWS_AS(chunks_from_hex("0x"), ValidationError);
    CHECK_THROWS_AS(chunks_from_hex("zz"), ValidationError);
    const auto r = random_chunks(100, 4);
    CHECK(r == random_chunks(100, 4));
    for (auto c : r) CHECK(c < 32);
  }

  TEST_CASE("spectre csv") {
    const auto rows = run_spectre({}, {3, 9}, 1);
    const auto csv = spectre_csv(rows, 32);
    CHECK(csv.rfind("chunk_index,true_value,recovered_value,set0_cycles,", 0) == 0);
    CHECK(csv.find(",set31_cycles,added_l1i_misses\n") != std::string::npos);
    CHECK(csv.find("\n0,3,3,") != std::string::npos);
    CHECK(csv.find("\n1,9,9,") != std::string::npos);
  }

  TEST_CASE("noisy probes are reproducible for a fixed seed") {
    SimSetup noisy;
    noisy.costs.noise_sigma = 2.0;
    const auto secret = random_chunks(16, 9);
    const auto a = spectre_csv(run_spectre(noisy, secret, 5), 32);
    CHECK(a == spectre_csv(run_spectre(noisy, secret, 5), 32));
    CHECK(a != spectre_csv(run_spectre(noisy, secret, 6), 32));
  }
}
