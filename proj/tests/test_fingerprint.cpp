#include <doctest.h>

#include <random>
#include <sstream>

#include "fesim/fingerprint.hpp"
#include "oracles.hpp"

using namespace fesim;

namespace {

IpcTrace tr(std::vector<double> v) { return IpcTrace{std::move(v), 10.0}; }

FingerprintParams quiet() {
  FingerprintParams p;
  p.jitter = 0.0;
  p.duration_s = 2.0;
  return p;
}

}  // namespace

TEST_SUITE("fingerprint") {
  TEST_CASE("patch detection follows the LSD flag") {
    PatchParams pp;
    pp.trials = 10;
    for (bool on : {true, false}) {
      SimSetup s;
      s.fe.lsd.enabled = on;
      const auto r = detect_patch(s, pp, 1);
      CHECK(r.verdict == (on ? PatchVerdict::lsd_enabled : PatchVerdict::lsd_disabled));
      REQUIRE(r.trials.size() == 10);
      for (const auto& t : r.trials) CHECK(t.verdict == r.verdict);
      if (on) {
        // The small loop streams from the LSD, so it is the cheaper one.
        CHECK(r.timing_gap > 0);
        CHECK(r.energy_gap > 0);
      } else {
        CHECK(r.timing_gap == 0.0);
        CHECK(r.energy_gap == 0.0);
      }
    }
  }

  TEST_CASE("noise far above the cost gap gives an inconclusive verdict") {
    PatchParams pp;
    pp.trials = 10;
    for (bool on : {true, false}) {
      SimSetup s;
      s.fe.lsd.enabled = on;
      s.costs.noise_sigma = 200.0;
      CHECK(detect_patch(s, pp, 1).verdict == PatchVerdict::inconclusive);
    }
  }

  TEST_CASE("equal cycle costs fall back to energy") {
    SimSetup s;
    s.costs.cycles_lsd = 7;
    PatchParams pp;
    pp.trials = 4;
    CHECK(detect_patch(s, pp, 1).verdict == PatchVerdict::lsd_enabled);
    s.fe.lsd.enabled = false;
    CHECK(detect_patch(s, pp, 1).verdict == PatchVerdict::lsd_disabled);
  }

  TEST_CASE("patch runs are identical serial and parallel") {
    SimSetup s;
    s.costs.noise_sigma = 1.0;
    PatchParams pp;
    pp.trials = 8;
    CHECK(patch_csv(detect_patch(s, pp, 3, Exec::serial), true) ==
          patch_csv(detect_patch(s, pp, 3, Exec::parallel), true));
  }

  TEST_CASE("euclidean distance") {
    CHECK(euclidean_distance(tr({1, 2, 3}), tr({1, 2, 3})) == 0.0);
    CHECK(euclidean_distance(tr({0, 0}), tr({3, 4})) == doctest::Approx(5.0));
    CHECK_THROWS_AS(euclidean_distance(tr({0}), tr({0, 1})), ValidationError);
    std::mt19937_64 g(2);
    std::normal_distribution<double> n(0, 1);
    for (int i = 0; i < 200; ++i) {
      std::vector<double> a(30), b(30);
      for (auto& x : a) x = n(g);
      for (auto& x : b) x = n(g);
      CHECK(euclidean_distance(tr(a), tr(b)) == doctest::Approx(oracle::euclid(a, b)).epsilon(1e-12));
    }
  }

  TEST_CASE("classification examples") {
    const std::vector<LabeledTrace> single{{"a", tr({1, 1})}, {"b", tr({5, 5})}};
    auto c = classify(single, tr({1, 1}));
    CHECK(c.label == "a");
    CHECK(c.intra_mean == 0.0);
    CHECK(c.inter_mean == doctest::Approx(std::sqrt(32.0)));

    const std::vector<LabeledTrace> fam{{"a", tr({1, 1})}, {"a", tr({1.2, 1})}, {"b", tr({5, 5})},
                                        {"b", tr({5, 5.2})}};
    c = classify(fam, tr({4.8, 5.1}));
    CHECK(c.label == "b");
    CHECK(c.intra_mean == doctest::Approx(0.2));
    CHECK(c.inter_mean > c.intra_mean);
    CHECK_THROWS_AS(classify({}, tr({1})), ValidationError);
    CHECK_THROWS_AS(classify(fam, tr({1})), ValidationError);
  }

  TEST_CASE("contention model") {
    CHECK(contention_factor(0, 1e9) == 1.0);
    CHECK(contention_factor(1e9, 1e9) == 0.5);
    CHECK(contention_factor(2e9, 1e9) < contention_factor(1e9, 1e9));
  }

  TEST_CASE("victim traces: rates, validation, CSV round trip") {
    VictimTrace v{"sq", 0.1, {0, 1e8, 0, 1e8}};
    CHECK(v.duration_s() == doctest::Approx(0.4));
    CHECK(v.mean_rate(0.0, 0.1) == doctest::Approx(0.0));
    CHECK(v.mean_rate(0.1, 0.2) == doctest::Approx(1e9));
    CHECK(v.mean_rate(0.0, 0.4) == doctest::Approx(5e8));
    CHECK(v.mean_rate(0.5, 0.6) == doctest::Approx(1e9));  // wraps around
    CHECK(v.mean_rate(0.05, 0.15) == doctest::Approx(5e8));
    CHECK_THROWS_AS(v.mean_rate(0.2, 0.2), ValidationError);

    std::stringstream ss;
    write_victim_csv(ss, v);
    const auto back = read_victim_csv(ss, "sq");
    CHECK(back.interval_s == v.interval_s);
    CHECK(back.demand_uops == v.demand_uops);

    std::stringstream bad_header("a,b\n0.1,5\n");
    CHECK_THROWS_AS(read_victim_csv(bad_header, "x"), ValidationError);
    std::stringstream mixed("interval_s,demand_uops\n0.1,5\n0.2,5\n");
    CHECK_THROWS_AS(read_victim_csv(mixed, "x"), ValidationError);
    std::stringstream neg("interval_s,demand_uops\n0.1,-5\n");
    CHECK_THROWS_AS(read_victim_csv(neg, "x"), ValidationError);
    std::stringstream empty("interval_s,demand_uops\n");
    CHECK_THROWS_AS(read_victim_csv(empty, "x"), ValidationError);
    CHECK_THROWS_AS(load_victim_csv("/nonexistent/trace.csv"), ValidationError);
  }

  TEST_CASE("attacker: idle victim gives a flat trace at baseline") {
    const VictimTrace idle{"idle", 0.1, {0.0}};
    const auto r = attacker_ipc_run(idle, {}, quiet(), 1);
    REQUIRE(r.trace.samples.size() == 20);
    for (double s : r.trace.samples) CHECK(s == doctest::Approx(r.baseline_ipc));
    CHECK(r.baseline_ipc > 0);
  }

  TEST_CASE("attacker: square-wave demand gives an inverted square wave") {
    const VictimTrace sq{"sq", 0.1, {0, 1e8}};
    const auto r = attacker_ipc_run(sq, {}, quiet(), 1);
    const double hi = r.baseline_ipc, lo = r.baseline_ipc * contention_factor(1e9, 1e9);
    for (std::size_t k = 0; k < r.trace.samples.size(); ++k)
      CHECK(r.trace.samples[k] == doctest::Approx(k % 2 ? lo : hi));
  }

  TEST_CASE("attacker stealth: DSB-resident, no L1I misses, partitioned or not") {
    for (bool part : {true, false}) {
      auto p = quiet();
      p.partitioned = part;
      const auto r = attacker_ipc_run(synthetic_victims()[0], {}, p, 1);
      CHECK(r.l1i_misses_after_warmup == 0);
      CHECK(r.lsd_blocks == 0);
    }
    std::uint32_t uops = 0;
    for (const auto& b : attacker_nop_loop()) uops += b.uop_count;
    CHECK(uops == 100);
  }

  TEST_CASE("parameter validation") {
    FingerprintParams p;
    CHECK(p.sample_count() == 30);
    p.sampling_hz = 0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = {};
    p.runs = 0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = {};
    p.duration_s = 0.01;
    CHECK_THROWS_AS(p.validate(), ValidationError);
  }

  TEST_CASE("synthetic victims are told apart") {
    FingerprintParams p;
    p.duration_s = 2.0;
    const auto rows = fingerprint_experiment(synthetic_victims(), {}, p, 1);
    REQUIRE(rows.size() == 12);
    for (const auto& r : rows) {
      CHECK(r.correct());
      CHECK(r.result.inter_mean > r.result.intra_mean);
    }
    const auto csv = fingerprint_csv(rows);
    CHECK(csv.rfind("probe_label,predicted,intra_mean,inter_mean,correct\n", 0) == 0);
    CHECK(csv == fingerprint_csv(fingerprint_experiment(synthetic_victims(), {}, p, 1, Exec::serial)));
  }
}
