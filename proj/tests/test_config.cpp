#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fesim/config.hpp"

using namespace fesim;

TEST_SUITE("config") {
  TEST_CASE("defaults") {
    const ExperimentConfig c;
    CHECK(c.sim.fe.dsb.sets == 32);
    CHECK(c.sim.fe.lsd.capacity_uops == 64);
    CHECK(c.sim.costs.noise_sigma == 0.0);
    CHECK(c.sim.rapl_interval_s == doctest::Approx(1.0 / 20000));
    CHECK(c.fingerprint.sampling_hz == 10.0);
    CHECK_NOTHROW(c.validate());
  }

  TEST_CASE("dump and parse round-trip") {
    ExperimentConfig c;
    c.sim.costs.noise_sigma = 2.5;
    c.sim.fe.lsd.enabled = false;
    c.channel.variant = Variant::mt_misalign;
    c.channel.p = 500;
    c.channel.alternate_set = 9;
    c.channel.enclave.enabled = true;
    c.spectre.margin = 3.0;
    c.fingerprint_victims = "a.csv,b.csv";
    c.seed = 99;
    const auto text = dump_config(c);
    CHECK(parse_config(text) == c);
    CHECK(dump_config(parse_config(text)) == text);
    CHECK(parse_config(dump_config(ExperimentConfig{})) == ExperimentConfig{});
  }

  TEST_CASE("every key is settable and readable") {
    ExperimentConfig c;
    for (const auto& k : config_keys()) {
      const auto v = get_config_value(c, k.name);
      CHECK_NOTHROW(set_config_value(c, k.name, v));
      CHECK_FALSE(k.help.empty());
    }
    CHECK(c == ExperimentConfig{});
  }

  TEST_CASE("parsing details") {
    const auto c = parse_config(R"(# comment line
noise.sigma = 1.5

channel.variant=slow_switch
channel.d = auto
  seed =  17
)");
    CHECK(c.sim.costs.noise_sigma == 1.5);
    CHECK(c.channel.variant == Variant::slow_switch);
    CHECK_FALSE(c.channel.d.has_value());
    CHECK(c.seed == 17);
    CHECK_THROWS_AS(parse_config("no.such.key = 1"), ValidationError);
    CHECK_THROWS_AS(parse_config("seed"), ValidationError);
    CHECK_THROWS_AS(parse_config("seed = abc"), ValidationError);
    CHECK_THROWS_AS(parse_config("seed = -1"), ValidationError);
    CHECK_THROWS_AS(parse_config("lsd.enabled = maybe"), ValidationError);
    CHECK_THROWS_AS(parse_config("channel.variant = mt"), ValidationError);
  }

  TEST_CASE("overrides and layering") {
    ExperimentConfig base;
    base.seed = 5;
    auto c = parse_config("noise.sigma = 1\n", base);
    CHECK(c.seed == 5);
    apply_override(c, "noise.sigma=3");
    apply_override(c, "channel.d=4");
    CHECK(c.sim.costs.noise_sigma == 3.0);
    CHECK(c.channel.d == 4u);
    CHECK_THROWS_AS(apply_override(c, "noise.sigma"), ValidationError);
    CHECK_THROWS_AS(apply_override(c, "bogus=1"), ValidationError);
  }

  TEST_CASE("channel settings resolve against variant defaults") {
    ChannelSettings s;
    s.variant = Variant::mt_evict;
    auto p = s.resolve();
    CHECK(p.p == 1000);
    CHECK(p.q == 100);
    CHECK(p.d == 6);
    s.variant = Variant::nonmt_misalign;
    s.d = 3;
    p = s.resolve();
    CHECK(p.d == 3);
    CHECK(p.M == 8);
    CHECK(p.p == 10);
  }

  TEST_CASE("validation of whole configs") {
    ExperimentConfig c;
    c.sim.fe.dsb.sets = 24;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.sim.costs.cycles_mite = 6;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.sim.rapl_interval_s = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.output_dir = "";
    CHECK_THROWS_AS(c.validate(), ValidationError);
  }

  TEST_CASE("key filtering by prefix") {
    const auto keys = config_keys_for({"spectre.", "seed"});
    CHECK_FALSE(keys.empty());
    for (const auto& k : keys) CHECK((k.name.rfind("spectre.", 0) == 0 || k.name == "seed"));
  }

  TEST_CASE("load from file") {
    const auto path = std::filesystem::temp_directory_path() / "fesim_config_test.cfg";
    {
      std::ofstream f(path);
      f << "seed = 8\n";
    }
    CHECK(load_config(path.string()).seed == 8);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_config(path.string()), ValidationError);
  }
}
