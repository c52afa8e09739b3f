#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include "settings.hpp"

using namespace inloop::cli;

namespace {

std::vector<KeySpec> keys() {
  return {
      {"eta", ValueKind::real, std::nullopt, ""},
      {"n", ValueKind::count, "10", ""},
      {"kind", ValueKind::text, "rectangular", ""},
      {"on", ValueKind::flag, "false", ""},
      {"bins", ValueKind::list, std::nullopt, ""},
  };
}

}  // namespace

TEST_CASE("key-value parsing") {
  auto e = parse_key_value("# header\n\n  eta = 0.8   # trailing\nn=3\r\nkind = single-pole", "f.cfg");
  REQUIRE(e.size() == 3);
  CHECK(e["eta"].value == "0.8");
  CHECK(e["eta"].origin == "f.cfg:3");
  CHECK(e["n"].value == "3");
  CHECK(e["kind"].value == "single-pole");

  CHECK_THROWS_WITH_AS(parse_key_value("eta 0.8", "f.cfg"), "f.cfg:1: expected 'key = value'",
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_key_value("eta = 1\neta = 2", "f.cfg"),
                       "f.cfg:2: duplicate key 'eta' (first set at f.cfg:1)", ConfigError);
  CHECK_THROWS_WITH_AS(parse_key_value("eta =", "f.cfg"), "f.cfg:1: field 'eta' has no value",
                       ConfigError);
  CHECK_THROWS_AS(parse_key_value("e-ta = 1", "f.cfg"), ConfigError);
}

TEST_CASE("json parsing") {
  auto e = parse_json(R"({"eta": 0.8, "n": 3, "kind": "sampled", "on": true, "bins": [1, 2.5]})",
                      "f.json");
  CHECK(std::stod(e["eta"].value) == 0.8);
  CHECK(e["n"].value == "3");
  CHECK(e["kind"].value == "sampled");
  CHECK(e["on"].value == "true");
  CHECK(e["bins"].value == "1,2.5");
  CHECK_THROWS_AS(parse_json("[1, 2]", "f.json"), ConfigError);
  CHECK_THROWS_AS(parse_json(R"({"eta": {"a": 1}})", "f.json"), ConfigError);
  CHECK_THROWS_AS(parse_json(R"({"eta": )", "f.json"), ConfigError);
}

TEST_CASE("typed access reports the origin") {
  Settings s("demo", keys());
  s.merge_config(parse_key_value("eta = abc\nn = -1\non = maybe\nbins = 1,,2", "f.cfg"));
  CHECK_THROWS_WITH_AS(s.real("eta"), "f.cfg:1: field 'eta': expected a finite number, got 'abc'",
                       ConfigError);
  CHECK_THROWS_AS(s.count("n"), ConfigError);
  CHECK_THROWS_AS(s.flag("on"), ConfigError);
  CHECK_THROWS_AS(s.list("bins"), ConfigError);
  s.set_flag("eta", "inf");
  CHECK_THROWS_WITH_AS(s.real("eta"), "--eta: field 'eta': expected a finite number, got 'inf'",
                       ConfigError);
  CHECK_THROWS_AS(s.merge_config(parse_key_value("zeta = 1", "f.cfg")), ConfigError);
  CHECK_THROWS_AS(s.merge_config(parse_key_value("subcommand = other", "f.cfg")), ConfigError);
  s.merge_config(parse_key_value("subcommand = demo", "f.cfg"));
}

TEST_CASE("defaults, precedence and requirements") {
  Settings s("demo", keys());
  s.merge_config(parse_key_value("eta = 0.5\nn = 4", "f.cfg"));
  s.set_flag("n", "7");
  s.apply_defaults();
  CHECK(s.real("eta") == 0.5);
  CHECK(s.count("n") == 7);
  CHECK(s.entry("n").origin == "--n");
  CHECK(s.text("kind") == "rectangular");
  CHECK(s.entry("kind").origin == "default");
  CHECK_FALSE(s.flag("on"));
  CHECK_FALSE(s.has("bins"));
  CHECK_THROWS_WITH_AS(s.require("bins"), "missing required field 'bins' for demo", ConfigError);
  CHECK_THROWS_AS(s.require_one_of("eta", "n"), ConfigError);
  CHECK_NOTHROW(s.require_one_of("eta", "bins"));
}

TEST_CASE("manifest values read back exactly") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const double eta = std::ldexp(u(rng), static_cast<int>(rng() % 80) - 40);
    const std::vector<double> bins = {u(rng), std::abs(u(rng)) * 1e-300, 1.0 / 3.0};
    Settings s("demo", keys());
    s.set_flag("eta", exact(eta));
    std::string list;
    for (double b : bins) list += (list.empty() ? "" : ",") + exact(b);
    s.set_flag("bins", list);
    s.set_flag("n", std::to_string(rng() >> 1));
    s.apply_defaults();
    const std::string text = s.manifest().dump(2);

    Settings back("demo", keys());
    back.merge_config(parse_json(text, "manifest.json"));
    back.apply_defaults();
    CHECK(back.real("eta") == eta);
    CHECK(back.list("bins") == bins);
    CHECK(back.count("n") == s.count("n"));
    CHECK(back.manifest().dump(2) == text);
  }
}
