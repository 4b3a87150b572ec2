#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "mgsim/secondary.hpp"

using namespace mgsim;

namespace {

SecondaryConfig cfg_with(double k_i, int rounds) {
  SecondaryConfig cfg;
  cfg.enabled = true;
  cfg.k_i = k_i;
  cfg.rounds = rounds;
  return cfg;
}

}  // namespace

TEST_CASE("secondary configuration validation") {
  CHECK_NOTHROW(validate(cfg_with(1.0, 0)));
  SecondaryConfig bad = cfg_with(1.0, 3);
  bad.period = 0.0;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = cfg_with(0.0, 3);
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = cfg_with(1.0, -1);
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);

  AttackSpec atk;
  atk.enabled = true;
  atk.targets = {"gfm2"};
  atk.t_on = 2.0;
  atk.t_off = 16.0;
  CHECK_NOTHROW(validate(atk));
  atk.targets.clear();
  CHECK_THROWS_AS(validate(atk), std::invalid_argument);
  atk.targets = {"gfm2"};
  atk.t_off = 2.0;
  CHECK_THROWS_AS(validate(atk), std::invalid_argument);
  atk.enabled = false;
  CHECK_NOTHROW(validate(atk));  // disabled spec is never inspected
}

TEST_CASE("no correction at nominal frequency") {
  const std::vector<SecondaryDevice> devs = {{400.0, 0.31}, {200.0, 0.62}};
  const std::vector<double> out = secondary_update(60.0, 60.0, devs, cfg_with(2.0, 0));
  CHECK(out[0] == 0.31);
  CHECK(out[1] == 0.62);
}

TEST_CASE("two equal devices split a tenth of correction evenly") {
  // f = 59.9, k_i = 1: delta = 0.1, each receives half on its own base
  const std::vector<SecondaryDevice> devs = {{500.0, 0.4}, {500.0, 0.4}};
  const std::vector<double> out = secondary_update(59.9, 60.0, devs, cfg_with(1.0, 0));
  CHECK(out[0] == Catch::Approx(0.45).margin(1e-12));
  CHECK(out[1] == Catch::Approx(0.45).margin(1e-12));
}

TEST_CASE("increments follow the rating share before any averaging") {
  const std::vector<SecondaryDevice> devs = {{600.0, 0.2}, {300.0, 0.5}, {100.0, 0.8}};
  const double f = 59.8;
  const double k_i = 1.5;
  const std::vector<double> out = secondary_update(f, 60.0, devs, cfg_with(k_i, 0));
  const double delta = k_i * (60.0 - f);
  const double s_total = 1000.0;
  for (std::size_t i = 0; i < devs.size(); ++i) {
    CHECK(out[i] == Catch::Approx(devs[i].p_set_star + delta * devs[i].rating / s_total)
                        .margin(1e-12));
  }
  // injected power on the system base: sum s_i * inc_i = delta * sum(s_i^2) / sum(s)
  double injected = 0.0;
  double s_sq = 0.0;
  for (std::size_t i = 0; i < devs.size(); ++i) {
    injected += devs[i].rating * (out[i] - devs[i].p_set_star);
    s_sq += devs[i].rating * devs[i].rating;
  }
  CHECK(injected == Catch::Approx(delta * s_sq / s_total).margin(1e-9));
}

TEST_CASE("averaging rounds conserve the rating-weighted total") {
  std::mt19937 rng(9201);
  std::uniform_real_distribution<double> u_s(50.0, 800.0);
  std::uniform_real_distribution<double> u_p(0.1, 0.9);
  std::uniform_real_distribution<double> u_f(59.7, 60.3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<SecondaryDevice> devs;
    const int n = 2 + trial % 4;
    for (int i = 0; i < n; ++i) devs.push_back({u_s(rng), u_p(rng)});
    const double f = u_f(rng);
    const SecondaryConfig cfg = cfg_with(0.5, 4);
    const std::vector<double> with_rounds = secondary_update(f, 60.0, devs, cfg);
    const std::vector<double> no_rounds = secondary_update(f, 60.0, devs, cfg_with(0.5, 0));
    double a = 0.0;
    double b = 0.0;
    for (int i = 0; i < n; ++i) {
      a += devs[i].rating * with_rounds[i];
      b += devs[i].rating * no_rounds[i];
    }
    CHECK(a == Catch::Approx(b).margin(1e-9));
  }
}

TEST_CASE("averaging contracts the per-unit spread") {
  const std::vector<SecondaryDevice> devs = {{400.0, 0.2}, {200.0, 0.8}};
  const std::vector<double> once = secondary_update(60.0, 60.0, devs, cfg_with(1.0, 1));
  // weighted mean = (400*0.2 + 200*0.8)/600 = 0.4
  CHECK(once[0] == Catch::Approx(0.3).margin(1e-12));
  CHECK(once[1] == Catch::Approx(0.6).margin(1e-12));
  const std::vector<double> many = secondary_update(60.0, 60.0, devs, cfg_with(1.0, 30));
  CHECK(std::abs(many[0] - many[1]) < 1e-8);
  CHECK(many[0] == Catch::Approx(0.4).margin(1e-7));
}

TEST_CASE("results are clamped to the unit interval after averaging") {
  const std::vector<SecondaryDevice> devs = {{500.0, 0.95}, {500.0, 0.98}};
  const std::vector<double> high = secondary_update(59.0, 60.0, devs, cfg_with(1.0, 0));
  CHECK(high[0] == 1.0);
  CHECK(high[1] == 1.0);
  // f = 61: delta = -1, both drop by 0.5 pu and hit the floor
  const std::vector<double> low =
      secondary_update(61.0, 60.0, {{500.0, 0.01}, {500.0, 0.3}}, cfg_with(1.0, 0));
  CHECK(low[0] == 0.0);
  CHECK(low[1] == 0.0);
}

TEST_CASE("degenerate device lists pass through unchanged") {
  CHECK(secondary_update(59.5, 60.0, {}, cfg_with(1.0, 2)).empty());
  const std::vector<SecondaryDevice> zero = {{0.0, 0.4}};
  const std::vector<double> out = secondary_update(59.5, 60.0, zero, cfg_with(1.0, 2));
  CHECK(out[0] == 0.4);
}

TEST_CASE("attack masking holds targets at the snapshot inside the window") {
  AttackSpec atk;
  atk.enabled = true;
  atk.targets = {"gfm2", "gfm3"};
  atk.t_on = 2.0;
  atk.t_off = 16.0;
  const std::vector<std::string> ids = {"gfm1", "gfm2", "gfm3"};
  const std::map<std::string, double> snap = {{"gfm2", 0.5}, {"gfm3", 0.6}};
  const std::vector<double> fresh = {0.71, 0.72, 0.73};

  SECTION("before the window everything passes") {
    CHECK(attack_filter(ids, fresh, atk, snap, 1.999) == fresh);
  }
  SECTION("the window opens at exactly t_on") {
    const std::vector<double> out = attack_filter(ids, fresh, atk, snap, 2.0);
    CHECK(out[0] == 0.71);
    CHECK(out[1] == 0.5);
    CHECK(out[2] == 0.6);
  }
  SECTION("the window is half open: t_off is already outside") {
    CHECK(attack_filter(ids, fresh, atk, snap, 16.0) == fresh);
    const std::vector<double> inside = attack_filter(ids, fresh, atk, snap, 15.999);
    CHECK(inside[1] == 0.5);
  }
  SECTION("masking is idempotent") {
    const std::vector<double> once = attack_filter(ids, fresh, atk, snap, 8.0);
    CHECK(attack_filter(ids, once, atk, snap, 8.0) == once);
  }
  SECTION("a target missing from the snapshot passes through") {
    const std::map<std::string, double> partial = {{"gfm2", 0.5}};
    const std::vector<double> out = attack_filter(ids, fresh, atk, partial, 8.0);
    CHECK(out[2] == 0.73);
  }
  SECTION("disabled attacks are identity everywhere") {
    atk.enabled = false;
    CHECK(attack_filter(ids, fresh, atk, snap, 8.0) == fresh);
  }
}
