#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mgsim/dac.hpp"
#include "support/oracles.hpp"

using namespace mgsim;

namespace {

DacConfig band(double lo, double hi, double alpha = 1.0, int q = 3) {
  DacConfig cfg;
  cfg.omega_min = lo;
  cfg.omega_max = hi;
  cfg.alpha = alpha;
  cfg.q = q;
  return cfg;
}

InverterParams unit_inverter(double m_p = 1.0) {
  InverterParams inv;
  inv.s_inv = 500.0;
  inv.m_p = m_p;
  return inv;
}

}  // namespace

TEST_CASE("configuration validation enforces structural constraints") {
  CHECK_NOTHROW(validate(band(59.9, 60.1, 1000.0, 3)));
  CHECK_NOTHROW(validate(band(59.9, 60.1, 0.5, 1)));
  CHECK_NOTHROW(validate(band(59.9, 60.1, 0.5, 5)));
  CHECK_THROWS_AS(validate(band(59.9, 60.1, 1.0, 2)), std::invalid_argument);
  CHECK_THROWS_AS(validate(band(59.9, 60.1, 1.0, 4)), std::invalid_argument);
  CHECK_THROWS_AS(validate(band(59.9, 60.1, 1.0, 0)), std::invalid_argument);
  CHECK_THROWS_AS(validate(band(59.9, 60.1, 1.0, -3)), std::invalid_argument);
  CHECK_THROWS_AS(validate(band(59.9, 60.1, 0.0, 3)), std::invalid_argument);
  CHECK_THROWS_AS(validate(band(59.9, 60.1, -2.0, 3)), std::invalid_argument);
  CHECK_THROWS_AS(validate(band(60.1, 59.9)), std::invalid_argument);
  CHECK_THROWS_AS(validate(band(60.0, 60.0)), std::invalid_argument);
  CHECK_NOTHROW(make_dac_config(true, 59.9, 60.1, 1000.0, 3));
  CHECK_THROWS_AS(make_dac_config(true, 59.9, 60.1, 1000.0, 2), std::invalid_argument);
}

TEST_CASE("barrier values are signed margins to the band edges") {
  const DacConfig cfg = band(59.9, 60.1);
  const BarrierValues mid = barrier_eval(60.0, cfg);
  CHECK(mid.b_min == Catch::Approx(0.1).margin(1e-12));
  CHECK(mid.b_max == Catch::Approx(-0.1).margin(1e-12));
  CHECK((mid.b_min >= 0.0 && mid.b_max <= 0.0));  // safe

  const BarrierValues edge = barrier_eval(59.9, cfg);
  CHECK(edge.b_min == 0.0);
  CHECK(edge.b_max == Catch::Approx(-0.2).margin(1e-12));
  CHECK((edge.b_min >= 0.0 && edge.b_max <= 0.0));  // boundary still safe

  const BarrierValues low = barrier_eval(59.4, band(59.5, 60.5));
  CHECK(low.b_min == Catch::Approx(-0.1).margin(1e-12));
  CHECK(low.b_min < 0.0);  // unsafe
}

TEST_CASE("lower set-point bound reduces to p_inv when all terms vanish") {
  const InverterParams inv = unit_inverter();
  // omega = omega_min = omega0: deviation and barrier both zero
  DacConfig cfg = band(60.0, 60.5);
  CHECK(p_set_low(60.0, 0.37, inv, cfg) == 0.37);

  // at the boundary the barrier term is zero, droop term remains
  cfg = band(59.9, 60.1);
  CHECK(p_set_low(59.9, 0.5, inv, cfg) == Catch::Approx(0.4).margin(1e-12));

  // direct substitution: 0.5 + (0 - 1*(0.1)^3) = 0.499
  CHECK(p_set_low(60.0, 0.5, inv, band(59.9, 60.5, 1.0, 3)) ==
        Catch::Approx(0.499).margin(1e-12));
}

TEST_CASE("upper set-point bound mirrors the lower one around omega_max") {
  const InverterParams inv = unit_inverter();
  DacConfig cfg = band(59.5, 60.0);
  CHECK(p_set_up(60.0, 0.37, inv, cfg) == 0.37);

  cfg = band(59.9, 60.1);
  CHECK(p_set_up(60.1, 0.5, inv, cfg) == Catch::Approx(0.6).margin(1e-12));

  // 0.5 + (0 - 1*(-0.1)^3) = 0.501
  CHECK(p_set_up(60.0, 0.5, inv, band(59.5, 60.1, 1.0, 3)) ==
        Catch::Approx(0.501).margin(1e-12));
}

TEST_CASE("selection passes through in the closed band bit for bit") {
  const DacConfig cfg = band(59.9, 60.1);
  const double star = 0.1234567890123456789;
  for (double omega : {59.9, 59.95, 60.0, 60.05, 60.1}) {
    const SelectResult r = dac_select(star, -10.0, 10.0, omega, cfg);
    CHECK(r.p_set == star);
    CHECK(r.active == DacActive::Passthrough);
    CHECK_FALSE(r.bounds_crossed);
  }
}

TEST_CASE("selection projects onto the admissible interval out of band") {
  const DacConfig cfg = band(59.9, 60.1);

  SECTION("below the band the low bound floors the request") {
    const SelectResult r = dac_select(0.2, 0.5, 0.9, 59.8, cfg);
    CHECK(r.p_set == 0.5);
    CHECK(r.active == DacActive::LowBarrier);
  }
  SECTION("above the band the high bound caps the request") {
    const SelectResult r = dac_select(0.9, 0.1, 0.6, 60.2, cfg);
    CHECK(r.p_set == 0.6);
    CHECK(r.active == DacActive::HighBarrier);
  }
  SECTION("a request inside the interval is untouched") {
    const SelectResult r = dac_select(0.55, 0.3, 0.8, 59.8, cfg);
    CHECK(r.p_set == 0.55);
    CHECK(r.active == DacActive::LowBarrier);
  }
  SECTION("crossed bounds return the violated side and raise the flag") {
    const SelectResult lo = dac_select(0.5, 0.9, 0.1, 59.8, cfg);
    CHECK(lo.p_set == 0.9);
    CHECK(lo.bounds_crossed);
    CHECK(lo.active == DacActive::LowBarrier);
    const SelectResult hi = dac_select(0.5, 0.9, 0.1, 60.2, cfg);
    CHECK(hi.p_set == 0.1);
    CHECK(hi.bounds_crossed);
    CHECK(hi.active == DacActive::HighBarrier);
  }
}

TEST_CASE("capacity clamp leaves sqrt(1 - q^2) of real headroom") {
  const InverterParams inv = unit_inverter();
  const DacConfig cfg = band(59.9, 60.1);

  const ClampResult triangle = capacity_clamp(0.95, 0.6, inv, cfg);
  CHECK(triangle.p_set == Catch::Approx(0.8).margin(1e-12));
  CHECK(triangle.clamped);

  const ClampResult free = capacity_clamp(0.5, 0.0, inv, cfg);
  CHECK(free.p_set == 0.5);
  CHECK_FALSE(free.clamped);

  const ClampResult none = capacity_clamp(0.7, 1.0, inv, cfg);
  CHECK(none.p_set == 0.0);
  CHECK(none.clamped);

  DacConfig floored = cfg;
  floored.p_set_min = 0.2;
  const ClampResult lifted = capacity_clamp(-0.5, 0.0, inv, floored);
  CHECK(lifted.p_set == 0.2);
  CHECK(lifted.clamped);

  CHECK_THROWS_AS(capacity_clamp(0.5, 1.0000001, inv, cfg), InfeasibleOperatingPoint);
  CHECK_THROWS_AS(capacity_clamp(0.5, -1.1, inv, cfg), InfeasibleOperatingPoint);
}

TEST_CASE("full evaluation composes bounds, selection, clamp in order") {
  const InverterParams inv = unit_inverter();
  const DacConfig cfg = band(59.9, 60.1, 1000.0, 3);

  SECTION("in band within capacity: passthrough") {
    const DacDecision d = dac_compute({60.0, 0.4, 0.0, 0.45}, inv, cfg);
    CHECK(d.p_set == 0.45);
    CHECK(d.active == DacActive::Passthrough);
    CHECK_FALSE(d.clamped);
    CHECK_FALSE(d.bounds_crossed);
  }
  SECTION("severe under-frequency saturates at the capacity ceiling") {
    const DacDecision d = dac_compute({56.5, 0.9, 0.0, 0.2}, inv, cfg);
    CHECK(d.p_set == 1.0);
    CHECK(d.active == DacActive::LowBarrier);
    CHECK(d.clamped);
  }
  SECTION("disabled filter still honors the hardware capacity") {
    DacConfig off = cfg;
    off.enabled = false;
    const DacDecision d = dac_compute({58.0, 0.9, 0.6, 0.95}, inv, off);
    CHECK(d.p_set == Catch::Approx(0.8).margin(1e-12));
    CHECK(d.active == DacActive::Passthrough);
    CHECK(d.clamped);
    const DacDecision clean = dac_compute({58.0, 0.9, 0.0, 0.7}, inv, off);
    CHECK(clean.p_set == 0.7);
    CHECK_FALSE(clean.clamped);
  }
  SECTION("capacity infeasibility propagates") {
    CHECK_THROWS_AS(dac_compute({60.0, 0.4, 1.2, 0.45}, inv, cfg),
                    InfeasibleOperatingPoint);
  }
  SECTION("even q rejected at entry") {
    DacConfig bad = cfg;
    bad.q = 2;
    CHECK_THROWS_AS(dac_compute({60.0, 0.4, 0.0, 0.45}, inv, bad),
                    std::invalid_argument);
  }
}

TEST_CASE("passthrough exactness holds across the closed band") {
  const InverterParams inv = unit_inverter();
  const DacConfig cfg = band(59.9, 60.1, 1000.0, 3);
  std::mt19937 rng(7011);
  std::uniform_real_distribution<double> u_omega(59.9, 60.1);
  std::uniform_real_distribution<double> u_star(-0.2, 1.2);
  std::uniform_real_distribution<double> u_q(-0.9, 0.9);
  for (int i = 0; i < 500; ++i) {
    const double star = u_star(rng);
    const DacDecision d = dac_compute({u_omega(rng), 0.5, u_q(rng), star}, inv, cfg);
    CHECK(d.active == DacActive::Passthrough);
    if (!d.clamped) {
      CHECK(d.p_set == star);  // bitwise, not approximate
    }
  }
  // the exact edges are part of the closed band
  CHECK(dac_compute({59.9, 0.5, 0.0, 0.3141}, inv, cfg).active == DacActive::Passthrough);
  CHECK(dac_compute({60.1, 0.5, 0.0, 0.3141}, inv, cfg).active == DacActive::Passthrough);
}

TEST_CASE("out-of-band corrections stay inside the admissible interval") {
  const InverterParams inv = unit_inverter();
  const DacConfig cfg = band(59.9, 60.1, 2.0, 3);
  std::mt19937 rng(7012);
  std::uniform_real_distribution<double> u_omega(58.5, 61.5);
  std::uniform_real_distribution<double> u_p(-0.5, 1.5);
  for (int i = 0; i < 1000; ++i) {
    const double omega = u_omega(rng);
    const double star = u_p(rng);
    const DacDecision d = dac_compute({omega, u_p(rng), 0.0, star}, inv, cfg);
    if (d.active == DacActive::Passthrough) continue;
    // the two bounds keep their order for odd exponents, so the guard
    // path never fires on physically sampled inputs
    CHECK(d.p_set_low < d.p_set_up);
    CHECK_FALSE(d.bounds_crossed);
    if (d.clamped) continue;
    // minimal deviation: admissible requests survive untouched, the rest
    // land on the nearest bound
    if (star >= d.p_set_low && star <= d.p_set_up) {
      CHECK(d.p_set == star);
    } else if (star < d.p_set_low) {
      CHECK(d.p_set == d.p_set_low);
    } else {
      CHECK(d.p_set == d.p_set_up);
    }
    CHECK(d.p_set >= d.p_set_low);
    CHECK(d.p_set <= d.p_set_up);
  }
}

TEST_CASE("enforcing the low bound decays the barrier at exactly the stated rate") {
  // With p_set = p_set_low the droop law must satisfy
  // tau * d(omega - omega_min)/dt = -alpha * (omega - omega_min)^q.
  std::mt19937 rng(7013);
  std::uniform_real_distribution<double> u_omega(59.0, 61.0);
  std::uniform_real_distribution<double> u_p(0.0, 1.0);
  std::uniform_real_distribution<double> u_alpha(1e-6, 10.0);
  std::uniform_real_distribution<double> u_m(0.2, 2.0);
  const int qs[] = {1, 3, 5};
  for (int i = 0; i < 1000; ++i) {
    DacConfig cfg = band(59.9, 60.1, u_alpha(rng), qs[i % 3]);
    InverterParams inv = unit_inverter(u_m(rng));
    GfmState st;
    st.omega = u_omega(rng);
    const double p_inv = u_p(rng);
    const double p_set = p_set_low(st.omega, p_inv, inv, cfg);
    const double d_omega = gfm_derivatives(st, inv, p_set, p_inv).d_omega;
    const double b = st.omega - cfg.omega_min;
    const double expected = -cfg.alpha * std::pow(b, cfg.q) / inv.tau;
    CHECK(d_omega == Catch::Approx(expected).margin(1e-9));
  }
}

TEST_CASE("output is monotone in the requested set-point") {
  const InverterParams inv = unit_inverter();
  std::mt19937 rng(7014);
  std::uniform_real_distribution<double> u_omega(59.0, 61.0);
  std::uniform_real_distribution<double> u_p(-0.5, 1.5);
  std::uniform_real_distribution<double> u_q(-0.8, 0.8);
  for (int i = 0; i < 200; ++i) {
    const DacConfig cfg = band(59.9, 60.1, 5.0, 3);
    const double omega = u_omega(rng);
    const double p_inv = u_p(rng);
    const double q_inv = u_q(rng);
    double a = u_p(rng);
    double b = u_p(rng);
    if (a > b) std::swap(a, b);
    const double lo = dac_compute({omega, p_inv, q_inv, a}, inv, cfg).p_set;
    const double hi = dac_compute({omega, p_inv, q_inv, b}, inv, cfg).p_set;
    CHECK(lo <= hi + 1e-15);
  }
}

TEST_CASE("randomized evaluations match the straight-line transcription") {
  std::mt19937 rng(7015);
  std::uniform_real_distribution<double> u_omega(58.5, 61.5);
  std::uniform_real_distribution<double> u_p(-0.5, 1.5);
  std::uniform_real_distribution<double> u_qinv(-0.95, 0.95);
  std::uniform_real_distribution<double> u_alpha(1e-6, 10.0);
  std::uniform_real_distribution<double> u_floor(0.0, 0.2);
  std::uniform_real_distribution<double> u_m(0.1, 5.0);
  const int qs[] = {1, 3, 5};
  for (int i = 0; i < 5000; ++i) {
    DacConfig cfg = band(59.9, 60.1, u_alpha(rng), qs[i % 3]);
    cfg.p_set_min = u_floor(rng);
    const InverterParams inv = unit_inverter(u_m(rng));
    const DacInputs in{u_omega(rng), u_p(rng), u_qinv(rng), u_p(rng)};
    const DacDecision got = dac_compute(in, inv, cfg);
    const oracle::DacOut want =
        oracle::dac(in.omega, in.p_inv, in.q_inv, in.p_set_star, inv.m_p, inv.omega0, cfg);
    CHECK(got.p_set == Catch::Approx(want.p_set).margin(1e-12));
    CHECK(got.p_set_low == Catch::Approx(want.p_low).margin(1e-12));
    CHECK(got.p_set_up == Catch::Approx(want.p_up).margin(1e-12));
    CHECK(static_cast<int>(got.active) == want.active);
    // capacity safety in the same sweep
    CHECK(got.p_set * got.p_set + in.q_inv * in.q_inv <= 1.0 + 1e-12);
    CHECK(got.p_set >= cfg.p_set_min);
  }
}

TEST_CASE("closed loop under the low bound follows the reduced dynamics") {
  // Feeding every stage evaluation of the filter back through the droop law
  // collapses the loop to tau*db/dt = -alpha*b^q; integrating both sides
  // with the same step must agree to well under a microhertz.
  const DacConfig cfg = band(59.5, 60.5, 100.0, 3);
  InverterParams inv = unit_inverter();
  const double p_inv = 0.85;
  const double star = 0.2;
  const double dt = 1e-3;
  const int steps = 2000;

  auto omega_dot = [&](double omega) {
    GfmState st;
    st.omega = omega;
    const DacDecision dec = dac_compute({omega, p_inv, 0.0, star}, inv, cfg);
    return gfm_derivatives(st, inv, dec.p_set, p_inv).d_omega;
  };
  double omega = 59.35;
  const std::vector<double> ref =
      oracle::reduced_barrier_rk4(59.35 - cfg.omega_min, cfg.alpha, cfg.q, inv.tau, dt, steps);
  double worst = 0.0;
  for (int n = 0; n < steps; ++n) {
    const double k1 = omega_dot(omega);
    const double k2 = omega_dot(omega + 0.5 * dt * k1);
    const double k3 = omega_dot(omega + 0.5 * dt * k2);
    const double k4 = omega_dot(omega + dt * k3);
    omega += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    worst = std::max(worst, std::abs(omega - (cfg.omega_min + ref[n + 1])));
  }
  CHECK(worst < 1e-6);
  // and the q=3 closed form agrees with where we ended up
  const double closed =
      oracle::barrier_cubic_closed_form(steps * dt, 59.35 - cfg.omega_min, cfg.alpha, inv.tau);
  CHECK(omega - cfg.omega_min == Catch::Approx(closed).margin(1e-5));
}

TEST_CASE("committed conformance vectors replay to 1e-12") {
  std::ifstream in(std::string(MGSIM_DATA_DIR) + "/dac_conformance.csv");
  REQUIRE(in.good());
  std::string line;
  REQUIRE(std::getline(in, line));  // header
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<double> v;
    std::string cell;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    REQUIRE(v.size() == 15);
    DacConfig cfg;
    cfg.alpha = v[4];
    cfg.q = static_cast<int>(v[5]);
    cfg.omega_min = v[6];
    cfg.omega_max = v[7];
    cfg.p_set_min = v[8];
    InverterParams inv = unit_inverter(v[9]);
    const DacDecision d = dac_compute({v[0], v[1], v[2], v[3]}, inv, cfg);
    CHECK(d.p_set == Catch::Approx(v[10]).margin(1e-12));
    CHECK(d.p_set_low == Catch::Approx(v[11]).margin(1e-12));
    CHECK(d.p_set_up == Catch::Approx(v[12]).margin(1e-12));
    CHECK(static_cast<double>(d.active) == v[13]);
    CHECK((d.clamped ? 1.0 : 0.0) == v[14]);
    ++rows;
  }
  CHECK(rows >= 400);
}
