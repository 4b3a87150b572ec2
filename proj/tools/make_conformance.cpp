#include <cstdio>
#include <random>
#include <string>

#include "mgsim/dac.hpp"

// Emits the filter conformance table: randomized operating points together
// with the decision the reference implementation takes on each of them.
// The unit suite replays the file and holds the built kernel to every row,
// so the table doubles as a frozen record of the filter's behavior.

using namespace mgsim;

int main(int argc, char** argv) {
  const std::string path =
      argc > 1 ? argv[1] : std::string(MGSIM_DATA_DIR "/dac_conformance.csv");
  std::FILE* out = std::fopen(path.c_str(), "w");
  if (!out) {
    std::fprintf(stderr, "cannot open '%s' for writing\n", path.c_str());
    return 1;
  }
  std::fprintf(out,
               "omega,p_inv,q_inv,p_set_star,alpha,q,omega_min,omega_max,"
               "p_set_min,m_p,p_set,p_set_low,p_set_up,active,clamped\n");

  std::mt19937 rng(20260815u);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const int exponents[] = {1, 3, 5};

  int rows = 0;
  for (int i = 0; i < 500; ++i) {
    DacConfig cfg;
    const double half_band = 0.05 + 0.55 * uni(rng);
    cfg.omega_min = 60.0 - half_band;
    cfg.omega_max = 60.0 + half_band;
    cfg.alpha = 0.1 + 9.9 * uni(rng);
    cfg.q = exponents[i % 3];
    cfg.p_set_min = 0.2 * uni(rng);

    InverterParams inv;
    inv.s_inv = 500.0;
    inv.m_p = 0.2 + 1.8 * uni(rng);

    DacInputs in;
    in.omega = 60.0 + 2.4 * (uni(rng) - 0.5);  // reaches well past both limits
    in.p_inv = -0.2 + 1.2 * uni(rng);
    in.q_inv = -0.95 + 1.9 * uni(rng);
    in.p_set_star = -0.2 + 1.4 * uni(rng);

    const DacDecision d = dac_compute(in, inv, cfg);
    std::fprintf(out,
                 "%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.17g,%.17g,%.17g,%.17g,"
                 "%.17g,%.17g,%.17g,%d,%d\n",
                 in.omega, in.p_inv, in.q_inv, in.p_set_star, cfg.alpha, cfg.q,
                 cfg.omega_min, cfg.omega_max, cfg.p_set_min, inv.m_p, d.p_set,
                 d.p_set_low, d.p_set_up, static_cast<int>(d.active),
                 d.clamped ? 1 : 0);
    ++rows;
  }
  std::fclose(out);
  std::fprintf(stderr, "wrote %d rows to %s\n", rows, path.c_str());
  return 0;
}
