#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "mgsim/device.hpp"

namespace mgsim {

// Decentralized safety filter for grid-forming inverters.
//
// Each inverter runs its own instance on purely local measurements.  The
// filter passes the requested real-power set-point through untouched while
// the local frequency sits inside the safe band, and replaces it with the
// nearest admissible value when the frequency leaves the band, so that the
// closed loop is steered back toward the violated boundary.

/// Fixed configuration of one safety filter instance.
struct DacConfig {
  bool enabled = true;
  double omega_min = 59.9;  ///< lower safe limit, Hz
  double omega_max = 60.1;  ///< upper safe limit, Hz
  double alpha = 1000.0;    ///< barrier decay gain, > 0
  int q = 3;                ///< odd positive barrier exponent
  double p_set_min = 0.0;   ///< dispatch floor applied with the capacity clamp, pu
};

/// Local measurements consumed by one filter evaluation.
struct DacInputs {
  double omega = 60.0;      ///< local frequency, Hz
  double p_inv = 0.0;       ///< measured real injection, pu
  double q_inv = 0.0;       ///< measured reactive injection, pu
  double p_set_star = 0.0;  ///< requested set-point, pu
};

enum class DacActive {
  Passthrough,  ///< frequency inside the closed band, request untouched
  LowBarrier,   ///< below omega_min, request raised toward the floor bound
  HighBarrier,  ///< above omega_max, request lowered toward the ceiling bound
};

/// Result of one filter evaluation.
struct DacDecision {
  double p_set = 0.0;      ///< final set-point after filter and capacity clamp, pu
  double p_set_low = 0.0;  ///< admissible lower bound from the min barrier, pu
  double p_set_up = 0.0;   ///< admissible upper bound from the max barrier, pu
  DacActive active = DacActive::Passthrough;
  bool clamped = false;         ///< capacity ceiling or dispatch floor engaged
  bool bounds_crossed = false;  ///< diagnostic: p_set_low > p_set_up observed
};

/// Reactive loading already exceeds the apparent-power rating, so no real
/// power can be scheduled at all.
struct InfeasibleOperatingPoint : std::domain_error {
  using std::domain_error::domain_error;
};

/// Throws if the configuration violates its structural constraints.
/// Odd q is what lets the barrier terms keep the sign of the frequency
/// deviation; an even exponent would push the wrong way below the band.
inline void validate(const DacConfig& cfg) {
  if (cfg.q < 1 || cfg.q % 2 == 0) {
    throw std::invalid_argument(
        "DacConfig: barrier exponent q must be a positive odd integer, got " +
        std::to_string(cfg.q));
  }
  if (!(cfg.alpha > 0.0)) {
    throw std::invalid_argument("DacConfig: alpha must be > 0, got " +
                                std::to_string(cfg.alpha));
  }
  if (!(cfg.omega_min < cfg.omega_max)) {
    throw std::invalid_argument("DacConfig: omega_min must lie below omega_max");
  }
}

/// Checked constructor for configurations built from parsed input.
inline DacConfig make_dac_config(bool enabled, double omega_min, double omega_max,
                                 double alpha, int q, double p_set_min = 0.0) {
  DacConfig cfg{enabled, omega_min, omega_max, alpha, q, p_set_min};
  validate(cfg);
  return cfg;
}

/// Signed margins to the band edges.  The frequency is safe exactly when
/// b_min >= 0 and b_max <= 0.
struct BarrierValues {
  double b_min = 0.0;  ///< omega - omega_min
  double b_max = 0.0;  ///< omega - omega_max
};

inline BarrierValues barrier_eval(double omega, const DacConfig& cfg) {
  return {omega - cfg.omega_min, omega - cfg.omega_max};
}

/// Smallest admissible set-point against the lower limit.  Requiring the
/// frequency derivative under the droop law to satisfy
///   d(omega - omega_min)/dt >= -alpha*(omega - omega_min)^q
/// and solving the equality for p_set gives
///   p_inv + (omega - omega0 - alpha*(omega - omega_min)^q) / m_p.
/// Enforcing exactly this value drives the closed loop toward omega_min.
inline double p_set_low(double omega, double p_inv, const InverterParams& inv,
                        const DacConfig& cfg) {
  const double b = omega - cfg.omega_min;
  return p_inv +
         (omega - inv.omega0 - cfg.alpha * std::pow(b, static_cast<double>(cfg.q))) / inv.m_p;
}

/// Largest admissible set-point against the upper limit; mirror image of
/// p_set_low around omega_max.
inline double p_set_up(double omega, double p_inv, const InverterParams& inv,
                       const DacConfig& cfg) {
  const double b = omega - cfg.omega_max;
  return p_inv +
         (omega - inv.omega0 - cfg.alpha * std::pow(b, static_cast<double>(cfg.q))) / inv.m_p;
}

struct SelectResult {
  double p_set = 0.0;
  DacActive active = DacActive::Passthrough;
  bool bounds_crossed = false;
};

/// Barrier selection rule.  Inside the closed band the request passes
/// through bit for bit; outside, it is projected onto [p_low, p_up].
/// The bounds cannot cross while only one side of the band is violated,
/// but the case is guarded anyway: the bound belonging to the violated
/// side wins and a diagnostic flag is raised.
inline SelectResult dac_select(double p_set_star, double p_low, double p_up,
                               double omega, const DacConfig& cfg) {
  if (omega >= cfg.omega_min && omega <= cfg.omega_max) {
    return {p_set_star, DacActive::Passthrough, false};
  }
  SelectResult out;
  out.active = omega < cfg.omega_min ? DacActive::LowBarrier : DacActive::HighBarrier;
  if (p_low > p_up) {
    out.bounds_crossed = true;
    out.p_set = out.active == DacActive::LowBarrier ? p_low : p_up;
    return out;
  }
  out.p_set = std::fmin(p_up, std::fmax(p_low, p_set_star));
  return out;
}

struct ClampResult {
  double p_set = 0.0;
  bool clamped = false;
};

/// Apparent-power capacity clamp.  The reactive injection is taken as
/// committed, leaving sqrt(1 - q_inv^2) pu of real-power headroom on the
/// rating; the dispatch floor is applied first so the ceiling always wins.
inline ClampResult capacity_clamp(double p_set, double q_inv, const InverterParams& inv,
                                  const DacConfig& cfg) {
  (void)inv;  // headroom is per-unit on the device's own rating
  const double q2 = q_inv * q_inv;
  if (q2 > 1.0) {
    throw InfeasibleOperatingPoint(
        "capacity_clamp: |q_inv| > 1 pu leaves no real-power capacity, q_inv = " +
        std::to_string(q_inv));
  }
  const double p_cap = std::sqrt(1.0 - q2);
  const double result = std::fmin(p_cap, std::fmax(cfg.p_set_min, p_set));
  return {result, result != p_set};
}

/// Full filter evaluation: barrier bounds, selection, capacity clamp, in
/// that order.  A pure function of its arguments; holds no state between
/// calls.  With the filter disabled the request still passes the capacity
/// clamp, matching the hardware limit that exists regardless of the filter.
inline DacDecision dac_compute(const DacInputs& in, const InverterParams& inv,
                               const DacConfig& cfg) {
  validate(cfg);
  DacDecision out;
  if (!cfg.enabled) {
    const ClampResult c = capacity_clamp(in.p_set_star, in.q_inv, inv, cfg);
    out.p_set = c.p_set;
    out.p_set_low = in.p_set_star;
    out.p_set_up = in.p_set_star;
    out.clamped = c.clamped;
    return out;
  }
  out.p_set_low = p_set_low(in.omega, in.p_inv, inv, cfg);
  out.p_set_up = p_set_up(in.omega, in.p_inv, inv, cfg);
  const SelectResult sel =
      dac_select(in.p_set_star, out.p_set_low, out.p_set_up, in.omega, cfg);
  out.active = sel.active;
  out.bounds_crossed = sel.bounds_crossed;
  const ClampResult c = capacity_clamp(sel.p_set, in.q_inv, inv, cfg);
  out.p_set = c.p_set;
  out.clamped = c.clamped;
  return out;
}

}  // namespace mgsim
