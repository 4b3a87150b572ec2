#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mgsim {

// Frequencies are carried in Hz throughout; electrical angles in radians.
// Powers are per-unit on each device's own rating unless noted otherwise.

/// Static parameters of a grid-forming inverter.
struct InverterParams {
  double s_inv = 0.0;    ///< apparent-power rating, kVA
  double m_p = 1.0;      ///< P-f droop gain, Hz per pu on own base
  double tau = 0.02;     ///< droop filter time constant, s
  double p_min = 0.0;    ///< real-power lower limit, pu
  double p_max = 1.0;    ///< real-power upper limit, pu
  double omega0 = 60.0;  ///< nominal frequency, Hz
};

/// Continuous and measured state of a grid-forming inverter.
struct GfmState {
  double delta = 0.0;          ///< electrical angle, rad
  double omega = 60.0;         ///< frequency, Hz
  double p_inv = 0.0;          ///< measured real-power injection, pu
  double q_inv = 0.0;          ///< quasi-static reactive injection, pu
  double p_set_star = 0.0;     ///< secondary-issued set-point, pu
  double p_set_applied = 0.0;  ///< set-point after safety filter and clamp, pu
};

/// Diesel-generator droop surrogate parameters.
struct DgParams {
  double rating = 0.0;   ///< kVA
  double droop = 0.5;    ///< Hz per pu on own base
  double tau_g = 0.8;    ///< governor time constant, s
  double omega0 = 60.0;  ///< Hz
};

struct DgState {
  double delta = 0.0;
  double omega = 60.0;
  double p_inj = 0.0;  ///< measured injection, pu
  double p_set = 0.0;  ///< dispatch set-point, pu
};

/// Grid-following inverter with an under-frequency ride-through relay.
/// The relay trips after the local frequency stays below f_trip for
/// t_dwell consecutive seconds; a trip is latching and zeroes the output.
struct GflState {
  double rating = 0.0;   ///< kVA
  double p_out = 0.0;    ///< commanded injection, pu
  double frt_dwell = 0.0;  ///< consecutive time spent below f_trip, s
  bool tripped = false;
  double f_trip = 56.5;  ///< trip threshold, Hz
  double t_dwell = 0.160;  ///< required dwell before tripping, s
};

struct StateDeriv {
  double d_delta = 0.0;  ///< rad/s
  double d_omega = 0.0;  ///< Hz/s
};

/// P-f droop dynamics of a grid-forming inverter.
///   d_delta = 2*pi*(omega - omega0)
///   d_omega = (-(omega - omega0) + m_p*(p_set - p_inv)) / tau
inline StateDeriv gfm_derivatives(const GfmState& state, const InverterParams& params,
                                  double p_set, double p_inv) {
  const double dev = state.omega - params.omega0;
  return {2.0 * std::numbers::pi * dev,
          (-dev + params.m_p * (p_set - p_inv)) / params.tau};
}

/// Diesel-generator droop surrogate; same structure as the inverter droop
/// with governor-scale time constants.
inline StateDeriv dg_derivatives(const DgState& state, const DgParams& params,
                                 double p_set, double p_inj) {
  const double dev = state.omega - params.omega0;
  return {2.0 * std::numbers::pi * dev,
          (-dev + params.droop * (p_set - p_inj)) / params.tau_g};
}

/// Advance the ride-through relay by one step of local frequency history.
/// Dwell accumulates only while f_local < f_trip and resets on recovery.
/// Tripping is absorbing: once tripped the state passes through unchanged.
inline GflState gfl_frt_step(GflState state, double f_local, double dt) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("gfl_frt_step: dt must be > 0, got " + std::to_string(dt));
  }
  if (state.tripped) {
    return state;
  }
  if (f_local < state.f_trip) {
    state.frt_dwell += dt;
  } else {
    state.frt_dwell = 0.0;
  }
  if (state.frt_dwell >= state.t_dwell) {
    state.tripped = true;
    state.p_out = 0.0;
  }
  return state;
}

}  // namespace mgsim
