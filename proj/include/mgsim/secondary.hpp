#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace mgsim {

// Slow-timescale dispatcher: a leader measures the island frequency error
// and spreads an integral correction across the island's grid-forming
// inverters, followed by a few rounds of rating-weighted averaging that
// pull the per-unit set-points toward equal sharing.  The safety filter
// downstream is agnostic to this law; it only sees the produced
// set-points.

struct SecondaryConfig {
  bool enabled = false;
  double period = 2.0;  ///< s between ticks
  double k_i = 1.0;     ///< pu per Hz of frequency error per tick
  int rounds = 1;       ///< consensus averaging rounds per tick
};

/// Set-point masking attack: between t_on and t_off the targeted devices
/// receive a frozen snapshot of their set-point taken just before t_on,
/// while the dispatcher keeps running unaware.
struct AttackSpec {
  bool enabled = false;
  std::vector<std::string> targets;
  double t_on = 0.0;
  double t_off = 0.0;
};

inline void validate(const SecondaryConfig& cfg) {
  if (!(cfg.period > 0.0)) {
    throw std::invalid_argument("SecondaryConfig: period must be > 0");
  }
  if (!(cfg.k_i > 0.0)) {
    throw std::invalid_argument("SecondaryConfig: k_i must be > 0");
  }
  if (cfg.rounds < 0) {
    throw std::invalid_argument("SecondaryConfig: rounds must be >= 0");
  }
}

inline void validate(const AttackSpec& atk) {
  if (!atk.enabled) return;
  if (atk.targets.empty()) {
    throw std::invalid_argument("AttackSpec: targets must be non-empty");
  }
  if (!(atk.t_on < atk.t_off)) {
    throw std::invalid_argument("AttackSpec: t_on must be before t_off");
  }
}

struct SecondaryDevice {
  double rating = 0.0;      ///< kVA
  double p_set_star = 0.0;  ///< current set-point, pu on own base
};

/// One dispatcher tick.  The leader correction is
///   delta = k_i * (omega0 - f_island)
/// and device i receives delta * s_i / sum(s) on its own per-unit base.
/// The consensus rounds then average each set-point halfway toward the
/// rating-weighted mean, which redistributes power without changing the
/// total, and the results are clamped to [0, 1] pu.
inline std::vector<double> secondary_update(double f_island, double omega0,
                                            const std::vector<SecondaryDevice>& devices,
                                            const SecondaryConfig& cfg) {
  std::vector<double> out;
  out.reserve(devices.size());
  double s_total = 0.0;
  for (const SecondaryDevice& d : devices) {
    s_total += d.rating;
    out.push_back(d.p_set_star);
  }
  if (devices.empty() || s_total <= 0.0) {
    return out;
  }
  const double delta = cfg.k_i * (omega0 - f_island);
  for (std::size_t i = 0; i < devices.size(); ++i) {
    out[i] += delta * devices[i].rating / s_total;
  }
  for (int r = 0; r < cfg.rounds; ++r) {
    double mean = 0.0;
    for (std::size_t i = 0; i < devices.size(); ++i) {
      mean += devices[i].rating * out[i];
    }
    mean /= s_total;
    for (double& p : out) {
      p += 0.5 * (mean - p);
    }
  }
  for (double& p : out) {
    p = std::clamp(p, 0.0, 1.0);
  }
  return out;
}

/// Mask the dispatcher output for targeted devices inside the attack
/// window.  `snapshot` holds the per-device values captured at t_on;
/// devices without a snapshot entry pass through (defensive, the engine
/// always captures every target).  Identity outside the window and
/// idempotent inside it.
inline std::vector<double> attack_filter(const std::vector<std::string>& ids,
                                         const std::vector<double>& p_set_star,
                                         const AttackSpec& atk,
                                         const std::map<std::string, double>& snapshot,
                                         double t) {
  std::vector<double> out = p_set_star;
  if (!atk.enabled || t < atk.t_on || t >= atk.t_off) {
    return out;
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (std::find(atk.targets.begin(), atk.targets.end(), ids[i]) == atk.targets.end()) {
      continue;
    }
    auto it = snapshot.find(ids[i]);
    if (it != snapshot.end()) {
      out[i] = it->second;
    }
  }
  return out;
}

}  // namespace mgsim
