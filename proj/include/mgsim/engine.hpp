#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mgsim/dac.hpp"
#include "mgsim/device.hpp"
#include "mgsim/event.hpp"
#include "mgsim/network.hpp"
#include "mgsim/secondary.hpp"
#include "mgsim/trace.hpp"

namespace mgsim {

// Deterministic fixed-step hybrid loop.  Each step runs, in this order:
// due discrete events, the secondary tick (if due) plus attack masking,
// one safety-filter evaluation per grid-forming inverter from its
// pre-step local measurements, continuous integration with network flows
// re-evaluated at every stage point, the ride-through relays, and fresh
// end-of-step measurements.  Time is always step_index * dt, never an
// accumulated sum.

enum class Integrator { RK4, Euler };

struct SimConfig {
  double t_end = 10.0;
  double dt = 1e-3;           ///< s, must lie in (0, 0.01]
  Integrator integrator = Integrator::RK4;
  int output_stride = 10;     ///< record every Nth step
  unsigned seed = 0;          ///< reserved for stochastic loads
  bool equilibrium_init = true;  ///< false starts at nominal frequency instead
};

inline void validate(const SimConfig& cfg) {
  if (!(cfg.dt > 0.0 && cfg.dt <= 0.01)) {
    throw std::invalid_argument("SimConfig: dt must lie in (0, 0.01], got " +
                                std::to_string(cfg.dt));
  }
  if (!(cfg.t_end > 0.0)) {
    throw std::invalid_argument("SimConfig: t_end must be > 0");
  }
  if (cfg.output_stride < 1) {
    throw std::invalid_argument("SimConfig: output_stride must be >= 1");
  }
}

struct GfmDevice {
  std::string id;
  int bus = 0;
  InverterParams inv;
  GfmState st;
  bool storage = false;  ///< permits p_min < 0
  DacActive last_active = DacActive::Passthrough;
  double star_effective = 0.0;  ///< requested set-point after attack masking
};

struct DgDevice {
  std::string id;
  int bus = 0;
  DgParams par;
  DgState st;
};

struct GflDevice {
  std::string id;
  int bus = 0;
  GflState st;
};

/// Instrumentation record: exactly what one filter evaluation saw and
/// decided.  Used by tests to pin the step-order contract.
struct DacProbe {
  double t = 0.0;
  std::string device;
  DacInputs inputs;
  DacDecision decision;
};

struct World {
  SimConfig sim;
  NetworkModel net;
  DacConfig dac;
  SecondaryConfig sec;
  AttackSpec attack;
  MetricsConfig met;
  std::vector<GfmDevice> gfms;
  std::vector<DgDevice> dgs;
  std::vector<GflDevice> gfls;
  std::vector<Event> events;

  // runtime state
  long step_index = 0;
  std::size_t next_event = 0;
  long secondary_ticks = 0;
  bool attack_active = false;
  std::map<std::string, double> attack_snapshot;
  bool collapsed = false;
  double collapse_time = std::numeric_limits<double>::quiet_NaN();
  std::vector<Island> islands;
  FlowSolver solver;
  std::map<std::string, double> island_f;  ///< device id -> latest island frequency
  std::vector<std::pair<double, std::vector<int>>> dead_island_log;
  std::function<void(const DacProbe&)> dac_probe;
};

inline double world_time(const World& w) {
  return static_cast<double>(w.step_index) * w.sim.dt;
}

namespace detail {

inline std::map<int, double> source_angles(const World& w) {
  std::map<int, double> out;
  for (const GfmDevice& d : w.gfms) out[d.bus] = d.st.delta;
  for (const DgDevice& d : w.dgs) out[d.bus] = d.st.delta;
  return out;
}

inline std::map<int, double> gfl_injections(const World& w) {
  std::map<int, double> out;
  for (const GflDevice& d : w.gfls) {
    if (d.st.tripped) continue;
    out[d.bus] += d.st.p_out * d.st.rating / w.net.s_base;
  }
  return out;
}

inline std::vector<SourceMeasurement> source_measurements(const World& w) {
  std::vector<SourceMeasurement> out;
  out.reserve(w.gfms.size() + w.dgs.size());
  for (const GfmDevice& d : w.gfms) out.push_back({d.id, d.inv.s_inv, d.st.omega, true});
  for (const DgDevice& d : w.dgs) out.push_back({d.id, d.par.rating, d.st.omega, true});
  return out;
}

}  // namespace detail

inline void rebuild_topology(World& w) {
  w.islands = partition_islands(w.net);
  w.solver = FlowSolver(w.net, w.islands);
  for (const Island& isl : w.islands) {
    if (isl.has_source) continue;
    double load = 0.0;
    for (int b : isl.buses) {
      auto it = w.net.loads.find(b);
      if (it != w.net.loads.end()) load += it->second.p;
    }
    if (load > 1e-12) {
      w.dead_island_log.emplace_back(world_time(w), isl.buses);
    }
  }
}

/// Solve flows at the current states, refresh measured injections and the
/// per-device island frequencies.
inline void measure(World& w) {
  const FlowResult flow =
      w.solver.solve(w.net, detail::source_angles(w), detail::gfl_injections(w));
  for (GfmDevice& d : w.gfms) {
    d.st.p_inv = flow.source_injection.at(d.bus) * w.net.s_base / d.inv.s_inv;
  }
  for (DgDevice& d : w.dgs) {
    d.st.p_inj = flow.source_injection.at(d.bus) * w.net.s_base / d.par.rating;
  }
  const std::vector<SourceMeasurement> meas = detail::source_measurements(w);
  w.island_f.clear();
  for (const Island& isl : w.islands) {
    const double f = island_frequency(isl, meas);
    for (const std::string& id : isl.devices) {
      w.island_f[id] = f;
    }
  }
}

namespace detail {

/// Continuous state layout: (delta, omega) per GFM, then per DG.
inline std::vector<double> pack_state(const World& w) {
  std::vector<double> y;
  y.reserve(2 * (w.gfms.size() + w.dgs.size()));
  for (const GfmDevice& d : w.gfms) {
    y.push_back(d.st.delta);
    y.push_back(d.st.omega);
  }
  for (const DgDevice& d : w.dgs) {
    y.push_back(d.st.delta);
    y.push_back(d.st.omega);
  }
  return y;
}

inline void unpack_state(World& w, const std::vector<double>& y) {
  std::size_t k = 0;
  for (GfmDevice& d : w.gfms) {
    d.st.delta = y[k++];
    d.st.omega = y[k++];
  }
  for (DgDevice& d : w.dgs) {
    d.st.delta = y[k++];
    d.st.omega = y[k++];
  }
}

/// Derivatives at an arbitrary stage state; set-points are held over the
/// step, flows are re-solved from the stage angles.
inline std::vector<double> derivatives(const World& w, const std::vector<double>& y,
                                       const std::map<int, double>& gfl_inj) {
  std::map<int, double> ang;
  std::size_t k = 0;
  for (const GfmDevice& d : w.gfms) {
    ang[d.bus] = y[k];
    k += 2;
  }
  for (const DgDevice& d : w.dgs) {
    ang[d.bus] = y[k];
    k += 2;
  }
  const FlowResult flow = w.solver.solve(w.net, ang, gfl_inj);
  std::vector<double> dy(y.size());
  k = 0;
  for (const GfmDevice& d : w.gfms) {
    const double p = flow.source_injection.at(d.bus) * w.net.s_base / d.inv.s_inv;
    GfmState s = d.st;
    s.omega = y[k + 1];
    const StateDeriv sd = gfm_derivatives(s, d.inv, d.st.p_set_applied, p);
    dy[k] = sd.d_delta;
    dy[k + 1] = sd.d_omega;
    k += 2;
  }
  for (const DgDevice& d : w.dgs) {
    const double p = flow.source_injection.at(d.bus) * w.net.s_base / d.par.rating;
    DgState s = d.st;
    s.omega = y[k + 1];
    const StateDeriv sd = dg_derivatives(s, d.par, d.st.p_set, p);
    dy[k] = sd.d_delta;
    dy[k + 1] = sd.d_omega;
    k += 2;
  }
  return dy;
}

inline void integrate_step(World& w) {
  const double dt = w.sim.dt;
  const std::map<int, double> gfl_inj = gfl_injections(w);
  std::vector<double> y = pack_state(w);
  if (w.sim.integrator == Integrator::Euler) {
    const std::vector<double> k1 = derivatives(w, y, gfl_inj);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += dt * k1[i];
    unpack_state(w, y);
    return;
  }
  const std::vector<double> k1 = derivatives(w, y, gfl_inj);
  std::vector<double> ytmp(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) ytmp[i] = y[i] + 0.5 * dt * k1[i];
  const std::vector<double> k2 = derivatives(w, ytmp, gfl_inj);
  for (std::size_t i = 0; i < y.size(); ++i) ytmp[i] = y[i] + 0.5 * dt * k2[i];
  const std::vector<double> k3 = derivatives(w, ytmp, gfl_inj);
  for (std::size_t i = 0; i < y.size(); ++i) ytmp[i] = y[i] + dt * k3[i];
  const std::vector<double> k4 = derivatives(w, ytmp, gfl_inj);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  unpack_state(w, y);
}

inline void apply_event(World& w, const Event& ev) {
  switch (ev.kind) {
    case EventKind::BreakerOpen:
    case EventKind::BreakerClose:
    case EventKind::LoadStep:
      w.net = apply_switch_event(std::move(w.net), ev);
      break;
    case EventKind::DgRedispatch:
      for (DgDevice& d : w.dgs) {
        if (!ev.device.empty() && d.id != ev.device) continue;
        d.st.p_set = ev.to_measured ? d.st.p_inj : ev.p_set;
      }
      break;
    case EventKind::AttackStart:
      w.attack_active = true;
      w.attack_snapshot.clear();
      for (const GfmDevice& d : w.gfms) {
        for (const std::string& tgt : w.attack.targets) {
          if (d.id == tgt) w.attack_snapshot[d.id] = d.st.p_set_star;
        }
      }
      break;
    case EventKind::AttackEnd:
      w.attack_active = false;
      break;
  }
}

inline void secondary_tick(World& w) {
  for (const Island& isl : w.islands) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < w.gfms.size(); ++i) {
      for (const std::string& id : isl.devices) {
        if (w.gfms[i].id == id) members.push_back(i);
      }
    }
    if (members.empty()) continue;
    const double f = w.island_f.at(w.gfms[members.front()].id);
    if (std::isnan(f)) continue;
    std::vector<SecondaryDevice> devs;
    devs.reserve(members.size());
    for (std::size_t i : members) {
      devs.push_back({w.gfms[i].inv.s_inv, w.gfms[i].st.p_set_star});
    }
    const std::vector<double> stars =
        secondary_update(f, w.gfms[members.front()].inv.omega0, devs, w.sec);
    for (std::size_t j = 0; j < members.size(); ++j) {
      w.gfms[members[j]].st.p_set_star = stars[j];
    }
  }
}

/// Evaluate attack masking and the safety filter for every GFM, holding
/// the applied set-points for the coming integration step.
inline void dac_pass(World& w) {
  const double t = world_time(w);
  std::vector<std::string> ids;
  std::vector<double> stars;
  ids.reserve(w.gfms.size());
  for (const GfmDevice& d : w.gfms) {
    ids.push_back(d.id);
    stars.push_back(d.st.p_set_star);
  }
  const std::vector<double> eff =
      attack_filter(ids, stars, w.attack, w.attack_snapshot, t);
  for (std::size_t i = 0; i < w.gfms.size(); ++i) {
    GfmDevice& d = w.gfms[i];
    d.star_effective = eff[i];
    const DacInputs in{d.st.omega, d.st.p_inv, d.st.q_inv, eff[i]};
    const DacDecision dec = dac_compute(in, d.inv, w.dac);
    d.st.p_set_applied = dec.p_set;
    d.last_active = dec.active;
    if (w.dac_probe) {
      w.dac_probe(DacProbe{t, d.id, in, dec});
    }
  }
}

}  // namespace detail

/// One simulation step.  After a collapse the world is frozen: time still
/// advances and the trace keeps recording, but no dynamics run.
inline void step(World& w) {
  if (w.collapsed) {
    w.step_index += 1;
    return;
  }
  const double t = world_time(w);
  const double eps = 1e-9 * w.sim.dt;
  bool changed = false;
  bool topo = false;
  while (w.next_event < w.events.size() && w.events[w.next_event].at <= t + eps) {
    const Event& ev = w.events[w.next_event];
    detail::apply_event(w, ev);
    changed = true;
    topo |= ev.kind == EventKind::BreakerOpen || ev.kind == EventKind::BreakerClose;
    w.next_event += 1;
  }
  if (topo) rebuild_topology(w);
  if (changed) measure(w);
  if (w.sec.enabled &&
      t + eps >= static_cast<double>(w.secondary_ticks + 1) * w.sec.period) {
    w.secondary_ticks += 1;
    detail::secondary_tick(w);
  }
  detail::dac_pass(w);
  detail::integrate_step(w);
  w.step_index += 1;
  measure(w);
  for (GflDevice& d : w.gfls) {
    const double f = w.island_f.at(d.id);
    if (!std::isnan(f)) {
      d.st = gfl_frt_step(d.st, f, w.sim.dt);
    }
  }
  const double f_mon = w.island_f.at(w.met.reference_device);
  if (!std::isnan(f_mon) && f_mon < w.met.f_collapse) {
    w.collapsed = true;
    w.collapse_time = world_time(w);
  }
}

/// Prepare a hand- or scenario-built world for stepping: resolve the
/// reference device, merge attack window events, sort the timeline,
/// compute the topology, place the initial condition, and run the first
/// measurement and filter pass.
inline void init_world(World& w) {
  validate(w.sim);
  validate(w.dac);
  validate(w.attack);
  if (w.sec.enabled) validate(w.sec);
  if (w.gfms.empty() && w.dgs.empty()) {
    throw std::invalid_argument("init_world: no frequency sources defined");
  }
  {
    std::map<int, std::string> seen;
    for (const GfmDevice& d : w.gfms) seen.emplace(d.bus, d.id);
    for (const DgDevice& d : w.dgs) {
      if (!seen.emplace(d.bus, d.id).second) {
        throw std::invalid_argument("init_world: bus " + std::to_string(d.bus) +
                                    " hosts more than one frequency source");
      }
    }
    if (seen.size() != w.gfms.size() + w.dgs.size()) {
      throw std::invalid_argument("init_world: each frequency source needs its own bus");
    }
  }
  if (w.met.reference_device.empty()) {
    w.met.reference_device = w.gfms.empty() ? w.dgs.front().id : w.gfms.front().id;
  }
  if (w.attack.enabled) {
    Event on;
    on.at = w.attack.t_on;
    on.kind = EventKind::AttackStart;
    Event off;
    off.at = w.attack.t_off;
    off.kind = EventKind::AttackEnd;
    w.events.push_back(on);
    w.events.push_back(off);
  }
  std::stable_sort(w.events.begin(), w.events.end(),
                   [](const Event& a, const Event& b) { return a.at < b.at; });
  rebuild_topology(w);

  if (w.sim.equilibrium_init) {
    // Per island: the synchronized steady state of the droop laws.  All
    // sources share one frequency and the dispatch mismatch splits across
    // them in proportion to rating over droop gain.
    const std::map<int, double> gfl_inj = detail::gfl_injections(w);
    for (const Island& isl : w.islands) {
      if (!isl.has_source) continue;
      struct Src {
        int bus;
        double p_star;  ///< pu own base
        double s;       ///< kVA
        double m;
        bool gfm;
        std::size_t idx;
      };
      std::vector<Src> srcs;
      double omega0 = 60.0;
      for (std::size_t i = 0; i < w.gfms.size(); ++i) {
        if (std::binary_search(isl.devices.begin(), isl.devices.end(), w.gfms[i].id)) {
          srcs.push_back({w.gfms[i].bus, w.gfms[i].st.p_set_star, w.gfms[i].inv.s_inv,
                          w.gfms[i].inv.m_p, true, i});
          if (srcs.size() == 1) omega0 = w.gfms[i].inv.omega0;
        }
      }
      for (std::size_t i = 0; i < w.dgs.size(); ++i) {
        if (std::binary_search(isl.devices.begin(), isl.devices.end(), w.dgs[i].id)) {
          srcs.push_back({w.dgs[i].bus, w.dgs[i].st.p_set, w.dgs[i].par.rating,
                          w.dgs[i].par.droop, false, i});
          if (srcs.size() == 1) omega0 = w.dgs[i].par.omega0;
        }
      }
      double dispatch = 0.0;
      double stiffness = 0.0;
      for (const Src& s : srcs) {
        dispatch += s.p_star * s.s / w.net.s_base;
        stiffness += s.s / (w.net.s_base * s.m);
      }
      double demand = 0.0;
      for (int b : isl.buses) {
        auto it = w.net.loads.find(b);
        if (it != w.net.loads.end()) demand += it->second.p;
        auto ge = gfl_inj.find(b);
        if (ge != gfl_inj.end()) demand -= ge->second;
      }
      const double omega_ss = omega0 + (dispatch - demand) / stiffness;
      // Angles from the island Laplacian with the first source bus as
      // reference; injections are the steady droop outputs.
      std::map<int, int> pos;
      for (std::size_t i = 0; i < isl.buses.size(); ++i) {
        pos[isl.buses[i]] = static_cast<int>(i);
      }
      const auto n = static_cast<Eigen::Index>(isl.buses.size());
      Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
      for (const Line& ln : w.net.lines) {
        if (!ln.closed || !pos.count(ln.from) || !pos.count(ln.to)) continue;
        lap(pos[ln.from], pos[ln.from]) += ln.b;
        lap(pos[ln.to], pos[ln.to]) += ln.b;
        lap(pos[ln.from], pos[ln.to]) -= ln.b;
        lap(pos[ln.to], pos[ln.from]) -= ln.b;
      }
      Eigen::VectorXd inj = Eigen::VectorXd::Zero(n);
      for (int b : isl.buses) {
        auto it = w.net.loads.find(b);
        if (it != w.net.loads.end()) inj(pos[b]) -= it->second.p;
        auto ge = gfl_inj.find(b);
        if (ge != gfl_inj.end()) inj(pos[b]) += ge->second;
      }
      for (const Src& s : srcs) {
        inj(pos[s.bus]) += (s.p_star + (omega0 - omega_ss) / s.m) * s.s / w.net.s_base;
      }
      const int ref = pos[srcs.front().bus];
      Eigen::MatrixXd red = Eigen::MatrixXd::Zero(n - 1, n - 1);
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n - 1);
      for (Eigen::Index r = 0, rr = 0; r < n; ++r) {
        if (r == ref) continue;
        rhs(rr) = inj(r);
        for (Eigen::Index c = 0, cc = 0; c < n; ++c) {
          if (c == ref) continue;
          red(rr, cc) = lap(r, c);
          ++cc;
        }
        ++rr;
      }
      Eigen::VectorXd theta_red = n > 1
          ? Eigen::VectorXd(red.llt().solve(rhs))
          : Eigen::VectorXd();
      std::map<int, double> theta;
      for (Eigen::Index r = 0, rr = 0; r < n; ++r) {
        if (r == ref) {
          theta[isl.buses[r]] = 0.0;
        } else {
          theta[isl.buses[r]] = theta_red(rr);
          ++rr;
        }
      }
      for (const Src& s : srcs) {
        if (s.gfm) {
          w.gfms[s.idx].st.delta = theta[s.bus];
          w.gfms[s.idx].st.omega = omega_ss;
        } else {
          w.dgs[s.idx].st.delta = theta[s.bus];
          w.dgs[s.idx].st.omega = omega_ss;
        }
      }
    }
  }
  measure(w);
  detail::dac_pass(w);
}

/// Column schema shared by the trace writer and the offline readers.
inline std::vector<std::string> trace_columns(const World& w) {
  std::vector<std::string> cols{"t"};
  for (const GfmDevice& d : w.gfms) {
    cols.push_back(d.id + "_omega");
    cols.push_back(d.id + "_p_inv");
    cols.push_back(d.id + "_q_inv");
    cols.push_back(d.id + "_p_set_star");
    cols.push_back(d.id + "_p_set_applied");
    cols.push_back(d.id + "_dac_active");
  }
  for (const DgDevice& d : w.dgs) {
    cols.push_back(d.id + "_omega");
    cols.push_back(d.id + "_p_inj");
    cols.push_back(d.id + "_p_set");
  }
  for (const GflDevice& d : w.gfls) {
    cols.push_back(d.id + "_p_out");
    cols.push_back(d.id + "_tripped");
  }
  for (const GfmDevice& d : w.gfms) cols.push_back("f_island_" + d.id);
  for (const DgDevice& d : w.dgs) cols.push_back("f_island_" + d.id);
  for (const GflDevice& d : w.gfls) cols.push_back("f_island_" + d.id);
  cols.push_back("collapsed");
  return cols;
}

inline std::vector<double> trace_row(const World& w) {
  std::vector<double> row{world_time(w)};
  for (const GfmDevice& d : w.gfms) {
    row.push_back(d.st.omega);
    row.push_back(d.st.p_inv);
    row.push_back(d.st.q_inv);
    row.push_back(d.star_effective);
    row.push_back(d.st.p_set_applied);
    row.push_back(static_cast<double>(d.last_active));
  }
  for (const DgDevice& d : w.dgs) {
    row.push_back(d.st.omega);
    row.push_back(d.st.p_inj);
    row.push_back(d.st.p_set);
  }
  for (const GflDevice& d : w.gfls) {
    row.push_back(d.st.tripped ? 0.0 : d.st.p_out);
    row.push_back(d.st.tripped ? 1.0 : 0.0);
  }
  for (const GfmDevice& d : w.gfms) row.push_back(w.island_f.at(d.id));
  for (const DgDevice& d : w.dgs) row.push_back(w.island_f.at(d.id));
  for (const GflDevice& d : w.gfls) row.push_back(w.island_f.at(d.id));
  row.push_back(w.collapsed ? 1.0 : 0.0);
  return row;
}

/// Run an initialized world to t_end, recording every output_stride steps
/// (plus the initial and final states).
inline Trace run_world(World& w) {
  Trace trace;
  trace.columns = trace_columns(w);
  trace.rows.push_back(trace_row(w));
  const long n = std::lround(w.sim.t_end / w.sim.dt);
  while (w.step_index < n) {
    step(w);
    if (w.step_index % w.sim.output_stride == 0 || w.step_index == n) {
      trace.rows.push_back(trace_row(w));
    }
  }
  return trace;
}

}  // namespace mgsim
