#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "mgsim/event.hpp"

namespace mgsim {

// Reduced lossless network: buses joined by susceptance-weighted lines,
// frequency sources (GFM and DG devices) pinning the electrical angle of
// their bus, loads and grid-following injections netted per bus.  Line
// flows are linear in angle differences; per energized island the solved
// injections balance the netted demand exactly.

struct Line {
  int from = 0;
  int to = 0;
  double b = 0.0;      ///< susceptance, pu on system base
  bool closed = true;  ///< breaker state
};

struct Placement {
  int bus = 0;
  bool source = false;  ///< true for angle-pinning devices (GFM, DG)
};

struct BusLoad {
  double p = 0.0;  ///< pu on system base
  double q = 0.0;  ///< carried for device capacity checks, not flowed
};

struct NetworkModel {
  double s_base = 1000.0;  ///< system power base, kVA
  std::vector<int> buses;
  std::vector<Line> lines;
  std::map<std::string, Placement> devices;  ///< device id -> placement
  std::map<int, BusLoad> loads;              ///< bus -> demand
};

/// One connected component of the closed-breaker graph.
struct Island {
  std::vector<int> buses;                ///< ascending
  std::vector<std::string> devices;      ///< ascending by id
  bool has_source = false;
};

/// Connected components over closed lines, ordered by smallest member bus.
inline std::vector<Island> partition_islands(const NetworkModel& model) {
  std::map<int, std::vector<int>> adj;
  for (int b : model.buses) {
    adj[b];
  }
  for (const Line& ln : model.lines) {
    if (!ln.closed) continue;
    adj[ln.from].push_back(ln.to);
    adj[ln.to].push_back(ln.from);
  }
  std::set<int> visited;
  std::vector<Island> islands;
  for (int start : model.buses) {
    if (visited.count(start)) continue;
    Island isl;
    std::vector<int> queue{start};
    visited.insert(start);
    while (!queue.empty()) {
      int bus = queue.back();
      queue.pop_back();
      isl.buses.push_back(bus);
      for (int nb : adj[bus]) {
        if (visited.insert(nb).second) {
          queue.push_back(nb);
        }
      }
    }
    std::sort(isl.buses.begin(), isl.buses.end());
    islands.push_back(std::move(isl));
  }
  // canonical order: by smallest contained bus, independent of how the
  // bus list was written down
  std::sort(islands.begin(), islands.end(),
            [](const Island& a, const Island& b) { return a.buses.front() < b.buses.front(); });
  std::map<int, std::size_t> index;
  for (std::size_t i = 0; i < islands.size(); ++i) {
    for (int b : islands[i].buses) index[b] = i;
  }
  for (const auto& [id, pl] : model.devices) {
    auto it = index.find(pl.bus);
    if (it == index.end()) {
      throw std::invalid_argument("partition_islands: device '" + id +
                                  "' placed on unknown bus " + std::to_string(pl.bus));
    }
    islands[it->second].devices.push_back(id);
    if (pl.source) {
      islands[it->second].has_source = true;
    }
  }
  return islands;
}

/// bus id -> index of the island containing it.
inline std::map<int, std::size_t> bus_island_index(const std::vector<Island>& islands) {
  std::map<int, std::size_t> out;
  for (std::size_t i = 0; i < islands.size(); ++i) {
    for (int b : islands[i].buses) {
      out[b] = i;
    }
  }
  return out;
}

struct SourceMeasurement {
  std::string device;
  double rating = 0.0;  ///< kVA
  double omega = 0.0;   ///< Hz
  bool online = true;
};

/// Rating-weighted mean frequency of the island's online sources; the
/// center-of-inertia analogue used for relays, metrics, and secondary
/// control.  Returns NaN when the island has no online source.
inline double island_frequency(const Island& island,
                               const std::vector<SourceMeasurement>& sources) {
  double wsum = 0.0;
  double fsum = 0.0;
  for (const SourceMeasurement& s : sources) {
    if (!s.online) continue;
    if (!std::binary_search(island.devices.begin(), island.devices.end(), s.device)) continue;
    wsum += s.rating;
    fsum += s.rating * s.omega;
  }
  if (wsum <= 0.0) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return fsum / wsum;
}

struct FlowResult {
  std::map<int, double> source_injection;  ///< source bus -> device injection, system pu
  std::map<int, double> angles;            ///< energized bus -> angle, rad
  std::vector<std::size_t> dead_islands;   ///< islands carrying load but no source
};

/// Per-topology flow solver.  The angle solve for non-source buses reuses
/// a cached Cholesky factorization of each island's grounded Laplacian,
/// so load changes and new angles are cheap; rebuild on breaker events.
class FlowSolver {
 public:
  FlowSolver() = default;

  FlowSolver(const NetworkModel& model, const std::vector<Island>& islands) {
    std::map<int, bool> is_source_bus;
    for (const auto& [id, pl] : model.devices) {
      if (pl.source) is_source_bus[pl.bus] = true;
    }
    for (const Island& isl : islands) {
      IslandSystem sys;
      for (int b : isl.buses) {
        if (is_source_bus.count(b)) {
          sys.source_buses.push_back(b);
        } else {
          sys.unknown_buses.push_back(b);
        }
      }
      if (sys.source_buses.empty()) {
        sys.energized = false;
        systems_.push_back(std::move(sys));
        continue;
      }
      std::map<int, int> upos;
      for (std::size_t i = 0; i < sys.unknown_buses.size(); ++i) {
        upos[sys.unknown_buses[i]] = static_cast<int>(i);
      }
      std::map<int, int> spos;
      for (std::size_t i = 0; i < sys.source_buses.size(); ++i) {
        spos[sys.source_buses[i]] = static_cast<int>(i);
      }
      const auto nu = static_cast<Eigen::Index>(sys.unknown_buses.size());
      const auto ns = static_cast<Eigen::Index>(sys.source_buses.size());
      Eigen::MatrixXd l_uu = Eigen::MatrixXd::Zero(nu, nu);
      sys.l_us = Eigen::MatrixXd::Zero(nu, ns);
      for (const Line& ln : model.lines) {
        if (!ln.closed) continue;
        const bool fu = upos.count(ln.from) > 0;
        const bool tu = upos.count(ln.to) > 0;
        const bool fs = spos.count(ln.from) > 0;
        const bool ts = spos.count(ln.to) > 0;
        if (!((fu || fs) && (tu || ts))) continue;  // line belongs to another island
        if (fu) l_uu(upos[ln.from], upos[ln.from]) += ln.b;
        if (tu) l_uu(upos[ln.to], upos[ln.to]) += ln.b;
        if (fu && tu) {
          l_uu(upos[ln.from], upos[ln.to]) -= ln.b;
          l_uu(upos[ln.to], upos[ln.from]) -= ln.b;
        }
        if (fu && ts) sys.l_us(upos[ln.from], spos[ln.to]) -= ln.b;
        if (tu && fs) sys.l_us(upos[ln.to], spos[ln.from]) -= ln.b;
      }
      if (nu > 0) {
        sys.llt.compute(l_uu);
        if (sys.llt.info() != Eigen::Success) {
          throw std::runtime_error("FlowSolver: island angle system is not positive definite");
        }
      }
      systems_.push_back(std::move(sys));
    }
    // adjacency for injection evaluation at source buses
    for (const Line& ln : model.lines) {
      if (!ln.closed) continue;
      adj_[ln.from].push_back({ln.to, ln.b});
      adj_[ln.to].push_back({ln.from, ln.b});
    }
  }

  /// Solve all islands.  source_angles: bus -> pinned angle for every
  /// source bus; extra_injection: bus -> additional generation (grid-
  /// following output), system pu.  Loads are read from the model so load
  /// steps need no rebuild.
  FlowResult solve(const NetworkModel& model,
                   const std::map<int, double>& source_angles,
                   const std::map<int, double>& extra_injection) const {
    FlowResult out;
    for (std::size_t k = 0; k < systems_.size(); ++k) {
      const IslandSystem& sys = systems_[k];
      if (!sys.energized) {
        double load = 0.0;
        for (int b : sys.unknown_buses) {
          auto it = model.loads.find(b);
          if (it != model.loads.end()) load += it->second.p;
        }
        if (load > 1e-12) {
          out.dead_islands.push_back(k);
        }
        continue;
      }
      const auto nu = static_cast<Eigen::Index>(sys.unknown_buses.size());
      const auto ns = static_cast<Eigen::Index>(sys.source_buses.size());
      Eigen::VectorXd theta_s(ns);
      for (Eigen::Index i = 0; i < ns; ++i) {
        auto it = source_angles.find(sys.source_buses[i]);
        if (it == source_angles.end()) {
          throw std::invalid_argument("FlowSolver: missing angle for source bus " +
                                      std::to_string(sys.source_buses[i]));
        }
        theta_s(i) = it->second;
        out.angles[sys.source_buses[i]] = it->second;
      }
      if (nu > 0) {
        Eigen::VectorXd rhs(nu);
        for (Eigen::Index i = 0; i < nu; ++i) {
          rhs(i) = net_injection(model, extra_injection, sys.unknown_buses[i]);
        }
        rhs -= sys.l_us * theta_s;
        Eigen::VectorXd theta_u = sys.llt.solve(rhs);
        for (Eigen::Index i = 0; i < nu; ++i) {
          out.angles[sys.unknown_buses[i]] = theta_u(i);
        }
      }
      for (int sb : sys.source_buses) {
        double flow = 0.0;
        auto it = adj_.find(sb);
        if (it != adj_.end()) {
          for (const auto& [nb, b] : it->second) {
            flow += b * (out.angles.at(sb) - out.angles.at(nb));
          }
        }
        out.source_injection[sb] = flow - net_injection(model, extra_injection, sb);
      }
    }
    return out;
  }

 private:
  struct IslandSystem {
    std::vector<int> source_buses;   ///< ascending (island bus order)
    std::vector<int> unknown_buses;  ///< ascending
    Eigen::MatrixXd l_us;
    Eigen::LLT<Eigen::MatrixXd> llt;
    bool energized = true;
  };

  static double net_injection(const NetworkModel& model,
                              const std::map<int, double>& extra_injection, int bus) {
    double inj = 0.0;
    auto le = model.loads.find(bus);
    if (le != model.loads.end()) inj -= le->second.p;
    auto xe = extra_injection.find(bus);
    if (xe != extra_injection.end()) inj += xe->second;
    return inj;
  }

  std::vector<IslandSystem> systems_;
  std::map<int, std::vector<std::pair<int, double>>> adj_;
};

/// One-shot flow solve; convenience wrapper when no factorization reuse
/// is wanted.
inline FlowResult dc_injections(const NetworkModel& model,
                                const std::map<int, double>& source_angles,
                                const std::map<int, double>& extra_injection = {}) {
  FlowSolver solver(model, partition_islands(model));
  return solver.solve(model, source_angles, extra_injection);
}

/// Apply a breaker or load event to the model.  Redispatch and attack
/// events do not touch the network and pass through unchanged.  Unknown
/// breaker endpoints or buses are configuration errors caught at scenario
/// validation; here they throw to guard direct library use.
inline NetworkModel apply_switch_event(NetworkModel model, const Event& ev) {
  switch (ev.kind) {
    case EventKind::BreakerOpen:
    case EventKind::BreakerClose: {
      bool found = false;
      for (Line& ln : model.lines) {
        if ((ln.from == ev.from && ln.to == ev.to) ||
            (ln.from == ev.to && ln.to == ev.from)) {
          ln.closed = ev.kind == EventKind::BreakerClose;
          found = true;
        }
      }
      if (!found) {
        throw std::invalid_argument("apply_switch_event: no line between buses " +
                                    std::to_string(ev.from) + " and " +
                                    std::to_string(ev.to));
      }
      break;
    }
    case EventKind::LoadStep: {
      if (std::find(model.buses.begin(), model.buses.end(), ev.bus) == model.buses.end()) {
        throw std::invalid_argument("apply_switch_event: load step on unknown bus " +
                                    std::to_string(ev.bus));
      }
      BusLoad& ld = model.loads[ev.bus];
      if (ev.relative) {
        ld.p += ev.p;
        ld.q += ev.q;
      } else {
        ld.p = ev.p;
        ld.q = ev.q;
      }
      break;
    }
    default:
      break;
  }
  return model;
}

}  // namespace mgsim
