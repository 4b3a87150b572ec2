#pragma once

#include <algorithm>
#include <cmath>
#include <future>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mgsim/engine.hpp"

namespace mgsim {

// Scenario documents are JSON key-trees mirroring the World structure.
// Parsing never throws on bad content: every structural and semantic
// problem is collected with its path, and a world is produced only when
// the document is clean.

struct ParseResult {
  std::optional<World> world;
  std::vector<std::string> errors;
  std::string name;
};

namespace detail {

using nlohmann::json;

struct Collector {
  std::vector<std::string> errors;

  void err(const std::string& path, const std::string& msg) {
    errors.push_back(path + ": " + msg);
  }

  double num(const json& j, const std::string& path, const char* key,
             std::optional<double> fallback = std::nullopt) {
    if (!j.contains(key)) {
      if (fallback) return *fallback;
      err(path + "/" + key, "required number is missing");
      return 0.0;
    }
    if (!j[key].is_number()) {
      err(path + "/" + key, "expected a number");
      return fallback.value_or(0.0);
    }
    return j[key].get<double>();
  }

  int integer(const json& j, const std::string& path, const char* key,
              std::optional<int> fallback = std::nullopt) {
    if (!j.contains(key)) {
      if (fallback) return *fallback;
      err(path + "/" + key, "required integer is missing");
      return 0;
    }
    if (!j[key].is_number_integer()) {
      err(path + "/" + key, "expected an integer");
      return fallback.value_or(0);
    }
    return j[key].get<int>();
  }

  bool boolean(const json& j, const std::string& path, const char* key, bool fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_boolean()) {
      err(path + "/" + key, "expected true or false");
      return fallback;
    }
    return j[key].get<bool>();
  }

  std::string text(const json& j, const std::string& path, const char* key,
                   std::optional<std::string> fallback = std::nullopt) {
    if (!j.contains(key)) {
      if (fallback) return *fallback;
      err(path + "/" + key, "required string is missing");
      return {};
    }
    if (!j[key].is_string()) {
      err(path + "/" + key, "expected a string");
      return fallback.value_or(std::string{});
    }
    return j[key].get<std::string>();
  }

  const json* object(const json& j, const std::string& path, const char* key,
                     bool required) {
    if (!j.contains(key)) {
      if (required) err(path + "/" + key, "required section is missing");
      return nullptr;
    }
    if (!j[key].is_object()) {
      err(path + "/" + key, "expected an object");
      return nullptr;
    }
    return &j[key];
  }

  const json* array(const json& j, const std::string& path, const char* key,
                    bool required) {
    if (!j.contains(key)) {
      if (required) err(path + "/" + key, "required list is missing");
      return nullptr;
    }
    if (!j[key].is_array()) {
      err(path + "/" + key, "expected a list");
      return nullptr;
    }
    return &j[key];
  }
};

inline void parse_network(Collector& c, const json& j, World& w) {
  w.net.s_base = c.num(j, "network", "s_base_kva", 1000.0);
  if (const json* buses = c.array(j, "network", "buses", true)) {
    for (std::size_t i = 0; i < buses->size(); ++i) {
      const json& b = (*buses)[i];
      if (!b.is_number_integer()) {
        c.err("network/buses[" + std::to_string(i) + "]", "expected an integer bus id");
        continue;
      }
      w.net.buses.push_back(b.get<int>());
    }
  }
  if (const json* lines = c.array(j, "network", "lines", true)) {
    for (std::size_t i = 0; i < lines->size(); ++i) {
      const std::string path = "network/lines[" + std::to_string(i) + "]";
      const json& ln = (*lines)[i];
      if (!ln.is_object()) {
        c.err(path, "expected an object");
        continue;
      }
      Line line;
      line.from = c.integer(ln, path, "from");
      line.to = c.integer(ln, path, "to");
      line.b = c.num(ln, path, "b");
      line.closed = c.boolean(ln, path, "closed", true);
      w.net.lines.push_back(line);
    }
  }
  if (const json* loads = c.array(j, "network", "loads", false)) {
    for (std::size_t i = 0; i < loads->size(); ++i) {
      const std::string path = "network/loads[" + std::to_string(i) + "]";
      const json& ld = (*loads)[i];
      if (!ld.is_object()) {
        c.err(path, "expected an object");
        continue;
      }
      const int bus = c.integer(ld, path, "bus");
      BusLoad bl{c.num(ld, path, "p"), c.num(ld, path, "q", 0.0)};
      w.net.loads[bus] = bl;
    }
  }
}

inline void parse_devices(Collector& c, const json& j, World& w) {
  const json* devices = c.object(j, "", "devices", true);
  if (!devices) return;
  if (const json* gfms = c.array(*devices, "devices", "gfm", false)) {
    for (std::size_t i = 0; i < gfms->size(); ++i) {
      const std::string path = "devices/gfm[" + std::to_string(i) + "]";
      const json& g = (*gfms)[i];
      if (!g.is_object()) {
        c.err(path, "expected an object");
        continue;
      }
      GfmDevice d;
      d.id = c.text(g, path, "id");
      d.bus = c.integer(g, path, "bus");
      d.inv.s_inv = c.num(g, path, "s_inv");
      d.inv.m_p = c.num(g, path, "m_p", 1.0);
      d.inv.tau = c.num(g, path, "tau", 0.02);
      d.inv.p_min = c.num(g, path, "p_min", 0.0);
      d.inv.p_max = c.num(g, path, "p_max", 1.0);
      d.inv.omega0 = c.num(g, path, "omega0", 60.0);
      d.st.p_set_star = c.num(g, path, "p_set_star", 0.0);
      d.st.q_inv = c.num(g, path, "q_inv", 0.0);
      d.st.omega = d.inv.omega0;
      d.storage = c.boolean(g, path, "storage", false);
      w.gfms.push_back(std::move(d));
    }
  }
  if (const json* dgs = c.array(*devices, "devices", "dg", false)) {
    for (std::size_t i = 0; i < dgs->size(); ++i) {
      const std::string path = "devices/dg[" + std::to_string(i) + "]";
      const json& g = (*dgs)[i];
      if (!g.is_object()) {
        c.err(path, "expected an object");
        continue;
      }
      DgDevice d;
      d.id = c.text(g, path, "id");
      d.bus = c.integer(g, path, "bus");
      d.par.rating = c.num(g, path, "rating");
      d.par.droop = c.num(g, path, "droop", 0.5);
      d.par.tau_g = c.num(g, path, "tau_g", 0.8);
      d.par.omega0 = c.num(g, path, "omega0", 60.0);
      d.st.p_set = c.num(g, path, "p_set", 0.0);
      d.st.omega = d.par.omega0;
      w.dgs.push_back(std::move(d));
    }
  }
  if (const json* gfls = c.array(*devices, "devices", "gfl", false)) {
    for (std::size_t i = 0; i < gfls->size(); ++i) {
      const std::string path = "devices/gfl[" + std::to_string(i) + "]";
      const json& g = (*gfls)[i];
      if (!g.is_object()) {
        c.err(path, "expected an object");
        continue;
      }
      GflDevice d;
      d.id = c.text(g, path, "id");
      d.bus = c.integer(g, path, "bus");
      d.st.rating = c.num(g, path, "rating");
      d.st.p_out = c.num(g, path, "p_out", 0.0);
      d.st.f_trip = c.num(g, path, "f_trip", 56.5);
      d.st.t_dwell = c.num(g, path, "t_dwell", 0.160);
      w.gfls.push_back(std::move(d));
    }
  }
}

inline void parse_events(Collector& c, const json& j, World& w) {
  const json* events = c.array(j, "", "events", false);
  if (!events) return;
  for (std::size_t i = 0; i < events->size(); ++i) {
    const std::string path = "events[" + std::to_string(i) + "]";
    const json& e = (*events)[i];
    if (!e.is_object()) {
      c.err(path, "expected an object");
      continue;
    }
    Event ev;
    ev.at = c.num(e, path, "at");
    const std::string kind = c.text(e, path, "kind");
    if (kind == "breaker_open" || kind == "breaker_close") {
      ev.kind = kind == "breaker_open" ? EventKind::BreakerOpen : EventKind::BreakerClose;
      ev.from = c.integer(e, path, "from");
      ev.to = c.integer(e, path, "to");
    } else if (kind == "load_step") {
      ev.kind = EventKind::LoadStep;
      ev.bus = c.integer(e, path, "bus");
      ev.p = c.num(e, path, "p");
      ev.q = c.num(e, path, "q", 0.0);
      ev.relative = c.boolean(e, path, "relative", false);
    } else if (kind == "dg_redispatch") {
      ev.kind = EventKind::DgRedispatch;
      ev.device = c.text(e, path, "device", std::string{});
      ev.to_measured = c.boolean(e, path, "to_measured", false);
      ev.p_set = c.num(e, path, "p_set", 0.0);
      if (!ev.to_measured && !e.contains("p_set")) {
        c.err(path, "dg_redispatch needs p_set or to_measured");
      }
    } else if (kind == "attack_start" || kind == "attack_end") {
      c.err(path, "attack events are synthesized from the attack spec; remove them");
      continue;
    } else {
      c.err(path + "/kind", "unknown event kind '" + kind + "'");
      continue;
    }
    w.events.push_back(std::move(ev));
  }
}

inline void validate_semantics(Collector& c, World& w) {
  if (!(w.sim.dt > 0.0 && w.sim.dt <= 0.01)) {
    c.err("sim/dt", "must lie in (0, 0.01]");
  }
  if (!(w.sim.t_end > 0.0)) c.err("sim/t_end", "must be > 0");
  if (w.sim.output_stride < 1) c.err("sim/output_stride", "must be >= 1");
  if (!(w.net.s_base > 0.0)) c.err("network/s_base_kva", "must be > 0");

  std::set<int> buses(w.net.buses.begin(), w.net.buses.end());
  if (buses.size() != w.net.buses.size()) c.err("network/buses", "bus ids must be unique");
  for (std::size_t i = 0; i < w.net.lines.size(); ++i) {
    const std::string path = "network/lines[" + std::to_string(i) + "]";
    const Line& ln = w.net.lines[i];
    if (!buses.count(ln.from)) c.err(path + "/from", "unknown bus");
    if (!buses.count(ln.to)) c.err(path + "/to", "unknown bus");
    if (ln.from == ln.to) c.err(path, "line endpoints must differ");
    if (!(ln.b > 0.0)) c.err(path + "/b", "susceptance must be > 0");
  }
  for (const auto& [bus, load] : w.net.loads) {
    if (!buses.count(bus)) {
      c.err("network/loads", "unknown bus " + std::to_string(bus));
    }
    if (load.p < 0.0) {
      c.err("network/loads", "bus " + std::to_string(bus) + ": demand must be >= 0");
    }
  }

  std::set<std::string> ids;
  std::set<int> source_buses;
  auto check_id = [&](const std::string& path, const std::string& id) {
    if (id.empty()) c.err(path + "/id", "must be non-empty");
    if (!ids.insert(id).second) c.err(path + "/id", "duplicate device id '" + id + "'");
  };
  auto check_bus = [&](const std::string& path, int bus) {
    if (!buses.count(bus)) c.err(path + "/bus", "unknown bus " + std::to_string(bus));
  };
  auto check_source_bus = [&](const std::string& path, int bus) {
    if (!source_buses.insert(bus).second) {
      c.err(path + "/bus", "bus " + std::to_string(bus) +
                               " already hosts a frequency source");
    }
  };
  for (std::size_t i = 0; i < w.gfms.size(); ++i) {
    const std::string path = "devices/gfm[" + std::to_string(i) + "]";
    const GfmDevice& d = w.gfms[i];
    check_id(path, d.id);
    check_bus(path, d.bus);
    check_source_bus(path, d.bus);
    if (!(d.inv.s_inv > 0.0)) c.err(path + "/s_inv", "must be > 0");
    if (!(d.inv.m_p > 0.0)) c.err(path + "/m_p", "must be > 0");
    if (!(d.inv.tau > 0.0)) c.err(path + "/tau", "must be > 0");
    if (d.inv.p_min > d.inv.p_max) c.err(path, "p_min must not exceed p_max");
    if (d.inv.p_min < 0.0 && !d.storage) {
      c.err(path + "/p_min", "negative values need storage: true");
    }
    if (std::abs(d.st.q_inv) > 1.0) c.err(path + "/q_inv", "must lie in [-1, 1]");
    if (!(w.dac.omega_min < d.inv.omega0 && d.inv.omega0 < w.dac.omega_max)) {
      c.err("dac", "safe band must straddle omega0 of '" + d.id + "'");
    }
  }
  for (std::size_t i = 0; i < w.dgs.size(); ++i) {
    const std::string path = "devices/dg[" + std::to_string(i) + "]";
    const DgDevice& d = w.dgs[i];
    check_id(path, d.id);
    check_bus(path, d.bus);
    check_source_bus(path, d.bus);
    if (!(d.par.rating > 0.0)) c.err(path + "/rating", "must be > 0");
    if (!(d.par.droop > 0.0)) c.err(path + "/droop", "must be > 0");
    if (!(d.par.tau_g > 0.0)) c.err(path + "/tau_g", "must be > 0");
  }
  for (std::size_t i = 0; i < w.gfls.size(); ++i) {
    const std::string path = "devices/gfl[" + std::to_string(i) + "]";
    const GflDevice& d = w.gfls[i];
    check_id(path, d.id);
    check_bus(path, d.bus);
    if (!(d.st.rating > 0.0)) c.err(path + "/rating", "must be > 0");
    if (d.st.p_out < 0.0 || d.st.p_out > 1.0) c.err(path + "/p_out", "must lie in [0, 1]");
    if (!(d.st.f_trip > 0.0)) c.err(path + "/f_trip", "must be > 0");
    if (!(d.st.t_dwell > 0.0)) c.err(path + "/t_dwell", "must be > 0");
  }
  if (w.gfms.empty() && w.dgs.empty()) {
    c.err("devices", "at least one frequency source (gfm or dg) is required");
  }

  if (w.dac.q < 1 || w.dac.q % 2 == 0) {
    c.err("dac/q", "barrier exponent must be a positive odd integer");
  }
  if (!(w.dac.alpha > 0.0)) c.err("dac/alpha", "must be > 0");
  if (!(w.dac.omega_min < w.dac.omega_max)) {
    c.err("dac", "omega_min must lie below omega_max");
  }
  if (w.dac.p_set_min < 0.0 || w.dac.p_set_min > 1.0) {
    c.err("dac/p_set_min", "must lie in [0, 1]");
  }

  if (w.sec.enabled) {
    if (!(w.sec.period > 0.0)) c.err("secondary/period", "must be > 0");
    if (!(w.sec.k_i > 0.0)) c.err("secondary/k_i", "must be > 0");
    if (w.sec.rounds < 0) c.err("secondary/rounds", "must be >= 0");
  }
  if (w.attack.enabled) {
    if (w.attack.targets.empty()) {
      c.err("secondary/attack/targets", "must be non-empty");
    }
    for (const std::string& tgt : w.attack.targets) {
      const bool known = std::any_of(w.gfms.begin(), w.gfms.end(),
                                     [&](const GfmDevice& d) { return d.id == tgt; });
      if (!known) {
        c.err("secondary/attack/targets", "'" + tgt + "' is not a gfm device");
      }
    }
    if (!(w.attack.t_on < w.attack.t_off)) {
      c.err("secondary/attack", "t_on must be before t_off");
    }
    if (w.attack.t_on < 0.0) c.err("secondary/attack/t_on", "must be >= 0");
  }

  for (std::size_t i = 0; i < w.events.size(); ++i) {
    const std::string path = "events[" + std::to_string(i) + "]";
    const Event& ev = w.events[i];
    if (ev.at < 0.0) c.err(path + "/at", "must be >= 0");
    switch (ev.kind) {
      case EventKind::BreakerOpen:
      case EventKind::BreakerClose: {
        const bool found = std::any_of(
            w.net.lines.begin(), w.net.lines.end(), [&](const Line& ln) {
              return (ln.from == ev.from && ln.to == ev.to) ||
                     (ln.from == ev.to && ln.to == ev.from);
            });
        if (!found) {
          c.err(path, "no line between buses " + std::to_string(ev.from) + " and " +
                          std::to_string(ev.to));
        }
        break;
      }
      case EventKind::LoadStep:
        if (!buses.count(ev.bus)) {
          c.err(path + "/bus", "unknown bus " + std::to_string(ev.bus));
        }
        break;
      case EventKind::DgRedispatch:
        if (!ev.device.empty()) {
          const bool known = std::any_of(w.dgs.begin(), w.dgs.end(),
                                         [&](const DgDevice& d) { return d.id == ev.device; });
          if (!known) c.err(path + "/device", "'" + ev.device + "' is not a dg device");
        }
        break;
      default:
        break;
    }
  }

  if (!w.met.reference_device.empty()) {
    const bool src =
        std::any_of(w.gfms.begin(), w.gfms.end(),
                    [&](const GfmDevice& d) { return d.id == w.met.reference_device; }) ||
        std::any_of(w.dgs.begin(), w.dgs.end(),
                    [&](const DgDevice& d) { return d.id == w.met.reference_device; });
    if (!src) {
      c.err("metrics/reference_device", "'" + w.met.reference_device +
                                            "' is not a frequency source");
    }
  }
  if (!(w.met.f_collapse < w.dac.omega_min)) {
    c.err("metrics/f_collapse", "must lie below the safe band");
  }
}

}  // namespace detail

/// Parse and validate a scenario document.  Returns either a ready-to-run
/// world or the complete list of problems; never throws on bad content.
inline ParseResult parse_and_validate(const std::string& text) {
  ParseResult out;
  detail::Collector c;
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded()) {
    out.errors.push_back("document: not well-formed JSON");
    return out;
  }
  if (!doc.is_object()) {
    out.errors.push_back("document: top level must be an object");
    return out;
  }
  World w;
  out.name = c.text(doc, "", "name", std::string{"unnamed"});

  if (const nlohmann::json* sim = c.object(doc, "", "sim", true)) {
    w.sim.t_end = c.num(*sim, "sim", "t_end");
    w.sim.dt = c.num(*sim, "sim", "dt", 1e-3);
    w.sim.output_stride = c.integer(*sim, "sim", "output_stride", 10);
    const std::string integ = c.text(*sim, "sim", "integrator", std::string{"rk4"});
    if (integ == "rk4") {
      w.sim.integrator = Integrator::RK4;
    } else if (integ == "euler") {
      w.sim.integrator = Integrator::Euler;
    } else {
      c.err("sim/integrator", "must be 'rk4' or 'euler'");
    }
    const std::string init = c.text(*sim, "sim", "init", std::string{"equilibrium"});
    if (init == "equilibrium") {
      w.sim.equilibrium_init = true;
    } else if (init == "nominal") {
      w.sim.equilibrium_init = false;
    } else {
      c.err("sim/init", "must be 'equilibrium' or 'nominal'");
    }
  }
  if (const nlohmann::json* net = c.object(doc, "", "network", true)) {
    detail::parse_network(c, *net, w);
  }
  detail::parse_devices(c, doc, w);
  if (const nlohmann::json* dac = c.object(doc, "", "dac", true)) {
    w.dac.enabled = c.boolean(*dac, "dac", "enabled", true);
    w.dac.omega_min = c.num(*dac, "dac", "omega_min");
    w.dac.omega_max = c.num(*dac, "dac", "omega_max");
    w.dac.alpha = c.num(*dac, "dac", "alpha");
    w.dac.q = c.integer(*dac, "dac", "q", 3);
    w.dac.p_set_min = c.num(*dac, "dac", "p_set_min", 0.0);
  }
  if (const nlohmann::json* sec = c.object(doc, "", "secondary", false)) {
    w.sec.enabled = c.boolean(*sec, "secondary", "enabled", false);
    w.sec.period = c.num(*sec, "secondary", "period", 2.0);
    w.sec.k_i = c.num(*sec, "secondary", "k_i", 1.0);
    w.sec.rounds = c.integer(*sec, "secondary", "rounds", 1);
    if (const nlohmann::json* atk = c.object(*sec, "secondary", "attack", false)) {
      w.attack.enabled = c.boolean(*atk, "secondary/attack", "enabled", false);
      if (const nlohmann::json* tg = c.array(*atk, "secondary/attack", "targets", false)) {
        for (const auto& t : *tg) {
          if (t.is_string()) {
            w.attack.targets.push_back(t.get<std::string>());
          } else {
            c.err("secondary/attack/targets", "entries must be strings");
          }
        }
      }
      w.attack.t_on = c.num(*atk, "secondary/attack", "t_on", 0.0);
      w.attack.t_off = c.num(*atk, "secondary/attack", "t_off", 0.0);
    }
  }
  detail::parse_events(c, doc, w);
  if (const nlohmann::json* met = c.object(doc, "", "metrics", false)) {
    w.met.reference_device = c.text(*met, "metrics", "reference_device", std::string{});
    w.met.violation_floor = c.num(*met, "metrics", "violation_floor", 56.5);
    w.met.f_collapse = c.num(*met, "metrics", "f_collapse", 55.0);
    w.met.band_tol = c.num(*met, "metrics", "band_tol", 5e-3);
    w.met.settle_fraction = c.num(*met, "metrics", "settle_fraction", 0.1);
  }

  // placements feed the island partition
  for (const GfmDevice& d : w.gfms) w.net.devices[d.id] = {d.bus, true};
  for (const DgDevice& d : w.dgs) w.net.devices[d.id] = {d.bus, true};
  for (const GflDevice& d : w.gfls) w.net.devices[d.id] = {d.bus, false};

  detail::validate_semantics(c, w);
  out.errors = std::move(c.errors);
  if (out.errors.empty()) {
    out.world = std::move(w);
  }
  return out;
}

/// Point a dotted parameter path ("gfm1.s_inv") at its numeric field.
/// Unknown device or field names throw invalid_argument.
inline double* resolve_param(World& w, const std::string& path) {
  const auto dot = path.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 >= path.size()) {
    throw std::invalid_argument("parameter path must look like device.field, got '" +
                                path + "'");
  }
  const std::string id = path.substr(0, dot);
  const std::string field = path.substr(dot + 1);
  for (GfmDevice& d : w.gfms) {
    if (d.id != id) continue;
    if (field == "s_inv") return &d.inv.s_inv;
    if (field == "m_p") return &d.inv.m_p;
    if (field == "tau") return &d.inv.tau;
    if (field == "p_min") return &d.inv.p_min;
    if (field == "p_max") return &d.inv.p_max;
    if (field == "p_set_star") return &d.st.p_set_star;
    if (field == "q_inv") return &d.st.q_inv;
    throw std::invalid_argument("gfm device has no numeric field '" + field + "'");
  }
  for (DgDevice& d : w.dgs) {
    if (d.id != id) continue;
    if (field == "rating") return &d.par.rating;
    if (field == "droop") return &d.par.droop;
    if (field == "tau_g") return &d.par.tau_g;
    if (field == "p_set") return &d.st.p_set;
    throw std::invalid_argument("dg device has no numeric field '" + field + "'");
  }
  for (GflDevice& d : w.gfls) {
    if (d.id != id) continue;
    if (field == "rating") return &d.st.rating;
    if (field == "p_out") return &d.st.p_out;
    if (field == "f_trip") return &d.st.f_trip;
    if (field == "t_dwell") return &d.st.t_dwell;
    throw std::invalid_argument("gfl device has no numeric field '" + field + "'");
  }
  throw std::invalid_argument("no device named '" + id + "'");
}

struct RunResult {
  Trace trace;
  Metrics metrics;
};

/// Initialize and run one world copy to completion.
inline RunResult run_scenario(World w) {
  init_world(w);
  RunResult out;
  out.trace = run_world(w);
  out.metrics = compute_metrics(out.trace, w.dac.omega_min, w.dac.omega_max, w.met);
  return out;
}

struct SweepRow {
  double value = 0.0;
  double viol_on = 0.0;
  double viol_off = 0.0;
  bool collapsed_on = false;
  bool collapsed_off = false;
};

/// One run per (value, filter flag).  Runs are independent and may execute
/// concurrently; rows are assembled in value order so the output never
/// depends on scheduling.
inline std::vector<SweepRow> size_sweep(const World& base, const std::string& param,
                                        const std::vector<double>& values) {
  {
    World probe = base;
    resolve_param(probe, param);  // surface bad paths before spawning work
  }
  std::vector<std::future<SweepRow>> futures;
  futures.reserve(values.size());
  for (double v : values) {
    futures.push_back(std::async(std::launch::async, [&base, &param, v]() {
      SweepRow row;
      row.value = v;
      {
        World w = base;
        *resolve_param(w, param) = v;
        w.dac.enabled = true;
        RunResult r = run_scenario(std::move(w));
        row.viol_on = r.metrics.violation_time;
        row.collapsed_on = r.metrics.collapsed;
      }
      {
        World w = base;
        *resolve_param(w, param) = v;
        w.dac.enabled = false;
        RunResult r = run_scenario(std::move(w));
        row.viol_off = r.metrics.violation_time;
        row.collapsed_off = r.metrics.collapsed;
      }
      return row;
    }));
  }
  std::vector<SweepRow> rows;
  rows.reserve(values.size());
  for (auto& f : futures) {
    rows.push_back(f.get());
  }
  return rows;
}

}  // namespace mgsim
