#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mgsim/scenario.hpp"

namespace mgsim {

// Batch front-end.  Exit codes are part of the contract:
//   0 success, 2 validation failure, 3 run ended in collapse, 4 I/O failure.

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitCollapse = 3;
inline constexpr int kExitIo = 4;

namespace detail {

inline std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) return std::nullopt;
  return buf.str();
}

inline bool write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return false;
  out << content;
  out.flush();
  return static_cast<bool>(out);
}

inline std::string metrics_json(const Metrics& m) {
  nlohmann::ordered_json j;
  j["violation_time"] = m.violation_time;
  j["nadir"] = m.nadir;
  j["peak"] = m.peak;
  j["safe_band_occupancy"] = m.safe_band_occupancy;
  j["settled_frequency"] = m.settled_frequency;
  j["collapsed"] = m.collapsed;
  return j.dump(2) + "\n";
}

inline std::string manifest_json(const World& w, const std::string& name,
                                 const std::string& path,
                                 const std::optional<bool>& dac_override,
                                 const std::optional<double>& dt_override,
                                 const std::optional<double>& t_end_override) {
  nlohmann::ordered_json j;
  j["scenario"] = name;
  j["source_path"] = path;
  nlohmann::ordered_json ov;
  ov["dac"] = dac_override ? nlohmann::ordered_json(*dac_override ? "on" : "off")
                           : nlohmann::ordered_json(nullptr);
  ov["dt"] = dt_override ? nlohmann::ordered_json(*dt_override)
                         : nlohmann::ordered_json(nullptr);
  ov["t_end"] = t_end_override ? nlohmann::ordered_json(*t_end_override)
                               : nlohmann::ordered_json(nullptr);
  j["overrides"] = ov;
  nlohmann::ordered_json res;
  res["dac_enabled"] = w.dac.enabled;
  res["dt"] = w.sim.dt;
  res["t_end"] = w.sim.t_end;
  res["integrator"] = w.sim.integrator == Integrator::RK4 ? "rk4" : "euler";
  res["output_stride"] = w.sim.output_stride;
  res["init"] = w.sim.equilibrium_init ? "equilibrium" : "nominal";
  res["reference_device"] = w.met.reference_device;
  res["devices"] = {{"gfm", w.gfms.size()}, {"dg", w.dgs.size()}, {"gfl", w.gfls.size()}};
  j["resolved"] = res;
  nlohmann::ordered_json evs = nlohmann::ordered_json::array();
  for (const Event& ev : w.events) {
    evs.push_back({{"at", ev.at}, {"kind", to_string(ev.kind)}});
  }
  j["events"] = evs;
  nlohmann::ordered_json dead = nlohmann::ordered_json::array();
  for (const auto& [t, buses] : w.dead_island_log) {
    dead.push_back({{"t", t}, {"buses", buses}});
  }
  j["deenergized_islands"] = dead;
  nlohmann::ordered_json col;
  col["collapsed"] = w.collapsed;
  col["t"] = w.collapsed ? nlohmann::ordered_json(w.collapse_time)
                         : nlohmann::ordered_json(nullptr);
  j["collapse"] = col;
  return j.dump(2) + "\n";
}

inline std::string brief(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct RunFlags {
  std::string scenario_path;
  std::string out_dir = ".";
  std::string dac_flag;  ///< "", "on", or "off"
  double dt = 0.0;
  double t_end = 0.0;
  bool has_dt = false;
  bool has_t_end = false;
};

inline int load_world(const RunFlags& flags, std::ostream& err, World& w,
                      std::string& name) {
  const auto text = read_file(flags.scenario_path);
  if (!text) {
    err << "error: cannot read scenario file '" << flags.scenario_path << "'\n";
    return kExitIo;
  }
  ParseResult parsed = parse_and_validate(*text);
  if (!parsed.world) {
    for (const std::string& e : parsed.errors) {
      err << "error: " << e << "\n";
    }
    err << "scenario invalid (" << parsed.errors.size() << " problem"
        << (parsed.errors.size() == 1 ? "" : "s") << ")\n";
    return kExitValidation;
  }
  w = std::move(*parsed.world);
  name = parsed.name;
  if (flags.dac_flag == "on") w.dac.enabled = true;
  if (flags.dac_flag == "off") w.dac.enabled = false;
  if (flags.has_dt) w.sim.dt = flags.dt;
  if (flags.has_t_end) w.sim.t_end = flags.t_end;
  if (!(w.sim.dt > 0.0 && w.sim.dt <= 0.01)) {
    err << "error: --dt must lie in (0, 0.01]\n";
    return kExitValidation;
  }
  if (!(w.sim.t_end > 0.0)) {
    err << "error: --t-end must be > 0\n";
    return kExitValidation;
  }
  return kExitOk;
}

inline int cmd_run(const RunFlags& flags, std::ostream& out, std::ostream& err) {
  World w;
  std::string name;
  if (int rc = load_world(flags, err, w, name); rc != kExitOk) return rc;
  const std::optional<bool> dac_override =
      flags.dac_flag.empty() ? std::nullopt
                             : std::optional<bool>(flags.dac_flag == "on");
  const std::optional<double> dt_override =
      flags.has_dt ? std::optional<double>(flags.dt) : std::nullopt;
  const std::optional<double> t_end_override =
      flags.has_t_end ? std::optional<double>(flags.t_end) : std::nullopt;

  init_world(w);
  Trace trace = run_world(w);
  const Metrics m = compute_metrics(trace, w.dac.omega_min, w.dac.omega_max, w.met);

  std::ostringstream csv;
  write_csv(trace, csv);
  const std::string metrics_text = metrics_json(m);
  const std::string manifest_text = manifest_json(w, name, flags.scenario_path,
                                                  dac_override, dt_override,
                                                  t_end_override);
  std::error_code ec;
  std::filesystem::create_directories(flags.out_dir, ec);
  if (ec) {
    err << "error: cannot create output directory '" << flags.out_dir << "'\n";
    return kExitIo;
  }
  const auto dir = std::filesystem::path(flags.out_dir);
  if (!write_file((dir / "trace.csv").string(), csv.str()) ||
      !write_file((dir / "metrics.json").string(), metrics_text) ||
      !write_file((dir / "manifest.json").string(), manifest_text)) {
    err << "error: cannot write outputs under '" << flags.out_dir << "'\n";
    return kExitIo;
  }
  out << "scenario '" << name << "' finished: t_end=" << brief(w.sim.t_end)
      << " s, dac=" << (w.dac.enabled ? "on" : "off")
      << ", collapsed=" << (m.collapsed ? "yes" : "no")
      << ", nadir=" << brief(m.nadir) << " Hz, occupancy="
      << brief(m.safe_band_occupancy) << "\n";
  out << "wrote " << (dir / "trace.csv").string() << ", metrics.json, manifest.json\n";
  return m.collapsed ? kExitCollapse : kExitOk;
}

inline int cmd_sweep(const RunFlags& flags, const std::string& param,
                     const std::string& values_text, std::ostream& out,
                     std::ostream& err) {
  World w;
  std::string name;
  if (int rc = load_world(flags, err, w, name); rc != kExitOk) return rc;
  std::vector<double> values;
  std::stringstream ss(values_text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(cell, &used);
      if (used != cell.size()) throw std::invalid_argument(cell);
      values.push_back(v);
    } catch (const std::exception&) {
      err << "error: --values entry '" << cell << "' is not a number\n";
      return kExitValidation;
    }
  }
  if (values.empty()) {
    err << "error: --values must list at least one size\n";
    return kExitValidation;
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] <= 0.0) {
      err << "error: sweep values must be positive\n";
      return kExitValidation;
    }
    if (i > 0 && values[i] <= values[i - 1]) {
      err << "error: sweep values must be strictly increasing\n";
      return kExitValidation;
    }
  }
  std::vector<SweepRow> rows;
  try {
    rows = size_sweep(w, param, values);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  std::ostringstream csv;
  csv << "value,dac_on_violation_time,dac_off_violation_time,"
         "dac_on_collapsed,dac_off_collapsed\n";
  for (const SweepRow& r : rows) {
    csv << format_cell(r.value) << ',' << format_cell(r.viol_on) << ','
        << format_cell(r.viol_off) << ',' << (r.collapsed_on ? 1 : 0) << ','
        << (r.collapsed_off ? 1 : 0) << '\n';
  }
  std::error_code ec;
  std::filesystem::create_directories(flags.out_dir, ec);
  if (ec) {
    err << "error: cannot create output directory '" << flags.out_dir << "'\n";
    return kExitIo;
  }
  const auto path = std::filesystem::path(flags.out_dir) / "sweep.csv";
  if (!write_file(path.string(), csv.str())) {
    err << "error: cannot write '" << path.string() << "'\n";
    return kExitIo;
  }
  out << "sweep over " << param << " finished: " << rows.size() << " value"
      << (rows.size() == 1 ? "" : "s") << ", wrote " << path.string() << "\n";
  return kExitOk;
}

inline int cmd_validate(const std::string& path, std::ostream& out, std::ostream& err) {
  const auto text = read_file(path);
  if (!text) {
    err << "error: cannot read scenario file '" << path << "'\n";
    return kExitIo;
  }
  ParseResult parsed = parse_and_validate(*text);
  if (!parsed.world) {
    for (const std::string& e : parsed.errors) {
      err << "error: " << e << "\n";
    }
    err << "scenario invalid (" << parsed.errors.size() << " problem"
        << (parsed.errors.size() == 1 ? "" : "s") << ")\n";
    return kExitValidation;
  }
  out << "scenario '" << parsed.name << "' is valid\n";
  return kExitOk;
}

}  // namespace detail

/// Entry point shared by the binary and the tests: parses argv-style
/// arguments (without the program name) and executes one subcommand.
inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"networked microgrid frequency-safety simulator"};
  app.require_subcommand(1);

  detail::RunFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "simulate one scenario");
  run->add_option("scenario", run_flags.scenario_path, "scenario JSON file")->required();
  run->add_option("--dac", run_flags.dac_flag, "override the safety filter flag")
      ->check(CLI::IsMember({"on", "off"}));
  run->add_option("--out", run_flags.out_dir, "output directory");
  CLI::Option* dt_opt = run->add_option("--dt", run_flags.dt, "integration step, s");
  CLI::Option* te_opt = run->add_option("--t-end", run_flags.t_end, "simulated horizon, s");

  detail::RunFlags sweep_flags;
  std::string param = "gfm1.s_inv";
  std::string values_text;
  CLI::App* sweep = app.add_subcommand("sweep", "run a parameter sweep with and without the filter");
  sweep->add_option("scenario", sweep_flags.scenario_path, "scenario JSON file")->required();
  sweep->add_option("--param", param, "dotted device parameter path");
  sweep->add_option("--values", values_text, "comma-separated ascending values")->required();
  sweep->add_option("--out", sweep_flags.out_dir, "output directory");
  CLI::Option* sdt_opt = sweep->add_option("--dt", sweep_flags.dt, "integration step, s");
  CLI::Option* ste_opt = sweep->add_option("--t-end", sweep_flags.t_end, "simulated horizon, s");

  std::string validate_path;
  CLI::App* validate = app.add_subcommand("validate", "check a scenario file");
  validate->add_option("scenario", validate_path, "scenario JSON file")->required();

  std::vector<const char*> argv;
  argv.push_back("mgsim");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      // --help and friends
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  run_flags.has_dt = dt_opt->count() > 0;
  run_flags.has_t_end = te_opt->count() > 0;
  sweep_flags.has_dt = sdt_opt->count() > 0;
  sweep_flags.has_t_end = ste_opt->count() > 0;

  if (run->parsed()) return detail::cmd_run(run_flags, out, err);
  if (sweep->parsed()) return detail::cmd_sweep(sweep_flags, param, values_text, out, err);
  if (validate->parsed()) return detail::cmd_validate(validate_path, out, err);
  err << "error: no subcommand given\n";
  return kExitValidation;
}

}  // namespace mgsim
