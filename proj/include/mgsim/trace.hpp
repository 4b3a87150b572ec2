#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mgsim {

/// Column-labeled numeric time series.  Every cell is a double; flags and
/// enums are carried as small integers so one writer covers everything.
struct Trace {
  std::vector<std::string> columns;        ///< first column is always "t"
  std::vector<std::vector<double>> rows;

  std::size_t column_index(const std::string& name) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) {
      throw std::invalid_argument("Trace: no column named '" + name + "'");
    }
    return static_cast<std::size_t>(it - columns.begin());
  }
};

/// Fixed %.15g cell formatting: enough digits to round-trip a double in
/// practice while keeping files byte-stable across runs.
inline std::string format_cell(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  return buf;
}

inline void write_csv(const Trace& trace, std::ostream& os) {
  for (std::size_t c = 0; c < trace.columns.size(); ++c) {
    if (c) os << ',';
    os << trace.columns[c];
  }
  os << '\n';
  for (const auto& row : trace.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) os << ',';
      os << format_cell(row[c]);
    }
    os << '\n';
  }
}

inline Trace read_csv(std::istream& is) {
  Trace trace;
  std::string line;
  if (!std::getline(is, line)) {
    throw std::invalid_argument("read_csv: empty input");
  }
  std::stringstream header(line);
  std::string cell;
  while (std::getline(header, cell, ',')) {
    trace.columns.push_back(cell);
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::vector<double> values;
    while (std::getline(row, cell, ',')) {
      values.push_back(std::stod(cell));
    }
    if (values.size() != trace.columns.size()) {
      throw std::invalid_argument("read_csv: row width does not match header");
    }
    trace.rows.push_back(std::move(values));
  }
  return trace;
}

/// Thresholds and measurement choices for summary metrics.
struct MetricsConfig {
  std::string reference_device;     ///< island of this device is monitored
  double violation_floor = 56.5;    ///< Hz, violation_time counts below this
  double f_collapse = 55.0;         ///< Hz, monitored island below this = collapse
  double band_tol = 5e-3;           ///< Hz slack when judging band occupancy
  double settle_fraction = 0.1;     ///< trailing share of records averaged
};

struct Metrics {
  double violation_time = 0.0;    ///< s spent below violation_floor
  double nadir = 0.0;             ///< Hz
  double peak = 0.0;              ///< Hz
  double safe_band_occupancy = 0.0;
  double settled_frequency = 0.0; ///< Hz
  bool collapsed = false;
};

/// Summary metrics over the monitored island's frequency column.
/// violation_time integrates record spacing, so it is exact to one output
/// stride; occupancy allows band_tol of slack beyond each band edge.
inline Metrics compute_metrics(const Trace& trace, double band_min, double band_max,
                               const MetricsConfig& cfg) {
  if (trace.rows.empty()) {
    throw std::invalid_argument("compute_metrics: empty trace");
  }
  const std::size_t tc = trace.column_index("t");
  const std::size_t fc = trace.column_index("f_island_" + cfg.reference_device);
  const std::size_t cc = trace.column_index("collapsed");
  Metrics m;
  m.nadir = std::numeric_limits<double>::infinity();
  m.peak = -std::numeric_limits<double>::infinity();
  std::size_t in_band = 0;
  for (std::size_t i = 0; i < trace.rows.size(); ++i) {
    const double f = trace.rows[i][fc];
    m.nadir = std::min(m.nadir, f);
    m.peak = std::max(m.peak, f);
    if (f >= band_min - cfg.band_tol && f <= band_max + cfg.band_tol) {
      ++in_band;
    }
    if (i > 0 && f < cfg.violation_floor) {
      m.violation_time += trace.rows[i][tc] - trace.rows[i - 1][tc];
    }
    if (trace.rows[i][cc] != 0.0) {
      m.collapsed = true;
    }
  }
  m.safe_band_occupancy = static_cast<double>(in_band) / static_cast<double>(trace.rows.size());
  std::size_t tail = static_cast<std::size_t>(
      std::ceil(cfg.settle_fraction * static_cast<double>(trace.rows.size())));
  tail = std::max<std::size_t>(tail, 1);
  double sum = 0.0;
  for (std::size_t i = trace.rows.size() - tail; i < trace.rows.size(); ++i) {
    sum += trace.rows[i][fc];
  }
  m.settled_frequency = sum / static_cast<double>(tail);
  return m;
}

}  // namespace mgsim
