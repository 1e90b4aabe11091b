// Column-named numeric tables: the common shape of everything written to CSV.

#pragma once

#include "resetpol/channel.hpp"
#include "resetpol/sweep.hpp"

#include <string>
#include <vector>

namespace resetpol {

/// Numeric rows under named columns. A non-empty `label_column` adds a
/// leading text column holding `labels[k]` for row k.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::string label_column;
  std::vector<std::string> labels;
};

/// param_hz (param_s for reset-time sweeps), Iz_i, Ix_i, Iy_i per nucleus, gap.
inline Table spectrum_table(const Spectrum& spectrum) {
  Table t;
  const bool is_time = spectrum.parameter == SweepParameter::reset_time;
  t.columns.push_back(is_time ? "param_s" : "param_hz");
  const std::size_t n = spectrum.rows.empty() ? 0 : spectrum.rows.front().nuclei.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto idx = std::to_string(i);
    t.columns.insert(t.columns.end(), {"Iz_" + idx, "Ix_" + idx, "Iy_" + idx});
  }
  t.columns.push_back("gap");
  for (const auto& r : spectrum.rows) {
    std::vector<double> row{is_time ? r.param : r.param / kTwoPi};
    for (const auto& p : r.nuclei) row.insert(row.end(), {p.z, p.x, p.y});
    row.push_back(r.gap);
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// cycle, time_s, Iz_i, Ix_i, Iy_i per nucleus.
inline Table trajectory_table(const Trajectory& traj) {
  Table t;
  t.columns = {"cycle", "time_s"};
  const std::size_t n = traj.empty() ? 0 : traj.front().nuclei.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto idx = std::to_string(i);
    t.columns.insert(t.columns.end(), {"Iz_" + idx, "Ix_" + idx, "Iy_" + idx});
  }
  for (const auto& r : traj) {
    std::vector<double> row{static_cast<double>(r.cycle), r.time};
    for (const auto& p : r.nuclei) row.insert(row.end(), {p.z, p.x, p.y});
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace resetpol
