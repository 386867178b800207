#include "damplqr/report.hpp"

#include <cstdio>
#include <string>

namespace damplqr {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void annotate_spectral_radii(SynthesisReport& report, const SystemModel& sys) {
  for (TraceRow& row : report.trace) {
    if (row.gain.size() == 0) continue;
    row.spectral_radius = spectral_radius(sys.A - sys.B * row.gain);
  }
  report.diagnostics = true;
}

std::string trace_to_csv(const SynthesisReport& report) {
  if (report.trace.empty()) return "";
  const Matrix& first_gain = report.trace.front().gain;
  const auto n_u = first_gain.rows();
  const auto n_x = first_gain.cols();

  std::string csv = "phase,index,gamma,alpha";
  for (Eigen::Index r = 0; r < n_u; ++r)
    for (Eigen::Index c = 0; c < n_x; ++c)
      csv += ",k_" + std::to_string(r) + "_" + std::to_string(c);
  csv += ",delta_norm,residual,spectral_radius,accepted\n";

  for (const TraceRow& row : report.trace) {
    csv += std::to_string(row.phase) + "," + std::to_string(row.index) + "," +
           fmt(row.gamma) + "," + fmt(row.alpha);
    for (Eigen::Index r = 0; r < n_u; ++r)
      for (Eigen::Index c = 0; c < n_x; ++c) csv += "," + fmt(row.gain(r, c));
    csv += "," + fmt(row.delta_norm) + "," + fmt(row.residual) + ",";
    if (row.spectral_radius) csv += fmt(*row.spectral_radius);
    csv += ",";
    csv += row.accepted ? "1" : "0";
    csv += "\n";
  }
  return csv;
}

}  // namespace damplqr
