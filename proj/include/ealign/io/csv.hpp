#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ealign/diagnostics.hpp"
#include "ealign/error.hpp"
#include "ealign/trajectory.hpp"

namespace ealign::io {

/// %.17g keeps the round trip exact, and so the files are bit-identical
/// across repeated runs.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw IoError("cannot write " + path.string());
    row_strings(header);
  }

  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << fmt(values[i]);
    out_ << '\n';
  }

  void row_strings(const std::vector<std::string>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << values[i];
    out_ << '\n';
  }

  ~CsvWriter() { out_.flush(); }

 private:
  std::ofstream out_;
};

/// t,x,rho,g,u,psi_conv for every field snapshot.
inline void write_fields_csv(const std::filesystem::path& path, const Trajectory& traj) {
  CsvWriter w(path, {"t", "x", "rho", "g", "u", "psi_conv"});
  for (const auto& snap : traj.field_snapshots) {
    const auto& s = snap.state;
    for (int i = 0; i < s.size(); ++i) w.row({s.t, s.grid.center(i), s.rho[i], s.g[i], snap.u[i], snap.conv[i]});
  }
}

/// t,x,m,v for every particle snapshot.
inline void write_particles_csv(const std::filesystem::path& path, const Trajectory& traj) {
  CsvWriter w(path, {"t", "x", "m", "v"});
  for (const auto& e : traj.particle_snapshots) {
    for (int i = 0; i < e.size(); ++i) w.row({e.t, e.x[i], e.m[i], e.v[i]});
  }
}

/// One row per BKM sample time; grid and particle norms already merged.
inline void write_diagnostics_csv(const std::filesystem::path& path, const Trajectory& traj, const BkmReport& bkm) {
  CsvWriter w(path, {"t", "min_g", "max_rho", "max_ux", "bkm_full", "bkm_g", "bkm_ux", "mass", "momentum"});
  const auto& fs = traj.field_series;
  const auto& ps = traj.particle_series;
  std::size_t jf = 0, jp = 0;
  for (std::size_t k = 0; k < bkm.t.size(); ++k) {
    const double t = bkm.t[k];
    double min_g = std::numeric_limits<double>::infinity(), mass = 0.0, mom = 0.0;
    while (jf + 1 < fs.size() && fs[jf + 1].t <= t) ++jf;
    while (jp + 1 < ps.size() && ps[jp + 1].t <= t) ++jp;
    if (!fs.empty()) {
      min_g = fs[jf].min_g;
      mass = fs[jf].mass;
      mom = fs[jf].momentum;
    }
    if (!ps.empty()) {
      min_g = std::min(min_g, ps[jp].min_g);
      if (fs.empty()) {
        mass = ps[jp].mass;
        mom = ps[jp].momentum;
      }
    }
    w.row({t, min_g, bkm.rho_inf[k], bkm.ux_inf[k], bkm.i_full[k], bkm.i_g[k], bkm.i_ux[k], mass, mom});
  }
}

}  // namespace ealign::io
