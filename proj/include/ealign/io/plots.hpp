#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ealign/diagnostics.hpp"
#include "ealign/io/csv.hpp"
#include "ealign/io/svg.hpp"

namespace ealign::io {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  const std::vector<double>* column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return &columns[i];
    }
    return nullptr;
  }
};

inline std::optional<Table> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  Table t;
  std::string line, cell;
  if (!std::getline(in, line)) return std::nullopt;
  std::stringstream hs(line);
  while (std::getline(hs, cell, ',')) t.header.push_back(cell);
  t.columns.resize(t.header.size());
  while (std::getline(in, line)) {
    std::stringstream ls(line);
    for (std::size_t i = 0; i < t.header.size() && std::getline(ls, cell, ','); ++i) {
      t.columns[i].push_back(std::strtod(cell.c_str(), nullptr));
    }
  }
  return t;
}

namespace detail {

/// Splits rows of a long-format table into one series per distinct t,
/// keeping at most max_curves evenly spaced times.
inline std::vector<Series> snapshot_series(const Table& t, const std::string& ycol, int max_curves = 6) {
  const auto* tt = t.column("t");
  const auto* xx = t.column("x");
  const auto* yy = t.column(ycol);
  std::vector<Series> all;
  std::vector<double> times;
  if (!tt || !xx || !yy) return all;
  for (std::size_t i = 0; i < tt->size(); ++i) {
    if (times.empty() || (*tt)[i] != times.back()) {
      times.push_back((*tt)[i]);
      all.push_back({"t=" + num((*tt)[i]), {}, {}});
    }
    all.back().x.push_back((*xx)[i]);
    all.back().y.push_back((*yy)[i]);
  }
  std::vector<Series> out;
  const int n = static_cast<int>(all.size());
  const int k = std::min(n, max_curves);
  for (int j = 0; j < k; ++j) {
    const int idx = k == 1 ? 0 : static_cast<int>(std::lround(double(j) * (n - 1) / (k - 1)));
    out.push_back(all[idx]);
    out.back().color = palette()[j % palette().size()];
  }
  return out;
}

inline std::optional<double> jnum(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) return std::nullopt;
  return j[key].get<double>();
}

}  // namespace detail

/// Writes the standard figures for a run directory; returns written paths.
/// A figure whose series is missing is skipped with a warning on `warn`.
inline std::vector<std::filesystem::path> plot_run(const std::filesystem::path& dir, std::ostream& warn = std::cerr) {
  namespace fs = std::filesystem;
  std::vector<fs::path> written;
  nlohmann::json report;
  if (std::ifstream rin(dir / "report.json"); rin) {
    try {
      rin >> report;
    } catch (const nlohmann::json::exception&) {
      warn << "warning: report.json unreadable; bounds not overlaid\n";
    }
  } else {
    warn << "warning: report.json missing; bounds not overlaid\n";
  }
  const nlohmann::json bounds = report.contains("bounds") ? report["bounds"] : nlohmann::json::object();
  auto emit = [&](const std::string& name, const Figure& f) {
    write_svg(dir / name, f);
    written.push_back(dir / name);
  };

  if (const auto fields = read_csv(dir / "fields.csv"); fields && !fields->columns[0].empty()) {
    emit("rho_snapshots.svg", {"density snapshots", "x", "rho", detail::snapshot_series(*fields, "rho")});
    emit("g_snapshots.svg", {"G snapshots", "x", "G", detail::snapshot_series(*fields, "g")});
  } else {
    warn << "warning: fields.csv missing; skipping snapshot figures\n";
  }

  const auto diag = read_csv(dir / "diagnostics.csv");
  if (diag && diag->column("t") && !diag->column("t")->empty()) {
    const auto& t = *diag->column("t");
    Figure fg{"min G", "t", "min G", {{"computed", t, *diag->column("min_g")}}};
    const auto g0 = detail::jnum(bounds, "g0_min");
    if (g0 && *g0 < 0.0) {
      Series b{"1/(t+1/G0)", {}, {}, palette()[3], true};
      for (double ti : t) {
        if (1.0 + *g0 * ti <= 0.0) break;
        b.x.push_back(ti);
        b.y.push_back(*g0 / (1.0 + *g0 * ti));
      }
      fg.series.push_back(std::move(b));
      fg.y_min = 20.0 * *g0;
    } else if (g0) {
      fg.y_min = -1.0 - 2.0 * std::abs(*g0);
    }
    emit("min_g.svg", fg);

    Figure fr{"max rho", "t", "max rho", {{"computed", t, *diag->column("max_rho")}}};
    if (const auto cr = detail::jnum(bounds, "c_rho")) {
      fr.series.push_back({"C_rho", {t.front(), t.back()}, {*cr, *cr}, palette()[3], true});
    }
    if (const auto r0 = detail::jnum(bounds, "rho0_max")) fr.y_max = 1e3 * std::max(*r0, 1e-300);
    emit("max_rho.svg", fr);

    emit("bkm.svg", {"BKM integrals",
                     "t",
                     "integral",
                     {{"int |rho|+|G|", t, *diag->column("bkm_full"), palette()[0]},
                      {"int |G|", t, *diag->column("bkm_g"), palette()[1]},
                      {"int |u_x|", t, *diag->column("bkm_ux"), palette()[2]}}});
  } else {
    warn << "warning: diagnostics.csv missing; skipping time-series figures\n";
  }

  if (report.contains("pair_distance") && report["pair_distance"].is_object()) {
    const auto& p = report["pair_distance"];
    const auto t = p["t"].get<std::vector<double>>();
    emit("pair_distance.svg", {"distance of the floor-interval endpoints",
                               "t",
                               "r(t)",
                               {{"computed", t, p["r"].get<std::vector<double>>()},
                                {"comparison bound", t, p["bound"].get<std::vector<double>>(), palette()[3], true}}});
  } else {
    warn << "warning: no pair-distance series; skipping r(t) figure\n";
  }
  return written;
}

}  // namespace ealign::io
