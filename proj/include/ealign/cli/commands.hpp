#pragma once

#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ealign/cli/config.hpp"
#include "ealign/io/csv.hpp"
#include "ealign/io/plots.hpp"
#include "ealign/io/report.hpp"
#include "ealign/simulation.hpp"

namespace ealign::cli {

namespace fs = std::filesystem;

enum ExitCode : int { exit_ok = 0, exit_config = 1, exit_aborted = 2, exit_inconsistent = 3 };

inline std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct RunResult {
  int exit_code = exit_ok;
  std::string status;
  std::string classification;
  bool consistent = true;
  std::optional<double> blowup_time;
  double t_end = 0.0;
  io::RunAnalysis analysis;
};

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  const auto probe = dir / ".write_probe";
  std::ofstream out(probe);
  if (ec || !out) throw IoError("output directory " + dir.string() + " is not writable");
  out.close();
  fs::remove(probe, ec);
}

/// Builds, runs and writes one configured scenario into `dir`.
/// ConfigError and ConstructionError propagate before any computation.
inline RunResult execute_run(const RunConfig& cfg, const fs::path& dir) {
  const auto start = utc_now();
  const auto sc = detail::rethrow_as_config("scenario", [&] {
    return build_scenario(cfg.kind, cfg.kernel, cfg.grid, cfg.params);
  });
  ensure_dir(dir);
  const auto traj = run_simulation(sc, cfg.solver);
  RunResult r;
  r.analysis = io::analyze(sc, traj);
  const auto& term = traj.termination();
  r.status = std::string(to_string(term.kind));
  r.t_end = term.t_end;
  if (term.kind == TerminationKind::blowup) r.blowup_time = term.blowup.time_estimate;
  if (r.analysis.outcome) {
    r.classification = r.analysis.outcome->summary();
    r.consistent = r.analysis.outcome->consistent();
  }
  if (term.kind == TerminationKind::aborted) r.exit_code = exit_aborted;
  else if (!r.consistent) r.exit_code = exit_inconsistent;

  std::vector<std::string> files;
  const auto& fmts = cfg.output.formats;
  if (fmts.count("csv")) {
    if (traj.has_fields()) {
      io::write_fields_csv(dir / "fields.csv", traj);
      files.push_back("fields.csv");
    }
    if (traj.has_particles()) {
      io::write_particles_csv(dir / "particles.csv", traj);
      files.push_back("particles.csv");
    }
    io::write_diagnostics_csv(dir / "diagnostics.csv", traj, r.analysis.bkm);
    files.push_back("diagnostics.csv");
  }
  const auto report = io::report_json(sc, traj, r.analysis);
  {
    std::ofstream out(dir / "report.json");
    if (!out) throw IoError("cannot write report.json");
    out << report.dump(2) << '\n';
    files.push_back("report.json");
  }
  if (fmts.count("svg")) {
    std::ostringstream warn;
    for (const auto& p : io::plot_run(dir, warn)) files.push_back(p.filename().string());
  }
  if (!fmts.count("json")) {
    // report.json is needed for the overlays; drop it afterwards when not requested
    fs::remove(dir / "report.json");
    std::erase(files, "report.json");
  }
  json checks = json::array();
  if (r.analysis.outcome) {
    for (const auto& c : r.analysis.outcome->consistency) {
      checks.push_back({{"name", c.name}, {"pass", c.pass}, {"skipped", c.skipped}, {"detail", c.detail}});
    }
  }
  files.push_back("manifest.json");
  const json manifest{{"config_hash", config_hash(cfg)},
                      {"tool_version", tool_version},
                      {"start_time", start},
                      {"end_time", utc_now()},
                      {"seed", cfg.seed},
                      {"termination", io::to_json(term)},
                      {"classification", r.classification.empty() ? json(nullptr) : json(r.classification)},
                      {"withheld", r.analysis.withheld},
                      {"consistent", r.consistent},
                      {"theorem_checks", checks},
                      {"outputs", files},
                      {"config", cfg.canonical}};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write manifest.json");
  out << manifest.dump(2) << '\n';
  return r;
}

inline int cmd_run(const fs::path& config_path, std::optional<fs::path> out_dir, std::optional<int> resolution,
                   std::ostream& log = std::cout, std::ostream& err = std::cerr) {
  RunConfig cfg;
  try {
    cfg = load_config(config_path, resolution);
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  }
  const fs::path dir = out_dir ? *out_dir : fs::path(cfg.output.directory);
  try {
    const auto r = execute_run(cfg, dir);
    log << "status: " << r.status << " at t = " << r.t_end << '\n';
    if (r.blowup_time) log << "blowup time: " << *r.blowup_time << '\n';
    if (!r.classification.empty()) {
      log << "classification: " << r.classification << (r.consistent ? "" : " (INCONSISTENT)") << '\n';
      for (const auto& c : r.analysis.outcome->consistency) {
        log << "  [" << (c.skipped ? "skip" : c.pass ? "pass" : "FAIL") << "] " << c.name << ": " << c.detail << '\n';
      }
    } else {
      log << "classification withheld: " << r.analysis.withheld << '\n';
    }
    log << "outputs: " << dir.string() << '\n';
    return r.exit_code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_config;
  }
}

namespace detail {

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string o = "\"";
  for (char c : s) o += c == '"' ? std::string("\"\"") : std::string(1, c);
  return o + "\"";
}

}  // namespace detail

/// Cartesian product of the sweep ranges, run across a worker pool.
inline int cmd_sweep(const fs::path& config_path, std::optional<fs::path> out_dir, std::optional<int> resolution,
                     int workers, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
  RunConfig base;
  try {
    base = load_config(config_path, resolution);
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  }
  if (!base.sweep) {
    err << "config error: sweep needs a 'sweep' section with ranges\n";
    return exit_config;
  }
  const auto& ranges = base.sweep->ranges;
  long long total = 1;
  for (const auto& [k, v] : ranges) total *= static_cast<long long>(v.size());
  if (total > base.sweep->cap) {
    err << "config error: sweep has " << total << " runs, above the cap of " << base.sweep->cap << '\n';
    return exit_config;
  }
  std::vector<RunConfig> points;
  std::vector<std::vector<double>> values;
  for (long long idx = 0; idx < total; ++idx) {
    auto tree = base.canonical;
    tree.erase("sweep");
    std::vector<double> vals;
    long long rest = idx;
    for (auto it = ranges.rbegin(); it != ranges.rend(); ++it) {
      const auto n = static_cast<long long>(it->second.size());
      vals.insert(vals.begin(), it->second[rest % n]);
      rest /= n;
    }
    try {
      for (std::size_t k = 0; k < ranges.size(); ++k) {
        const bool integral = ranges[k].first == "grid.n_cells" || ranges[k].first == "solver.n_particles" ||
                              ranges[k].first == "solver.fit_samples";
        set_key(tree, ranges[k].first, integral ? json(static_cast<int>(vals[k])) : json(vals[k]));
      }
      points.push_back(parse_config(tree));
      build_scenario(points.back().kind, points.back().kernel, points.back().grid, points.back().params);
    } catch (const Error& e) {
      err << "config error: sweep point " << idx << ": " << e.what() << '\n';
      return exit_config;
    }
    values.push_back(std::move(vals));
  }
  const fs::path dir = out_dir ? *out_dir : fs::path(base.output.directory);
  try {
    ensure_dir(dir);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_config;
  }

  std::vector<std::optional<RunResult>> results(points.size());
  std::vector<std::string> errors(points.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      char name[32];
      std::snprintf(name, sizeof name, "run_%04zu", i);
      try {
        results[i] = execute_run(points[i], dir / name);
      } catch (const Error& e) {
        errors[i] = e.what();
      }
      std::lock_guard lock(log_mutex);
      log << name << ": " << (results[i] ? results[i]->status + " " + results[i]->classification : errors[i]) << '\n';
    }
  };
  const int k = std::max(1, std::min<int>(workers, static_cast<int>(points.size())));
  std::vector<std::thread> pool;
  for (int i = 0; i < k; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  int code = exit_ok;
  {
    io::CsvWriter w(dir / "phase.csv", [&] {
      std::vector<std::string> h{"run"};
      for (const auto& [key, v] : ranges) h.push_back(key);
      for (const char* c : {"status", "classification", "consistent", "blowup_time", "t_end", "t_super", "t_star",
                            "checks_passed", "checks_total"}) {
        h.push_back(c);
      }
      return h;
    }());
    for (std::size_t i = 0; i < points.size(); ++i) {
      std::vector<std::string> row{std::to_string(i)};
      for (double v : values[i]) row.push_back(io::fmt(v));
      if (!results[i]) {
        row.insert(row.end(), {"error", detail::csv_quote(errors[i]), "false", "", "", "", "", "0", "0"});
        code = std::max<int>(code, exit_config);
      } else {
        const auto& r = *results[i];
        const auto& tb = r.analysis.bounds;
        int passed = 0, counted = 0;
        if (r.analysis.outcome) {
          for (const auto& c : r.analysis.outcome->consistency) {
            if (c.skipped) continue;
            ++counted;
            passed += c.pass;
          }
        }
        row.insert(row.end(), {r.status, detail::csv_quote(r.classification), r.consistent ? "true" : "false",
                               r.blowup_time ? io::fmt(*r.blowup_time) : "", io::fmt(r.t_end),
                               tb.t_super ? io::fmt(*tb.t_super) : "", tb.t_star ? io::fmt(*tb.t_star) : "",
                               std::to_string(passed), std::to_string(counted)});
        if (r.exit_code == exit_inconsistent) code = exit_inconsistent;
        else if (r.exit_code == exit_aborted && code == exit_ok) code = exit_aborted;
      }
      w.row_strings(row);
    }
  }
  // phase diagram: first swept key against the second, or against the end time
  io::Figure f;
  f.title = "phase diagram";
  f.x_label = ranges[0].first;
  f.y_label = ranges.size() > 1 ? ranges[1].first : "blowup time / end time";
  io::Series blow{"blowup", {}, {}, io::palette()[3]}, glob{"global", {}, {}, io::palette()[0]},
      other{"aborted/error", {}, {}, io::palette()[7]};
  for (auto* s : {&blow, &glob, &other}) s->points = true;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double x = values[i][0];
    double y = ranges.size() > 1 ? values[i][1] : 0.0;
    io::Series* s = &other;
    if (results[i] && results[i]->status == "blowup") s = &blow;
    else if (results[i] && results[i]->status == "completed") s = &glob;
    if (ranges.size() == 1 && results[i]) y = results[i]->blowup_time.value_or(results[i]->t_end);
    s->x.push_back(x);
    s->y.push_back(y);
  }
  f.series = {blow, glob, other};
  io::write_svg(dir / "phase.svg", f);
  log << "phase table: " << (dir / "phase.csv").string() << '\n';
  return code;
}

inline int cmd_plot(const fs::path& run_dir, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
  if (!fs::is_directory(run_dir)) {
    err << "error: run directory " << run_dir.string() << " does not exist\n";
    return exit_config;
  }
  try {
    for (const auto& p : io::plot_run(run_dir, err)) log << "wrote " << p.string() << '\n';
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_config;
  }
  return exit_ok;
}

}  // namespace ealign::cli
