#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "ealign/cli/acceptance.hpp"
#include "ealign/cli/commands.hpp"

namespace {

int cmd_validate(const std::string& out, bool fast, bool inject, std::uint64_t seed) {
  namespace fs = std::filesystem;
  ealign::acceptance::Options opt;
  opt.fast = fast;
  opt.inject_sign_error = inject;
  opt.seed = seed;
  opt.log = &std::cout;
  const auto results = ealign::acceptance::run(opt);
  nlohmann::json j = nlohmann::json::array();
  int passed = 0;
  for (const auto& r : results) {
    j.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail}, {"seconds", r.seconds}});
    passed += r.pass;
  }
  std::cout << passed << "/" << results.size() << " criteria passed" << (fast ? " (fast mode)" : "") << '\n';
  try {
    ealign::cli::ensure_dir(out);
    std::ofstream(fs::path(out) / "acceptance.json")
        << nlohmann::json{{"fast", fast}, {"seed", seed}, {"sign_error_injected", inject}, {"criteria", j}}.dump(2)
        << '\n';
    std::ofstream txt(fs::path(out) / "acceptance.txt");
    for (const auto& r : results) {
      txt << "criterion " << r.id << ": " << (r.pass ? "PASS" : "FAIL") << " - " << r.name << " - " << r.detail << '\n';
    }
  } catch (const ealign::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ealign::cli::exit_config;
  }
  return passed == static_cast<int>(results.size()) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Euler-alignment with weakly singular kernels: runs, sweeps, acceptance, plots"};
  app.require_subcommand(1);
  std::string config, out, validate_out = "validate";
  std::optional<int> resolution;
  int workers = std::max(1u, std::thread::hardware_concurrency());
  bool fast = false, inject = false;
  std::uint64_t seed = 20240611;

  auto* run = app.add_subcommand("run", "run one configured scenario");
  run->add_option("--config", config, "config file (YAML or JSON)")->required();
  run->add_option("--out", out, "output directory (default: output.directory)");
  run->add_option("--resolution", resolution, "override grid.n_cells");

  auto* sweep = app.add_subcommand("sweep", "run the Cartesian product of sweep.ranges");
  sweep->add_option("--config", config, "config file with a sweep section")->required();
  sweep->add_option("--out", out, "output directory");
  sweep->add_option("--resolution", resolution, "override grid.n_cells");
  sweep->add_option("--workers", workers, "parallel runs")->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate", "run the acceptance suite");
  validate->add_option("--out", validate_out, "report directory (default: validate)");
  validate->add_flag("--fast", fast, "reduced resolution, looser tolerances");
  validate->add_flag("--inject-sign-error", inject, "negative control: flip the sign of the convolution weights");
  validate->add_option("--seed", seed, "seed for the random densities");

  auto* plot = app.add_subcommand("plot", "write SVG figures for a run directory");
  plot->add_option("--out", out, "run directory")->required();

  CLI11_PARSE(app, argc, argv);
  auto out_opt = [&]() -> std::optional<std::filesystem::path> {
    if (out.empty()) return std::nullopt;
    return std::filesystem::path(out);
  };
  if (*run) return ealign::cli::cmd_run(config, out_opt(), resolution);
  if (*sweep) return ealign::cli::cmd_sweep(config, out_opt(), resolution, workers);
  if (*validate) return cmd_validate(validate_out, fast, inject, seed);
  if (*plot) return ealign::cli::cmd_plot(out);
  return 1;
}
