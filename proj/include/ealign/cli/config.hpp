#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>
#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include "ealign/error.hpp"
#include "ealign/scenarios.hpp"
#include "ealign/solver.hpp"

namespace ealign::cli {

using nlohmann::json;

inline constexpr const char* tool_version = "0.1.0";

struct OutputConfig {
  std::string directory = "out";
  double cadence = 0.1;  ///< snapshot interval
  std::set<std::string> formats{"csv", "json", "svg"};
};

struct SweepConfig {
  std::vector<std::pair<std::string, std::vector<double>>> ranges;  ///< dotted key -> values
  int cap = 256;
};

struct RunConfig {
  ScenarioKind kind = ScenarioKind::subcritical;
  Params params;
  KernelSpec kernel;
  GridSpec grid;
  SolverConfig solver;
  OutputConfig output;
  std::uint64_t seed = 0;
  std::optional<SweepConfig> sweep;
  json canonical;  ///< the config as parsed, overrides applied
};

namespace detail {

inline json yaml_to_json(const YAML::Node& n) {
  switch (n.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined: return nullptr;
    case YAML::NodeType::Sequence: {
      json a = json::array();
      for (const auto& c : n) a.push_back(yaml_to_json(c));
      return a;
    }
    case YAML::NodeType::Map: {
      json o = json::object();
      for (const auto& kv : n) {
        const auto key = kv.first.as<std::string>();
        if (o.contains(key)) throw ConfigError("duplicate key '" + key + "'");
        o[key] = yaml_to_json(kv.second);
      }
      return o;
    }
    case YAML::NodeType::Scalar: {
      const auto& s = n.Scalar();
      if (n.Tag() == "!") return s;  // quoted
      if (s == "true" || s == "false") return s == "true";
      std::size_t used = 0;
      try {
        const long long i = std::stoll(s, &used);
        if (used == s.size()) return i;
      } catch (const std::exception&) {
      }
      try {
        const double d = std::stod(s, &used);
        if (used == s.size()) return d;
      } catch (const std::exception&) {
      }
      return s;
    }
  }
  return nullptr;
}

/// Strict view of one config section: every key must be consumed.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError("section '" + name_ + "' must be a mapping");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key, double fallback) {
    if (!j_.contains(key)) return fallback;
    return number(key);
  }
  double number(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_number()) throw ConfigError(path(key) + ": expected a number");
    return v.get<double>();
  }
  int integer(const std::string& key, int fallback) {
    if (!j_.contains(key)) return fallback;
    const auto& v = at(key);
    if (!v.is_number_integer()) throw ConfigError(path(key) + ": expected an integer");
    return v.get<int>();
  }
  std::string text(const std::string& key, const std::string& fallback) {
    if (!j_.contains(key)) return fallback;
    return text(key);
  }
  std::string text(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_string()) throw ConfigError(path(key) + ": expected a string");
    return v.get<std::string>();
  }
  const json& raw(const std::string& key) { return at(key); }

  /// Remaining keys, all of which must be numeric.
  Params numeric_rest() {
    Params p;
    for (const auto& [k, v] : j_.items()) {
      if (used_.count(k)) continue;
      if (!v.is_number()) throw ConfigError(path(k) + ": expected a number");
      p[k] = v.get<double>();
      used_.insert(k);
    }
    return p;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) throw ConfigError("unknown key '" + path(k) + "'");
    }
  }

  std::string path(const std::string& key) const { return name_ + "." + key; }

 private:
  const json& at(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError("missing key '" + path(key) + "'");
    used_.insert(key);
    return j_.at(key);
  }
  const json& j_;
  std::string name_;
  std::set<std::string> used_;
};

template <class F>
auto rethrow_as_config(const std::string& where, F f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    const std::string what = e.what();
    throw ConfigError(what.rfind(where + ":", 0) == 0 ? what : where + ": " + what);
  }
}

inline KernelSpec parse_kernel(const json& j) {
  Section s(j, "kernel");
  const auto family = rethrow_as_config("kernel.family", [&] { return parse_kernel_family(s.text("family")); });
  KernelSpec k;
  switch (family) {
    case KernelFamily::power_singular: k = KernelSpec::power(0.5); break;
    case KernelFamily::power_with_tail: k = KernelSpec::with_tail(0.5); break;
    case KernelFamily::bounded_lipschitz: k = KernelSpec::bounded(); break;
    case KernelFamily::constant: k = KernelSpec::constant(1.0); break;
  }
  k.s = s.number("s", k.s);
  k.tail_exponent = s.number("p", k.tail_exponent);
  k.offset = s.number("c", k.offset);
  k.lower_bound = s.number("lambda", k.lower_bound);
  k.upper_bound = s.number("Lambda", k.upper_bound);
  s.finish();
  rethrow_as_config("kernel", [&] {
    validate(k);
    return 0;
  });
  return k;
}

inline GridSpec parse_grid(const json& j) {
  Section s(j, "grid");
  GridSpec g;
  g.domain = rethrow_as_config("grid.domain", [&] { return parse_domain_kind(s.text("domain")); });
  g.length = s.number("length", g.length);
  g.x_min = s.number("x_min", g.domain == DomainKind::torus ? -0.5 * g.length : 0.0);
  g.x_max = s.number("x_max", 0.0);
  g.n_cells = s.integer("n_cells", g.n_cells);
  g.horizon = s.number("horizon", g.horizon);
  s.finish();
  if (g.n_cells < Grid1D::min_cells) throw ConfigError("grid.n_cells must be at least " + std::to_string(Grid1D::min_cells));
  if (g.domain == DomainKind::torus && !(g.length > 0.0)) throw ConfigError("grid.length must be positive");
  if (g.domain == DomainKind::torus && j.contains("x_max")) throw ConfigError("grid.x_max applies to windows only");
  return g;
}

inline SolverConfig parse_solver(const json& j) {
  Section s(j, "solver");
  SolverConfig c;
  c.scheme = rethrow_as_config("solver.scheme", [&] { return parse_scheme(s.text("scheme", "both")); });
  c.t_max = s.number("t_max");
  c.cfl = s.number("cfl", c.cfl);
  c.dt_min = s.number("dt_min", c.dt_min);
  c.dt_max = s.number("dt_max", c.dt_max);
  c.g_floor = s.number("g_floor", c.g_floor);
  c.rho_ceiling = s.number("rho_ceiling", c.rho_ceiling);
  c.gap_floor_factor = s.number("gap_floor_factor", c.gap_floor_factor);
  c.n_particles = s.integer("n_particles", c.n_particles);
  c.shock_fraction = s.number("shock_fraction", c.shock_fraction);
  c.mass_fraction = s.number("mass_fraction", c.mass_fraction);
  c.window_margin = s.number("window_margin", c.window_margin);
  c.fit_samples = s.integer("fit_samples", c.fit_samples);
  const auto method = s.text("convolution", "automatic");
  if (method == "automatic") c.convolution.method = ConvolutionMethod::automatic;
  else if (method == "direct") c.convolution.method = ConvolutionMethod::direct;
  else if (method == "fft") c.convolution.method = ConvolutionMethod::fft;
  else throw ConfigError("solver.convolution: expected automatic, direct or fft");
  s.finish();
  return c;
}

inline OutputConfig parse_output(const json& j) {
  Section s(j, "output");
  OutputConfig o;
  o.directory = s.text("directory", o.directory);
  o.cadence = s.number("cadence", o.cadence);
  if (s.has("formats")) {
    const auto& f = s.raw("formats");
    if (!f.is_array()) throw ConfigError("output.formats: expected a list");
    o.formats.clear();
    for (const auto& v : f) {
      if (!v.is_string()) throw ConfigError("output.formats: expected strings");
      const auto name = v.get<std::string>();
      if (name != "csv" && name != "json" && name != "svg") {
        throw ConfigError("output.formats: unknown format '" + name + "' (csv, json, svg)");
      }
      o.formats.insert(name);
    }
  }
  s.finish();
  if (!(o.cadence > 0.0)) throw ConfigError("output.cadence must be positive");
  return o;
}

inline SweepConfig parse_sweep(const json& j) {
  Section s(j, "sweep");
  SweepConfig sw;
  sw.cap = s.integer("cap", sw.cap);
  const auto& r = s.raw("ranges");
  if (!r.is_object() || r.empty()) throw ConfigError("sweep.ranges: expected a non-empty mapping");
  for (const auto& [k, v] : r.items()) {
    if (!v.is_array()) throw ConfigError("sweep.ranges." + k + ": expected a list");
    if (v.empty()) throw ConfigError("sweep.ranges." + k + ": empty range");
    std::vector<double> vals;
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError("sweep.ranges." + k + ": expected numbers");
      vals.push_back(x.get<double>());
    }
    sw.ranges.push_back({k, std::move(vals)});
  }
  s.finish();
  if (sw.cap < 1) throw ConfigError("sweep.cap must be at least 1");
  return sw;
}

}  // namespace detail

/// Parses a config tree.  Every section is strict; physics sections are
/// required.
inline RunConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a mapping");
  for (const auto& [k, v] : j.items()) {
    static const std::set<std::string> known{"scenario", "kernel", "grid", "solver", "output", "seed", "sweep"};
    if (!known.count(k)) throw ConfigError("unknown section '" + k + "'");
  }
  for (const char* need : {"scenario", "kernel", "grid", "solver"}) {
    if (!j.contains(need)) throw ConfigError("missing section '" + std::string(need) + "'");
  }
  RunConfig c;
  c.canonical = j;
  {
    detail::Section s(j["scenario"], "scenario");
    c.kind = detail::rethrow_as_config("scenario.kind", [&] { return parse_scenario_kind(s.text("kind")); });
    c.params = s.numeric_rest();
    s.finish();
  }
  c.kernel = detail::parse_kernel(j["kernel"]);
  c.grid = detail::parse_grid(j["grid"]);
  c.solver = detail::parse_solver(j["solver"]);
  if (j.contains("output")) c.output = detail::parse_output(j["output"]);
  c.solver.snapshot_dt = c.output.cadence;
  detail::rethrow_as_config("solver", [&] {
    c.solver.validate();
    return 0;
  });
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() || j["seed"].get<long long>() < 0) {
      throw ConfigError("seed: expected a non-negative integer");
    }
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("sweep")) c.sweep = detail::parse_sweep(j["sweep"]);
  return c;
}

inline json read_config_tree(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  if (path.extension() == ".json") {
    try {
      return json::parse(buf.str());
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config parse error: ") + e.what());
    }
  }
  try {
    return detail::yaml_to_json(YAML::Load(buf.str()));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
}

/// Sets a dotted key ("kernel.s") in a config tree.
inline void set_key(json& j, const std::string& dotted, const json& value) {
  const auto dot = dotted.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == dotted.size()) {
    throw ConfigError("key '" + dotted + "' must have the form section.key");
  }
  const auto sec = dotted.substr(0, dot);
  if (!j.contains(sec) || !j[sec].is_object()) throw ConfigError("key '" + dotted + "': no section '" + sec + "'");
  j[sec][dotted.substr(dot + 1)] = value;
}

inline RunConfig load_config(const std::filesystem::path& path, std::optional<int> resolution = std::nullopt) {
  auto tree = read_config_tree(path);
  if (resolution) {
    if (!tree.contains("grid") || !tree["grid"].is_object()) throw ConfigError("missing section 'grid'");
    tree["grid"]["n_cells"] = *resolution;
  }
  return parse_config(tree);
}

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("sha256 failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

/// Hash of the canonical tree without the output section, which does not
/// affect the numbers.
inline std::string config_hash(const RunConfig& c) {
  auto j = c.canonical;
  if (j.contains("output")) {
    json o = j["output"];
    o.erase("directory");
    o.erase("formats");
    j["output"] = o;
  }
  return sha256_hex(j.dump());
}

}  // namespace ealign::cli
