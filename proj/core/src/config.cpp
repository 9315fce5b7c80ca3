#include "amopt/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "amopt/errors.hpp"

namespace amopt {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct RawConfig {
  struct Entry {
    std::string value;
    int line;
    mutable bool used = false;
  };
  std::map<std::string, Entry> entries;  // "section.key"
  std::string origin;

  const Entry* find(const std::string& section, const std::string& key) const {
    auto it = entries.find(section + "." + key);
    if (it == entries.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }
};

double parse_double(const RawConfig& raw, const RawConfig::Entry& e, const std::string& name) {
  try {
    size_t pos = 0;
    const double v = std::stod(e.value, &pos);
    if (pos != e.value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(raw.origin + ":" + std::to_string(e.line) + ": field '" + name +
                      "' is not a number: '" + e.value + "'");
  }
}

int parse_int(const RawConfig& raw, const RawConfig::Entry& e, const std::string& name) {
  const double v = parse_double(raw, e, name);
  if (v != std::floor(v))
    throw ConfigError(raw.origin + ":" + std::to_string(e.line) + ": field '" + name +
                      "' must be an integer");
  return static_cast<int>(v);
}

void read(const RawConfig& raw, const std::string& section, const std::string& key, double& out) {
  if (const auto* e = raw.find(section, key)) out = parse_double(raw, *e, section + "." + key);
}
void read(const RawConfig& raw, const std::string& section, const std::string& key, int& out) {
  if (const auto* e = raw.find(section, key)) out = parse_int(raw, *e, section + "." + key);
}
void read(const RawConfig& raw, const std::string& section, const std::string& key,
          std::string& out) {
  if (const auto* e = raw.find(section, key)) out = e->value;
}
void read(const RawConfig& raw, const std::string& section, const std::string& key,
          unsigned long long& out) {
  if (const auto* e = raw.find(section, key)) {
    const double v = parse_double(raw, *e, section + "." + key);
    if (v < 0 || v != std::floor(v))
      throw ConfigError(raw.origin + ": field '" + section + "." + key +
                        "' must be a non-negative integer");
    out = static_cast<unsigned long long>(v);
  }
}

RawConfig tokenize(const std::string& text, const std::string& origin) {
  RawConfig raw;
  raw.origin = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    if (section.empty())
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": key outside any section");
    const std::string id = section + "." + key;
    if (raw.entries.count(id))
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + id + "'");
    raw.entries[id] = {value, line_no};
  }
  return raw;
}

}  // namespace

void RunConfig::validate() const {
  material.validate();
  build.validate();
  if (objective == ObjectiveVariant::StepEdge &&
      build.geometry != BuildPlan::Geometry::RectangleWithHole)
    throw ConfigError("objective: step_edge requires the quarter_hole geometry");
  if (characteristic_length < 0.0)
    throw ConfigError("objective: characteristic_length must be non-negative");
  if (!(gd.h_min < gd.h_max)) throw ConfigError("optimizer: need h_min < h_max");
  if (gd.h0 < gd.h_min || gd.h0 > gd.h_max)
    throw ConfigError("optimizer: h0 must lie inside [h_min, h_max]");
  if (!(free_opt.dt_min < free_opt.dt_max)) throw ConfigError("optimizer: need dt_min < dt_max");
  if (free_opt.layers_min >= free_opt.layers_max)
    throw ConfigError("optimizer: need layers_min < layers_max");
  if (free_opt.initial_design != 4 && free_opt.initial_design != 9)
    throw ConfigError("optimizer: initial_design must be 4 or 9");
  if (output.snapshot_interval < 0)
    throw ConfigError("output: snapshot_interval must be non-negative");
  for (double h : gradient_check.h_values)
    if (h <= 0.0) throw ConfigError("gradient_check: h values must be positive");
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  const RawConfig raw = tokenize(text, origin);
  RunConfig cfg;

  // Material block arrives in customary units and converts to N-mm-s-K here.
  double rho_kg_mm3 = 1.05e-6;
  double k_w_mk = 0.25;
  double specific_heat = 2000.0;  // J/(kg K)
  double c_bar_j_m3k = -1.0;      // optional direct override, J/(m^3 K)
  double h_w_m2k = 40.0;
  read(raw, "material", "a", cfg.material.a);
  read(raw, "material", "b", cfg.material.b);
  read(raw, "material", "theta_0m", cfg.material.theta_0m);
  read(raw, "material", "E_0m", cfg.material.E_0m);
  read(raw, "material", "nu", cfg.material.nu);
  read(raw, "material", "alpha", cfg.material.alpha);
  read(raw, "material", "rho_0", rho_kg_mm3);
  read(raw, "material", "k_cond", k_w_mk);
  read(raw, "material", "specific_heat", specific_heat);
  read(raw, "material", "c_bar", c_bar_j_m3k);
  read(raw, "material", "h_conv", h_w_m2k);
  read(raw, "material", "theta_inf", cfg.material.theta_inf);
  read(raw, "material", "theta_deposit", cfg.material.theta_deposit);
  cfg.material.rho_0 = rho_kg_mm3 * 1e-3;  // kg/mm^3 -> N s^2/mm per mm^3
  cfg.material.k_cond = k_w_mk;            // W/(m K) == mJ/(s mm K)
  cfg.material.c_bar = c_bar_j_m3k > 0.0
                           ? c_bar_j_m3k * 1e-6           // J/(m^3 K) -> mJ/(mm^3 K)
                           : specific_heat * rho_kg_mm3 * 1e3;  // via rho, J/(mm^3 K) -> mJ
  cfg.material.h_conv = convection_to_internal(h_w_m2k);

  read(raw, "build", "width", cfg.build.width);
  read(raw, "build", "height", cfg.build.height);
  read(raw, "build", "nx", cfg.build.nx);
  read(raw, "build", "n_layers", cfg.build.n_layers);
  read(raw, "build", "rows_per_layer", cfg.build.rows_per_layer);
  read(raw, "build", "hole_radius", cfg.build.hole_radius);
  read(raw, "build", "dt_element", cfg.build.dt_element);
  read(raw, "build", "dwell_factor", cfg.build.dwell_factor);
  read(raw, "build", "cooldown", cfg.build.cooldown);
  std::string geometry = "rectangle";
  read(raw, "build", "geometry", geometry);
  if (geometry == "rectangle") {
    cfg.build.geometry = BuildPlan::Geometry::Rectangle;
  } else if (geometry == "quarter_hole") {
    cfg.build.geometry = BuildPlan::Geometry::RectangleWithHole;
  } else {
    throw ConfigError(origin + ": build.geometry must be 'rectangle' or 'quarter_hole'");
  }

  std::string variant =
      cfg.build.geometry == BuildPlan::Geometry::RectangleWithHole ? "step_edge" : "top_edge";
  read(raw, "objective", "variant", variant);
  if (variant == "top_edge") {
    cfg.objective = ObjectiveVariant::TopEdge;
  } else if (variant == "step_edge") {
    cfg.objective = ObjectiveVariant::StepEdge;
  } else {
    throw ConfigError(origin + ": objective.variant must be 'top_edge' or 'step_edge'");
  }
  read(raw, "objective", "characteristic_length", cfg.characteristic_length);

  std::string algorithm = "gd";
  read(raw, "optimizer", "algorithm", algorithm);
  if (algorithm == "gd") {
    cfg.algorithm = Algorithm::GradientDescent;
  } else if (algorithm == "lv") {
    cfg.algorithm = Algorithm::LocalVariations;
  } else if (algorithm == "bo") {
    cfg.algorithm = Algorithm::Bayesian;
  } else {
    throw ConfigError(origin + ": optimizer.algorithm must be one of gd, lv, bo");
  }
  read(raw, "optimizer", "h0", cfg.gd.h0);
  read(raw, "optimizer", "h_min", cfg.gd.h_min);
  read(raw, "optimizer", "h_max", cfg.gd.h_max);
  read(raw, "optimizer", "alpha0", cfg.gd.alpha0);
  read(raw, "optimizer", "rho", cfg.gd.rho);
  read(raw, "optimizer", "eta", cfg.gd.eta);
  read(raw, "optimizer", "max_iterations", cfg.gd.max_iterations);
  read(raw, "optimizer", "step_tol", cfg.gd.step_tol);
  read(raw, "optimizer", "dt0", cfg.free_opt.dt0);
  read(raw, "optimizer", "layers0", cfg.free_opt.layers0);
  read(raw, "optimizer", "dt_min", cfg.free_opt.dt_min);
  read(raw, "optimizer", "dt_max", cfg.free_opt.dt_max);
  read(raw, "optimizer", "layers_min", cfg.free_opt.layers_min);
  read(raw, "optimizer", "layers_max", cfg.free_opt.layers_max);
  read(raw, "optimizer", "tau0_dt", cfg.free_opt.tau0_dt);
  read(raw, "optimizer", "tau0_layers", cfg.free_opt.tau0_layers);
  read(raw, "optimizer", "tau_min_dt", cfg.free_opt.tau_min_dt);
  read(raw, "optimizer", "tau_min_layers", cfg.free_opt.tau_min_layers);
  read(raw, "optimizer", "initial_design", cfg.free_opt.initial_design);
  read(raw, "optimizer", "xi", cfg.free_opt.xi);
  read(raw, "optimizer", "max_proposals", cfg.free_opt.max_proposals);
  read(raw, "optimizer", "bo_tol", cfg.free_opt.bo_tol);

  read(raw, "output", "dir", cfg.output.dir);
  read(raw, "output", "snapshot_interval", cfg.output.snapshot_interval);
  read(raw, "output", "seed", cfg.output.seed);

  if (const auto* e = raw.find("gradient_check", "h_values")) {
    cfg.gradient_check.h_values.clear();
    std::istringstream vs(e->value);
    std::string tok;
    while (std::getline(vs, tok, ',')) {
      tok = trim(tok);
      if (tok.empty()) continue;
      try {
        cfg.gradient_check.h_values.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw ConfigError(origin + ":" + std::to_string(e->line) +
                          ": gradient_check.h_values must be a comma-separated number list");
      }
    }
    if (cfg.gradient_check.h_values.empty())
      throw ConfigError(origin + ": gradient_check.h_values is empty");
  }
  read(raw, "gradient_check", "fd_step_rel", cfg.gradient_check.fd_step_rel);
  read(raw, "gradient_check", "threshold", cfg.gradient_check.threshold);

  for (const auto& [id, entry] : raw.entries)
    if (!entry.used)
      throw ConfigError(origin + ":" + std::to_string(entry.line) + ": unknown key '" + id + "'");

  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

}  // namespace amopt
