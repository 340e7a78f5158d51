// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the canopy authors

#include "canopy/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace canopy {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

struct Entry {
  std::string value;
  int line = 0;
};

using Section = std::map<std::string, Entry>;

[[noreturn]] void fail(const std::string& source, int line, const std::string& message) {
  throw std::runtime_error(source + ":" + std::to_string(line) + ": " + message);
}

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"foliage", {"v_target", "sigma", "n_subdiv", "rho", "area"}},
      {"material", {"eps_r", "kappa", "mu_s"}},
      {"geometry",
       {"tx", "rx", "crown_center", "ground_enabled", "ground_height", "ground_eps_r",
        "ground_kappa", "ground_mu_s"}},
      {"channel", {"carrier_hz", "bandwidth_hz", "oversample", "noise_gate_db"}},
      {"tracer", {"candidate_rays", "max_depth", "rx_sphere_growth", "enable_diffuse", "threads"}},
      {"sweep", {"axis", "values", "realizations", "seed", "bins"}},
  };
  return keys;
}

class ParsedFile {
 public:
  ParsedFile(std::string_view text, std::string source) : source_(std::move(source)) {
    std::string line;
    std::istringstream in{std::string(text)};
    int line_no = 0;
    std::string section;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string stripped = trim(line);
      if (stripped.empty() || stripped[0] == '#' || stripped[0] == ';') continue;
      if (stripped.front() == '[') {
        if (stripped.back() != ']') fail(source_, line_no, "malformed section header");
        section = trim(stripped.substr(1, stripped.size() - 2));
        if (!known_keys().count(section)) {
          fail(source_, line_no, "unknown section [" + section + "]");
        }
        continue;
      }
      const auto eq = stripped.find('=');
      if (eq == std::string::npos) fail(source_, line_no, "expected key = value");
      if (section.empty()) fail(source_, line_no, "key outside of any section");
      const std::string key = trim(stripped.substr(0, eq));
      const std::string value = trim(stripped.substr(eq + 1));
      if (key.empty()) fail(source_, line_no, "empty key");
      if (!known_keys().at(section).count(key)) {
        fail(source_, line_no, "unknown key '" + key + "' in [" + section + "]");
      }
      auto [it, inserted] = sections_[section].emplace(key, Entry{value, line_no});
      if (!inserted) {
        fail(source_, line_no,
             "duplicate key '" + key + "' in [" + section + "] (first at line " +
                 std::to_string(it->second.line) + ")");
      }
    }
  }

  const Entry* find(const std::string& section, const std::string& key) const {
    const auto sit = sections_.find(section);
    if (sit == sections_.end()) return nullptr;
    const auto kit = sit->second.find(key);
    return kit == sit->second.end() ? nullptr : &kit->second;
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::map<std::string, Section> sections_;
};

double parse_double(const ParsedFile& file, const Entry& entry, const std::string& what) {
  const std::string token = trim(entry.value);
  char* end = nullptr;
  const double x = std::strtod(token.c_str(), &end);
  if (token.empty() || end != token.c_str() + token.size()) {
    fail(file.source(), entry.line, what + ": expected a number, got '" + entry.value + "'");
  }
  return x;
}

long parse_long(const ParsedFile& file, const Entry& entry, const std::string& what) {
  const std::string token = trim(entry.value);
  char* end = nullptr;
  const long x = std::strtol(token.c_str(), &end, 10);
  if (token.empty() || end != token.c_str() + token.size()) {
    fail(file.source(), entry.line, what + ": expected an integer, got '" + entry.value + "'");
  }
  return x;
}

std::uint64_t parse_u64(const ParsedFile& file, const Entry& entry, const std::string& what) {
  const std::string token = trim(entry.value);
  char* end = nullptr;
  const unsigned long long x = std::strtoull(token.c_str(), &end, 10);
  if (token.empty() || end != token.c_str() + token.size()) {
    fail(file.source(), entry.line,
         what + ": expected an unsigned integer, got '" + entry.value + "'");
  }
  return static_cast<std::uint64_t>(x);
}

bool parse_bool(const ParsedFile& file, const Entry& entry, const std::string& what) {
  const std::string v = trim(entry.value);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(file.source(), entry.line, what + ": expected a boolean, got '" + entry.value + "'");
}

std::vector<double> parse_double_list(const ParsedFile& file, const Entry& entry,
                                      const std::string& what) {
  std::istringstream ss(entry.value);
  std::vector<double> out;
  std::string token;
  while (ss >> token) {
    char* end = nullptr;
    const double x = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size()) {
      fail(file.source(), entry.line, what + ": expected numbers, got '" + token + "'");
    }
    out.push_back(x);
  }
  if (out.empty()) fail(file.source(), entry.line, what + ": empty list");
  return out;
}

Vec3d parse_vec3(const ParsedFile& file, const Entry& entry, const std::string& what) {
  const auto list = parse_double_list(file, entry, what);
  if (list.size() != 3) {
    fail(file.source(), entry.line, what + ": expected three numbers (x y z)");
  }
  return {list[0], list[1], list[2]};
}

template <typename T, typename F>
void assign(const ParsedFile& file, const std::string& section, const std::string& key, T& dest,
            F&& parse) {
  if (const Entry* e = file.find(section, key)) {
    dest = parse(file, *e, "[" + section + "] " + key);
  }
}

}  // namespace

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kNone: return "none";
    case SweepAxis::kRho: return "rho";
    case SweepAxis::kVTarget: return "v_target";
  }
  return "unknown";
}

void ChannelConfig::validate() const {
  if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("ChannelConfig: bandwidth_hz must be > 0");
  if (oversample < 2) throw std::invalid_argument("ChannelConfig: oversample must be >= 2");
  if (!(noise_gate_db > 0.0))
    throw std::invalid_argument("ChannelConfig: noise_gate_db must be > 0");
}

void SweepConfig::validate() const {
  foliage.validate();
  material.validate();
  channel.validate();
  tracer.validate();
  if (!(carrier_hz > 0.0)) throw std::invalid_argument("SweepConfig: carrier_hz must be > 0");
  if ((geometry.tx - geometry.rx).norm() <= 0.0)
    throw std::invalid_argument("SweepConfig: tx must differ from rx");
  if (geometry.ground.enabled) geometry.ground.material.validate();
  if (realizations < 1) throw std::invalid_argument("SweepConfig: realizations must be >= 1");
  if (histogram_bins < 1) throw std::invalid_argument("SweepConfig: bins must be >= 1");
  if (axis != SweepAxis::kNone) {
    if (values.empty()) throw std::invalid_argument("SweepConfig: values must be nonempty");
    for (const double v : values) {
      if (axis == SweepAxis::kRho && !(v >= 0.0))
        throw std::invalid_argument("SweepConfig: rho sweep values must be >= 0");
      if (axis == SweepAxis::kVTarget && !(v > 0.0))
        throw std::invalid_argument("SweepConfig: v_target sweep values must be > 0");
    }
  }
}

std::vector<double> SweepConfig::sweep_points() const {
  if (axis == SweepAxis::kNone) return {0.0};
  return values;
}

SweepConfig parse_config_text(std::string_view text, const std::string& source_name) {
  const ParsedFile file(text, source_name);
  SweepConfig cfg;

  assign(file, "foliage", "v_target", cfg.foliage.v_target, parse_double);
  assign(file, "foliage", "sigma", cfg.foliage.sigma, parse_double);
  assign(file, "foliage", "n_subdiv", cfg.foliage.n_subdiv,
         [](const ParsedFile& f, const Entry& e, const std::string& w) {
           return static_cast<int>(parse_long(f, e, w));
         });
  assign(file, "foliage", "rho", cfg.foliage.rho, parse_double);
  assign(file, "foliage", "area", cfg.foliage.area, parse_double);

  assign(file, "material", "eps_r", cfg.material.eps_r, parse_double);
  assign(file, "material", "kappa", cfg.material.kappa, parse_double);
  assign(file, "material", "mu_s", cfg.material.mu_s, parse_double);

  assign(file, "geometry", "tx", cfg.geometry.tx, parse_vec3);
  assign(file, "geometry", "rx", cfg.geometry.rx, parse_vec3);
  if (const Entry* e = file.find("geometry", "crown_center")) {
    cfg.geometry.crown_center = parse_vec3(file, *e, "[geometry] crown_center");
  }
  assign(file, "geometry", "ground_enabled", cfg.geometry.ground.enabled, parse_bool);
  assign(file, "geometry", "ground_height", cfg.geometry.ground.height, parse_double);
  assign(file, "geometry", "ground_eps_r", cfg.geometry.ground.material.eps_r, parse_double);
  assign(file, "geometry", "ground_kappa", cfg.geometry.ground.material.kappa, parse_double);
  assign(file, "geometry", "ground_mu_s", cfg.geometry.ground.material.mu_s, parse_double);

  assign(file, "channel", "carrier_hz", cfg.carrier_hz, parse_double);
  assign(file, "channel", "bandwidth_hz", cfg.channel.bandwidth_hz, parse_double);
  assign(file, "channel", "oversample", cfg.channel.oversample,
         [](const ParsedFile& f, const Entry& e, const std::string& w) {
           return static_cast<int>(parse_long(f, e, w));
         });
  assign(file, "channel", "noise_gate_db", cfg.channel.noise_gate_db, parse_double);

  assign(file, "tracer", "candidate_rays", cfg.tracer.n_candidate_rays, parse_long);
  assign(file, "tracer", "max_depth", cfg.tracer.max_depth,
         [](const ParsedFile& f, const Entry& e, const std::string& w) {
           return static_cast<int>(parse_long(f, e, w));
         });
  assign(file, "tracer", "rx_sphere_growth", cfg.tracer.rx_sphere_growth, parse_double);
  assign(file, "tracer", "enable_diffuse", cfg.tracer.enable_diffuse, parse_bool);
  assign(file, "tracer", "threads", cfg.tracer.n_threads,
         [](const ParsedFile& f, const Entry& e, const std::string& w) {
           return static_cast<int>(parse_long(f, e, w));
         });

  if (const Entry* e = file.find("sweep", "axis")) {
    const std::string v = trim(e->value);
    if (v == "none") cfg.axis = SweepAxis::kNone;
    else if (v == "rho") cfg.axis = SweepAxis::kRho;
    else if (v == "v_target") cfg.axis = SweepAxis::kVTarget;
    else fail(source_name, e->line, "[sweep] axis: expected none|rho|v_target, got '" + v + "'");
  }
  if (const Entry* e = file.find("sweep", "values")) {
    cfg.values = parse_double_list(file, *e, "[sweep] values");
  }
  assign(file, "sweep", "realizations", cfg.realizations,
         [](const ParsedFile& f, const Entry& e, const std::string& w) {
           return static_cast<int>(parse_long(f, e, w));
         });
  assign(file, "sweep", "seed", cfg.seed, parse_u64);
  assign(file, "sweep", "bins", cfg.histogram_bins,
         [](const ParsedFile& f, const Entry& e, const std::string& w) {
           return static_cast<int>(parse_long(f, e, w));
         });

  cfg.validate();
  return cfg;
}

SweepConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.filename().string());
}

std::string config_reference() {
  return R"(Config file reference (all keys optional; defaults shown):

[foliage]
v_target = 200          # target crown volume, m^3 (> 0)
sigma = 0.1             # envelope perturbation std-dev, pre-scale units (>= 0)
n_subdiv = 2            # icosphere subdivisions (0..8)
rho = 0.125             # scatterer density, triangles/m^3 (>= 0)
area = 2                # scatterer triangle area, m^2 (> 0)

[material]
eps_r = 17              # relative permittivity (>= 1)
kappa = 0.05            # conductivity, S/m (>= 0)
mu_s = 0.5              # scattering coefficient (0..1)

[geometry]
tx = 0 0 1.5            # transmitter position, m
rx = 30 0 1.5           # receiver position, m
crown_center = 15 0 1.5 # crown center; defaults to the TX-RX midpoint
ground_enabled = false
ground_height = 0
ground_eps_r = 5
ground_kappa = 0.1
ground_mu_s = 0.3

[channel]
carrier_hz = 80e9
bandwidth_hz = 2e9
oversample = 8          # CIR grid points per 1/bandwidth (>= 2)
noise_gate_db = 30      # PDP gate below peak for the delay-spread estimate

[tracer]
candidate_rays = 100000
max_depth = 8           # bounces per candidate ray (1..25)
rx_sphere_growth = 1.0
enable_diffuse = true
threads = 1

[sweep]
axis = none             # none | rho | v_target
values = 0 0.25 0.5     # swept values (required for axis != none)
realizations = 50
seed = 42
bins = 20               # histogram bins for the aggregate heatmaps
)";
}

}  // namespace canopy
