#include "cli/experiment.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace ehaoi::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_real(std::string_view key, std::string_view text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ConfigError(std::string(key) + ": expected a real number, got '" + std::string(text) + "'");
  }
  return v;
}

long long parse_integer(std::string_view key, std::string_view text) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError(std::string(key) + ": expected an integer, got '" + std::string(text) + "'");
  }
  return v;
}

int parse_int(std::string_view key, std::string_view text) {
  const long long v = parse_integer(key, text);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw ConfigError(std::string(key) + ": value out of range");
  }
  return static_cast<int>(v);
}

// Resolves one row of the source matrix from the optional stay / leave entries.
void resolve_row(std::array<double, 2>& row, int z, std::optional<double> stay, std::optional<double> leave) {
  const int other = 1 - z;
  const std::string stay_key = "model.p" + std::to_string(z) + std::to_string(z);
  const std::string leave_key = "model.p" + std::to_string(z) + std::to_string(other);
  if (stay && leave) {
    if (std::abs(*stay + *leave - 1.0) > 1e-12) {
      throw ConfigError(stay_key + " + " + leave_key + " must equal 1");
    }
    row[z] = *stay;
    row[other] = *leave;
  } else if (leave) {
    row[other] = *leave;
    row[z] = 1.0 - *leave;
  } else if (stay) {
    row[z] = *stay;
    row[other] = 1.0 - *stay;
  }
}

}  // namespace

ExperimentSpec parse_experiment(std::string_view text) {
  ExperimentSpec spec;
  std::map<std::string, std::string, std::less<>> entries;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find_first_of("#;"); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key(trim(line.substr(0, eq)));
    if (!section.empty()) key = section + "." + key;
    const std::string value(trim(line.substr(eq + 1)));
    if (!entries.emplace(key, value).second) throw ConfigError("duplicate key " + key);
  }

  ScenarioConfig& m = spec.base;
  std::optional<double> p00, p01, p10, p11;
  for (const auto& [key, value] : entries) {
    if (key == "model.p_e") m.p_e = parse_real(key, value);
    else if (key == "model.p_s") m.p_s = parse_real(key, value);
    else if (key == "model.p00") p00 = parse_real(key, value);
    else if (key == "model.p01") p01 = parse_real(key, value);
    else if (key == "model.p10") p10 = parse_real(key, value);
    else if (key == "model.p11") p11 = parse_real(key, value);
    else if (key == "model.e_max") m.e_max = parse_int(key, value);
    else if (key == "model.d_max0") m.d_max0 = parse_int(key, value);
    else if (key == "model.d_max1") m.d_max1 = parse_int(key, value);
    else if (key == "model.gamma") m.gamma = parse_real(key, value);
    else if (key == "cost.f_weight") m.cost_shape.f_weight = parse_real(key, value);
    else if (key == "cost.f_exponent") m.cost_shape.f_exponent = parse_real(key, value);
    else if (key == "cost.h_weight") m.cost_shape.h_weight = parse_real(key, value);
    else if (key == "cost.h_exponent") m.cost_shape.h_exponent = parse_real(key, value);
    else if (key == "solver.tol") spec.solver.tolerance = parse_real(key, value);
    else if (key == "solver.max_iter") spec.solver.max_iterations = parse_integer(key, value);
    else if (key == "mc.episodes") spec.mc.episodes = parse_integer(key, value);
    else if (key == "mc.horizon") spec.mc.horizon = parse_int(key, value);
    else if (key == "mc.seed") spec.mc.seed = static_cast<std::uint64_t>(parse_integer(key, value));
    else if (key == "init.z") spec.s0.z = parse_int(key, value);
    else if (key == "init.z_d") spec.s0.z_d = parse_int(key, value);
    else if (key == "init.e") spec.s0.e = parse_int(key, value);
    else if (key == "init.d0") spec.s0.d0 = parse_int(key, value);
    else if (key == "init.d1") spec.s0.d1 = parse_int(key, value);
    else throw ConfigError("unknown key " + key);
  }
  resolve_row(m.p_z[0], 0, p00, p01);
  resolve_row(m.p_z[1], 1, p11, p10);

  if (!(spec.solver.tolerance > 0.0)) throw ConfigError("solver.tol must be positive");
  if (spec.solver.max_iterations < 1) throw ConfigError("solver.max_iter must be >= 1");
  if (spec.mc.episodes < 1) throw ConfigError("mc.episodes must be >= 1");
  if (spec.mc.horizon < 0) throw ConfigError("mc.horizon must be >= 0 (0 = automatic)");
  spec.base = validate_config(spec.base);
  require_initial_state(spec.base, spec.s0);
  return spec;
}

ExperimentSpec load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_experiment(text.str());
}

SweepAxis parse_axis(std::string_view spec) {
  const auto eq = spec.find('=');
  if (eq == std::string_view::npos) throw ConfigError("axis spec must look like name=values");
  SweepAxis axis;
  axis.name = std::string(trim(spec.substr(0, eq)));
  if (axis.name != "p_e" && axis.name != "p_s" && axis.name != "e_max" && axis.name != "p01" && axis.name != "p10") {
    throw ConfigError("unknown sweep axis '" + axis.name + "' (expected p_e, p_s, e_max, p01 or p10)");
  }
  const std::string_view values = trim(spec.substr(eq + 1));
  if (values.find(':') != std::string_view::npos) {
    std::vector<double> parts;
    std::string_view rest = values;
    while (true) {
      const auto c = rest.find(':');
      parts.push_back(parse_real(axis.name, trim(rest.substr(0, c))));
      if (c == std::string_view::npos) break;
      rest = rest.substr(c + 1);
    }
    if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0]) {
      throw ConfigError("axis range must be start:stop:step with step > 0 and stop >= start");
    }
    const long count = std::lround(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9)) + 1;
    for (long i = 0; i < count; ++i) {
      // Rounded to 12 decimals so that 0.1:0.9:0.1 yields the literal grid.
      const double v = parts[0] + static_cast<double>(i) * parts[2];
      axis.values.push_back(std::round(v * 1e12) / 1e12);
    }
  } else {
    std::string_view rest = values;
    while (!rest.empty()) {
      const auto c = rest.find(',');
      axis.values.push_back(parse_real(axis.name, trim(rest.substr(0, c))));
      if (c == std::string_view::npos) break;
      rest = rest.substr(c + 1);
    }
  }
  if (axis.values.empty()) throw ConfigError("axis '" + axis.name + "' has no values");
  if (axis.name == "e_max") {
    for (double v : axis.values) {
      if (v != std::floor(v)) throw ConfigError("e_max axis values must be integers");
    }
  }
  return axis;
}

void apply_axis_value(ScenarioConfig& cfg, const std::string& axis, double value) {
  if (axis == "p_e") cfg.p_e = value;
  else if (axis == "p_s") cfg.p_s = value;
  else if (axis == "e_max") cfg.e_max = static_cast<int>(value);
  else if (axis == "p01") cfg.p_z[0] = {1.0 - value, value};
  else if (axis == "p10") cfg.p_z[1] = {value, 1.0 - value};
  else throw ConfigError("unknown sweep axis '" + axis + "'");
}

void require_initial_state(const ScenarioConfig& cfg, const SystemState& s0) {
  if (!StateSpace(cfg).contains(s0)) {
    throw ConfigError("initial state " + to_string(s0) + " is outside the state space");
  }
}

std::vector<SweepPoint> expand_sweep(const ExperimentSpec& spec) {
  std::vector<SweepPoint> points{{{}, spec.base}};
  for (const SweepAxis& axis : spec.axes) {
    std::vector<SweepPoint> next;
    next.reserve(points.size() * axis.values.size());
    for (const SweepPoint& p : points) {
      for (double v : axis.values) {
        SweepPoint q = p;
        q.coordinates.push_back(v);
        apply_axis_value(q.config, axis.name, v);
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }
  for (SweepPoint& p : points) {
    p.config = validate_config(p.config);
    require_initial_state(p.config, spec.s0);
  }
  return points;
}

}  // namespace ehaoi::cli
