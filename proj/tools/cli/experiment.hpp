#pragma once

// Experiment description: flat "key = value" configuration text plus sweep
// axes given on the command line.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ehaoi/model.hpp"
#include "ehaoi/solver.hpp"

namespace ehaoi::cli {

struct McSettings {
  long episodes = 10000;
  int horizon = 0;  ///< 0 selects default_horizon(config)
  std::uint64_t seed = 1;
};

/// One swept parameter. Names: p_e, p_s, e_max, p01, p10.
struct SweepAxis {
  std::string name;
  std::vector<double> values;
};

struct ExperimentSpec {
  ScenarioConfig base;
  SystemState s0{0, 0, 0, 1, 0};
  SolveOptions solver;
  McSettings mc;
  std::vector<SweepAxis> axes;
};

/// Parses configuration text. Recognized keys (dotted, optionally grouped under
/// "[section]" headers): model.p_e, model.p_s, model.p00, model.p01,
/// model.p10, model.p11, model.e_max, model.d_max0, model.d_max1, model.gamma,
/// cost.f_weight, cost.f_exponent, cost.h_weight, cost.h_exponent, solver.tol,
/// solver.max_iter, mc.episodes, mc.horizon, mc.seed, init.z, init.z_d,
/// init.e, init.d0, init.d1. Unset keys keep their defaults. Throws ConfigError.
ExperimentSpec parse_experiment(std::string_view text);
ExperimentSpec load_experiment(const std::filesystem::path& path);

/// "name=v1,v2,..." or "name=start:stop:step" (inclusive, step > 0).
SweepAxis parse_axis(std::string_view spec);

/// Applies one axis value to a config (p01 / p10 also set p00 / p11).
void apply_axis_value(ScenarioConfig& cfg, const std::string& axis, double value);

/// Throws ConfigError if s0 is outside the state space of cfg.
void require_initial_state(const ScenarioConfig& cfg, const SystemState& s0);

struct SweepPoint {
  std::vector<double> coordinates;  ///< one value per axis
  ScenarioConfig config;
};

/// Cartesian product of the axes, first axis slowest. Every point is
/// validated together with s0.
std::vector<SweepPoint> expand_sweep(const ExperimentSpec& spec);

}  // namespace ehaoi::cli
