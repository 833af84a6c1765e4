#include "ehaoi/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ehaoi {

namespace {

constexpr double kRowSumTolerance = 1e-12;

[[noreturn]] void fail(const std::string& what) { throw ConfigError(what); }

void require_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    std::ostringstream os;
    os << name << " must lie in [0, 1], got " << p;
    fail(os.str());
  }
}

}  // namespace

double CostSpec::normal_cost(int aoi) const { return f_weight * std::pow(static_cast<double>(aoi), f_exponent); }

double CostSpec::alarm_cost(int aoi) const { return h_weight * std::pow(static_cast<double>(aoi), h_exponent); }

double ScenarioConfig::max_stage_cost() const {
  // Both shapes are non-decreasing in the AoI, so the caps attain the maximum.
  return std::max(cost_shape.normal_cost(d_max0), cost_shape.alarm_cost(d_max1));
}

ScenarioConfig validate_config(const ScenarioConfig& raw) {
  require_probability(raw.p_e, "p_e");
  require_probability(raw.p_s, "p_s");
  for (int z = 0; z < 2; ++z) {
    for (int zn = 0; zn < 2; ++zn) {
      if (!(raw.p_z[z][zn] >= 0.0 && raw.p_z[z][zn] <= 1.0)) {
        std::ostringstream os;
        os << "p_z[" << z << "][" << zn << "] must lie in [0, 1], got " << raw.p_z[z][zn];
        fail(os.str());
      }
    }
    const double row = raw.p_z[z][0] + raw.p_z[z][1];
    if (std::abs(row - 1.0) > kRowSumTolerance) {
      std::ostringstream os;
      os.precision(17);
      os << "p_z row " << z << " must sum to 1, got " << row;
      fail(os.str());
    }
  }
  if (!(raw.gamma > 0.0 && raw.gamma < 1.0)) {
    std::ostringstream os;
    os << "gamma must lie in (0, 1), got " << raw.gamma;
    fail(os.str());
  }
  if (raw.e_max < 0) fail("e_max must be >= 0, got " + std::to_string(raw.e_max));
  if (raw.d_max0 < 1) fail("d_max0 must be >= 1, got " + std::to_string(raw.d_max0));
  if (raw.d_max1 < 1) fail("d_max1 must be >= 1, got " + std::to_string(raw.d_max1));

  const CostSpec& c = raw.cost_shape;
  if (!(c.f_exponent > 0.0) || !std::isfinite(c.f_exponent)) fail("cost.f_exponent must be a positive real");
  if (!(c.h_exponent > 0.0) || !std::isfinite(c.h_exponent)) fail("cost.h_exponent must be a positive real");
  if (!(c.f_weight >= 0.0) || !std::isfinite(c.f_weight)) fail("cost.f_weight must be a nonnegative real");
  if (!(c.h_weight >= 0.0) || !std::isfinite(c.h_weight)) fail("cost.h_weight must be a nonnegative real");
  const int top = std::max(raw.d_max0, raw.d_max1);
  for (int d = 0; d <= top; ++d) {
    if (c.alarm_cost(d) < c.normal_cost(d)) {
      std::ostringstream os;
      os << "alarm cost h must dominate normal cost f: h(" << d << ") = " << c.alarm_cost(d) << " < f(" << d
         << ") = " << c.normal_cost(d);
      fail(os.str());
    }
  }
  return raw;
}

std::string to_string(const SystemState& s) {
  std::ostringstream os;
  os << '(' << s.z << ',' << s.z_d << ',' << s.e << ',' << s.d0 << ',' << s.d1 << ')';
  return os.str();
}

StateSpace::StateSpace(const ScenarioConfig& config)
    : config_(validate_config(config)),
      energy_levels_(config.e_max + 1),
      aoi0_levels_(config.d_max0 + 1),
      aoi1_levels_(config.d_max1 + 1),
      size_(std::size_t{4} * energy_levels_ * aoi0_levels_ * aoi1_levels_) {}

bool StateSpace::contains(const SystemState& s) const {
  return (s.z == 0 || s.z == 1) && (s.z_d == 0 || s.z_d == 1) && s.e >= 0 && s.e <= config_.e_max && s.d0 >= 0 &&
         s.d0 <= config_.d_max0 && s.d1 >= 0 && s.d1 <= config_.d_max1;
}

StateIndex StateSpace::index_of(const SystemState& s) const {
  if (!contains(s)) throw RangeError("state " + to_string(s) + " is outside the state space");
  return unchecked_index(s);
}

SystemState StateSpace::state_of(std::size_t index) const {
  if (index >= size_) {
    throw RangeError("state index " + std::to_string(index) + " >= " + std::to_string(size_));
  }
  SystemState s;
  s.d1 = static_cast<int>(index % aoi1_levels_);
  index /= aoi1_levels_;
  s.d0 = static_cast<int>(index % aoi0_levels_);
  index /= aoi0_levels_;
  s.e = static_cast<int>(index % energy_levels_);
  index /= energy_levels_;
  s.z_d = static_cast<int>(index % 2);
  s.z = static_cast<int>(index / 2);
  return s;
}

}  // namespace ehaoi
