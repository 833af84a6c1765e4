#include "ehaoi/kernel.hpp"

#include <algorithm>
#include <deque>
#include <ostream>
#include <tuple>

#include "ehaoi/csv.hpp"
#include "ehaoi/parallel.hpp"

namespace ehaoi {

namespace {

bool is_binary(int v) { return v == 0 || v == 1; }

int next_aoi(int z, const SystemState& s, int w_s, int cap) {
  const int d = s.aoi(z);
  if (w_s == 1) return z == s.z ? 1 : 0;
  if (z != s.z && z != s.z_d) return 0;
  return std::min(d + 1, cap);
}

auto as_tuple(const SystemState& s) { return std::tie(s.z, s.z_d, s.e, s.d0, s.d1); }

}  // namespace

std::vector<Action> admissible_actions(const SystemState& s) {
  if (s.e == 0) return {Action::kHold};
  return {Action::kHold, Action::kTransmit};
}

bool energy_overflows(const SystemState& s, Action a, const RandomVector& w, const ScenarioConfig& cfg) {
  return s.e + w.w_e - to_int(a) > cfg.e_max;
}

SystemState next_state(const SystemState& s, Action a, const RandomVector& w, const ScenarioConfig& cfg) {
  if (!is_admissible(s, a)) throw InadmissibleAction("transmit is not admissible at " + to_string(s));
  if (!is_binary(w.w_s) || !is_binary(w.w_e) || !is_binary(w.w_z)) {
    throw InvalidDisturbance("disturbance components must be binary");
  }
  if (w.w_s == 1 && a == Action::kHold) throw InvalidDisturbance("w_s = 1 requires a transmission");

  SystemState n;
  n.z = w.w_z;
  n.z_d = w.w_s == 1 ? s.z : s.z_d;
  n.e = std::min(s.e + w.w_e - to_int(a), cfg.e_max);
  n.d0 = next_aoi(0, s, w.w_s, cfg.d_max0);
  n.d1 = next_aoi(1, s, w.w_s, cfg.d_max1);
  return n;
}

std::vector<WeightedDisturbance> disturbance_distribution(const SystemState& s, Action a, const ScenarioConfig& cfg) {
  if (!is_admissible(s, a)) throw InadmissibleAction("transmit is not admissible at " + to_string(s));
  const bool transmits = a == Action::kTransmit;
  const double ps[2] = {transmits ? 1.0 - cfg.p_s : 1.0, transmits ? cfg.p_s : 0.0};
  const double pe[2] = {1.0 - cfg.p_e, cfg.p_e};
  const auto& pz = cfg.p_z[s.z];

  std::vector<WeightedDisturbance> out;
  out.reserve(8);
  for (int w_s = 0; w_s < 2; ++w_s) {
    for (int w_e = 0; w_e < 2; ++w_e) {
      for (int w_z = 0; w_z < 2; ++w_z) {
        const double p = ps[w_s] * pe[w_e] * pz[w_z];
        if (p > 0.0) out.push_back({{w_s, w_e, w_z}, p});
      }
    }
  }
  return out;
}

std::vector<WeightedState> transition_distribution(const SystemState& s, Action a, const ScenarioConfig& cfg) {
  if (!is_admissible(s, a)) a = Action::kHold;
  std::vector<WeightedState> out;
  out.reserve(8);
  for (const auto& [w, p] : disturbance_distribution(s, a, cfg)) {
    const SystemState n = next_state(s, a, w, cfg);
    auto it = std::find_if(out.begin(), out.end(), [&](const WeightedState& ws) { return ws.state == n; });
    if (it == out.end()) {
      out.push_back({n, p});
    } else {
      it->probability += p;
    }
  }
  std::sort(out.begin(), out.end(),
            [](const WeightedState& x, const WeightedState& y) { return as_tuple(x.state) < as_tuple(y.state); });
  return out;
}

double stage_cost(const SystemState& s, const ScenarioConfig& cfg) {
  return s.z == 0 ? cfg.cost_shape.normal_cost(s.d0) : cfg.cost_shape.alarm_cost(s.d1);
}

TransitionKernel::TransitionKernel(StateSpace space, std::vector<std::size_t> row_offsets, std::vector<Atom> atoms,
                                   std::vector<double> stage_costs)
    : space_(std::move(space)),
      row_offsets_(std::move(row_offsets)),
      atoms_(std::move(atoms)),
      stage_costs_(std::move(stage_costs)),
      can_transmit_(space_.size()) {
  for (std::size_t i = 0; i < space_.size(); ++i) can_transmit_[i] = space_.state_of(i).e > 0 ? 1 : 0;
}

TransitionKernel build_kernel(const ScenarioConfig& cfg, unsigned threads) {
  StateSpace space(cfg);
  const std::size_t n = space.size();
  constexpr std::size_t kMaxAtoms = 8;

  // Fixed-width scratch rows keep the parallel fill free of shared writes.
  std::vector<Atom> scratch(2 * n * kMaxAtoms);
  std::vector<unsigned char> widths(2 * n);
  std::vector<double> costs(n);

  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const SystemState s = space.state_of(i);
      costs[i] = stage_cost(s, cfg);
      for (Action a : {Action::kHold, Action::kTransmit}) {
        const std::size_t r = 2 * i + static_cast<std::size_t>(a);
        const auto dist = transition_distribution(s, a, cfg);
        widths[r] = static_cast<unsigned char>(dist.size());
        for (std::size_t k = 0; k < dist.size(); ++k) {
          scratch[r * kMaxAtoms + k] = {space.unchecked_index(dist[k].state), dist[k].probability};
        }
      }
    }
  });

  std::vector<std::size_t> offsets(2 * n + 1, 0);
  for (std::size_t r = 0; r < 2 * n; ++r) offsets[r + 1] = offsets[r] + widths[r];
  std::vector<Atom> atoms(offsets.back());
  for (std::size_t r = 0; r < 2 * n; ++r) {
    std::copy_n(scratch.begin() + static_cast<std::ptrdiff_t>(r * kMaxAtoms), widths[r],
                atoms.begin() + static_cast<std::ptrdiff_t>(offsets[r]));
  }
  return TransitionKernel(std::move(space), std::move(offsets), std::move(atoms), std::move(costs));
}

std::vector<StateIndex> reachable_states(const TransitionKernel& kernel, const SystemState& s0) {
  const StateSpace& space = kernel.space();
  const StateIndex start = space.index_of(s0);
  std::vector<unsigned char> seen(space.size(), 0);
  std::deque<StateIndex> frontier{start};
  seen[start] = 1;
  while (!frontier.empty()) {
    const StateIndex i = frontier.front();
    frontier.pop_front();
    for (Action a : {Action::kHold, Action::kTransmit}) {
      if (a == Action::kTransmit && !kernel.can_transmit(i)) continue;
      for (const Atom& atom : kernel.row(i, a)) {
        if (!seen[atom.successor]) {
          seen[atom.successor] = 1;
          frontier.push_back(atom.successor);
        }
      }
    }
  }
  std::vector<StateIndex> out;
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (seen[i]) out.push_back(static_cast<StateIndex>(i));
  }
  return out;
}

std::vector<StateIndex> reachable_states(const ScenarioConfig& cfg, const SystemState& s0) {
  return reachable_states(build_kernel(cfg), s0);
}

void write_kernel_csv(std::ostream& out, const TransitionKernel& kernel) {
  CsvWriter csv(out);
  csv.header({"state_index", "action", "successor_index", "probability"});
  for (std::size_t i = 0; i < kernel.num_states(); ++i) {
    for (Action a : {Action::kHold, Action::kTransmit}) {
      for (const Atom& atom : kernel.row(i, a)) {
        csv.row(i, to_int(a), atom.successor, atom.probability);
      }
    }
  }
}

}  // namespace ehaoi
