#include "ehaoi/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "ehaoi/csv.hpp"
#include "ehaoi/parallel.hpp"

namespace ehaoi {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr double kDefaultTruncationFraction = 1e-6;

}  // namespace

Rng Rng::for_stream(std::uint64_t master_seed, std::uint64_t stream, std::uint64_t substream) {
  std::uint64_t key = mix64(master_seed + kGolden);
  key = mix64(key ^ mix64(stream + 0x632be59bd9b4e019ULL));
  key = mix64(key ^ mix64(substream + 0x85157af5ULL));
  return Rng(key);
}

Rng::result_type Rng::operator()() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

DecisionRule DecisionRule::from_table(Policy policy, std::string name) {
  DecisionRule r;
  r.table_ = std::move(policy);
  r.name_ = std::move(name);
  return r;
}

DecisionRule DecisionRule::randomized(double transmit_probability, std::string name) {
  if (!(transmit_probability >= 0.0 && transmit_probability <= 1.0)) {
    throw std::invalid_argument("transmit probability must lie in [0, 1]");
  }
  DecisionRule r;
  r.transmit_probability_ = transmit_probability;
  r.name_ = std::move(name);
  return r;
}

Action DecisionRule::choose(const SystemState& s, StateIndex index, Rng& policy_rng) const {
  if (table_) return (*table_)[index];
  if (s.e == 0) return Action::kHold;
  return policy_rng.bernoulli(transmit_probability_) ? Action::kTransmit : Action::kHold;
}

DecisionRule make_baseline(BaselineKind kind, const StateSpace& space, double transmit_probability) {
  switch (kind) {
    case BaselineKind::kRandom:
      return DecisionRule::randomized(transmit_probability, "random");
    case BaselineKind::kNever:
      return DecisionRule::from_table(Policy(space.size()), "never");
    case BaselineKind::kAlways:
    case BaselineKind::kAlarmOnly: {
      Policy p(space.size());
      for (std::size_t i = 0; i < space.size(); ++i) {
        const SystemState s = space.state_of(i);
        const bool wants = kind == BaselineKind::kAlways || s.z == 1;
        if (wants && s.e > 0) p[i] = Action::kTransmit;
      }
      return DecisionRule::from_table(std::move(p), kind == BaselineKind::kAlways ? "always" : "alarm_only");
    }
  }
  throw std::invalid_argument("unknown baseline kind");
}

RandomVector sample_disturbance(const SystemState& s, Action a, const ScenarioConfig& cfg, Rng& rng) {
  const double u_s = rng.uniform();
  const double u_e = rng.uniform();
  const double u_z = rng.uniform();
  RandomVector w;
  w.w_s = (a == Action::kTransmit && s.e > 0 && u_s < cfg.p_s) ? 1 : 0;
  w.w_e = u_e < cfg.p_e ? 1 : 0;
  w.w_z = u_z < cfg.p_z[s.z][1] ? 1 : 0;
  return w;
}

EpisodeTrace simulate_episode(const DecisionRule& rule, const ScenarioConfig& raw, const SystemState& s0, int horizon,
                              std::uint64_t seed, std::uint64_t episode) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  const StateSpace space(raw);
  const ScenarioConfig& cfg = space.config();
  Rng world = Rng::for_stream(seed, episode, 0);
  Rng decisions = Rng::for_stream(seed, episode, 1);

  EpisodeTrace trace;
  trace.seed = seed;
  trace.horizon = horizon;
  trace.d_max0 = cfg.d_max0;
  trace.d_max1 = cfg.d_max1;
  trace.steps.reserve(static_cast<std::size_t>(horizon));

  SystemState s = s0;
  StateIndex index = space.index_of(s);
  for (int k = 0; k < horizon; ++k) {
    TraceStep step;
    step.state = s;
    step.action = rule.choose(s, index, decisions);
    step.w = sample_disturbance(s, step.action, cfg, world);
    step.cost = stage_cost(s, cfg);
    step.energy_discarded = energy_overflows(s, step.action, step.w, cfg);
    s = next_state(s, step.action, step.w, cfg);
    index = space.unchecked_index(s);
    trace.steps.push_back(step);
  }
  trace.final_state = s;
  return trace;
}

EpisodeTrace build_trace(const ScenarioConfig& raw, const SystemState& s0, std::span<const Action> actions,
                         std::span<const RandomVector> disturbances) {
  if (actions.size() != disturbances.size()) throw std::invalid_argument("actions and disturbances differ in length");
  const StateSpace space(raw);
  const ScenarioConfig& cfg = space.config();
  (void)space.index_of(s0);

  EpisodeTrace trace;
  trace.horizon = static_cast<int>(actions.size());
  trace.d_max0 = cfg.d_max0;
  trace.d_max1 = cfg.d_max1;
  SystemState s = s0;
  for (std::size_t k = 0; k < actions.size(); ++k) {
    TraceStep step{s, actions[k], disturbances[k], stage_cost(s, cfg),
                   energy_overflows(s, actions[k], disturbances[k], cfg)};
    s = next_state(s, actions[k], disturbances[k], cfg);
    trace.steps.push_back(step);
  }
  trace.final_state = s;
  return trace;
}

double truncation_bound(const ScenarioConfig& cfg, int horizon) {
  return std::pow(cfg.gamma, horizon) * cfg.max_stage_cost() / (1.0 - cfg.gamma);
}

int default_horizon(const ScenarioConfig& cfg) {
  return static_cast<int>(std::ceil(std::log(kDefaultTruncationFraction) / std::log(cfg.gamma)));
}

EvalSummary evaluate_policy_mc(const DecisionRule& rule, const ScenarioConfig& raw, const SystemState& s0,
                               int horizon, long n_episodes, std::uint64_t seed, unsigned threads,
                               double truncation_cap) {
  if (n_episodes < 1) throw std::invalid_argument("n_episodes must be >= 1");
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  const StateSpace space(raw);
  const ScenarioConfig& cfg = space.config();
  const double bound = truncation_bound(cfg, horizon);
  if (bound > truncation_cap) {
    throw TruncationTooCoarse("truncation bound " + format_real(bound) + " exceeds cap " + format_real(truncation_cap));
  }
  const StateIndex start = space.index_of(s0);

  std::vector<double> returns(static_cast<std::size_t>(n_episodes));
  parallel_for(returns.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t ep = begin; ep < end; ++ep) {
      Rng world = Rng::for_stream(seed, ep, 0);
      Rng decisions = Rng::for_stream(seed, ep, 1);
      SystemState s = s0;
      StateIndex index = start;
      double discount = 1.0;
      double total = 0.0;
      for (int k = 0; k < horizon; ++k) {
        total += discount * stage_cost(s, cfg);
        discount *= cfg.gamma;
        const Action a = rule.choose(s, index, decisions);
        s = next_state(s, a, sample_disturbance(s, a, cfg, world), cfg);
        index = space.unchecked_index(s);
      }
      returns[ep] = total;
    }
  });

  // Ordered reduction keeps the summary independent of the thread count.
  double sum = 0.0;
  for (double r : returns) sum += r;
  const double mean = sum / static_cast<double>(n_episodes);
  double sq = 0.0;
  for (double r : returns) sq += (r - mean) * (r - mean);

  EvalSummary summary;
  summary.mean_discounted_cost = mean;
  summary.std_error =
      n_episodes > 1 ? std::sqrt(sq / static_cast<double>(n_episodes - 1) / static_cast<double>(n_episodes)) : 0.0;
  summary.n_episodes = n_episodes;
  summary.horizon = horizon;
  summary.truncation_bound = bound;
  return summary;
}

std::vector<AoiPair> direct_aoi_trace(const EpisodeTrace& trace) {
  const std::size_t n = trace.steps.size();
  auto source_at = [&](std::size_t k) { return k < n ? trace.steps[k].state.z : trace.final_state.z; };
  const SystemState& first = n > 0 ? trace.steps[0].state : trace.final_state;
  const int cap[2] = {trace.d_max0, trace.d_max1};

  std::vector<AoiPair> out;
  out.reserve(n + 1);
  out.push_back({first.d0, first.d1});

  // Generation time of the freshest delivered update and the time of the latest
  // source change. Before any event they are placed in the past so that the
  // initial AoI values are reproduced.
  std::optional<long> last_delivery;
  std::optional<long> last_change;
  for (std::size_t k = 1; k <= n; ++k) {
    const std::size_t prev = k - 1;
    if (trace.steps[prev].w.w_s == 1) last_delivery = static_cast<long>(prev);
    if (prev >= 1 && source_at(prev) != source_at(prev - 1)) last_change = static_cast<long>(prev);

    // Known state: content of the latest delivery, else the initial knowledge.
    const int known = last_delivery ? source_at(static_cast<std::size_t>(*last_delivery)) : first.z_d;
    // AoI at slot k refers to the source state of the slot that just ended.
    const int active = source_at(prev);
    const long kk = static_cast<long>(k);

    int age[2] = {0, 0};
    const long delivered = last_delivery ? *last_delivery : -static_cast<long>(first.aoi(first.z_d));
    age[known] = static_cast<int>(std::min<long>(kk - delivered, cap[known]));
    if (active != known) {
      const long changed = last_change ? *last_change : -static_cast<long>(first.aoi(active));
      age[active] = static_cast<int>(std::min<long>(kk - changed, cap[active]));
    }
    out.push_back({age[0], age[1]});
  }
  return out;
}

AoiConsistency verify_aoi_consistency(const EpisodeTrace& trace) {
  const auto direct = direct_aoi_trace(trace);
  AoiConsistency result;
  for (std::size_t k = 0; k < direct.size(); ++k) {
    const SystemState& s = k < trace.steps.size() ? trace.steps[k].state : trace.final_state;
    const AoiPair recursive{s.d0, s.d1};
    if (recursive != direct[k]) {
      result.consistent = false;
      result.first_mismatch = k;
      result.recursive = recursive;
      result.direct = direct[k];
      return result;
    }
  }
  return result;
}

}  // namespace ehaoi
