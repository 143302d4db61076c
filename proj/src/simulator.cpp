#include "guided/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>

#include "guided/errors.hpp"
#include "guided/rng.hpp"

namespace guided {

namespace {

constexpr std::uint64_t chunk_frames = 1u << 16;

struct Frame {
  bool target = false;
  bool declared = false;
  bool inter_stop = false;
  double energy = 0.0;
};

struct Tally {
  std::uint64_t n = 0;
  std::uint64_t targets = 0;
  std::uint64_t misses = 0;
  std::uint64_t inter_misses = 0;
  std::uint64_t false_alarms = 0;
  double energy = 0.0;
  double energy_sq = 0.0;
  double risk = 0.0;
  double risk_sq = 0.0;

  void add(const Frame& f, double lambda, double miss_cost, double fa_cost) {
    ++n;
    double r = lambda * f.energy;
    if (f.target) {
      ++targets;
      if (!f.declared) {
        ++misses;
        if (f.inter_stop) ++inter_misses;
        r += miss_cost;
      }
    } else if (f.declared) {
      ++false_alarms;
      r += fa_cost;
    }
    energy += f.energy;
    energy_sq += f.energy * f.energy;
    risk += r;
    risk_sq += r * r;
  }

  void merge(const Tally& o) {
    n += o.n;
    targets += o.targets;
    misses += o.misses;
    inter_misses += o.inter_misses;
    false_alarms += o.false_alarms;
    energy += o.energy;
    energy_sq += o.energy_sq;
    risk += o.risk;
    risk_sq += o.risk_sq;
  }
};

double bernoulli_se(double p, double n) { return std::sqrt(std::max(p * (1.0 - p), 0.0) / n); }

double mean_se(double sum, double sum_sq, double n) {
  if (n < 2.0) return 0.0;
  const double mean = sum / n;
  const double var = std::max(sum_sq / n - mean * mean, 0.0) * n / (n - 1.0);
  return std::sqrt(var / n);
}

SimReport finish(const Tally& t) {
  SimReport r;
  const double n = static_cast<double>(t.n);
  r.n_frames = t.n;
  r.targets = t.targets;
  r.misses = t.misses;
  r.inter_misses = t.inter_misses;
  r.false_alarms = t.false_alarms;
  r.miss_rate = static_cast<double>(t.misses) / n;
  r.inter_miss_rate = static_cast<double>(t.inter_misses) / n;
  r.final_miss_rate = static_cast<double>(t.misses - t.inter_misses) / n;
  r.fa_rate = static_cast<double>(t.false_alarms) / n;
  r.energy = t.energy / n;
  r.risk = t.risk / n;
  r.se_miss = bernoulli_se(r.miss_rate, n);
  r.se_inter_miss = bernoulli_se(r.inter_miss_rate, n);
  r.se_final_miss = bernoulli_se(r.final_miss_rate, n);
  r.se_fa = bernoulli_se(r.fa_rate, n);
  r.se_energy = mean_se(t.energy, t.energy_sq, n);
  r.se_risk = mean_se(t.risk, t.risk_sq, n);
  return r;
}

/// Runs `frame(rng)` n times in fixed chunks, each chunk with its own
/// substream, and merges chunk tallies in chunk order.
template <typename FrameFn>
Tally run_chunked(const StreamConfig& cfg, double lambda, double miss_cost, double fa_cost,
                  const FrameFn& frame) {
  const std::uint64_t chunks = (cfg.n_frames + chunk_frames - 1) / chunk_frames;
  std::vector<Tally> tallies(chunks);
  std::atomic<std::uint64_t> next{0};
  auto work = [&] {
    for (std::uint64_t c = next++; c < chunks; c = next++) {
      Philox rng(cfg.seed, c);
      const std::uint64_t begin = c * chunk_frames;
      const std::uint64_t end = std::min(cfg.n_frames, begin + chunk_frames);
      Tally t;
      for (std::uint64_t i = begin; i < end; ++i) t.add(frame(rng), lambda, miss_cost, fa_cost);
      tallies[c] = t;
    }
  };
  const unsigned threads = static_cast<unsigned>(
      std::min<std::uint64_t>(cfg.threads == 0 ? default_threads() : cfg.threads, chunks));
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(work);
  }
  Tally total;
  for (const auto& t : tallies) total.merge(t);
  return total;
}

struct StageSamplers {
  DiscreteSampler null;
  DiscreteSampler target;

  explicit StageSamplers(const FeatureModel& m) : null(m.p0()), target(m.p1()) {}
  std::size_t draw(bool x, Philox& rng) const { return x ? target(rng.uniform()) : null(rng.uniform()); }
};

void check_config(const StreamConfig& cfg) {
  if (cfg.n_frames < 1) fail(ErrorKind::input, "n_frames must be at least 1");
}

SimReport simulate_adaptive(const StreamConfig& cfg, const SystemSpec& spec, const Policy& policy,
                            const std::vector<StageSamplers>& samplers,
                            const std::vector<double>& acc) {
  const std::size_t K = spec.size();
  const auto targets = compute_activation_targets(spec, policy, policy.grid);
  auto state = make_adaptive_state(spec, targets, cfg.mu);
  const double lambda = policy.lambda;
  const double pi0 = spec.prior.value();

  std::vector<std::uint64_t> visits(K, 0);
  std::vector<std::uint64_t> activations(K, 0);
  std::vector<double> target_sum(K, 0.0);

  Philox rng(cfg.seed, 0);
  Tally tally;
  const std::uint64_t total = cfg.burn_in + cfg.n_frames;
  for (std::uint64_t i = 0; i < total; ++i) {
    const bool measuring = i >= cfg.burn_in;
    Frame f;
    f.target = rng.uniform() < pi0;
    f.energy = spec.stages[0].on_cost;
    Belief pi(pi0);
    for (std::size_t k = 0; k < K; ++k) {
      if (k > 0) f.energy += spec.stages[k].on_cost;
      const auto& model = spec.stages[k].model;
      const std::size_t y = samplers[k].draw(f.target, rng);
      const double incoming = pi.value();
      pi = posterior_update(pi, model, y);
      bool active = false;
      if (state.enabled[k]) {
        const double q = targets.at(k, incoming);
        const Decision d = adaptive_decide(state, k, y, K);
        active = d == Decision::proceed || d == Decision::positive;
        observe_activation(state, k, active);
        adaptive_step(state, k, state.rate[k], q);
        if (measuring) target_sum[k] += q;
      } else {
        active = policy.activates(k, pi.value());
        if (measuring) target_sum[k] += targets.at(k, incoming);
      }
      if (measuring) {
        ++visits[k];
        if (active) ++activations[k];
      }
      if (k + 1 == K) {
        f.declared = active;
      } else if (!active) {
        f.inter_stop = true;
        f.energy += acc[k + 1];
        break;
      }
    }
    if (measuring) tally.add(f, lambda, spec.miss_cost, spec.fa_cost);
  }

  SimReport r = finish(tally);
  r.final_eta = state.eta;
  for (std::size_t k = 0; k < K; ++k) {
    const double v = static_cast<double>(std::max<std::uint64_t>(visits[k], 1));
    r.activation_rate.push_back(static_cast<double>(activations[k]) / v);
    r.mean_target.push_back(target_sum[k] / v);
    r.tracking_error.push_back(std::abs(r.activation_rate.back() - r.mean_target.back()));
  }
  return r;
}

}  // namespace

RiskReport SimReport::as_risk(double miss_cost, double fa_cost, double lambda) const {
  RiskReport r;
  r.inter_miss = miss_cost * inter_miss_rate;
  r.final_miss = miss_cost * final_miss_rate;
  r.final_fa = fa_cost * fa_rate;
  r.energy = energy;
  r.weighted_energy = lambda * energy;
  r.total = risk;
  return r;
}

unsigned default_threads() {
  if (const char* env = std::getenv("GUIDED_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

SimReport simulate(const StreamConfig& cfg, const SystemSpec& spec, const Policy& policy) {
  check_config(cfg);
  if (policy.size() != spec.size() || policy.switch_points.size() != spec.size()) {
    fail(ErrorKind::mismatch, "policy has " + std::to_string(policy.size()) +
                                  " stages, system has " + std::to_string(spec.size()));
  }
  const std::size_t K = spec.size();
  std::vector<StageSamplers> samplers;
  for (const auto& s : spec.stages) samplers.emplace_back(s.model);
  const auto acc = accumulated_off_costs(spec);

  if (cfg.mode == SimMode::adaptive) return simulate_adaptive(cfg, spec, policy, samplers, acc);

  const double pi0 = spec.prior.value();
  const auto frame = [&](Philox& rng) {
    Frame f;
    f.target = rng.uniform() < pi0;
    f.energy = spec.stages[0].on_cost;
    Belief pi(pi0);
    for (std::size_t k = 0; k < K; ++k) {
      if (k > 0) f.energy += spec.stages[k].on_cost;
      pi = posterior_update(pi, spec.stages[k].model, samplers[k].draw(f.target, rng));
      const bool active = policy.activates(k, pi.value());
      if (k + 1 == K) {
        f.declared = active;
      } else if (!active) {
        f.inter_stop = true;
        f.energy += acc[k + 1];
        break;
      }
    }
    return f;
  };
  return finish(run_chunked(cfg, policy.lambda, spec.miss_cost, spec.fa_cost, frame));
}

SimReport simulate_duty_cycle(const StreamConfig& cfg, const DutyCycleSpec& spec, double lambda) {
  check_config(cfg);
  spec.validate();
  const StageSamplers sampler(spec.detector);
  const double tau = spec.fa_cost / (spec.fa_cost + spec.miss_cost);
  const double pi0 = spec.prior.value();
  const auto frame = [&](Philox& rng) {
    Frame f;
    f.target = rng.uniform() < pi0;
    if (rng.uniform() < spec.rho) {
      f.energy = spec.on_cost;
      const auto y = sampler.draw(f.target, rng);
      f.declared = posterior_update(spec.prior, spec.detector, y).value() >= tau;
    } else {
      f.energy = spec.off_cost;
    }
    return f;
  };
  return finish(run_chunked(cfg, lambda, spec.miss_cost, spec.fa_cost, frame));
}

SimReport simulate_graph(const StreamConfig& cfg, const DetectionGraph& graph,
                         const GraphPolicy& policy) {
  check_config(cfg);
  if (policy.nodes.size() != graph.size()) {
    fail(ErrorKind::mismatch, "graph policy does not match the graph");
  }
  std::vector<StageSamplers> samplers;
  std::vector<double> idle;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    samplers.emplace_back(graph.node(id).model);
    idle.push_back(graph.idle_cost(id));
  }
  const double pi0 = policy.prior;
  const auto frame = [&](Philox& rng) {
    Frame f;
    f.target = rng.uniform() < pi0;
    f.energy = graph.node(1).on_cost;
    Belief pi(pi0);
    int id = 1;
    for (;;) {
      const auto idx = static_cast<std::size_t>(id - 1);
      pi = posterior_update(pi, graph.node(id).model, samplers[idx].draw(f.target, rng));
      const int d = graph_decide(graph, policy, id, pi.value());
      if (graph.terminal(id)) {
        f.declared = d == 1;
        break;
      }
      if (d == 0) {
        f.inter_stop = true;
        f.energy += idle[idx];
        break;
      }
      f.energy += graph.node(d).on_cost;
      id = d;
    }
    return f;
  };
  return finish(run_chunked(cfg, policy.lambda, policy.miss_cost, policy.fa_cost, frame));
}

}  // namespace guided
