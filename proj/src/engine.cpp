// Copyright 2026 The aimdalloc Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "aimd/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace aimd {

AllocationState ai_advance(const AllocationState& state, const SystemConfig& cfg, double to_time) {
  if (!(to_time >= state.time)) throw std::logic_error("ai_advance: cannot move backwards in time");
  const double dt = to_time - state.time;
  AllocationState out{to_time, state.alloc};
  for (std::size_t j = 0; j < out.alloc.size(); ++j) {
    const auto& r = cfg.resources[j];
    out.alloc[j].array() += r.alpha * dt;
    if (out.alloc[j].sum() > r.capacity * (1.0 + 1e-9))
      throw std::logic_error("ai_advance: resource " + std::to_string(j) + " overshoots its capacity");
  }
  return out;
}

double next_event_gap(const Vector& post_backoff, const ResourceParams& resource) {
  const double n = double(post_backoff.size());
  const double slack = resource.capacity - post_backoff.sum();
  // Nobody backed off: the sum sits at capacity up to rounding.
  if (slack <= 1e-12 * resource.capacity) return 0.0;
  return slack / (n * resource.alpha);
}

double compute_psi(const SystemConfig& cfg, std::size_t resource) {
  const auto& r = cfg.resources.at(resource);
  return (1.0 - r.beta) * r.capacity / (double(cfg.agents) * r.alpha);
}

DropProbability drop_probability(const SystemConfig& cfg, const CostFunction& f, std::size_t resource,
                                 std::span<const double> averages, double gamma) {
  if (averages.size() != cfg.resources.size())
    throw std::invalid_argument("drop probability: one average per resource required");
  DropProbability out;
  std::vector<double> x(averages.begin(), averages.end());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double floor = kAverageFloor * cfg.resources[j].capacity;
    if (!(x[j] >= floor)) {
      x[j] = floor;
      out.floored = true;
    }
  }
  const auto& r = cfg.resources[resource];
  out.raw = gamma * f.partial(resource, x) / x[resource];
  out.value = std::clamp(out.raw, r.lambda_min, r.lambda_max);
  out.clamped = out.raw < r.lambda_min || out.raw > r.lambda_max;
  return out;
}

std::vector<double> compute_gamma(const SystemConfig& cfg, const CostModel& costs) {
  constexpr int kGrid = 17;
  const std::size_t m = cfg.resources.size();
  const double n = double(cfg.agents);
  std::vector<double> out(m);
  std::vector<double> x(m);
  for (std::size_t j = 0; j < m; ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < costs.agents(); ++i) {
      for (int a = 0; a < kGrid; ++a) {
        for (int b = 0; b < kGrid; ++b) {
          const double own = (0.25 + 0.75 * a / (kGrid - 1)) / n;
          const double other = (0.25 + 0.75 * b / (kGrid - 1)) / n;
          for (std::size_t k = 0; k < m; ++k) x[k] = (k == j ? own : other) * cfg.resources[k].capacity;
          const double g = costs[i].partial(j, x);
          if (!std::isfinite(g) || !(g > 0.0))
            throw std::runtime_error("compute_gamma: gradient not finite and positive on the probe grid");
          best = std::min(best, x[j] / g);
        }
      }
    }
    out[j] = cfg.resources[j].lambda_max * best;
  }
  return out;
}

std::vector<double> resolve_gamma(const SystemConfig& cfg, const CostModel& costs) {
  bool need_auto = false;
  for (const auto& r : cfg.resources) need_auto = need_auto || !r.gamma;
  std::vector<double> probed;
  if (need_auto) probed = compute_gamma(cfg, costs);
  std::vector<double> out(cfg.resources.size());
  for (std::size_t j = 0; j < out.size(); ++j)
    out[j] = cfg.resources[j].gamma ? *cfg.resources[j].gamma : probed[j];
  return out;
}

BackoffPattern md_backoff(AllocationState& state, const SystemConfig& cfg, std::size_t resource,
                          std::span<const double> lambda, Rng& rng) {
  auto pattern = sample_pattern(cfg.resources.at(resource).beta, lambda, rng);
  state.alloc[resource].array() *= pattern.factors().array();
  return pattern;
}

AverageTracker::AverageTracker(std::size_t agents, std::size_t window)
    : agents_(agents), capacity_(window), sum_(Vector::Zero(Eigen::Index(agents))) {
  if (window < 1) throw std::invalid_argument("average tracker: window must be >= 1");
}

void AverageTracker::seed(const Vector& sample) {
  push(sample);
  window_.assign(capacity_, sample);
}

void AverageTracker::push(const Vector& sample) {
  if (sample.size() != Eigen::Index(agents_)) throw std::invalid_argument("average tracker: sample size mismatch");
  window_.push_front(sample);
  if (window_.size() > capacity_) window_.pop_back();
  sum_ += sample;
  ++count_;
}

Vector AverageTracker::cumulative() const {
  if (count_ == 0) throw std::logic_error("average tracker: no samples recorded");
  return sum_ / double(count_);
}

Vector AverageTracker::windowed() const {
  if (window_.empty()) throw std::logic_error("average tracker: no samples recorded");
  Vector acc = Vector::Zero(Eigen::Index(agents_));
  for (const auto& s : window_) acc += s;
  return acc / double(window_.size());
}

Vector AverageTracker::mean(AverageMode mode) const {
  return mode == AverageMode::cumulative ? cumulative() : windowed();
}

Averages update_averages(AverageTracker& tracker, const Vector& sample) {
  tracker.push(sample);
  return {tracker.cumulative(), tracker.windowed()};
}

Simulator::Simulator(SystemConfig cfg, CostModel costs, SimulationOptions options)
    : cfg_(validate_config(std::move(cfg))),
      costs_(std::move(costs)),
      options_(std::move(options)),
      rng_(cfg_.seed) {
  const std::size_t m = cfg_.resources.size();
  if (costs_.agents() != cfg_.agents || costs_.resources() != m)
    throw std::invalid_argument("simulator: cost model does not match the configuration");
  gamma_ = options_.gamma.empty() ? resolve_gamma(cfg_, costs_) : options_.gamma;
  if (gamma_.size() != m) throw std::invalid_argument("simulator: one gamma per resource required");
  if (!options_.frozen_lambda.empty() && options_.frozen_lambda.size() != m)
    throw std::invalid_argument("simulator: frozen lambda needs one row per resource");

  state_.alloc = initial_allocations(cfg_);
  const auto seeds = first_event_allocations(cfg_, state_.alloc);
  last_event_.assign(m, 0.0);
  post_ = state_.alloc;
  events_.assign(m, 0);
  clamps_.assign(m, 0);
  floors_.assign(m, 0);
  redraws_.assign(m, 0);
  for (std::size_t j = 0; j < m; ++j) {
    gap_.push_back(next_event_gap(post_[j], cfg_.resources[j]));
    trackers_.emplace_back(cfg_.agents, cfg_.window);
    if (cfg_.warmup == WarmUp::seeded) {
      trackers_.back().seed(seeds[j]);
    } else {
      trackers_.back().push(seeds[j]);
    }
    integral_.push_back(Vector::Zero(Eigen::Index(cfg_.agents)));
    event_sum_.push_back(Vector::Zero(Eigen::Index(cfg_.agents)));
  }
}

const EventRecord& Simulator::step() {
  const std::size_t m = cfg_.resources.size();
  std::size_t j = 0;
  for (std::size_t k = 1; k < m; ++k) {
    if (next_event_time(k) < next_event_time(j)) j = k;
  }
  const double t = next_event_time(j);
  state_ = ai_advance(state_, cfg_, t);

  EventRecord rec;
  rec.index = index_++;
  rec.resource_event = events_[j];
  rec.resource = j;
  rec.time = t;
  rec.gap = gap_[j];
  rec.redraw = events_[j] > 0 && gap_[j] == 0.0;
  rec.pre = state_.alloc[j];

  integral_[j] += 0.5 * gap_[j] * (post_[j] + rec.pre);
  event_sum_[j] += rec.pre;

  const auto n = Eigen::Index(cfg_.agents);
  rec.lambda.resize(n);
  if (!options_.frozen_lambda.empty()) {
    for (Eigen::Index i = 0; i < n; ++i) rec.lambda[i] = options_.frozen_lambda[j].at(std::size_t(i));
  } else {
    // Averages of every resource, gathered once per event.
    std::vector<Vector> means(m);
    for (std::size_t k = 0; k < m; ++k) means[k] = trackers_[k].mean(cfg_.average_mode);
    std::vector<double> avg(m);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < m; ++k) avg[k] = means[k][i];
      const auto p = drop_probability(cfg_, costs_[std::size_t(i)], j, avg, gamma_[j]);
      rec.lambda[i] = p.value;
      clamps_[j] += p.clamped ? 1 : 0;
      floors_[j] += p.floored ? 1 : 0;
    }
  }

  const auto pattern = md_backoff(state_, cfg_, j, std::span<const double>(rec.lambda.data(), std::size_t(n)), rng_);
  rec.factors = pattern.factors();
  rec.post = state_.alloc[j];

  const double gap = next_event_gap(rec.post, cfg_.resources[j]);
  redraws_[j] += gap == 0.0 ? 1 : 0;
  // The allocation at this resource's next event is fixed from here on.
  trackers_[j].push(gap == 0.0 ? rec.post : Vector(rec.post.array() + cfg_.resources[j].alpha * gap));
  last_event_[j] = t;
  gap_[j] = gap;
  post_[j] = rec.post;
  ++events_[j];
  last_ = std::move(rec);
  return last_;
}

TraceSummary Simulator::summary() const {
  TraceSummary s;
  const auto n = Eigen::Index(cfg_.agents);
  for (std::size_t j = 0; j < cfg_.resources.size(); ++j) {
    s.event_mean.push_back(events_[j] ? Vector(event_sum_[j] / double(events_[j])) : Vector::Zero(n));
    s.time_average.push_back(last_event_[j] > 0.0 ? Vector(integral_[j] / last_event_[j]) : Vector::Zero(n));
  }
  s.events = events_;
  s.clamps = clamps_;
  s.floors = floors_;
  s.redraws = redraws_;
  s.gamma = gamma_;
  s.end_time = state_.time;
  return s;
}

EventTrace Simulator::run(std::size_t events) {
  EventTrace trace;
  if (options_.keep_records) trace.records.reserve(events);
  for (std::size_t k = 0; k < events; ++k) {
    const auto& rec = step();
    if (options_.keep_records) trace.records.push_back(rec);
  }
  trace.summary = summary();
  return trace;
}

EventTrace run_simulation(const SystemConfig& cfg, const CostModel& costs, std::size_t events,
                          SimulationOptions options) {
  Simulator sim(cfg, costs, std::move(options));
  return sim.run(events);
}

}  // namespace aimd
