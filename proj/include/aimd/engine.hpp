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

#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <vector>

#include "aimd/config.hpp"
#include "aimd/cost.hpp"
#include "aimd/matrix.hpp"
#include "aimd/rng.hpp"

namespace aimd {

/// Allocations x^j_i(t) of every resource at one instant.
struct AllocationState {
  double time = 0.0;
  std::vector<Vector> alloc;  // alloc[j][i]
};

// Linear growth of every allocation by alpha^j * (to_time - state.time).
// Throws std::logic_error when going backwards in time or when any resource
// would end above its capacity.
AllocationState ai_advance(const AllocationState& state, const SystemConfig& cfg, double to_time);

// Time until the next capacity event given the post-back-off allocations:
// (C - sum_i x_i) / (n alpha). Returns exactly 0 when the sum is already at
// capacity, i.e. nobody backed off; the caller then re-draws at the same time.
double next_event_gap(const Vector& post_backoff, const ResourceParams& resource);

// (1 - beta) C / (n alpha): the gap following a full back-off.
double compute_psi(const SystemConfig& cfg, std::size_t resource);

struct DropProbability {
  double value = 0.0;  // clamped into [lambda_min, lambda_max]
  double raw = 0.0;    // gamma * grad_j f / xbar_j before clamping
  bool clamped = false;
  bool floored = false;  // some average was raised to the floor
};

// Relative floor applied to averages before they enter the drop probability.
inline constexpr double kAverageFloor = 1e-9;

DropProbability drop_probability(const SystemConfig& cfg, const CostFunction& f, std::size_t resource,
                                 std::span<const double> averages, double gamma);

// Normalization factor per resource: lambda_max times the smallest
// xbar_j / grad_j f_i over agents and a probe grid with xbar_j in [C/(4n), C/n].
// Explicit gammas in the config are ignored here; see resolve_gamma.
std::vector<double> compute_gamma(const SystemConfig& cfg, const CostModel& costs);
// Explicit config value where present, compute_gamma otherwise.
std::vector<double> resolve_gamma(const SystemConfig& cfg, const CostModel& costs);

// Samples a pattern with `lambda` and multiplies resource j's allocations by it.
BackoffPattern md_backoff(AllocationState& state, const SystemConfig& cfg, std::size_t resource,
                          std::span<const double> lambda, Rng& rng);

/// Running averages of the per-event samples of one resource.
class AverageTracker {
 public:
  AverageTracker(std::size_t agents, std::size_t window);

  // Records `sample` once and fills the whole window with copies of it.
  void seed(const Vector& sample);
  void push(const Vector& sample);

  std::size_t count() const { return count_; }
  // Mean of every pushed sample.
  Vector cumulative() const;
  // Mean of the last min(T, available) samples in the window.
  Vector windowed() const;
  Vector mean(AverageMode mode) const;

 private:
  std::size_t agents_;
  std::size_t capacity_;
  std::deque<Vector> window_;  // newest first
  Vector sum_;
  std::size_t count_ = 0;
};

struct Averages {
  Vector cumulative;
  Vector windowed;
};

// Pushes `sample` and returns both averages.
Averages update_averages(AverageTracker& tracker, const Vector& sample);

/// One capacity event as seen by the central agent.
struct EventRecord {
  std::size_t index = 0;           // position in the merged event sequence
  std::size_t resource_event = 0;  // position within this resource's events
  std::size_t resource = 0;
  double time = 0.0;
  double gap = 0.0;                // time since the previous event of this resource
  bool redraw = false;             // previous event of this resource had nobody back off
  Vector pre;                      // allocations at the event, summing to capacity
  Vector lambda;
  Vector factors;                  // beta or 1 per agent
  Vector post;
};

struct TraceSummary {
  std::vector<Vector> event_mean;      // mean pre-event allocation per resource
  std::vector<Vector> time_average;    // continuous-time mean over [0, last event]
  std::vector<std::size_t> events;     // per resource
  std::vector<std::size_t> clamps;     // clamped drop probabilities per resource
  std::vector<std::size_t> floors;     // floored averages per resource
  std::vector<std::size_t> redraws;    // all-keep events per resource
  std::vector<double> gamma;
  double end_time = 0.0;
};

struct EventTrace {
  std::vector<EventRecord> records;
  TraceSummary summary;
};

struct SimulationOptions {
  bool keep_records = true;
  // frozen_lambda[j][i] replaces the cost-driven drop probability when set.
  std::vector<std::vector<double>> frozen_lambda;
  // Overrides resolve_gamma when non-empty.
  std::vector<double> gamma;
};

/// Event-driven simulator: additive increase until the earliest capacity
/// event, probabilistic multiplicative back-off at that event, repeat.
///
/// Each resource's average tracker holds allocations at its capacity events.
/// Once a back-off is drawn the allocation at that resource's next event is
/// determined, so it enters the tracker right away; the first one enters at
/// construction.
class Simulator {
 public:
  Simulator(SystemConfig cfg, CostModel costs, SimulationOptions options = {});

  // Processes the next capacity event (ties go to the lowest resource index).
  const EventRecord& step();
  EventTrace run(std::size_t events);

  const AllocationState& state() const { return state_; }
  const std::vector<double>& gamma() const { return gamma_; }
  const AverageTracker& tracker(std::size_t j) const { return trackers_.at(j); }
  double next_event_time(std::size_t j) const { return last_event_[j] + gap_[j]; }
  TraceSummary summary() const;

 private:
  SystemConfig cfg_;
  CostModel costs_;
  SimulationOptions options_;
  std::vector<double> gamma_;
  Rng rng_;
  AllocationState state_;
  std::vector<double> last_event_;
  std::vector<double> gap_;
  std::vector<Vector> post_;
  std::vector<AverageTracker> trackers_;
  std::vector<Vector> integral_;
  std::vector<Vector> event_sum_;
  std::vector<std::size_t> events_, clamps_, floors_, redraws_;
  std::size_t index_ = 0;
  EventRecord last_;
};

EventTrace run_simulation(const SystemConfig& cfg, const CostModel& costs, std::size_t events,
                          SimulationOptions options = {});

}  // namespace aimd
