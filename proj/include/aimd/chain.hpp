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
#include <cstdint>
#include <deque>
#include <vector>

#include "aimd/config.hpp"
#include "aimd/cost.hpp"
#include "aimd/engine.hpp"
#include "aimd/matrix.hpp"
#include "aimd/rng.hpp"

namespace aimd {

/// Everything the lifted chain needs to pick factors.
struct ChainModel {
  SystemConfig cfg;
  CostModel costs;
  std::vector<double> gamma;
  // frozen_lambda[j][i] replaces the place-dependent probability when set.
  std::vector<std::vector<double>> frozen_lambda;

  Layout layout() const { return {cfg.agents, cfg.window, cfg.resources.size()}; }
};

// Validates the config and resolves gamma.
ChainModel make_chain_model(const SystemConfig& cfg, const CostModel& costs);

/// State xi of the windowed chain plus the event clocks that decide which
/// resource fires next.
///
/// Block j of xi holds the partial averages of resource j's per-event
/// allocations: subblock r is the mean of the newest r samples.
struct WindowState {
  Layout layout;
  Vector xi;
  std::vector<std::deque<Vector>> history;  // newest first, T samples per resource
  std::vector<double> next_event;           // absolute time of each resource's next event
  std::size_t steps = 0;

  Vector subblock(std::size_t resource, std::size_t r) const;  // r is 1-based
  Vector raw(std::size_t resource) const { return subblock(resource, 1); }
  Vector average(std::size_t resource) const { return subblock(resource, layout.window); }
};

// `initial[j]` are strictly positive allocations with sum at most C^j; they are
// grown to the first capacity event and repeated to fill the history.
WindowState init_state(const ChainModel& model, const std::vector<Vector>& initial);

// xi rebuilt from the history buffers alone.
Vector recompute_xi(const WindowState& state);

struct ChainStep {
  std::size_t resource = 0;
  double time = 0.0;
  Vector lambda;
  BackoffPattern pattern;
  double gap = 0.0;  // until this resource's following event
};

// Place-dependent drop probabilities for the next event of `resource`, read
// from the T-th subblocks of every resource.
Vector chain_lambda(const ChainModel& model, const WindowState& state, std::size_t resource);

// Index of the resource whose capacity event fires next (lowest index on ties).
std::size_t next_resource(const WindowState& state);

// xi(k+1) = U(k) xi(k) for the next capacity event.
ChainStep step_chain(const ChainModel& model, WindowState& state, Rng& rng);

// The U factor a recorded step applied.
BlockMatrix step_matrix(const ChainModel& model, const ChainStep& step);

/// Cesaro mean of xi over the steps seen so far.
class ErgodicEstimate {
 public:
  explicit ErgodicEstimate(Layout layout);

  void add(const Vector& xi);
  std::size_t count() const { return count_; }
  Vector mean() const;
  // Per-resource per-agent means taken from the T-th subblocks.
  std::vector<Vector> agent_means() const;
  const Layout& layout() const { return layout_; }

 private:
  Layout layout_;
  Vector sum_;
  std::size_t count_ = 0;
};

struct ChainRun {
  std::vector<Vector> trajectory;  // xi(0) ... xi(steps), when kept
  std::vector<ChainStep> steps;    // when kept
  ErgodicEstimate ergodic;
  ErgodicEstimate first_half;   // xi(0) ... xi(steps / 2)
  ErgodicEstimate second_half;  // the remaining states
  WindowState final_state;
};

// max over resources and agents of |a - b| / ((a + b) / 2) between the
// per-agent means of the two halves.
double split_half_difference(const ChainRun& run);

struct ChainOptions {
  bool keep_trajectory = false;
  bool keep_steps = false;
  // Empty selects the configured initial allocation.
  std::vector<Vector> initial;
};

ChainRun run_chain(const ChainModel& model, std::size_t steps, std::uint64_t seed,
                   const ChainOptions& options = {});

// (1/(k+1)) sum_l xi(l); throws on an empty trajectory.
Vector ergodic_average(const std::vector<Vector>& trajectory);

struct UniquenessResult {
  double distance = 0.0;             // combined norm of the mean difference
  double normalized_distance = 0.0;  // max over resources of block norm_T / C^j
  std::vector<std::size_t> checkpoints;
  std::vector<double> checkpoint_distances;  // normalized, at each checkpoint
  ErgodicEstimate mean_a;
  ErgodicEstimate mean_b;
};

// Two independent chains from distinct initial allocations; distance between
// their ergodic means at `checkpoints` (and at the end).
UniquenessResult uniqueness_probe(const ChainModel& model, std::size_t steps, std::uint64_t seed_a,
                                  std::uint64_t seed_b, const std::vector<Vector>& initial_a,
                                  const std::vector<Vector>& initial_b, std::size_t checkpoints = 8);

struct ContractionReport {
  std::size_t horizon = 0;
  std::size_t samples = 0;
  double mean_ratio = 0.0;          // estimate of sum_H p_H(z) ||H(z-w)|| / ||z-w||
  double ratio_std_error = 0.0;
  double ratio_upper95 = 0.0;       // one-sided 95% upper confidence bound
  double full_backoff_frequency = 0.0;  // fraction of sampled products that are Y
  double full_backoff_std_error = 0.0;
  double full_backoff_bound = 0.0;  // prod_j (lambda_min^j)^n
  double mu = 0.0;
  double pair_mass = 0.0;           // estimate of sum_{H contracting by mu} p_H(z) p_H(w)
  double pair_mass_std_error = 0.0;
  double pair_mass_bound = 0.0;     // full_backoff_bound^2
};

// Number of combined events so that, using the smallest and largest Psi^j,
// k Psi_min >= Psi_max and every resource gets a chance to fire: (k+1) m.
std::size_t contraction_horizon(const SystemConfig& cfg);

// Monte Carlo over length-`horizon` products H sampled from the chain started
// at z. z.xi - w.xi is projected onto W; throws when the projection is zero.
ContractionReport contraction_on_average(const ChainModel& model, const WindowState& z, const WindowState& w,
                                         std::size_t horizon, std::size_t samples, std::uint64_t seed,
                                         double mu = 0.999);

}  // namespace aimd
