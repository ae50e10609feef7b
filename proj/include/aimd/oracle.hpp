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
#include <stdexcept>
#include <vector>

#include "aimd/config.hpp"
#include "aimd/cost.hpp"

namespace aimd {

/// Minimizer of sum_i f_i(y_i) subject to sum_i y_i^j = C^j and y >= 0.
struct OptimalAllocation {
  std::vector<Vector> y;    // y[j][i]
  double objective = 0.0;
  std::vector<double> kkt;  // per resource
  std::size_t iterations = 0;
};

// Agents whose share exceeds this fraction of capacity count as active.
inline constexpr double kActiveFraction = 1e-7;

// Euclidean projection onto {y >= 0, sum y = capacity} by sort and threshold.
Vector project_capacity_simplex(const Vector& v, double capacity);

double social_cost(const CostModel& costs, const std::vector<Vector>& y);

struct SolverOptions {
  double step = 1.0;       // initial step, adapted by backtracking
  double tol = 1e-10;      // on ||y - P(y - grad)||_inf
  std::size_t max_iters = 200000;
  std::vector<Vector> start;  // feasible start; empty selects the equal split
};

class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, OptimalAllocation last)
      : std::runtime_error(what), last_(std::move(last)) {}
  const OptimalAllocation& last_iterate() const { return last_; }

 private:
  OptimalAllocation last_;
};

OptimalAllocation solve_optimal(const SystemConfig& cfg, const CostModel& costs, const SolverOptions& options = {});

// Per resource: spread of the active agents' marginal costs around their
// median, plus how far any inactive agent's marginal cost falls below it.
// Throws std::invalid_argument when y is infeasible.
std::vector<double> kkt_residual(const SystemConfig& cfg, const CostModel& costs, const std::vector<Vector>& y);

// Exhaustive search over a grid with `resolution` points per free coordinate.
// Requires n * m <= 6 and at most kMaxGridPoints grid points overall.
inline constexpr double kMaxGridPoints = 2e7;
OptimalAllocation brute_force_small(const SystemConfig& cfg, const CostModel& costs, std::size_t resolution);

}  // namespace aimd
