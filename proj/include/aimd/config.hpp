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
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace aimd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Which running average feeds the drop probability.
enum class AverageMode { cumulative, windowed };

// How the windowed average behaves before `window` samples exist.
//   partial: average over the samples seen so far.
//   seeded:  history pre-filled with the first-event allocation, which is the
//            convention of the lifted Markov chain.
enum class WarmUp { partial, seeded };

struct ResourceParams {
  double capacity = 1.0;
  double alpha = 0.1;   // additive gain, units per second
  double beta = 0.5;    // multiplicative back-off factor
  std::optional<double> gamma;  // normalization factor; empty means auto
  double lambda_min = 0.05;
  double lambda_max = 0.95;
};

struct SystemConfig {
  std::size_t agents = 1;
  std::size_t window = 1;
  std::vector<ResourceParams> resources;
  AverageMode average_mode = AverageMode::windowed;
  WarmUp warmup = WarmUp::partial;
  std::uint64_t seed = 0;
  // initial[j][i]; empty selects capacity/(2n) for every agent.
  std::vector<std::vector<double>> initial;

  std::size_t resource_count() const { return resources.size(); }
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

// Every violated invariant, each prefixed with the offending field.
std::vector<std::string> config_violations(const SystemConfig& cfg);

// Returns the config unchanged, or throws ConfigError carrying the full list.
SystemConfig validate_config(SystemConfig cfg);

// Starting allocation x^j(t0) per resource.
std::vector<Vector> initial_allocations(const SystemConfig& cfg);

// Allocation reached at the first capacity event of each resource when all
// agents grow from `initial` at the same rate.
std::vector<Vector> first_event_allocations(const SystemConfig& cfg,
                                            const std::vector<Vector>& initial);

const char* to_string(AverageMode mode);
const char* to_string(WarmUp warmup);

}  // namespace aimd
