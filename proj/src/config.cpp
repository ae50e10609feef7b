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

#include "aimd/config.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace aimd {

namespace {

std::string join(const std::vector<std::string>& items) {
  std::ostringstream out;
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (k) out << "; ";
    out << items[k];
  }
  return out.str();
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : std::runtime_error("invalid configuration: " + join(violations)),
      violations_(std::move(violations)) {}

std::vector<std::string> config_violations(const SystemConfig& cfg) {
  std::vector<std::string> out;
  if (cfg.agents < 1) out.emplace_back("agents: agent count must be >= 1");
  if (cfg.window < 1) out.emplace_back("window: window must be >= 1");
  if (cfg.resources.empty()) out.emplace_back("resources: resource count must be >= 1");

  for (std::size_t j = 0; j < cfg.resources.size(); ++j) {
    const auto& r = cfg.resources[j];
    const std::string field = "resources[" + std::to_string(j) + "].";
    if (!(r.capacity > 0.0) || !std::isfinite(r.capacity))
      out.push_back(field + "capacity: capacity must be > 0");
    if (!(r.alpha > 0.0) || !std::isfinite(r.alpha))
      out.push_back(field + "alpha: alpha must be > 0");
    if (!(r.beta > 0.0 && r.beta < 1.0)) out.push_back(field + "beta: beta out of (0,1)");
    if (r.gamma && !(*r.gamma > 0.0 && std::isfinite(*r.gamma)))
      out.push_back(field + "gamma: gamma must be > 0");
    if (!(r.lambda_min > 0.0 && r.lambda_min <= r.lambda_max && r.lambda_max < 1.0))
      out.push_back(field + "lambda: need 0 < lambda_min <= lambda_max < 1");
  }

  if (!cfg.initial.empty()) {
    if (cfg.initial.size() != cfg.resources.size()) {
      out.emplace_back("initial: expected one row per resource");
    } else {
      for (std::size_t j = 0; j < cfg.initial.size(); ++j) {
        const auto& row = cfg.initial[j];
        const std::string field = "initial[" + std::to_string(j) + "]";
        if (row.size() != cfg.agents) {
          out.push_back(field + ": expected one entry per agent");
          continue;
        }
        bool positive = true;
        for (double v : row) positive = positive && v > 0.0 && std::isfinite(v);
        if (!positive) out.push_back(field + ": allocations must be strictly positive");
        const double total = std::accumulate(row.begin(), row.end(), 0.0);
        if (total > cfg.resources[j].capacity)
          out.push_back(field + ": allocations exceed capacity");
      }
    }
  }
  return out;
}

SystemConfig validate_config(SystemConfig cfg) {
  auto violations = config_violations(cfg);
  if (!violations.empty()) throw ConfigError(std::move(violations));
  return cfg;
}

std::vector<Vector> initial_allocations(const SystemConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(cfg.agents);
  std::vector<Vector> out;
  out.reserve(cfg.resources.size());
  for (std::size_t j = 0; j < cfg.resources.size(); ++j) {
    if (cfg.initial.empty()) {
      out.push_back(Vector::Constant(n, cfg.resources[j].capacity / (2.0 * double(n))));
    } else {
      out.push_back(Eigen::Map<const Vector>(cfg.initial[j].data(), n));
    }
  }
  return out;
}

std::vector<Vector> first_event_allocations(const SystemConfig& cfg,
                                            const std::vector<Vector>& initial) {
  std::vector<Vector> out;
  out.reserve(initial.size());
  for (std::size_t j = 0; j < initial.size(); ++j) {
    const double slack = cfg.resources[j].capacity - initial[j].sum();
    out.push_back(initial[j].array() + slack / double(cfg.agents));
  }
  return out;
}

const char* to_string(AverageMode mode) {
  return mode == AverageMode::cumulative ? "cumulative" : "windowed";
}

const char* to_string(WarmUp warmup) {
  return warmup == WarmUp::partial ? "partial" : "seeded";
}

}  // namespace aimd
