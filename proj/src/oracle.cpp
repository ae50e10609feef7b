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

#include "aimd/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace aimd {

Vector project_capacity_simplex(const Vector& v, double capacity) {
  if (!(capacity > 0.0)) throw std::invalid_argument("simplex projection: capacity must be > 0");
  std::vector<double> sorted(v.data(), v.data() + v.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double running = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    running += sorted[k];
    const double candidate = (running - capacity) / double(k + 1);
    if (sorted[k] - candidate > 0.0) theta = candidate;
  }
  return (v.array() - theta).max(0.0);
}

namespace {

std::vector<double> agent_point(const std::vector<Vector>& y, std::size_t agent) {
  std::vector<double> x(y.size());
  for (std::size_t j = 0; j < y.size(); ++j) x[j] = y[j][Eigen::Index(agent)];
  return x;
}

std::vector<Vector> gradient(const CostModel& costs, const std::vector<Vector>& y) {
  std::vector<Vector> g(y.size(), Vector(y.front().size()));
  for (std::size_t i = 0; i < costs.agents(); ++i) {
    const auto x = agent_point(y, i);
    for (std::size_t j = 0; j < y.size(); ++j) g[j][Eigen::Index(i)] = costs[i].partial(j, x);
  }
  return g;
}

std::vector<Vector> projected_step(const SystemConfig& cfg, const std::vector<Vector>& y,
                                   const std::vector<Vector>& g, double step) {
  std::vector<Vector> out(y.size());
  for (std::size_t j = 0; j < y.size(); ++j)
    out[j] = project_capacity_simplex(y[j] - step * g[j], cfg.resources[j].capacity);
  return out;
}

double dot(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j].dot(b[j]);
  return s;
}

std::vector<Vector> minus(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  std::vector<Vector> out(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = a[j] - b[j];
  return out;
}

double max_abs(const std::vector<Vector>& a) {
  double m = 0.0;
  for (const auto& v : a) m = std::max(m, v.lpNorm<Eigen::Infinity>());
  return m;
}

void check_shape(const SystemConfig& cfg, const CostModel& costs) {
  if (costs.agents() != cfg.agents || costs.resources() != cfg.resources.size())
    throw std::invalid_argument("oracle: cost model does not match the configuration");
}

}  // namespace

double social_cost(const CostModel& costs, const std::vector<Vector>& y) {
  double total = 0.0;
  for (std::size_t i = 0; i < costs.agents(); ++i) total += costs[i].value(agent_point(y, i));
  return total;
}

OptimalAllocation solve_optimal(const SystemConfig& cfg, const CostModel& costs, const SolverOptions& options) {
  validate_config(cfg);
  check_shape(cfg, costs);
  const auto n = Eigen::Index(cfg.agents);
  std::vector<Vector> y = options.start;
  if (y.empty()) {
    for (const auto& r : cfg.resources) y.push_back(Vector::Constant(n, r.capacity / double(n)));
  } else {
    for (std::size_t j = 0; j < y.size(); ++j) y[j] = project_capacity_simplex(y[j], cfg.resources[j].capacity);
  }

  OptimalAllocation out;
  double step = options.step;
  for (std::size_t it = 0; it < options.max_iters; ++it) {
    const auto g = gradient(costs, y);
    if (max_abs(minus(y, projected_step(cfg, y, g, 1.0))) < options.tol) {
      out.y = y;
      out.objective = social_cost(costs, y);
      out.kkt = kkt_residual(cfg, costs, y);
      out.iterations = it;
      return out;
    }
    // Backtracking on the quadratic upper model. For convex f the test on
    // gradient differences implies the test on values and does not suffer
    // from cancellation once f stops changing in the last digits.
    for (;;) {
      auto candidate = projected_step(cfg, y, g, step);
      const auto delta = minus(candidate, y);
      const double curvature = dot(minus(gradient(costs, candidate), g), delta);
      if (curvature <= dot(delta, delta) / (2.0 * step) || step < 1e-30) {
        y = std::move(candidate);
        break;
      }
      step *= 0.5;
    }
    step *= 2.0;
  }
  out.y = y;
  out.objective = social_cost(costs, y);
  out.iterations = options.max_iters;
  throw NonConvergence("solve_optimal: no convergence within the iteration limit", out);
}

std::vector<double> kkt_residual(const SystemConfig& cfg, const CostModel& costs, const std::vector<Vector>& y) {
  check_shape(cfg, costs);
  if (y.size() != cfg.resources.size()) throw std::invalid_argument("kkt: one allocation per resource");
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double c = cfg.resources[j].capacity;
    if (y[j].size() != Eigen::Index(cfg.agents) || std::abs(y[j].sum() - c) > 1e-9 * c ||
        (y[j].array() < -1e-12).any())
      throw std::invalid_argument("kkt: allocation is not feasible");
  }
  const auto g = gradient(costs, y);
  std::vector<double> out(y.size(), 0.0);
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double threshold = kActiveFraction * cfg.resources[j].capacity;
    std::vector<double> active;
    for (Eigen::Index i = 0; i < y[j].size(); ++i)
      if (y[j][i] > threshold) active.push_back(g[j][i]);
    std::sort(active.begin(), active.end());
    const std::size_t h = active.size() / 2;
    const double median = active.size() % 2 ? active[h] : 0.5 * (active[h - 1] + active[h]);
    double res = 0.0;
    for (Eigen::Index i = 0; i < y[j].size(); ++i) {
      if (y[j][i] > threshold) {
        res = std::max(res, std::abs(g[j][i] - median));
      } else {
        res = std::max(res, median - g[j][i]);
      }
    }
    out[j] = res;
  }
  return out;
}

OptimalAllocation brute_force_small(const SystemConfig& cfg, const CostModel& costs, std::size_t resolution) {
  validate_config(cfg);
  check_shape(cfg, costs);
  const std::size_t n = cfg.agents;
  const std::size_t m = cfg.resources.size();
  if (n * m > 6) throw std::invalid_argument("brute force: n * m must be <= 6");
  if (resolution < 2) throw std::invalid_argument("brute force: resolution must be >= 2");
  if (std::pow(double(resolution), double(m * (n - 1))) > kMaxGridPoints)
    throw std::invalid_argument("brute force: grid too large");

  // Feasible grid points of each resource: the first n-1 agents on the grid,
  // the last one takes the remainder.
  std::vector<std::vector<Vector>> options(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double c = cfg.resources[j].capacity;
    const double h = c / double(resolution - 1);
    std::vector<std::size_t> idx(n > 0 ? n - 1 : 0, 0);
    for (;;) {
      Vector v(static_cast<Eigen::Index>(n));
      double used = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        v[Eigen::Index(i)] = double(idx[i]) * h;
        used += v[Eigen::Index(i)];
      }
      if (used <= c * (1.0 + 1e-12)) {
        v[Eigen::Index(n - 1)] = std::max(0.0, c - used);
        options[j].push_back(v);
      }
      std::size_t k = 0;
      while (k < idx.size() && ++idx[k] == resolution) idx[k++] = 0;
      if (k == idx.size()) break;
    }
  }

  OptimalAllocation best;
  best.objective = std::numeric_limits<double>::infinity();
  std::vector<Vector> current(m);
  std::function<void(std::size_t)> search = [&](std::size_t j) {
    if (j == m) {
      const double f = social_cost(costs, current);
      if (f < best.objective) {
        best.objective = f;
        best.y = current;
      }
      return;
    }
    for (const auto& v : options[j]) {
      current[j] = v;
      search(j + 1);
    }
  };
  search(0);
  best.kkt = kkt_residual(cfg, costs, best.y);
  return best;
}

}  // namespace aimd
