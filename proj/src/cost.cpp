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

#include "aimd/cost.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aimd {

std::vector<double> CostFunction::gradient(std::span<const double> x) const {
  std::vector<double> g(dimension());
  for (std::size_t j = 0; j < g.size(); ++j) g[j] = partial(j, x);
  return g;
}

QuadraticCost::QuadraticCost(std::vector<double> c, std::vector<double> b)
    : c_(std::move(c)), b_(std::move(b)) {
  if (c_.empty() || c_.size() != b_.size())
    throw std::invalid_argument("quadratic cost: c and b must be non-empty and equal length");
  for (std::size_t j = 0; j < c_.size(); ++j) {
    if (!(c_[j] > 0.0) || !std::isfinite(c_[j]))
      throw std::invalid_argument("quadratic cost: curvature c must be > 0 (strict convexity)");
    if (!(b_[j] >= 0.0) || !std::isfinite(b_[j]))
      throw std::invalid_argument("quadratic cost: linear term b must be >= 0");
  }
}

double QuadraticCost::value(std::span<const double> x) const {
  double total = 0.0;
  for (std::size_t j = 0; j < c_.size(); ++j) total += 0.5 * c_[j] * x[j] * x[j] + b_[j] * x[j];
  return total;
}

double QuadraticCost::partial(std::size_t j, std::span<const double> x) const {
  return c_[j] * x[j] + b_[j];
}

double QuadraticCost::second_partial(std::size_t j, std::span<const double>) const {
  return c_[j];
}

ExponentialCost::ExponentialCost(std::vector<double> a, std::vector<double> d)
    : a_(std::move(a)), d_(std::move(d)) {
  if (a_.empty() || a_.size() != d_.size())
    throw std::invalid_argument("exponential cost: a and d must be non-empty and equal length");
  for (std::size_t j = 0; j < a_.size(); ++j) {
    if (!(a_[j] > 0.0) || !(d_[j] > 0.0) || !std::isfinite(a_[j]) || !std::isfinite(d_[j]))
      throw std::invalid_argument("exponential cost: a and d must be > 0");
  }
}

double ExponentialCost::value(std::span<const double> x) const {
  double total = 0.0;
  for (std::size_t j = 0; j < a_.size(); ++j) total += a_[j] * std::exp(d_[j] * x[j]);
  return total;
}

double ExponentialCost::partial(std::size_t j, std::span<const double> x) const {
  return a_[j] * d_[j] * std::exp(d_[j] * x[j]);
}

double ExponentialCost::second_partial(std::size_t j, std::span<const double> x) const {
  return a_[j] * d_[j] * d_[j] * std::exp(d_[j] * x[j]);
}

CostModel::CostModel(std::vector<std::shared_ptr<const CostFunction>> agents)
    : agents_(std::move(agents)) {
  if (agents_.empty()) throw std::invalid_argument("cost model: at least one agent required");
  const auto m = agents_.front()->dimension();
  for (const auto& f : agents_) {
    if (!f) throw std::invalid_argument("cost model: null cost function");
    if (f->dimension() != m)
      throw std::invalid_argument("cost model: agents disagree on resource count");
  }
}

CostModel CostModel::identical(std::shared_ptr<const CostFunction> f, std::size_t n) {
  return CostModel(std::vector<std::shared_ptr<const CostFunction>>(n, std::move(f)));
}

namespace {

void check_domain(const CostModel& costs, std::size_t agent, std::span<const double> x) {
  if (agent >= costs.agents()) throw std::out_of_range("cost model: agent index out of range");
  if (x.size() != costs.resources())
    throw std::domain_error("cost model: allocation has wrong dimension");
  for (double v : x) {
    if (v < 0.0 || std::isnan(v)) throw std::domain_error("cost model: negative allocation");
  }
}

}  // namespace

double eval_cost(const CostModel& costs, std::size_t agent, std::span<const double> x) {
  check_domain(costs, agent, x);
  return costs[agent].value(x);
}

std::vector<double> eval_gradient(const CostModel& costs, std::size_t agent,
                                  std::span<const double> x) {
  check_domain(costs, agent, x);
  return costs[agent].gradient(x);
}

double check_gradient(const CostFunction& f, std::span<const double> x, double h) {
  std::vector<double> probe(x.begin(), x.end());
  double worst = 0.0;
  for (std::size_t j = 0; j < probe.size(); ++j) {
    const double saved = probe[j];
    probe[j] = saved + h;
    const double up = f.value(probe);
    probe[j] = saved - h;
    const double down = f.value(probe);
    probe[j] = saved;
    const double numeric = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(f.partial(j, x) - numeric));
  }
  return worst;
}

}  // namespace aimd
