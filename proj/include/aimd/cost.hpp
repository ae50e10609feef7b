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
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace aimd {

/// Private cost f_i over the m resources held by one agent.
///
/// Implementations must be continuously differentiable, strictly convex and
/// strictly increasing in every coordinate on the open positive orthant; the
/// drop probability divides the gradient by the average allocation, so a
/// gradient that vanishes there would starve the back-off.
class CostFunction {
 public:
  virtual ~CostFunction() = default;

  virtual std::size_t dimension() const = 0;
  virtual double value(std::span<const double> x) const = 0;
  virtual double partial(std::size_t j, std::span<const double> x) const = 0;
  // d^2 f / dx_j^2, used by the convexity and grid-bound checks.
  virtual double second_partial(std::size_t j, std::span<const double> x) const = 0;
  virtual std::string family() const = 0;

  std::vector<double> gradient(std::span<const double> x) const;
};

/// f(x) = sum_j c_j x_j^2 / 2 + b_j x_j with c_j > 0 and b_j >= 0.
class QuadraticCost final : public CostFunction {
 public:
  QuadraticCost(std::vector<double> c, std::vector<double> b);

  std::size_t dimension() const override { return c_.size(); }
  double value(std::span<const double> x) const override;
  double partial(std::size_t j, std::span<const double> x) const override;
  double second_partial(std::size_t j, std::span<const double> x) const override;
  std::string family() const override { return "quadratic"; }

  const std::vector<double>& curvature() const { return c_; }
  const std::vector<double>& linear() const { return b_; }

 private:
  std::vector<double> c_;
  std::vector<double> b_;
};

/// f(x) = sum_j a_j exp(d_j x_j) with a_j, d_j > 0.
class ExponentialCost final : public CostFunction {
 public:
  ExponentialCost(std::vector<double> a, std::vector<double> d);

  std::size_t dimension() const override { return a_.size(); }
  double value(std::span<const double> x) const override;
  double partial(std::size_t j, std::span<const double> x) const override;
  double second_partial(std::size_t j, std::span<const double> x) const override;
  std::string family() const override { return "exponential"; }

  const std::vector<double>& scale() const { return a_; }
  const std::vector<double>& rate() const { return d_; }

 private:
  std::vector<double> a_;
  std::vector<double> d_;
};

/// One cost function per agent, all over the same resource count.
class CostModel {
 public:
  CostModel() = default;
  explicit CostModel(std::vector<std::shared_ptr<const CostFunction>> agents);

  std::size_t agents() const { return agents_.size(); }
  std::size_t resources() const { return agents_.empty() ? 0 : agents_.front()->dimension(); }
  const CostFunction& operator[](std::size_t i) const { return *agents_.at(i); }

  // n copies of the same function.
  static CostModel identical(std::shared_ptr<const CostFunction> f, std::size_t n);

 private:
  std::vector<std::shared_ptr<const CostFunction>> agents_;
};

// Throw std::domain_error on a negative coordinate or a dimension mismatch.
double eval_cost(const CostModel& costs, std::size_t agent, std::span<const double> x);
std::vector<double> eval_gradient(const CostModel& costs, std::size_t agent,
                                  std::span<const double> x);

// max_j |analytic partial - central difference with step h|.
double check_gradient(const CostFunction& f, std::span<const double> x, double h);

}  // namespace aimd
