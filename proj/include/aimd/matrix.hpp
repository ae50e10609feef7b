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
#include <optional>
#include <span>
#include <vector>

#include "aimd/config.hpp"
#include "aimd/rng.hpp"

namespace aimd {

/// Which agents multiply their demand by beta at one capacity event.
struct BackoffPattern {
  double beta = 0.5;
  std::vector<bool> backed_off;

  std::size_t agents() const { return backed_off.size(); }
  bool any() const;
  bool all() const;
  // Per-agent factor, beta for agents that backed off and 1 otherwise.
  Vector factors() const;

  static BackoffPattern none(double beta, std::size_t n);
  static BackoffPattern full(double beta, std::size_t n);
  // Validates every entry is beta or 1.
  static BackoffPattern from_factors(const Vector& factors, double beta);
};

/// Column-stochastic AIMD matrix diag(b) + e (e - b)^T / n for one pattern.
class AimdMatrix {
 public:
  explicit AimdMatrix(BackoffPattern pattern);

  const Matrix& dense() const { return dense_; }
  const BackoffPattern& pattern() const { return pattern_; }
  std::size_t agents() const { return pattern_.agents(); }
  bool is_full_backoff() const { return pattern_.all(); }

 private:
  BackoffPattern pattern_;
  Matrix dense_;
};

AimdMatrix build_aimd_matrix(const Vector& factors, double beta);
AimdMatrix build_aimd_matrix(const BackoffPattern& pattern);
// The all-back-off matrix; requires 0 < beta < 1.
AimdMatrix full_backoff_matrix(double beta, std::size_t n);

// Probability of `pattern` when agent i backs off independently with lambda[i].
double matrix_probability(const BackoffPattern& pattern, std::span<const double> lambda);
// Draws one uniform per agent, in agent order.
BackoffPattern sample_pattern(double beta, std::span<const double> lambda, Rng& rng);

/// Tn x Tn matrix propagating the vector of partial averages
/// [x(k), (x(k)+x(k-1))/2, ..., (x(k)+...+x(k-T+1))/T] across one event.
/// Also used for products of such matrices.
class LiftedMatrix {
 public:
  LiftedMatrix(Matrix dense, std::size_t agents, std::size_t window, bool full_backoff);

  const Matrix& dense() const { return dense_; }
  std::size_t agents() const { return agents_; }
  std::size_t window() const { return window_; }
  // True when at least one factor was built from the all-back-off matrix.
  bool contains_full_backoff() const { return full_backoff_; }

  static LiftedMatrix identity(std::size_t agents, std::size_t window);

 private:
  Matrix dense_;
  std::size_t agents_;
  std::size_t window_;
  bool full_backoff_;
};

LiftedMatrix build_lifted(const AimdMatrix& a, std::size_t window);
inline LiftedMatrix build_D(const AimdMatrix& a, std::size_t window) { return build_lifted(a, window); }
// E^j: the lifted full-back-off matrix.
LiftedMatrix build_E(double beta, std::size_t agents, std::size_t window);

// factors[0] is applied first: returns factors.back() * ... * factors.front().
LiftedMatrix lifted_product(std::span<const LiftedMatrix> factors);

/// Block-diagonal operator on the stacked state of m resources. Blocks that
/// were never touched are the identity and are not stored.
class BlockMatrix {
 public:
  BlockMatrix(std::size_t resources, std::size_t agents, std::size_t window);

  static BlockMatrix identity(std::size_t resources, std::size_t agents, std::size_t window);

  std::size_t resources() const { return blocks_.size(); }
  std::size_t agents() const { return agents_; }
  std::size_t window() const { return window_; }
  std::size_t dimension() const { return blocks_.size() * agents_ * window_; }

  void set_block(std::size_t j, const LiftedMatrix& block);
  // nullopt means the identity block.
  const std::optional<Matrix>& block(std::size_t j) const { return blocks_.at(j); }
  bool block_contains_full_backoff(std::size_t j) const { return full_backoff_.at(j); }
  // Every resource block contains a full back-off factor (a "Y" product).
  bool is_full_backoff_product() const;
  std::size_t active_blocks() const;

  Vector apply(const Vector& xi) const;
  Matrix dense() const;
  // this * rhs, both block-diagonal with the same layout.
  BlockMatrix operator*(const BlockMatrix& rhs) const;

 private:
  std::size_t agents_;
  std::size_t window_;
  std::vector<std::optional<Matrix>> blocks_;
  std::vector<bool> full_backoff_;
};

// U for a capacity event of resource j: lifted block at j, identity elsewhere.
BlockMatrix build_U(const LiftedMatrix& lifted, std::size_t resource, std::size_t resources);

// Products of U factors, factors[0] applied first.
BlockMatrix block_product(std::span<const BlockMatrix> factors);

double norm_1(const Vector& v);
// max over the T subblocks of their 1-norms; throws on a length not divisible by n.
double norm_T(const Vector& z, std::size_t agents);
// max over resource blocks of norm_T.
double norm_combined(const Vector& y, std::size_t agents, std::size_t window);

// Subtracts the mean of every length-n subblock, landing in the subspace of
// vectors whose subblocks each sum to zero.
Vector project_W(const Vector& z, std::size_t agents);

enum class Space { full, W };

struct Layout {
  std::size_t agents = 1;
  std::size_t window = 1;
  std::size_t resources = 1;
  std::size_t dimension() const { return agents * window * resources; }
};

// Norm matching the layout: norm_combined (which reduces to norm_T and norm_1).
double layout_norm(const Vector& v, const Layout& layout);

struct NormReport {
  double max_ratio = 0.0;
  Vector witness;
  std::size_t trials = 0;      // samples evaluated; 0 when W is trivial (n = 1)
  bool non_expansive = true;   // max_ratio <= 1 + kNonExpansiveTolerance
  bool strict = true;          // max_ratio <= 1 - kStrictMargin
};

inline constexpr double kNonExpansiveTolerance = 1e-12;
inline constexpr double kStrictMargin = 1e-10;

// Samples `trials` unit vectors (mixed dense and sparse), projected into W
// when requested, and reports the largest ||M z|| / ||z|| seen.
NormReport verify_norm_property(const Matrix& m, const Layout& layout, Space space,
                                std::size_t trials, Rng& rng);

}  // namespace aimd
