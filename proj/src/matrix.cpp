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

#include "aimd/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aimd {

bool BackoffPattern::any() const {
  return std::any_of(backed_off.begin(), backed_off.end(), [](bool b) { return b; });
}

bool BackoffPattern::all() const {
  return std::all_of(backed_off.begin(), backed_off.end(), [](bool b) { return b; });
}

Vector BackoffPattern::factors() const {
  Vector out(static_cast<Eigen::Index>(backed_off.size()));
  for (std::size_t i = 0; i < backed_off.size(); ++i) out[Eigen::Index(i)] = backed_off[i] ? beta : 1.0;
  return out;
}

BackoffPattern BackoffPattern::none(double beta, std::size_t n) {
  return BackoffPattern{beta, std::vector<bool>(n, false)};
}

BackoffPattern BackoffPattern::full(double beta, std::size_t n) {
  return BackoffPattern{beta, std::vector<bool>(n, true)};
}

BackoffPattern BackoffPattern::from_factors(const Vector& factors, double beta) {
  BackoffPattern p{beta, std::vector<bool>(std::size_t(factors.size()))};
  for (Eigen::Index i = 0; i < factors.size(); ++i) {
    if (factors[i] == beta) {
      p.backed_off[std::size_t(i)] = true;
    } else if (factors[i] != 1.0) {
      throw std::invalid_argument("back-off pattern: entries must equal beta or 1");
    }
  }
  return p;
}

AimdMatrix::AimdMatrix(BackoffPattern pattern) : pattern_(std::move(pattern)) {
  const auto n = static_cast<Eigen::Index>(pattern_.agents());
  if (n == 0) throw std::invalid_argument("AIMD matrix: empty pattern");
  const Vector b = pattern_.factors();
  const Vector loss = (Vector::Ones(n) - b) / double(n);
  dense_ = Matrix(b.asDiagonal());
  dense_.rowwise() += loss.transpose();
}

AimdMatrix build_aimd_matrix(const Vector& factors, double beta) {
  return AimdMatrix(BackoffPattern::from_factors(factors, beta));
}

AimdMatrix build_aimd_matrix(const BackoffPattern& pattern) { return AimdMatrix(pattern); }

AimdMatrix full_backoff_matrix(double beta, std::size_t n) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("full back-off: beta out of (0,1)");
  return AimdMatrix(BackoffPattern::full(beta, n));
}

double matrix_probability(const BackoffPattern& pattern, std::span<const double> lambda) {
  if (lambda.size() != pattern.agents())
    throw std::invalid_argument("matrix probability: one lambda per agent required");
  double p = 1.0;
  for (std::size_t i = 0; i < lambda.size(); ++i) p *= pattern.backed_off[i] ? lambda[i] : 1.0 - lambda[i];
  return p;
}

BackoffPattern sample_pattern(double beta, std::span<const double> lambda, Rng& rng) {
  BackoffPattern p{beta, std::vector<bool>(lambda.size())};
  for (std::size_t i = 0; i < lambda.size(); ++i) p.backed_off[i] = rng.bernoulli(lambda[i]);
  return p;
}

LiftedMatrix::LiftedMatrix(Matrix dense, std::size_t agents, std::size_t window, bool full_backoff)
    : dense_(std::move(dense)), agents_(agents), window_(window), full_backoff_(full_backoff) {
  const auto dim = Eigen::Index(agents * window);
  if (dense_.rows() != dim || dense_.cols() != dim)
    throw std::invalid_argument("lifted matrix: dimension must be window * agents");
}

LiftedMatrix LiftedMatrix::identity(std::size_t agents, std::size_t window) {
  const auto dim = Eigen::Index(agents * window);
  return LiftedMatrix(Matrix::Identity(dim, dim), agents, window, false);
}

LiftedMatrix build_lifted(const AimdMatrix& a, std::size_t window) {
  if (window < 1) throw std::invalid_argument("lifted matrix: window must be >= 1");
  const auto n = Eigen::Index(a.agents());
  const auto dim = n * Eigen::Index(window);
  Matrix d = Matrix::Zero(dim, dim);
  // Row block r (1-based) is the mean of the newest r samples: the fresh sample
  // A z_1 enters with weight 1/r and the previous (r-1)-mean with (r-1)/r.
  for (Eigen::Index r = 1; r <= Eigen::Index(window); ++r) {
    const double rr = double(r);
    d.block((r - 1) * n, 0, n, n) += a.dense() / rr;
    if (r >= 2) d.block((r - 1) * n, (r - 2) * n, n, n) += Matrix::Identity(n, n) * ((rr - 1.0) / rr);
  }
  return LiftedMatrix(std::move(d), a.agents(), window, a.is_full_backoff());
}

LiftedMatrix build_E(double beta, std::size_t agents, std::size_t window) {
  return build_lifted(full_backoff_matrix(beta, agents), window);
}

LiftedMatrix lifted_product(std::span<const LiftedMatrix> factors) {
  if (factors.empty()) throw std::invalid_argument("lifted product: no factors");
  const auto n = factors.front().agents();
  const auto t = factors.front().window();
  Matrix acc = factors.front().dense();
  bool full = factors.front().contains_full_backoff();
  for (std::size_t k = 1; k < factors.size(); ++k) {
    if (factors[k].agents() != n || factors[k].window() != t)
      throw std::invalid_argument("lifted product: size mismatch");
    acc = factors[k].dense() * acc;
    full = full || factors[k].contains_full_backoff();
  }
  return LiftedMatrix(std::move(acc), n, t, full);
}

BlockMatrix::BlockMatrix(std::size_t resources, std::size_t agents, std::size_t window)
    : agents_(agents), window_(window), blocks_(resources), full_backoff_(resources, false) {
  if (resources < 1) throw std::invalid_argument("block matrix: resource count must be >= 1");
}

BlockMatrix BlockMatrix::identity(std::size_t resources, std::size_t agents, std::size_t window) {
  return BlockMatrix(resources, agents, window);
}

void BlockMatrix::set_block(std::size_t j, const LiftedMatrix& block) {
  if (j >= blocks_.size()) throw std::out_of_range("block matrix: resource index out of range");
  if (block.agents() != agents_ || block.window() != window_)
    throw std::invalid_argument("block matrix: block size mismatch");
  blocks_[j] = block.dense();
  full_backoff_[j] = block.contains_full_backoff();
}

bool BlockMatrix::is_full_backoff_product() const {
  return std::all_of(full_backoff_.begin(), full_backoff_.end(), [](bool b) { return b; });
}

std::size_t BlockMatrix::active_blocks() const {
  return std::size_t(std::count_if(blocks_.begin(), blocks_.end(), [](const auto& b) { return b.has_value(); }));
}

Vector BlockMatrix::apply(const Vector& xi) const {
  const auto width = Eigen::Index(agents_ * window_);
  if (xi.size() != Eigen::Index(dimension())) throw std::invalid_argument("block matrix: state length mismatch");
  Vector out = xi;
  for (std::size_t j = 0; j < blocks_.size(); ++j) {
    if (blocks_[j]) out.segment(Eigen::Index(j) * width, width) = *blocks_[j] * xi.segment(Eigen::Index(j) * width, width);
  }
  return out;
}

Matrix BlockMatrix::dense() const {
  const auto width = Eigen::Index(agents_ * window_);
  const auto dim = Eigen::Index(dimension());
  Matrix out = Matrix::Identity(dim, dim);
  for (std::size_t j = 0; j < blocks_.size(); ++j) {
    if (blocks_[j]) out.block(Eigen::Index(j) * width, Eigen::Index(j) * width, width, width) = *blocks_[j];
  }
  return out;
}

BlockMatrix BlockMatrix::operator*(const BlockMatrix& rhs) const {
  if (rhs.resources() != resources() || rhs.agents_ != agents_ || rhs.window_ != window_)
    throw std::invalid_argument("block matrix: size mismatch");
  BlockMatrix out(resources(), agents_, window_);
  for (std::size_t j = 0; j < blocks_.size(); ++j) {
    const auto& l = blocks_[j];
    const auto& r = rhs.blocks_[j];
    if (l && r) {
      out.blocks_[j] = Matrix(*l * *r);
    } else if (l) {
      out.blocks_[j] = l;
    } else if (r) {
      out.blocks_[j] = r;
    }
    out.full_backoff_[j] = full_backoff_[j] || rhs.full_backoff_[j];
  }
  return out;
}

BlockMatrix build_U(const LiftedMatrix& lifted, std::size_t resource, std::size_t resources) {
  if (resource >= resources) throw std::out_of_range("U: resource index out of range");
  BlockMatrix u(resources, lifted.agents(), lifted.window());
  u.set_block(resource, lifted);
  return u;
}

BlockMatrix block_product(std::span<const BlockMatrix> factors) {
  if (factors.empty()) throw std::invalid_argument("block product: no factors");
  BlockMatrix acc = factors.front();
  for (std::size_t k = 1; k < factors.size(); ++k) acc = factors[k] * acc;
  return acc;
}

double norm_1(const Vector& v) { return v.lpNorm<1>(); }

double norm_T(const Vector& z, std::size_t agents) {
  const auto n = Eigen::Index(agents);
  if (n == 0 || z.size() % n != 0) throw std::invalid_argument("norm_T: length not divisible by agent count");
  double best = 0.0;
  for (Eigen::Index s = 0; s < z.size(); s += n) best = std::max(best, z.segment(s, n).lpNorm<1>());
  return best;
}

double norm_combined(const Vector& y, std::size_t agents, std::size_t window) {
  const auto width = Eigen::Index(agents * window);
  if (width == 0 || y.size() % width != 0)
    throw std::invalid_argument("norm_combined: length not divisible by window * agents");
  double best = 0.0;
  for (Eigen::Index s = 0; s < y.size(); s += width) best = std::max(best, norm_T(y.segment(s, width), agents));
  return best;
}

Vector project_W(const Vector& z, std::size_t agents) {
  const auto n = Eigen::Index(agents);
  if (n == 0 || z.size() % n != 0) throw std::invalid_argument("project_W: length not divisible by agent count");
  Vector out = z;
  for (Eigen::Index s = 0; s < z.size(); s += n) out.segment(s, n).array() -= z.segment(s, n).mean();
  return out;
}

double layout_norm(const Vector& v, const Layout& layout) {
  return norm_combined(v, layout.agents, layout.window);
}

namespace {

Vector sample_direction(const Layout& layout, Space space, std::size_t trial, Rng& rng) {
  const auto dim = Eigen::Index(layout.dimension());
  const auto n = Eigen::Index(layout.agents);
  Vector z = Vector::Zero(dim);
  switch (trial % 3) {
    case 0:  // dense uniform
      for (Eigen::Index k = 0; k < dim; ++k) z[k] = 2.0 * rng.uniform() - 1.0;
      break;
    case 1:  // dense signs
      for (Eigen::Index k = 0; k < dim; ++k) z[k] = rng.uniform() < 0.5 ? -1.0 : 1.0;
      break;
    default: {  // a few subblocks carrying a two-point difference
      const Eigen::Index subblocks = dim / n;
      for (Eigen::Index s = 0; s < subblocks; ++s) {
        if (rng.uniform() < 0.5) continue;
        const auto a = Eigen::Index(rng.uniform() * double(n));
        const auto b = Eigen::Index(rng.uniform() * double(n));
        const double scale = rng.uniform() + 0.5;
        z[s * n + a] += scale;
        if (space == Space::W || rng.uniform() < 0.5) z[s * n + b] -= scale;
      }
      break;
    }
  }
  if (space == Space::W) z = project_W(z, layout.agents);
  return z;
}

}  // namespace

NormReport verify_norm_property(const Matrix& m, const Layout& layout, Space space,
                                std::size_t trials, Rng& rng) {
  const auto dim = Eigen::Index(layout.dimension());
  if (m.rows() != dim || m.cols() != dim) throw std::invalid_argument("verify: matrix does not match layout");
  NormReport report;
  report.witness = Vector::Zero(dim);
  // With a single agent W is {0} and there is nothing to sample.
  const bool trivial = space == Space::W && layout.agents < 2;
  for (std::size_t t = 0; t < trials && !trivial; ++t) {
    Vector z;
    double nz = 0.0;
    while (nz < 1e-12) {
      z = sample_direction(layout, space, t, rng);
      nz = layout_norm(z, layout);
    }
    z /= nz;
    const double ratio = layout_norm(m * z, layout);
    ++report.trials;
    if (ratio > report.max_ratio || report.trials == 1) {
      report.max_ratio = ratio;
      report.witness = z;
    }
  }
  report.non_expansive = report.max_ratio <= 1.0 + kNonExpansiveTolerance;
  report.strict = report.max_ratio <= 1.0 - kStrictMargin;
  return report;
}

}  // namespace aimd
