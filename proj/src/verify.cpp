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

#include "aimd/verify.hpp"

#include <algorithm>
#include <cmath>

namespace aimd {

MatrixFactory MatrixFactory::drop_full_backoff() {
  MatrixFactory f;
  f.build = [](const BackoffPattern& p) {
    if (p.all()) return AimdMatrix(BackoffPattern::none(p.beta, p.agents()));
    return AimdMatrix(p);
  };
  return f;
}

namespace {

constexpr std::size_t kVectorsPerMatrix = 4;

std::size_t pick(Rng& rng, std::size_t count) { return std::size_t(rng.next() % count); }

class Suite {
 public:
  explicit Suite(const PropertySuiteOptions& o) : o_(o), rng_(o.seed) {
    if (o.agents == 0 || o.window == 0 || o.betas.empty())
      throw std::invalid_argument("property suite: agents, window and resources must be >= 1");
    for (double b : o.betas)
      if (!(b > 0.0 && b < 1.0)) throw std::invalid_argument("property suite: beta out of (0,1)");
    if (o.trials == 0) throw std::invalid_argument("property suite: trials must be >= 1");
  }

  std::vector<PropertyResult> run();

 private:
  std::size_t n() const { return o_.agents; }
  std::size_t T() const { return o_.window; }
  std::size_t m() const { return o_.betas.size(); }

  double random_beta() { return o_.betas[pick(rng_, m())]; }

  BackoffPattern random_pattern(double beta) {
    BackoffPattern p = BackoffPattern::none(beta, n());
    for (std::size_t i = 0; i < n(); ++i) p.backed_off[i] = rng_.bernoulli(0.5);
    return p;
  }

  Matrix aimd(const BackoffPattern& p) { return o_.factory.build(p).dense(); }
  Matrix full(double beta) { return aimd(BackoffPattern::full(beta, n())); }

  LiftedMatrix lifted(const BackoffPattern& p) { return build_lifted(o_.factory.build(p), T()); }

  // Product of `len` random AIMD matrices; when `with_full` one factor at a
  // random position is the full back-off matrix.
  Matrix aimd_product(double beta, std::size_t len, bool with_full) {
    const std::size_t at = pick(rng_, len);
    Matrix p = Matrix::Identity(Eigen::Index(n()), Eigen::Index(n()));
    for (std::size_t k = 0; k < len; ++k) p = (with_full && k == at ? full(beta) : aimd(random_pattern(beta))) * p;
    return p;
  }

  Matrix lifted_chain(double beta, std::size_t len, bool with_full) {
    const std::size_t at = pick(rng_, len);
    std::vector<LiftedMatrix> f;
    for (std::size_t k = 0; k < len; ++k)
      f.push_back(lifted(with_full && k == at ? BackoffPattern::full(beta, n()) : random_pattern(beta)));
    return lifted_product(f).dense();
  }

  // Product of U factors over all resources; with `every_full` each resource
  // receives a full back-off at some point.
  BlockMatrix block_chain(std::size_t len, bool every_full) {
    std::vector<BlockMatrix> f;
    for (std::size_t k = 0; k < len; ++k) {
      const std::size_t j = pick(rng_, m());
      f.push_back(build_U(lifted(random_pattern(o_.betas[j])), j, m()));
    }
    if (every_full) {
      for (std::size_t j = 0; j < m(); ++j) {
        const auto pos = f.begin() + std::ptrdiff_t(pick(rng_, f.size() + 1));
        f.insert(pos, build_U(lifted(BackoffPattern::full(o_.betas[j], n())), j, m()));
      }
    }
    return block_product(f);
  }

  std::size_t random_length() { return 1 + pick(rng_, 2 * T() + 2); }

  template <class Gen>
  PropertyResult norm_bound(std::string name, std::string statement, Layout layout, Space space, bool strict,
                            Gen gen) {
    PropertyResult r{std::move(name), std::move(statement), "max_norm_ratio"};
    r.threshold = strict ? 1.0 - kStrictMargin : 1.0 + kNonExpansiveTolerance;
    r.witness = Vector::Zero(Eigen::Index(layout.dimension()));
    for (std::size_t t = 0; t < o_.trials; ++t) {
      const Matrix mat = gen();
      const auto rep = verify_norm_property(mat, layout, space, kVectorsPerMatrix, rng_);
      r.trials += rep.trials;
      if (rep.trials > 0 && rep.max_ratio > r.worst) {
        r.worst = rep.max_ratio;
        r.witness = rep.witness;
      }
    }
    r.passed = r.worst <= r.threshold;
    return r;
  }

  template <class Gen>
  PropertyResult column_sums(std::string name, std::string statement, Gen gen) {
    PropertyResult r{std::move(name), std::move(statement), "max_column_sum_error"};
    r.threshold = 1e-12;
    for (std::size_t t = 0; t < o_.trials; ++t) {
      const Matrix mat = gen();
      const double err = (mat.colwise().sum().array() - 1.0).abs().maxCoeff();
      r.worst = std::max({r.worst, err, -mat.minCoeff()});
      ++r.trials;
    }
    r.passed = r.worst <= r.threshold;
    return r;
  }

  PropertyResult positivity();
  PropertyResult norm_axioms();
  PropertyResult w_invariance();

  PropertySuiteOptions o_;
  Rng rng_;
};

PropertyResult Suite::positivity() {
  PropertyResult r{"product_positive_with_full_backoff",
                   "a product of AIMD matrices containing the full back-off matrix is entrywise positive",
                   "min_entry"};
  r.worst = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < o_.trials; ++t) {
    const Matrix p = aimd_product(random_beta(), random_length(), true);
    r.worst = std::min(r.worst, p.minCoeff());
    ++r.trials;
  }
  r.passed = r.worst > r.threshold;
  return r;
}

PropertyResult Suite::norm_axioms() {
  PropertyResult r{"norm_axioms", "norm_T and the combined norm are positive, homogeneous and subadditive",
                   "max_relative_violation"};
  r.threshold = 1e-12;
  const Layout layout{n(), T(), m()};
  const auto dim = Eigen::Index(layout.dimension());
  for (std::size_t t = 0; t < o_.trials; ++t) {
    Vector x(dim), y(dim);
    for (Eigen::Index k = 0; k < dim; ++k) {
      x[k] = 2.0 * rng_.uniform() - 1.0;
      y[k] = 2.0 * rng_.uniform() - 1.0;
    }
    const double a = 4.0 * rng_.uniform() - 2.0;
    auto check = [&](auto norm) {
      const double nx = norm(x), ny = norm(y);
      if (!(nx > 0.0)) r.worst = std::max(r.worst, 1.0);
      r.worst = std::max(r.worst, std::abs(norm(Vector(a * x)) - std::abs(a) * nx) / (std::abs(a) * nx + 1e-300));
      r.worst = std::max(r.worst, (norm(Vector(x + y)) - nx - ny) / (nx + ny));
    };
    check([&](const Vector& v) { return norm_T(v.head(Eigen::Index(n() * T())), n()); });
    check([&](const Vector& v) { return norm_combined(v, n(), T()); });
    ++r.trials;
  }
  r.passed = r.worst <= r.threshold;
  return r;
}

PropertyResult Suite::w_invariance() {
  PropertyResult r{"w_invariance", "products of U factors map zero-sum subblock vectors to zero-sum subblock vectors",
                   "max_subblock_sum"};
  r.threshold = 1e-12;
  const Layout layout{n(), T(), m()};
  const auto dim = Eigen::Index(layout.dimension());
  for (std::size_t t = 0; t < o_.trials; ++t) {
    const BlockMatrix h = block_chain(random_length(), false);
    Vector z(dim);
    for (Eigen::Index k = 0; k < dim; ++k) z[k] = 2.0 * rng_.uniform() - 1.0;
    z = project_W(z, n());
    const double scale = layout_norm(z, layout);
    if (!(scale > 0.0)) continue;
    const Vector out = h.apply(z);
    for (Eigen::Index s = 0; s < dim; s += Eigen::Index(n()))
      r.worst = std::max(r.worst, std::abs(out.segment(s, Eigen::Index(n())).sum()) / scale);
    ++r.trials;
  }
  r.passed = r.worst <= r.threshold;
  return r;
}

std::vector<PropertyResult> Suite::run() {
  std::vector<PropertyResult> out;
  const Layout single{n(), 1, 1};
  const Layout lifted_layout{n(), T(), 1};
  const Layout combined{n(), T(), m()};

  out.push_back(column_sums("aimd_column_stochastic", "every AIMD matrix is nonnegative and column-stochastic",
                            [&] { return aimd(random_pattern(random_beta())); }));
  out.push_back(column_sums("product_column_stochastic", "products of AIMD matrices are column-stochastic", [&] {
    return aimd_product(random_beta(), random_length(), false);
  }));
  out.push_back(positivity());
  out.push_back(norm_bound("aimd_power_nonexpansive", "||A^l z||_1 <= ||z||_1 for every z", single, Space::full,
                           false, [&] {
                             const Matrix a = aimd(random_pattern(random_beta()));
                             Matrix p = a;
                             for (std::size_t k = 1 + pick(rng_, 8); k > 1; --k) p = a * p;
                             return p;
                           }));
  out.push_back(norm_bound("aimd_product_strict_on_W",
                           "a product containing the full back-off matrix strictly contracts zero-sum vectors",
                           single, Space::W, true,
                           [&] { return aimd_product(random_beta(), random_length(), true); }));
  out.push_back(w_invariance());
  out.push_back(norm_axioms());
  out.push_back(norm_bound("lifted_nonexpansive", "||D z||_T <= ||z||_T for every z", lifted_layout, Space::full,
                           false, [&] { return lifted(random_pattern(random_beta())).dense(); }));
  out.push_back(norm_bound("lifted_full_backoff_strict", "||E z||_T < ||z||_T on W", lifted_layout, Space::W, true,
                           [&] { return lifted(BackoffPattern::full(random_beta(), n())).dense(); }));
  out.push_back(norm_bound("block_nonexpansive_on_W", "a single U factor is non-expansive on W", combined, Space::W,
                           false, [&] { return block_chain(1, false).dense(); }));
  out.push_back(norm_bound("block_product_nonexpansive_on_W", "products H of U factors are non-expansive on W",
                           combined, Space::W, false,
                           [&] { return block_chain(random_length() * m(), false).dense(); }));
  out.push_back(norm_bound("lifted_product_with_full_backoff_strict",
                           "products of D factors containing E strictly contract W", lifted_layout, Space::W, true,
                           [&] { return lifted_chain(random_beta(), random_length(), true); }));
  out.push_back(norm_bound("full_backoff_product_strict",
                           "products Y with a full back-off in every resource strictly contract W", combined,
                           Space::W, true, [&] { return block_chain(random_length(), true).dense(); }));
  return out;
}

}  // namespace

std::vector<PropertyResult> run_property_suite(const PropertySuiteOptions& options) {
  return Suite(options).run();
}

}  // namespace aimd
