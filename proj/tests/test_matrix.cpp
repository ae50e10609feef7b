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

#include <gtest/gtest.h>

#include <cmath>

#include "aimd/matrix.hpp"
#include "aimd/verify.hpp"

using namespace aimd;

namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

BackoffPattern pattern(double beta, std::initializer_list<int> bits) {
  BackoffPattern p;
  p.beta = beta;
  for (int b : bits) p.backed_off.push_back(b != 0);
  return p;
}

BackoffPattern random_pattern(double beta, std::size_t n, Rng& rng) {
  auto p = BackoffPattern::none(beta, n);
  for (std::size_t i = 0; i < n; ++i) p.backed_off[i] = rng.bernoulli(0.5);
  return p;
}

// Rows of D^p for a single base matrix, written from the meaning of the
// lifted state: block r of the result averages the newest r samples, the
// newest min(r, p) of which are A^p z_1, ..., A^{p-r+1} z_1, and any older
// ones contribute (r - p) times the old (r - p)-mean.
Matrix lifted_power_oracle(const Matrix& a, std::size_t window, std::size_t p) {
  const auto n = a.rows();
  Matrix out = Matrix::Zero(n * Eigen::Index(window), n * Eigen::Index(window));
  std::vector<Matrix> powers{Matrix::Identity(n, n)};
  for (std::size_t q = 1; q <= p; ++q) powers.push_back(a * powers.back());
  for (std::size_t r = 1; r <= window; ++r) {
    const auto row = Eigen::Index(r - 1) * n;
    const std::size_t newest = std::min(r, p);
    for (std::size_t s = 0; s < newest; ++s) out.block(row, 0, n, n) += powers[p - s] / double(r);
    if (r > p) out.block(row, Eigen::Index(r - p - 1) * n, n, n) += Matrix::Identity(n, n) * double(r - p) / double(r);
  }
  return out;
}

}  // namespace

TEST(BuildAimdMatrix, NoBackoffIsIdentity) {
  EXPECT_TRUE(AimdMatrix(pattern(0.5, {0, 0})).dense().isIdentity(0.0));
}

TEST(BuildAimdMatrix, FullBackoffHandValue) {
  Vector f(2);
  f << 0.5, 0.5;
  EXPECT_TRUE(build_aimd_matrix(f, 0.5).dense().isApprox(mat2(0.75, 0.25, 0.25, 0.75), 1e-15));
}

TEST(BuildAimdMatrix, PartialBackoffIsColumnStochastic) {
  Vector f(2);
  f << 0.5, 1.0;
  const Matrix a = build_aimd_matrix(f, 0.5).dense();
  EXPECT_TRUE(a.isApprox(mat2(0.75, 0.0, 0.25, 1.0), 1e-15));
  EXPECT_NEAR(a.col(0).sum(), 1.0, 1e-15);
  EXPECT_NEAR(a.col(1).sum(), 1.0, 1e-15);
}

TEST(BuildAimdMatrix, EntryFormula) {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    const auto p = random_pattern(0.3, 5, rng);
    const Vector b = p.factors();
    const Matrix expected = Matrix(b.asDiagonal()) + Vector::Ones(5) * (Vector::Ones(5) - b).transpose() / 5.0;
    ASSERT_TRUE(AimdMatrix(p).dense().isApprox(expected, 1e-15));
  }
}

TEST(BuildAimdMatrix, RejectsInvalidEntries) {
  Vector f(2);
  f << 0.7, 1.0;
  EXPECT_THROW(build_aimd_matrix(f, 0.5), std::invalid_argument);
}

TEST(FullBackoffMatrix, HandValuesAndPositivity) {
  EXPECT_TRUE(full_backoff_matrix(0.5, 2).dense().isApprox(mat2(0.75, 0.25, 0.25, 0.75), 1e-15));
  EXPECT_DOUBLE_EQ(full_backoff_matrix(0.3, 1).dense()(0, 0), 1.0);
  EXPECT_NEAR(full_backoff_matrix(0.4, 3).dense().minCoeff(), 0.2, 1e-15);
  EXPECT_THROW(full_backoff_matrix(1.0, 2), std::invalid_argument);
  EXPECT_THROW(full_backoff_matrix(0.0, 2), std::invalid_argument);
}

TEST(MatrixProbability, ProductRule) {
  const std::vector<double> lambda{0.3, 0.5};
  EXPECT_NEAR(matrix_probability(pattern(0.5, {1, 0}), lambda), 0.15, 1e-15);
  EXPECT_DOUBLE_EQ(matrix_probability(pattern(0.5, {1, 1}), std::vector<double>{1.0, 1.0}), 1.0);
}

TEST(MatrixProbability, SumsToOneOverAllPatterns) {
  for (const std::vector<double>& lambda : {std::vector<double>{0.3, 0.5}, std::vector<double>{0.1, 0.9, 0.4, 0.6, 0.25}}) {
    const std::size_t n = lambda.size();
    double total = 0.0;
    for (std::size_t mask = 0; mask < (std::size_t(1) << n); ++mask) {
      auto p = BackoffPattern::none(0.5, n);
      for (std::size_t i = 0; i < n; ++i) p.backed_off[i] = (mask >> i) & 1;
      total += matrix_probability(p, lambda);
    }
    EXPECT_NEAR(total, 1.0, 1e-14);
  }
}

TEST(SamplePattern, DegenerateProbabilities) {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    EXPECT_TRUE(sample_pattern(0.5, std::vector<double>{1.0, 1.0, 1.0}, rng).all());
    EXPECT_FALSE(sample_pattern(0.5, std::vector<double>{0.0, 0.0, 0.0}, rng).any());
  }
}

TEST(SamplePattern, FrequencyMatchesProbability) {
  Rng rng(3);
  const std::vector<double> lambda{0.3, 0.5};
  const int draws = 100000;
  int hits = 0;
  for (int t = 0; t < draws; ++t) {
    const auto p = sample_pattern(0.5, lambda, rng);
    hits += p.backed_off[0] && !p.backed_off[1];
  }
  EXPECT_NEAR(double(hits) / draws, 0.15, 3 * std::sqrt(0.15 * 0.85 / draws));
}

TEST(Norms, HandValues) {
  Vector z(4);
  z << 1, -1, 0.5, -0.5;
  EXPECT_DOUBLE_EQ(norm_T(z, 2), 2.0);
  EXPECT_DOUBLE_EQ(norm_T(Vector::Zero(6), 2), 0.0);
  Vector y(8);
  y << 1, -1, 0, 0, 1.5, -1.5, 0.5, 0.5;
  EXPECT_DOUBLE_EQ(norm_combined(y, 2, 2), 3.0);
  EXPECT_DOUBLE_EQ(norm_1(z), 3.0);
}

TEST(Norms, RejectBadLengths) {
  EXPECT_THROW(norm_T(Vector::Zero(5), 2), std::invalid_argument);
  EXPECT_THROW(norm_combined(Vector::Zero(6), 2, 2), std::invalid_argument);
  EXPECT_THROW(project_W(Vector::Zero(5), 2), std::invalid_argument);
}

TEST(ProjectW, HandValuesAndIdempotence) {
  Vector a(2), b(2), c(2);
  a << 1, 1;
  b << 1, -1;
  c << 2, 0;
  EXPECT_TRUE(project_W(a, 2).isZero(0.0));
  EXPECT_EQ(project_W(b, 2), b);
  EXPECT_EQ(project_W(c, 2), b);
  Rng rng(4);
  Vector z(12);
  for (auto& v : z) v = rng.uniform();
  const Vector once = project_W(z, 3);
  EXPECT_TRUE(project_W(once, 3).isApprox(once, 1e-15));
  for (int s = 0; s < 4; ++s) EXPECT_NEAR(once.segment(3 * s, 3).sum(), 0.0, 1e-15);
}

TEST(BuildD, WindowOneIsA) {
  const AimdMatrix a(pattern(0.5, {1, 0}));
  EXPECT_EQ(build_D(a, 1).dense(), a.dense());
}

TEST(BuildD, IdentityBaseWindowTwo) {
  const auto d = build_D(AimdMatrix(pattern(0.5, {0, 0})), 2).dense();
  Matrix expected = Matrix::Zero(4, 4);
  expected.block(0, 0, 2, 2).setIdentity();
  expected.block(2, 0, 2, 2).setIdentity();
  EXPECT_TRUE(d.isApprox(expected, 1e-15));
}

TEST(BuildD, ScalarWindowThree) {
  const auto d = build_D(AimdMatrix(pattern(0.5, {0})), 3).dense();
  Matrix expected(3, 3);
  expected << 1, 0, 0, 1, 0, 0, 1.0 / 3.0, 2.0 / 3.0, 0;
  EXPECT_TRUE(d.isApprox(expected, 1e-15));
}

TEST(BuildD, BlockStructure) {
  const AimdMatrix a(pattern(0.4, {1, 0, 1}));
  const auto d = build_D(a, 4).dense();
  const Matrix i3 = Matrix::Identity(3, 3);
  EXPECT_TRUE(d.block(0, 0, 3, 3).isApprox(a.dense(), 1e-15));
  EXPECT_TRUE(d.block(3, 0, 3, 3).isApprox(0.5 * (a.dense() + i3), 1e-15));
  EXPECT_TRUE(d.block(6, 0, 3, 3).isApprox(a.dense() / 3.0, 1e-15));
  EXPECT_TRUE(d.block(6, 3, 3, 3).isApprox(i3 * 2.0 / 3.0, 1e-15));
  EXPECT_TRUE(d.block(9, 6, 3, 3).isApprox(i3 * 0.75, 1e-15));
  EXPECT_TRUE(d.block(9, 9, 3, 3).isZero(0.0));
  EXPECT_TRUE(d.block(0, 3, 3, 9).isZero(0.0));
  EXPECT_TRUE(build_E(0.4, 3, 4).contains_full_backoff());
  EXPECT_FALSE(build_D(a, 4).contains_full_backoff());
}

TEST(BuildU, PlacesLiftedBlock) {
  const auto d = build_D(AimdMatrix(pattern(0.5, {1, 0})), 2);
  const auto u = build_U(d, 1, 2);
  const Matrix dense = u.dense();
  EXPECT_TRUE(dense.block(0, 0, 4, 4).isIdentity(0.0));
  EXPECT_TRUE(dense.block(4, 4, 4, 4).isApprox(d.dense(), 0.0));
  EXPECT_TRUE(dense.block(0, 4, 4, 4).isZero(0.0));
  EXPECT_EQ(u.active_blocks(), 1u);

  EXPECT_TRUE(build_U(d, 0, 1).dense().isApprox(d.dense(), 0.0));

  const Matrix three = build_U(d, 1, 3).dense();
  EXPECT_TRUE(three.block(0, 0, 4, 4).isIdentity(0.0));
  EXPECT_TRUE(three.block(4, 4, 4, 4).isApprox(d.dense(), 0.0));
  EXPECT_TRUE(three.block(8, 8, 4, 4).isIdentity(0.0));
  EXPECT_THROW(build_U(d, 3, 3), std::out_of_range);
}

TEST(BlockMatrix, ApplyAndProductAgreeWithDense) {
  Rng rng(5);
  std::vector<BlockMatrix> us;
  for (int k = 0; k < 7; ++k) {
    const std::size_t j = rng.next() % 3;
    us.push_back(build_U(build_D(AimdMatrix(random_pattern(0.6, 3, rng)), 2), j, 3));
  }
  const auto h = block_product(us);
  Matrix dense = Matrix::Identity(18, 18);
  for (const auto& u : us) dense = u.dense() * dense;
  EXPECT_TRUE(h.dense().isApprox(dense, 1e-14));
  Vector z(18);
  for (auto& v : z) v = rng.uniform() - 0.5;
  EXPECT_TRUE(h.apply(z).isApprox(dense * z, 1e-14));
}

TEST(LiftedProducts, WindowOneReducesToPlainProducts) {
  Rng rng(6);
  std::vector<LiftedMatrix> ds;
  Matrix plain = Matrix::Identity(3, 3);
  for (int k = 0; k < 5; ++k) {
    const AimdMatrix a(random_pattern(0.5, 3, rng));
    ds.push_back(build_D(a, 1));
    plain = a.dense() * plain;
  }
  EXPECT_TRUE(lifted_product(ds).dense().isApprox(plain, 1e-15));
}

TEST(LiftedProducts, ScalarSquare) {
  const auto d = build_D(AimdMatrix(pattern(0.5, {0})), 2);
  const std::vector<LiftedMatrix> f{d, d};
  Matrix expected(2, 2);
  expected << 1, 0, 1, 0;
  EXPECT_TRUE(lifted_product(f).dense().isApprox(expected, 1e-15));
}

TEST(LiftedProducts, PowersMatchClosedForm) {
  Rng rng(7);
  for (std::size_t window = 1; window <= 5; ++window) {
    for (std::size_t p = 1; p <= 7; ++p) {
      const AimdMatrix a(random_pattern(0.45, 3, rng));
      const std::vector<LiftedMatrix> f(p, build_D(a, window));
      const Matrix got = lifted_product(f).dense();
      ASSERT_LE((got - lifted_power_oracle(a.dense(), window, p)).cwiseAbs().maxCoeff(), 1e-12)
          << "T=" << window << " p=" << p;
    }
  }
}

TEST(LiftedProducts, RejectsMismatchedFactors) {
  const AimdMatrix a(pattern(0.5, {1, 0}));
  const std::vector<LiftedMatrix> f{build_D(a, 2), build_D(a, 3)};
  EXPECT_THROW(lifted_product(f), std::invalid_argument);
}

TEST(VerifyNormProperty, IdentityHasRatioOne) {
  Rng rng(8);
  const auto r = verify_norm_property(Matrix::Identity(6, 6), Layout{2, 3, 1}, Space::full, 200, rng);
  EXPECT_EQ(r.max_ratio, 1.0);
  EXPECT_TRUE(r.non_expansive);
  EXPECT_FALSE(r.strict);
}

TEST(VerifyNormProperty, LiftedIsNonExpansive) {
  Rng rng(9);
  for (std::size_t t : {1, 2, 4}) {
    const auto d = build_D(AimdMatrix(random_pattern(0.5, 3, rng)), t);
    const auto full = verify_norm_property(d.dense(), Layout{3, t, 1}, Space::full, 500, rng);
    const auto w = verify_norm_property(d.dense(), Layout{3, t, 1}, Space::W, 500, rng);
    EXPECT_TRUE(full.non_expansive) << full.max_ratio;
    EXPECT_TRUE(w.non_expansive) << w.max_ratio;
    EXPECT_EQ(w.trials, 500u);
  }
}

TEST(VerifyNormProperty, FullBackoffLiftedContractsByKnownFactor) {
  // On W, B z = beta z, so block r of E z has norm at most
  // (beta + r - 1) / r times ||z||_T; the worst block is r = T.
  Rng rng(10);
  for (std::size_t t : {1, 2, 4}) {
    const double beta = 0.6;
    const auto e = build_E(beta, 3, t);
    const auto r = verify_norm_property(e.dense(), Layout{3, t, 1}, Space::W, 2000, rng);
    EXPECT_TRUE(r.strict);
    EXPECT_LE(r.max_ratio, (beta + double(t) - 1.0) / double(t) + 1e-12);
    EXPECT_EQ(r.witness.size(), Eigen::Index(3 * t));
  }
}

TEST(VerifyNormProperty, SingleAgentWHasNoSamples) {
  Rng rng(11);
  const auto r = verify_norm_property(build_E(0.5, 1, 2).dense(), Layout{1, 2, 1}, Space::W, 100, rng);
  EXPECT_EQ(r.trials, 0u);
  EXPECT_TRUE(r.non_expansive);
}

TEST(PropertySuite, PassesForAssortedShapes) {
  for (std::size_t n : {1, 2, 3, 5}) {
    for (std::size_t t : {1, 3}) {
      PropertySuiteOptions opts;
      opts.agents = n;
      opts.window = t;
      opts.betas = {0.5, 0.8};
      opts.trials = 150;
      opts.seed = n * 10 + t;
      for (const auto& r : run_property_suite(opts))
        EXPECT_TRUE(r.passed) << r.name << " n=" << n << " T=" << t << " worst=" << r.worst;
    }
  }
}

TEST(PropertySuite, BrokenBuilderIsCaughtWithWitness) {
  PropertySuiteOptions opts;
  opts.agents = 3;
  opts.window = 2;
  opts.betas = {0.5};
  opts.trials = 200;
  opts.factory = MatrixFactory::drop_full_backoff();
  bool strict_failed = false;
  for (const auto& r : run_property_suite(opts)) {
    if (r.name == "lifted_full_backoff_strict") {
      strict_failed = !r.passed;
      EXPECT_GE(r.worst, 1.0);
      EXPECT_GT(norm_T(r.witness, 3), 0.0);
    }
  }
  EXPECT_TRUE(strict_failed);
}
