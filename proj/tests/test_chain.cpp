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
#include <memory>

#include "aimd/chain.hpp"

using namespace aimd;

namespace {

ResourceParams resource(double capacity, double alpha, double beta) {
  return ResourceParams{capacity, alpha, beta, std::nullopt, 0.05, 0.95};
}

SystemConfig make_config(std::size_t n, std::vector<ResourceParams> res, std::size_t window) {
  SystemConfig cfg;
  cfg.agents = n;
  cfg.window = window;
  cfg.resources = std::move(res);
  cfg.seed = 17;
  cfg.warmup = WarmUp::seeded;
  return cfg;
}

CostModel quadratic_agents(std::vector<std::vector<double>> c) {
  std::vector<std::shared_ptr<const CostFunction>> fs;
  for (auto& ci : c) fs.push_back(std::make_shared<QuadraticCost>(ci, std::vector<double>(ci.size(), 0.0)));
  return CostModel(std::move(fs));
}

ChainModel symmetric_model(std::size_t window = 2) {
  const auto cfg = make_config(2, {resource(1.0, 0.1, 0.5), resource(2.0, 0.15, 0.6)}, window);
  return make_chain_model(cfg, quadratic_agents({{1.0, 1.0}, {1.0, 1.0}}));
}

ChainModel asymmetric_model(std::size_t window = 3) {
  const auto cfg = make_config(3, {resource(1.0, 0.1, 0.5), resource(2.0, 0.15, 0.7)}, window);
  return make_chain_model(cfg, quadratic_agents({{1.0, 2.0}, {1.5, 1.0}, {3.0, 0.5}}));
}

std::vector<Vector> skewed(const SystemConfig& cfg) {
  std::vector<Vector> out;
  for (const auto& r : cfg.resources) {
    Vector v = Vector::LinSpaced(Eigen::Index(cfg.agents), 1.0, double(cfg.agents));
    out.push_back(v * (0.5 * r.capacity / v.sum()));
  }
  return out;
}

}  // namespace

TEST(InitState, WindowOneStacksFirstEventAllocations) {
  const auto model = symmetric_model(1);
  const auto x0 = initial_allocations(model.cfg);
  const auto s = init_state(model, x0);
  const auto first = first_event_allocations(model.cfg, x0);
  EXPECT_TRUE(s.raw(0).isApprox(first[0], 0.0));
  EXPECT_TRUE(s.raw(1).isApprox(first[1], 0.0));
  EXPECT_NEAR(s.next_event[0], 0.5 / 0.2, 1e-15);
}

TEST(InitState, ConstantHistoryFillsEverySubblock) {
  const auto model = symmetric_model(3);
  const auto s = init_state(model, skewed(model.cfg));
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t r = 1; r <= 3; ++r) EXPECT_EQ(s.subblock(j, r), s.raw(j));
  EXPECT_TRUE(recompute_xi(s).isApprox(s.xi, 1e-15));
}

TEST(InitState, SecondSubblockAfterOneStep) {
  const auto model = symmetric_model(3);
  auto s = init_state(model, skewed(model.cfg));
  const Vector x0 = s.raw(0);
  Rng rng(1);
  const auto step = step_chain(model, s, rng);
  ASSERT_EQ(step.resource, 0u);
  EXPECT_TRUE(s.subblock(0, 2).isApprox(0.5 * (s.raw(0) + x0), 1e-15));
}

TEST(InitState, RejectsBoundaryAllocations) {
  const auto model = symmetric_model();
  auto x0 = initial_allocations(model.cfg);
  x0[0][1] = 0.0;
  EXPECT_THROW(init_state(model, x0), std::invalid_argument);
  x0 = initial_allocations(model.cfg);
  x0[1] *= 3.0;
  EXPECT_THROW(init_state(model, x0), std::invalid_argument);
}

TEST(StepChain, AllKeepLeavesActiveBlockUnchanged) {
  auto model = symmetric_model(1);
  model.frozen_lambda = {{0.0, 0.0}, {0.0, 0.0}};
  auto s = init_state(model, initial_allocations(model.cfg));
  const Vector before = s.xi;
  Rng rng(2);
  const auto step = step_chain(model, s, rng);
  EXPECT_FALSE(step.pattern.any());
  EXPECT_EQ(step.gap, 0.0);
  EXPECT_TRUE(s.xi.isApprox(before, 0.0));
}

TEST(StepChain, SingleAgentKeepsWholeCapacity) {
  auto cfg = make_config(1, {resource(1.0, 0.1, 0.5)}, 1);
  auto model = make_chain_model(cfg, quadratic_agents({{1.0}}));
  model.frozen_lambda = {{1.0}};
  auto s = init_state(model, initial_allocations(cfg));
  Rng rng(3);
  for (int k = 0; k < 5; ++k) {
    const auto step = step_chain(model, s, rng);
    EXPECT_TRUE(step.pattern.all());
    EXPECT_NEAR(s.xi[0], 1.0, 1e-15);
    EXPECT_NEAR(step.gap, compute_psi(cfg, 0), 1e-15);
  }
}

TEST(StepChain, ConservesCapacityAndMatchesHistory) {
  const auto model = asymmetric_model();
  auto s = init_state(model, skewed(model.cfg));
  Rng rng(4);
  for (int k = 0; k < 2000; ++k) {
    const auto step = step_chain(model, s, rng);
    const double c = model.cfg.resources[step.resource].capacity;
    ASSERT_NEAR(s.raw(step.resource).sum(), c, 1e-12 * c);
    ASSERT_GE(s.raw(step.resource).minCoeff(), 0.0);
    ASSERT_LE((recompute_xi(s) - s.xi).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(RunChain, ProductOfRecordedFactorsReproducesState) {
  const auto model = asymmetric_model(3);
  const std::size_t window = model.cfg.window;
  ChainOptions opts;
  opts.keep_steps = true;
  opts.keep_trajectory = true;
  const auto run = run_chain(model, 400, 5, opts);
  ASSERT_EQ(run.trajectory.size(), 401u);
  for (std::size_t k = window - 1; k < 400; ++k) {
    std::vector<BlockMatrix> us;
    for (std::size_t l = k + 1 - window; l <= k; ++l) us.push_back(step_matrix(model, run.steps[l]));
    const Vector predicted = block_product(us).apply(run.trajectory[k + 1 - window]);
    ASSERT_LE((predicted - run.trajectory[k + 1]).cwiseAbs().maxCoeff(), 1e-10) << "k=" << k;
  }
}

TEST(RunChain, StepsEqualToWindow) {
  const auto model = symmetric_model(4);
  ChainOptions opts;
  opts.keep_steps = true;
  opts.keep_trajectory = true;
  const auto run = run_chain(model, 4, 6, opts);
  std::vector<BlockMatrix> us;
  for (const auto& s : run.steps) us.push_back(step_matrix(model, s));
  const Vector predicted = block_product(us).apply(run.trajectory.front());
  EXPECT_LE((predicted - run.trajectory.back()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(RunChain, RejectsTooFewStepsAndIsDeterministic) {
  const auto model = symmetric_model(4);
  EXPECT_THROW(run_chain(model, 3, 1), std::invalid_argument);
  const auto a = run_chain(model, 500, 9);
  const auto b = run_chain(model, 500, 9);
  EXPECT_EQ(a.final_state.xi, b.final_state.xi);
  EXPECT_EQ(a.ergodic.mean(), b.ergodic.mean());
}

TEST(RunChain, SymmetricAgentsHaveEqualMeans) {
  const auto model = symmetric_model();
  const auto run = run_chain(model, 100000, 8);
  const auto means = run.ergodic.agent_means();
  for (std::size_t j = 0; j < 2; ++j) {
    const double c = model.cfg.resources[j].capacity;
    EXPECT_NEAR(means[j][0] / means[j][1], 1.0, 0.02);
    EXPECT_NEAR(means[j][0], c / 2, 0.02 * c);
  }
}

TEST(RunChain, FrozenProbabilitiesMatchExpectedMatrixFixedPoint) {
  // Constant probabilities make the raw block an iid random matrix product,
  // so its long-run mean is the stochastic fixed point of E[A].
  auto cfg = make_config(2, {resource(1.0, 0.1, 0.5)}, 1);
  auto model = make_chain_model(cfg, quadratic_agents({{1.0}, {1.0}}));
  const std::vector<double> lambda{0.3, 0.7};
  model.frozen_lambda = {lambda};

  Matrix expected_a = Matrix::Zero(2, 2);
  for (int mask = 0; mask < 4; ++mask) {
    auto p = BackoffPattern::none(0.5, 2);
    p.backed_off = {bool(mask & 1), bool(mask & 2)};
    expected_a += matrix_probability(p, lambda) * AimdMatrix(p).dense();
  }
  // Null vector of E[A] - I scaled to capacity.
  const Matrix k = expected_a - Matrix::Identity(2, 2);
  Vector fixed(2);
  fixed << -k(0, 1), k(0, 0);
  fixed /= fixed.sum();

  const auto run = run_chain(model, 200000, 10);
  const auto mean = run.ergodic.agent_means()[0];
  EXPECT_NEAR(mean[0], fixed[0], 0.01);
  EXPECT_NEAR(mean[1], fixed[1], 0.01);
  EXPECT_NEAR(fixed[0], 0.7, 1e-12);
}

TEST(ErgodicAverage, ConstantAndAlternating) {
  Vector a(2), b(2);
  a << 1, 3;
  b << 3, 1;
  EXPECT_EQ(ergodic_average({a, a, a}), a);
  std::vector<Vector> alt;
  double previous = 1e9;
  for (int k = 0; k < 200; ++k) {
    alt.push_back(k % 2 ? b : a);
    if (k % 2 == 0) {
      const double dev = (ergodic_average(alt) - Vector::Constant(2, 2.0)).cwiseAbs().maxCoeff();
      EXPECT_LE(dev, previous);
      previous = dev;
    }
  }
  EXPECT_TRUE(ergodic_average(alt).isApprox(Vector::Constant(2, 2.0), 1e-15));
  EXPECT_THROW(ergodic_average({}), std::invalid_argument);
}

TEST(ErgodicAverage, RunningMeanMatchesTrajectory) {
  const auto model = asymmetric_model();
  ChainOptions opts;
  opts.keep_trajectory = true;
  const auto run = run_chain(model, 3000, 11, opts);
  EXPECT_LE((run.ergodic.mean() - ergodic_average(run.trajectory)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ErgodicAverage, DeterministicChainPrefixesDifferByOrderOneOverL) {
  // All agents always back off: xi converges geometrically, so the Cesaro
  // means of the first L and 2L states differ by at most 2 S / L with S the
  // summed distance to the limit.
  auto model = symmetric_model(2);
  model.frozen_lambda = {{1.0, 1.0}, {1.0, 1.0}};
  ChainOptions opts;
  opts.keep_trajectory = true;
  opts.initial = skewed(model.cfg);
  const auto run = run_chain(model, 4000, 12, opts);
  const Vector limit = run.trajectory.back();
  double s = 0.0;
  for (const auto& xi : run.trajectory) s += (xi - limit).cwiseAbs().maxCoeff();
  for (std::size_t l : {100, 400, 1600}) {
    const std::vector<Vector> first(run.trajectory.begin(), run.trajectory.begin() + std::ptrdiff_t(l));
    const std::vector<Vector> twice(run.trajectory.begin(), run.trajectory.begin() + std::ptrdiff_t(2 * l));
    const double diff = (ergodic_average(first) - ergodic_average(twice)).cwiseAbs().maxCoeff();
    EXPECT_LE(diff, 2.0 * s / double(l));
  }
}

TEST(UniquenessProbe, IdenticalStartsAndSeedsGiveZero) {
  const auto model = symmetric_model();
  const auto x0 = initial_allocations(model.cfg);
  const auto u = uniqueness_probe(model, 2000, 3, 3, x0, x0);
  EXPECT_EQ(u.distance, 0.0);
  EXPECT_EQ(u.normalized_distance, 0.0);
}

TEST(UniquenessProbe, DistinctStartsConverge) {
  const auto model = symmetric_model();
  const auto u = uniqueness_probe(model, 100000, 3, 4, initial_allocations(model.cfg), skewed(model.cfg));
  EXPECT_LT(u.normalized_distance, 0.02);
  EXPECT_EQ(u.checkpoints.back(), 100000u);
}

TEST(UniquenessProbe, ExtremeBetaDistanceShrinks) {
  const auto cfg = make_config(2, {resource(1.0, 0.1, 0.01)}, 2);
  const auto model = make_chain_model(cfg, quadratic_agents({{1.0}, {1.0}}));
  std::vector<Vector> a{Vector(2)}, b{Vector(2)};
  a[0] << 0.05, 0.45;
  b[0] << 0.45, 0.05;
  const auto u = uniqueness_probe(model, 40000, 5, 6, a, b, 8);
  ASSERT_EQ(u.checkpoint_distances.size(), 8u);
  EXPECT_LT(u.checkpoint_distances.back(), u.checkpoint_distances.front());
}

TEST(Contraction, RejectsEqualProjections) {
  const auto model = symmetric_model();
  const auto z = init_state(model, initial_allocations(model.cfg));
  EXPECT_THROW(contraction_on_average(model, z, z, 4, 10, 1), std::invalid_argument);
}

TEST(Contraction, CertainFullBackoffIsDeterministic) {
  auto model = symmetric_model(2);
  model.frozen_lambda = {{1.0, 1.0}, {1.0, 1.0}};
  const auto z = init_state(model, initial_allocations(model.cfg));
  const auto w = init_state(model, skewed(model.cfg));
  const std::size_t horizon = contraction_horizon(model.cfg);
  const auto r = contraction_on_average(model, z, w, horizon, 50, 2);
  EXPECT_DOUBLE_EQ(r.full_backoff_frequency, 1.0);

  // The same product built by hand from the deterministic event sequence.
  auto zs = z;
  Rng rng(0);
  BlockMatrix h = BlockMatrix::identity(2, 2, 2);
  for (std::size_t l = 0; l < horizon; ++l) h = step_matrix(model, step_chain(model, zs, rng)) * h;
  const Vector diff = project_W(z.xi - w.xi, 2);
  const double ratio = norm_combined(h.apply(diff), 2, 2) / norm_combined(diff, 2, 2);
  EXPECT_NEAR(r.mean_ratio, ratio, 1e-12);
  EXPECT_LT(ratio, 1.0);
  EXPECT_NEAR(r.ratio_std_error, 0.0, 1e-9);
}

TEST(Contraction, HorizonCoversSlowerResource) {
  auto cfg = make_config(2, {resource(1.0, 0.1, 0.5), resource(1.0, 0.1, 0.5)}, 1);
  EXPECT_EQ(contraction_horizon(cfg), 4u);
  cfg.resources[1].alpha = 0.025;  // Psi four times larger
  EXPECT_EQ(contraction_horizon(cfg), 10u);
}

TEST(Contraction, SymmetricConfigContractsOnAverage) {
  const auto model = symmetric_model(2);
  const auto z = init_state(model, initial_allocations(model.cfg));
  const auto w = init_state(model, skewed(model.cfg));
  const auto r = contraction_on_average(model, z, w, contraction_horizon(model.cfg), 4000, 7);
  EXPECT_LT(r.ratio_upper95, 1.0);
  EXPECT_GE(r.full_backoff_frequency, r.full_backoff_bound - 3 * r.full_backoff_std_error);
  EXPECT_GE(r.pair_mass, 0.0);
}

TEST(ModelEquivalence, ChainReproducesSimulator) {
  for (const auto& model : {symmetric_model(3), asymmetric_model(2)}) {
    auto cfg = model.cfg;
    cfg.average_mode = AverageMode::windowed;
    cfg.warmup = WarmUp::seeded;
    const auto trace = run_simulation(cfg, model.costs, 1000);
    auto s = init_state(model, initial_allocations(cfg));
    Rng rng(cfg.seed);
    for (const auto& rec : trace.records) {
      ASSERT_EQ(next_resource(s), rec.resource);
      ASSERT_LE((s.raw(rec.resource) - rec.pre).cwiseAbs().maxCoeff(), 1e-10) << "event " << rec.index;
      const auto step = step_chain(model, s, rng);
      ASSERT_LE((step.lambda - rec.lambda).cwiseAbs().maxCoeff(), 1e-10);
      ASSERT_EQ(step.pattern.factors(), rec.factors);
      ASSERT_NEAR(step.time, rec.time, 1e-9 * std::max(1.0, rec.time));
    }
  }
}
