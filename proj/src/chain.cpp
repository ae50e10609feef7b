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

#include "aimd/chain.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aimd {

ChainModel make_chain_model(const SystemConfig& cfg, const CostModel& costs) {
  ChainModel model{validate_config(cfg), costs, {}, {}};
  if (costs.agents() != cfg.agents || costs.resources() != cfg.resources.size())
    throw std::invalid_argument("chain: cost model does not match the configuration");
  model.gamma = resolve_gamma(model.cfg, costs);
  return model;
}

Vector WindowState::subblock(std::size_t resource, std::size_t r) const {
  const auto n = Eigen::Index(layout.agents);
  const auto offset = Eigen::Index(resource * layout.window + (r - 1)) * n;
  return xi.segment(offset, n);
}

WindowState init_state(const ChainModel& model, const std::vector<Vector>& initial) {
  const auto& cfg = model.cfg;
  const Layout layout = model.layout();
  if (initial.size() != layout.resources) throw std::invalid_argument("chain init: one allocation per resource");
  for (std::size_t j = 0; j < initial.size(); ++j) {
    if (initial[j].size() != Eigen::Index(layout.agents))
      throw std::invalid_argument("chain init: one entry per agent");
    if (!(initial[j].array() > 0.0).all() ||
        initial[j].sum() > cfg.resources[j].capacity * (1.0 + 1e-12))
      throw std::invalid_argument("chain init: initial allocation must be strictly interior");
  }

  WindowState state;
  state.layout = layout;
  state.xi.resize(Eigen::Index(layout.dimension()));
  const auto n = Eigen::Index(layout.agents);
  const auto first = first_event_allocations(cfg, initial);
  for (std::size_t j = 0; j < layout.resources; ++j) {
    state.history.emplace_back(layout.window, first[j]);
    for (std::size_t r = 0; r < layout.window; ++r)
      state.xi.segment(Eigen::Index(j * layout.window + r) * n, n) = first[j];
    const auto& res = cfg.resources[j];
    state.next_event.push_back((res.capacity - initial[j].sum()) / (double(layout.agents) * res.alpha));
  }
  return state;
}

Vector recompute_xi(const WindowState& state) {
  const auto& layout = state.layout;
  const auto n = Eigen::Index(layout.agents);
  Vector xi(Eigen::Index(layout.dimension()));
  for (std::size_t j = 0; j < layout.resources; ++j) {
    Vector acc = Vector::Zero(n);
    for (std::size_t r = 0; r < layout.window; ++r) {
      acc += state.history[j][r];
      xi.segment(Eigen::Index(j * layout.window + r) * n, n) = acc / double(r + 1);
    }
  }
  return xi;
}

Vector chain_lambda(const ChainModel& model, const WindowState& state, std::size_t resource) {
  const auto n = Eigen::Index(model.cfg.agents);
  Vector lambda(n);
  if (!model.frozen_lambda.empty()) {
    for (Eigen::Index i = 0; i < n; ++i) lambda[i] = model.frozen_lambda.at(resource).at(std::size_t(i));
    return lambda;
  }
  const std::size_t m = model.cfg.resources.size();
  std::vector<Vector> means(m);
  for (std::size_t k = 0; k < m; ++k) means[k] = state.average(k);
  std::vector<double> avg(m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < m; ++k) avg[k] = means[k][i];
    lambda[i] = drop_probability(model.cfg, model.costs[std::size_t(i)], resource, avg, model.gamma[resource]).value;
  }
  return lambda;
}

std::size_t next_resource(const WindowState& state) {
  std::size_t j = 0;
  for (std::size_t k = 1; k < state.next_event.size(); ++k) {
    if (state.next_event[k] < state.next_event[j]) j = k;
  }
  return j;
}

namespace {

// Applies the event of `resource` with a known pattern.
ChainStep advance(const ChainModel& model, WindowState& state, std::size_t resource, Vector lambda,
                  BackoffPattern pattern) {
  const auto& res = model.cfg.resources[resource];
  const AimdMatrix a(pattern);
  const Vector previous = state.raw(resource);
  const auto u = build_U(build_D(a, state.layout.window), resource, state.layout.resources);
  state.xi = u.apply(state.xi);

  auto& hist = state.history[resource];
  hist.push_front(a.dense() * previous);
  hist.pop_back();

  ChainStep step;
  step.resource = resource;
  step.time = state.next_event[resource];
  step.lambda = std::move(lambda);
  step.gap = next_event_gap(Vector(pattern.factors().cwiseProduct(previous)), res);
  step.pattern = std::move(pattern);
  state.next_event[resource] += step.gap;
  ++state.steps;
  return step;
}

}  // namespace

ChainStep step_chain(const ChainModel& model, WindowState& state, Rng& rng) {
  const std::size_t j = next_resource(state);
  Vector lambda = chain_lambda(model, state, j);
  auto pattern = sample_pattern(model.cfg.resources[j].beta,
                                std::span<const double>(lambda.data(), std::size_t(lambda.size())), rng);
  return advance(model, state, j, std::move(lambda), std::move(pattern));
}

BlockMatrix step_matrix(const ChainModel& model, const ChainStep& step) {
  const Layout layout = model.layout();
  return build_U(build_D(AimdMatrix(step.pattern), layout.window), step.resource, layout.resources);
}

ErgodicEstimate::ErgodicEstimate(Layout layout)
    : layout_(layout), sum_(Vector::Zero(Eigen::Index(layout.dimension()))) {}

void ErgodicEstimate::add(const Vector& xi) {
  sum_ += xi;
  ++count_;
}

Vector ErgodicEstimate::mean() const {
  if (count_ == 0) throw std::logic_error("ergodic estimate: no samples");
  return sum_ / double(count_);
}

std::vector<Vector> ErgodicEstimate::agent_means() const {
  const Vector avg = mean();
  const auto n = Eigen::Index(layout_.agents);
  std::vector<Vector> out;
  for (std::size_t j = 0; j < layout_.resources; ++j)
    out.push_back(avg.segment(Eigen::Index(j * layout_.window + layout_.window - 1) * n, n));
  return out;
}

ChainRun run_chain(const ChainModel& model, std::size_t steps, std::uint64_t seed, const ChainOptions& options) {
  if (steps < model.cfg.window) throw std::invalid_argument("run_chain: steps must be >= window");
  Rng rng(seed);
  const Layout layout = model.layout();
  ChainRun run{{}, {}, ErgodicEstimate(layout), ErgodicEstimate(layout), ErgodicEstimate(layout),
               init_state(model, options.initial.empty() ? initial_allocations(model.cfg) : options.initial)};
  auto& state = run.final_state;
  if (options.keep_trajectory) {
    run.trajectory.reserve(steps + 1);
    run.trajectory.push_back(state.xi);
  }
  if (options.keep_steps) run.steps.reserve(steps);
  run.ergodic.add(state.xi);
  run.first_half.add(state.xi);
  for (std::size_t k = 1; k <= steps; ++k) {
    auto step = step_chain(model, state, rng);
    run.ergodic.add(state.xi);
    (2 * k <= steps ? run.first_half : run.second_half).add(state.xi);
    if (options.keep_trajectory) run.trajectory.push_back(state.xi);
    if (options.keep_steps) run.steps.push_back(std::move(step));
  }
  return run;
}

double split_half_difference(const ChainRun& run) {
  const auto a = run.first_half.agent_means();
  const auto b = run.second_half.agent_means();
  double worst = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j)
    for (Eigen::Index i = 0; i < a[j].size(); ++i)
      worst = std::max(worst, std::abs(a[j][i] - b[j][i]) / (0.5 * (a[j][i] + b[j][i])));
  return worst;
}

Vector ergodic_average(const std::vector<Vector>& trajectory) {
  if (trajectory.empty()) throw std::invalid_argument("ergodic average: empty trajectory");
  Vector acc = Vector::Zero(trajectory.front().size());
  for (const auto& xi : trajectory) acc += xi;
  return acc / double(trajectory.size());
}

namespace {

double normalized_distance(const ChainModel& model, const Vector& diff) {
  const Layout layout = model.layout();
  const auto width = Eigen::Index(layout.agents * layout.window);
  double worst = 0.0;
  for (std::size_t j = 0; j < layout.resources; ++j) {
    worst = std::max(worst, norm_T(diff.segment(Eigen::Index(j) * width, width), layout.agents) /
                                model.cfg.resources[j].capacity);
  }
  return worst;
}

}  // namespace

UniquenessResult uniqueness_probe(const ChainModel& model, std::size_t steps, std::uint64_t seed_a,
                                  std::uint64_t seed_b, const std::vector<Vector>& initial_a,
                                  const std::vector<Vector>& initial_b, std::size_t checkpoints) {
  const Layout layout = model.layout();
  UniquenessResult out{0.0, 0.0, {}, {}, ErgodicEstimate(layout), ErgodicEstimate(layout)};
  Rng rng_a(seed_a), rng_b(seed_b);
  auto a = init_state(model, initial_a);
  auto b = init_state(model, initial_b);
  out.mean_a.add(a.xi);
  out.mean_b.add(b.xi);
  checkpoints = std::max<std::size_t>(checkpoints, 1);
  std::size_t next_checkpoint = 1;
  for (std::size_t k = 1; k <= steps; ++k) {
    step_chain(model, a, rng_a);
    step_chain(model, b, rng_b);
    out.mean_a.add(a.xi);
    out.mean_b.add(b.xi);
    if (k * checkpoints >= next_checkpoint * steps) {
      out.checkpoints.push_back(k);
      out.checkpoint_distances.push_back(normalized_distance(model, out.mean_a.mean() - out.mean_b.mean()));
      ++next_checkpoint;
    }
  }
  const Vector diff = out.mean_a.mean() - out.mean_b.mean();
  out.distance = norm_combined(diff, layout.agents, layout.window);
  out.normalized_distance = normalized_distance(model, diff);
  return out;
}

std::size_t contraction_horizon(const SystemConfig& cfg) {
  double lo = compute_psi(cfg, 0), hi = lo;
  for (std::size_t j = 1; j < cfg.resources.size(); ++j) {
    lo = std::min(lo, compute_psi(cfg, j));
    hi = std::max(hi, compute_psi(cfg, j));
  }
  const auto k = std::max<std::size_t>(1, std::size_t(std::ceil(hi / lo - 1e-12)));
  return (k + 1) * cfg.resources.size();
}

ContractionReport contraction_on_average(const ChainModel& model, const WindowState& z, const WindowState& w,
                                         std::size_t horizon, std::size_t samples, std::uint64_t seed,
                                         double mu) {
  const Layout layout = model.layout();
  const Vector diff = project_W(z.xi - w.xi, layout.agents);
  const double base = norm_combined(diff, layout.agents, layout.window);
  if (!(base > 1e-14)) throw std::invalid_argument("contraction: z - w has no component in W");
  if (samples < 2 || horizon < 1) throw std::invalid_argument("contraction: need samples >= 2 and horizon >= 1");

  double ratio_sum = 0.0, ratio_sq = 0.0, pair_sum = 0.0, pair_sq = 0.0;
  std::size_t full = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    auto rng = Rng::stream(seed, s);
    WindowState zs = z;
    BlockMatrix h = BlockMatrix::identity(layout.resources, layout.agents, layout.window);
    std::vector<ChainStep> path;
    path.reserve(horizon);
    for (std::size_t l = 0; l < horizon; ++l) {
      path.push_back(step_chain(model, zs, rng));
      h = step_matrix(model, path.back()) * h;
    }
    const double ratio = norm_combined(h.apply(diff), layout.agents, layout.window) / base;
    ratio_sum += ratio;
    ratio_sq += ratio * ratio;
    full += h.is_full_backoff_product() ? 1 : 0;

    // p_H(w) for the sampled H: replay the same event sequence from w.
    double pw = 0.0;
    if (ratio <= mu) {
      pw = 1.0;
      WindowState ws = w;
      for (const auto& step : path) {
        if (next_resource(ws) != step.resource) {
          pw = 0.0;
          break;
        }
        Vector lambda = chain_lambda(model, ws, step.resource);
        pw *= matrix_probability(step.pattern, std::span<const double>(lambda.data(), std::size_t(lambda.size())));
        advance(model, ws, step.resource, std::move(lambda), step.pattern);
      }
    }
    pair_sum += pw;
    pair_sq += pw * pw;
  }

  const double ns = double(samples);
  ContractionReport r;
  r.horizon = horizon;
  r.samples = samples;
  r.mu = mu;
  r.mean_ratio = ratio_sum / ns;
  r.ratio_std_error = std::sqrt(std::max(0.0, ratio_sq / ns - r.mean_ratio * r.mean_ratio) / (ns - 1.0));
  r.ratio_upper95 = r.mean_ratio + 1.6448536269514722 * r.ratio_std_error;
  r.full_backoff_frequency = double(full) / ns;
  r.full_backoff_std_error = std::sqrt(r.full_backoff_frequency * (1.0 - r.full_backoff_frequency) / ns);
  r.full_backoff_bound = 1.0;
  for (const auto& res : model.cfg.resources) r.full_backoff_bound *= std::pow(res.lambda_min, double(layout.agents));
  r.pair_mass = pair_sum / ns;
  r.pair_mass_std_error = std::sqrt(std::max(0.0, pair_sq / ns - r.pair_mass * r.pair_mass) / (ns - 1.0));
  r.pair_mass_bound = r.full_backoff_bound * r.full_backoff_bound;
  return r;
}

}  // namespace aimd
