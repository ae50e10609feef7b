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

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "aimd/chain.hpp"
#include "aimd/io.hpp"
#include "aimd/oracle.hpp"
#include "aimd/verify.hpp"

namespace fs = std::filesystem;
using namespace aimd;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kValidation = 1, kProperty = 2, kMissing = 3 };

struct Common {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  bool pretty = false;
};

/// Files written by one invocation, recorded with their digests.
class Manifest {
 public:
  Manifest(std::string command, const Common& common, std::uint64_t seed)
      : command_(std::move(command)), common_(common), seed_(seed), start_(std::chrono::steady_clock::now()) {
    fs::create_directories(common_.out);
  }

  std::string path(const std::string& name) const { return (fs::path(common_.out) / name).string(); }

  void emit(const std::string& name, const std::string& text) {
    write_text(path(name), text);
    files_.push_back(name);
  }

  void finish() const {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    Json files = Json::array();
    for (const auto& f : files_) files.push_back({{"path", f}, {"sha256", sha256_file(path(f))}});
    Json doc{{"config", common_.config}, {"command", command_}, {"seed", seed_},
             {"out", common_.out},       {"version", kVersion},  {"duration_seconds", secs},
             {"files", std::move(files)}};
    write_text(path(command_ + ".manifest.json"), doc.dump(2) + "\n");
  }

 private:
  std::string command_;
  Common common_;
  std::uint64_t seed_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> files_;
};

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string row_text(const Json& row) {
  std::string s;
  for (const auto& v : row) s += (s.empty() ? "" : "  ") + fmt(v.get<double>());
  return s;
}

void print_report(const Json& doc, bool pretty) {
  if (!pretty) {
    std::cout << doc.dump(2) << '\n';
    return;
  }
  // Flat "key  value" table; arrays of numbers on one line.
  for (const auto& [key, value] : doc.items()) {
    if (value.is_array() && !value.empty() && value.front().is_array()) {
      for (std::size_t j = 0; j < value.size(); ++j)
        std::cout << key << '[' << j << "]  " << row_text(value[j]) << '\n';
    } else if (value.is_array() && !value.empty() && value.front().is_number()) {
      std::cout << key << "  " << row_text(value) << '\n';
    } else if (value.is_number_float()) {
      std::cout << key << "  " << fmt(value.get<double>()) << '\n';
    } else if (!value.is_structured()) {
      std::cout << key << "  " << value.dump() << '\n';
    }
  }
}

void print_properties(const Json& report) {
  std::printf("%-42s %-6s %-24s %-14s %s\n", "property", "result", "metric", "worst", "samples");
  for (const auto& p : report["properties"]) {
    std::printf("%-42s %-6s %-24s %-14s %s\n", p["name"].get<std::string>().c_str(),
                p["passed"].get<bool>() ? "pass" : "FAIL", p["metric"].get<std::string>().c_str(),
                fmt(p["worst"].get<double>(), 10).c_str(), p["samples"].dump().c_str());
  }
}

LoadedConfig load(const Common& common) {
  auto loaded = load_config(common.config);
  if (common.seed) loaded.cfg.seed = *common.seed;
  return loaded;
}

// A second interior start distinct from the configured one: shares
// proportional to 1, 2, ..., n summing to half the capacity.
std::vector<Vector> skewed_start(const SystemConfig& cfg) {
  const auto n = Eigen::Index(cfg.agents);
  const double total = double(cfg.agents * (cfg.agents + 1)) / 2.0;
  std::vector<Vector> out;
  for (const auto& r : cfg.resources) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = 0.5 * r.capacity * double(i + 1) / total;
    out.push_back(std::move(v));
  }
  return out;
}

int cmd_simulate(const Common& common, std::size_t events) {
  const auto loaded = load(common);
  Manifest manifest("simulate", common, loaded.cfg.seed);
  const auto trace = run_simulation(loaded.cfg, loaded.costs, events);
  std::ostringstream csv;
  write_trace_csv(csv, trace);
  manifest.emit("trace.csv", csv.str());
  const Json summary = summary_to_json(loaded.cfg, trace.summary);
  manifest.emit("summary.json", summary.dump(2) + "\n");
  manifest.finish();
  print_report(summary, common.pretty);
  return kOk;
}

int cmd_verify(const Common& common, std::size_t trials, const std::string& fault) {
  const auto loaded = load(common);
  Manifest manifest("verify", common, loaded.cfg.seed);
  PropertySuiteOptions opts;
  opts.agents = loaded.cfg.agents;
  opts.window = loaded.cfg.window;
  opts.betas.clear();
  for (const auto& r : loaded.cfg.resources) opts.betas.push_back(r.beta);
  opts.trials = trials;
  opts.seed = loaded.cfg.seed;
  if (fault == "drop-full-backoff") {
    opts.factory = MatrixFactory::drop_full_backoff();
  } else if (!fault.empty()) {
    throw std::invalid_argument("unknown fault '" + fault + "'");
  }
  const auto results = run_property_suite(opts);
  const Json report = property_report_to_json(results, trials, opts.seed);
  manifest.emit("verify.json", report.dump(2) + "\n");
  manifest.finish();
  if (common.pretty) print_properties(report);
  else std::cout << report.dump(2) << '\n';
  return report["passed"].get<bool>() ? kOk : kProperty;
}

struct ChainFlags {
  std::size_t steps = 100000;
  bool uniqueness = false;
  bool contraction = false;
  bool trajectory = false;
  std::size_t samples = 2000;
  std::size_t horizon = 0;  // 0 selects contraction_horizon
  double threshold = 0.02;
};

int cmd_chain(const Common& common, const ChainFlags& flags) {
  const auto loaded = load(common);
  const auto model = make_chain_model(loaded.cfg, loaded.costs);
  const std::uint64_t seed = loaded.cfg.seed;
  Manifest manifest("chain", common, seed);

  ChainOptions opts;
  opts.keep_trajectory = flags.trajectory;
  opts.keep_steps = flags.trajectory;
  const auto run = run_chain(model, flags.steps, seed, opts);
  Json report{{"steps", flags.steps},
              {"seed", seed},
              {"ergodic_mean", to_json(run.ergodic.agent_means())},
              {"first_half_mean", to_json(run.first_half.agent_means())},
              {"second_half_mean", to_json(run.second_half.agent_means())},
              {"split_half_difference", split_half_difference(run)},
              {"gamma", model.gamma}};
  manifest.emit("chain.json", report.dump(2) + "\n");

  if (flags.trajectory) {
    std::ostringstream csv;
    write_trajectory_csv(csv, run, model.layout(),
                         Json{{"n", loaded.cfg.agents}, {"T", loaded.cfg.window},
                              {"m", loaded.cfg.resources.size()}, {"seed", seed}, {"steps", flags.steps}});
    manifest.emit("trajectory.csv", csv.str());
  }

  bool ok = true;
  const auto start_a = initial_allocations(loaded.cfg);
  const auto start_b = skewed_start(loaded.cfg);
  if (flags.uniqueness) {
    const auto u = uniqueness_probe(model, flags.steps, seed, Rng::splitmix64(seed), start_a, start_b);
    Json doc = uniqueness_to_json(u);
    doc["threshold"] = flags.threshold;
    doc["passed"] = u.normalized_distance < flags.threshold;
    ok = ok && u.normalized_distance < flags.threshold;
    manifest.emit("uniqueness.json", doc.dump(2) + "\n");
    report["uniqueness"] = doc;
  }
  if (flags.contraction) {
    const auto z = init_state(model, start_a);
    const auto w = init_state(model, start_b);
    const std::size_t horizon = flags.horizon ? flags.horizon : contraction_horizon(loaded.cfg);
    Json doc;
    if (loaded.cfg.agents == 1) {
      doc = Json{{"horizon", horizon}, {"samples", 0}, {"skipped", "W is trivial for a single agent"}};
    } else {
      doc = contraction_to_json(contraction_on_average(model, z, w, horizon, flags.samples, seed));
      ok = ok && doc["contracts_on_average"].get<bool>();
    }
    manifest.emit("contraction.json", doc.dump(2) + "\n");
    report["contraction"] = doc;
  }
  manifest.finish();
  print_report(report, common.pretty);
  if (common.pretty) {
    for (const char* key : {"uniqueness", "contraction"})
      if (report.contains(key)) {
        std::cout << "-- " << key << '\n';
        print_report(report[key], true);
      }
  }
  return ok ? kOk : kProperty;
}

int cmd_oracle(const Common& common) {
  const auto loaded = load(common);
  Manifest manifest("oracle", common, loaded.cfg.seed);
  const Json doc = oracle_to_json(solve_optimal(loaded.cfg, loaded.costs));
  manifest.emit("oracle.json", doc.dump(2) + "\n");
  manifest.finish();
  print_report(doc, common.pretty);
  return kOk;
}

struct CompareFlags {
  std::string summary;
  std::string chain;
  std::string oracle;
  std::string source = "event";  // event | time, for simulate summaries
};

int cmd_compare(const Common& common, const CompareFlags& flags) {
  const auto loaded = load(common);
  if (flags.summary.empty() == flags.chain.empty())
    throw MissingInput("compare: give exactly one of --summary or --chain");
  std::vector<Vector> mean;
  if (!flags.summary.empty()) {
    const Json s = read_json(flags.summary);
    const char* key = flags.source == "time" ? "time_average" : "event_mean";
    if (!s.contains(key)) throw MissingInput(flags.summary + ": no '" + key + "' field");
    mean = allocations_from_json(s.at(key));
  } else {
    const Json c = read_json(flags.chain);
    if (!c.contains("ergodic_mean")) throw MissingInput(flags.chain + ": no 'ergodic_mean' field");
    mean = allocations_from_json(c.at("ergodic_mean"));
  }
  if (mean.size() != loaded.cfg.resources.size())
    throw std::invalid_argument("compare: mean does not match the configured resources");

  OptimalAllocation opt;
  if (!flags.oracle.empty()) {
    const Json o = read_json(flags.oracle);
    opt.y = allocations_from_json(o.at("allocations"));
    opt.objective = o.at("objective").get<double>();
  } else {
    opt = solve_optimal(loaded.cfg, loaded.costs);
  }

  Manifest manifest("compare", common, loaded.cfg.seed);
  std::vector<Vector> dist, rel;
  double worst = 0.0;
  for (std::size_t j = 0; j < mean.size(); ++j) {
    if (mean[j].size() != opt.y[j].size()) throw std::invalid_argument("compare: agent count mismatch");
    dist.push_back((mean[j] - opt.y[j]).cwiseAbs());
    rel.push_back(dist.back() / loaded.cfg.resources[j].capacity);
    worst = std::max(worst, rel.back().maxCoeff());
  }
  const double f_mean = social_cost(loaded.costs, mean);
  const Json doc{{"mean", to_json(mean)},
                 {"optimum", to_json(opt.y)},
                 {"abs_distance", to_json(dist)},
                 {"distance_over_capacity", to_json(rel)},
                 {"max_distance_over_capacity", worst},
                 {"cost_at_mean", f_mean},
                 {"cost_at_optimum", opt.objective},
                 {"relative_cost_gap", f_mean / opt.objective - 1.0}};
  manifest.emit("compare.json", doc.dump(2) + "\n");
  manifest.finish();
  print_report(doc, common.pretty);
  return kOk;
}

struct MatrixFlags {
  std::size_t resource = 0;
  std::string pattern;  // e.g. "1,0,1": 1 means the agent backs off
  bool lifted = false;
};

int cmd_matrix(const Common& common, const MatrixFlags& flags) {
  const auto loaded = load(common);
  const auto& cfg = loaded.cfg;
  if (flags.resource >= cfg.resources.size()) throw std::invalid_argument("matrix: resource out of range");
  BackoffPattern p = BackoffPattern::none(cfg.resources[flags.resource].beta, cfg.agents);
  std::stringstream ss(flags.pattern);
  std::string tok;
  std::size_t i = 0;
  while (std::getline(ss, tok, ',')) {
    if (i >= cfg.agents || (tok != "0" && tok != "1")) throw std::invalid_argument("matrix: bad --pattern");
    p.backed_off[i++] = tok == "1";
  }
  if (i != cfg.agents) throw std::invalid_argument("matrix: --pattern needs one 0/1 entry per agent");
  const AimdMatrix a(p);
  std::vector<int> bits(p.backed_off.begin(), p.backed_off.end());
  const Json header{{"n", cfg.agents}, {"T", cfg.window}, {"m", cfg.resources.size()}, {"resource", flags.resource},
                    {"beta", p.beta},  {"pattern", bits}, {"lifted", flags.lifted}};
  Manifest manifest("matrix", common, cfg.seed);
  std::ostringstream text;
  write_matrix_dump(text, flags.lifted ? build_D(a, cfg.window).dense() : a.dense(), header);
  manifest.emit("matrix.txt", text.str());
  manifest.finish();
  std::cout << text.str();
  return kOk;
}

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("config", common.config, "JSON configuration file")->required();
  cmd->add_option("--out", common.out, "output directory");
  cmd->add_option("--seed", common.seed, "overrides system.seed");
  cmd->add_flag("--pretty", common.pretty, "human-readable table on standard output");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AIMD multi-resource allocation: simulation, chain analysis and verification"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Common common;
  std::size_t events = 10000, trials = 1000;
  std::string fault;
  ChainFlags chain;
  CompareFlags compare;
  MatrixFlags matrix;

  auto* sim = app.add_subcommand("simulate", "event-driven simulation; writes trace.csv and summary.json");
  add_common(sim, common);
  sim->add_option("--events", events, "number of capacity events");

  auto* ver = app.add_subcommand("verify", "randomized matrix and norm property suite; writes verify.json");
  add_common(ver, common);
  ver->add_option("--trials", trials, "random draws per property")->check(CLI::PositiveNumber);
  ver->add_option("--inject-fault", fault)->group("");

  auto* ch = app.add_subcommand("chain", "windowed Markov chain; writes chain.json and optional reports");
  add_common(ch, common);
  ch->add_option("--steps", chain.steps, "chain steps");
  ch->add_flag("--probe-uniqueness", chain.uniqueness, "run two chains from distinct starts");
  ch->add_flag("--contraction", chain.contraction, "Monte Carlo contraction-on-average estimate");
  ch->add_flag("--trajectory", chain.trajectory, "write trajectory.csv");
  ch->add_option("--samples", chain.samples, "contraction samples")->check(CLI::Range(2, 100000000));
  ch->add_option("--horizon", chain.horizon, "contraction product length (default from the gap ordering)");
  ch->add_option("--threshold", chain.threshold, "uniqueness distance threshold, as a fraction of capacity");

  auto* orc = app.add_subcommand("oracle", "centralized optimum; writes oracle.json");
  add_common(orc, common);

  auto* cmp = app.add_subcommand("compare", "distance between long-run means and the optimum");
  add_common(cmp, common);
  cmp->add_option("--summary", compare.summary, "summary.json from simulate");
  cmp->add_option("--chain", compare.chain, "chain.json from chain");
  cmp->add_option("--oracle", compare.oracle, "oracle.json; solved on the fly when absent");
  cmp->add_option("--source", compare.source, "which simulate mean to use")
      ->check(CLI::IsMember({"event", "time"}));

  auto* mat = app.add_subcommand("matrix", "dump one AIMD or lifted matrix; writes matrix.txt");
  add_common(mat, common);
  mat->add_option("--resource", matrix.resource, "resource index");
  mat->add_option("--pattern", matrix.pattern, "comma-separated 0/1 back-off flags")->required();
  mat->add_flag("--lifted", matrix.lifted, "dump the lifted matrix instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*sim) return cmd_simulate(common, events);
    if (*ver) return cmd_verify(common, trials, fault);
    if (*ch) return cmd_chain(common, chain);
    if (*orc) return cmd_oracle(common);
    if (*cmp) return cmd_compare(common, compare);
    if (*mat) return cmd_matrix(common, matrix);
  } catch (const ConfigError& e) {
    for (const auto& v : e.violations()) std::cerr << "error: " << v << '\n';
    return kValidation;
  } catch (const MissingInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kMissing;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
  return kValidation;
}
