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

#include "aimd/io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

namespace aimd {

namespace {

/// Collects schema problems instead of stopping at the first one.
class Reader {
 public:
  std::vector<std::string> errors;

  const Json* object(const Json& parent, const char* key, const std::string& path) {
    if (!parent.contains(key)) {
      errors.push_back(path + key + ": missing");
      return nullptr;
    }
    const Json& v = parent.at(key);
    if (!v.is_object()) {
      errors.push_back(path + key + ": expected an object");
      return nullptr;
    }
    return &v;
  }

  template <class T>
  bool number(const Json& parent, const char* key, const std::string& path, T& out, bool required = true) {
    if (!parent.contains(key)) {
      if (required) errors.push_back(path + key + ": missing");
      return false;
    }
    const Json& v = parent.at(key);
    if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
        errors.push_back(path + key + ": expected a non-negative integer");
        return false;
      }
    } else if (!v.is_number()) {
      errors.push_back(path + key + ": expected a number");
      return false;
    }
    out = v.get<T>();
    return true;
  }

  // Array of m numbers, or one number broadcast to m entries.
  std::vector<double> numbers(const Json& parent, const char* key, const std::string& path, std::size_t m,
                              std::optional<double> fallback = std::nullopt) {
    if (!parent.contains(key)) {
      if (fallback) return std::vector<double>(m, *fallback);
      errors.push_back(path + key + ": missing");
      return {};
    }
    const Json& v = parent.at(key);
    if (v.is_number()) return std::vector<double>(m, v.get<double>());
    if (!v.is_array() || v.size() != m) {
      errors.push_back(path + key + ": expected a number or an array of " + std::to_string(m) + " numbers");
      return {};
    }
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) {
        errors.push_back(path + key + ": expected numbers");
        return {};
      }
      out.push_back(e.get<double>());
    }
    return out;
  }
};

std::shared_ptr<const CostFunction> parse_cost(Reader& rd, const Json& agent, const std::string& path,
                                               std::size_t m) {
  const Json* cost = rd.object(agent, "cost", path);
  if (!cost) return nullptr;
  const std::string cpath = path + "cost.";
  if (!cost->contains("family") || !cost->at("family").is_string()) {
    rd.errors.push_back(cpath + "family: expected a string");
    return nullptr;
  }
  const auto family = cost->at("family").get<std::string>();
  const Json* params = rd.object(*cost, "params", cpath);
  if (!params) return nullptr;
  const std::string ppath = cpath + "params.";
  const std::size_t before = rd.errors.size();
  try {
    if (family == "quadratic") {
      auto c = rd.numbers(*params, "c", ppath, m);
      auto b = rd.numbers(*params, "b", ppath, m, 0.0);
      if (rd.errors.size() != before) return nullptr;
      return std::make_shared<QuadraticCost>(std::move(c), std::move(b));
    }
    if (family == "exponential") {
      auto a = rd.numbers(*params, "a", ppath, m);
      auto d = rd.numbers(*params, "d", ppath, m);
      if (rd.errors.size() != before) return nullptr;
      return std::make_shared<ExponentialCost>(std::move(a), std::move(d));
    }
  } catch (const std::invalid_argument& e) {
    rd.errors.push_back(cpath + "params: " + e.what());
    return nullptr;
  }
  rd.errors.push_back(cpath + "family: unknown family '" + family + "'");
  return nullptr;
}

void parse_engine(Reader& rd, const Json& doc, SystemConfig& cfg) {
  if (!doc.contains("engine")) return;
  const Json* engine = rd.object(doc, "engine", "");
  if (!engine) return;
  if (engine->contains("average_mode")) {
    const auto& v = engine->at("average_mode");
    if (v == "windowed") cfg.average_mode = AverageMode::windowed;
    else if (v == "cumulative") cfg.average_mode = AverageMode::cumulative;
    else rd.errors.emplace_back("engine.average_mode: expected \"windowed\" or \"cumulative\"");
  }
  if (engine->contains("warmup")) {
    const auto& v = engine->at("warmup");
    if (v == "partial") cfg.warmup = WarmUp::partial;
    else if (v == "seeded") cfg.warmup = WarmUp::seeded;
    else rd.errors.emplace_back("engine.warmup: expected \"partial\" or \"seeded\"");
  }
  if (engine->contains("initial")) {
    const auto& v = engine->at("initial");
    if (v.is_string() && v == "interior-default") return;
    bool ok = v.is_array();
    if (ok) {
      for (const auto& row : v) {
        ok = ok && row.is_array();
        if (!ok) break;
        std::vector<double> r;
        for (const auto& e : row) {
          ok = ok && e.is_number();
          if (ok) r.push_back(e.get<double>());
        }
        cfg.initial.push_back(std::move(r));
      }
    }
    if (!ok) {
      cfg.initial.clear();
      rd.errors.emplace_back("engine.initial: expected \"interior-default\" or an m x n array of numbers");
    }
  }
}

Json cost_to_json(const CostFunction& f) {
  Json out{{"family", f.family()}};
  if (const auto* q = dynamic_cast<const QuadraticCost*>(&f)) {
    out["params"] = {{"c", q->curvature()}, {"b", q->linear()}};
  } else if (const auto* e = dynamic_cast<const ExponentialCost*>(&f)) {
    out["params"] = {{"a", e->scale()}, {"d", e->rate()}};
  }
  return out;
}

}  // namespace

LoadedConfig parse_config(const Json& doc) {
  Reader rd;
  LoadedConfig out;
  SystemConfig& cfg = out.cfg;
  if (!doc.is_object()) throw ConfigError({"config: expected a JSON object"});

  std::size_t m = 0;
  if (const Json* sys = rd.object(doc, "system", "")) {
    rd.number(*sys, "n", "system.", cfg.agents);
    rd.number(*sys, "m", "system.", m);
    rd.number(*sys, "T", "system.", cfg.window);
    rd.number(*sys, "seed", "system.", cfg.seed, false);
  }

  if (!doc.contains("resources") || !doc.at("resources").is_array()) {
    rd.errors.emplace_back("resources: expected an array");
  } else {
    const auto& res = doc.at("resources");
    if (res.size() != m) rd.errors.push_back("resources: expected system.m = " + std::to_string(m) + " entries");
    for (std::size_t j = 0; j < res.size(); ++j) {
      const std::string path = "resources[" + std::to_string(j) + "].";
      ResourceParams r;
      if (!res[j].is_object()) {
        rd.errors.push_back(path.substr(0, path.size() - 1) + ": expected an object");
        continue;
      }
      rd.number(res[j], "capacity", path, r.capacity);
      rd.number(res[j], "alpha", path, r.alpha);
      rd.number(res[j], "beta", path, r.beta);
      rd.number(res[j], "lambda_min", path, r.lambda_min, false);
      rd.number(res[j], "lambda_max", path, r.lambda_max, false);
      if (res[j].contains("gamma")) {
        const auto& g = res[j].at("gamma");
        if (g.is_number()) r.gamma = g.get<double>();
        else if (!(g.is_string() && g == "auto")) rd.errors.push_back(path + "gamma: expected a number or \"auto\"");
      }
      cfg.resources.push_back(r);
    }
  }

  std::vector<std::shared_ptr<const CostFunction>> costs;
  if (!doc.contains("agents") || !doc.at("agents").is_array()) {
    rd.errors.emplace_back("agents: expected an array");
  } else {
    const auto& agents = doc.at("agents");
    if (agents.size() != cfg.agents)
      rd.errors.push_back("agents: expected system.n = " + std::to_string(cfg.agents) + " entries");
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const std::string path = "agents[" + std::to_string(i) + "].";
      if (!agents[i].is_object()) {
        rd.errors.push_back(path.substr(0, path.size() - 1) + ": expected an object");
        continue;
      }
      if (auto f = parse_cost(rd, agents[i], path, m)) costs.push_back(std::move(f));
    }
  }

  parse_engine(rd, doc, cfg);

  for (auto& v : config_violations(cfg)) rd.errors.push_back(std::move(v));
  if (!rd.errors.empty()) throw ConfigError(std::move(rd.errors));
  out.costs = CostModel(std::move(costs));
  return out;
}

LoadedConfig load_config(const std::string& path) {
  const Json doc = read_json(path);
  return parse_config(doc);
}

Json config_to_json(const SystemConfig& cfg, const CostModel& costs) {
  Json out;
  out["system"] = {{"n", cfg.agents}, {"m", cfg.resources.size()}, {"T", cfg.window}, {"seed", cfg.seed}};
  out["resources"] = Json::array();
  for (const auto& r : cfg.resources) {
    Json g = r.gamma ? Json(*r.gamma) : Json("auto");
    out["resources"].push_back({{"capacity", r.capacity},
                                {"alpha", r.alpha},
                                {"beta", r.beta},
                                {"gamma", g},
                                {"lambda_min", r.lambda_min},
                                {"lambda_max", r.lambda_max}});
  }
  out["agents"] = Json::array();
  for (std::size_t i = 0; i < costs.agents(); ++i) out["agents"].push_back({{"cost", cost_to_json(costs[i])}});
  out["engine"] = {{"average_mode", to_string(cfg.average_mode)}, {"warmup", to_string(cfg.warmup)}};
  out["engine"]["initial"] = cfg.initial.empty() ? Json("interior-default") : Json(cfg.initial);
  return out;
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingInput("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError({path + ": " + e.what()});
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

Json to_json(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Json to_json(const std::vector<Vector>& blocks) {
  Json out = Json::array();
  for (const auto& b : blocks) out.push_back(to_json(b));
  return out;
}

std::vector<Vector> allocations_from_json(const Json& doc) {
  if (!doc.is_array()) throw std::invalid_argument("expected an array of allocation rows");
  std::vector<Vector> out;
  for (const auto& row : doc) {
    const auto values = row.get<std::vector<double>>();
    out.emplace_back(Eigen::Map<const Vector>(values.data(), Eigen::Index(values.size())));
  }
  return out;
}

void write_trace_csv(std::ostream& out, const EventTrace& trace) {
  out << "event_index,time,resource,agent,pre_alloc,lambda,backoff,post_alloc\n";
  for (const auto& r : trace.records) {
    for (Eigen::Index i = 0; i < r.pre.size(); ++i) {
      out << r.index << ',' << format_double(r.time) << ',' << r.resource << ',' << i << ','
          << format_double(r.pre[i]) << ',' << format_double(r.lambda[i]) << ',' << (r.factors[i] < 1.0 ? 1 : 0)
          << ',' << format_double(r.post[i]) << '\n';
    }
  }
}

Json summary_to_json(const SystemConfig& cfg, const TraceSummary& s) {
  Json out;
  out["agents"] = cfg.agents;
  out["resources"] = cfg.resources.size();
  out["window"] = cfg.window;
  out["average_mode"] = to_string(cfg.average_mode);
  out["end_time"] = s.end_time;
  out["events"] = s.events;
  out["event_mean"] = to_json(s.event_mean);
  out["time_average"] = to_json(s.time_average);
  out["clamps"] = s.clamps;
  out["floors"] = s.floors;
  out["redraws"] = s.redraws;
  out["gamma"] = s.gamma;
  return out;
}

Json oracle_to_json(const OptimalAllocation& opt) {
  return Json{{"allocations", to_json(opt.y)},
              {"objective", opt.objective},
              {"kkt_residual", opt.kkt},
              {"iterations", opt.iterations}};
}

Json property_report_to_json(const std::vector<PropertyResult>& results, std::size_t trials, std::uint64_t seed) {
  Json props = Json::array();
  bool all = true;
  for (const auto& r : results) {
    all = all && r.passed;
    Json p{{"name", r.name},       {"statement", r.statement}, {"passed", r.passed}, {"metric", r.metric},
           {"worst", r.worst},     {"threshold", r.threshold}, {"samples", r.trials}};
    if (r.witness.size() > 0) p["witness"] = to_json(r.witness);
    props.push_back(std::move(p));
  }
  return Json{{"trials", trials}, {"seed", seed}, {"passed", all}, {"properties", std::move(props)}};
}

Json contraction_to_json(const ContractionReport& r) {
  return Json{{"horizon", r.horizon},
              {"samples", r.samples},
              {"mean_ratio", r.mean_ratio},
              {"ratio_std_error", r.ratio_std_error},
              {"ratio_upper95", r.ratio_upper95},
              {"contracts_on_average", r.ratio_upper95 < 1.0},
              {"full_backoff_frequency", r.full_backoff_frequency},
              {"full_backoff_std_error", r.full_backoff_std_error},
              {"full_backoff_bound", r.full_backoff_bound},
              {"mu", r.mu},
              {"pair_mass", r.pair_mass},
              {"pair_mass_std_error", r.pair_mass_std_error},
              {"pair_mass_bound", r.pair_mass_bound}};
}

Json uniqueness_to_json(const UniquenessResult& u) {
  return Json{{"distance", u.distance},
              {"normalized_distance", u.normalized_distance},
              {"checkpoints", u.checkpoints},
              {"checkpoint_distances", u.checkpoint_distances},
              {"mean_a", to_json(u.mean_a.agent_means())},
              {"mean_b", to_json(u.mean_b.agent_means())}};
}

void write_matrix_dump(std::ostream& out, const Matrix& m, const Json& header) {
  Json h = header;
  h["rows"] = m.rows();
  h["cols"] = m.cols();
  out << h.dump() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? " " : "") << format_double(m(r, c));
    out << '\n';
  }
}

void write_trajectory_csv(std::ostream& out, const ChainRun& run, const Layout& layout, const Json& meta) {
  out << '#' << meta.dump() << '\n';
  out << "step,resource,block,subblock";
  for (std::size_t i = 0; i < layout.agents; ++i) out << ",x" << i;
  out << '\n';
  const auto n = Eigen::Index(layout.agents);
  for (std::size_t k = 0; k < run.trajectory.size(); ++k) {
    const long long fired = k == 0 || k > run.steps.size() ? -1 : static_cast<long long>(run.steps[k - 1].resource);
    const Vector& xi = run.trajectory[k];
    for (std::size_t j = 0; j < layout.resources; ++j) {
      for (std::size_t r = 0; r < layout.window; ++r) {
        out << k << ',' << fired << ',' << j << ',' << r + 1;
        const auto offset = Eigen::Index((j * layout.window + r) * layout.agents);
        for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_double(xi[offset + i]);
        out << '\n';
      }
    }
  }
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInput("cannot open " + path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init");
  std::array<char, 1 << 14> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), std::size_t(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int k = 0; k < len; ++k) {
    hex.push_back(kHex[md[k] >> 4]);
    hex.push_back(kHex[md[k] & 15]);
  }
  return hex;
}

}  // namespace aimd
