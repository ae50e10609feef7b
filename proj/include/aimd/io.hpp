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

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "aimd/chain.hpp"
#include "aimd/config.hpp"
#include "aimd/cost.hpp"
#include "aimd/engine.hpp"
#include "aimd/oracle.hpp"
#include "aimd/verify.hpp"

namespace aimd {

using Json = nlohmann::ordered_json;

/// A required file could not be opened.
class MissingInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LoadedConfig {
  SystemConfig cfg;
  CostModel costs;
};

// Parses and validates the JSON config. Throws ConfigError with every
// violation found, including schema problems.
LoadedConfig parse_config(const Json& doc);
LoadedConfig load_config(const std::string& path);
Json config_to_json(const SystemConfig& cfg, const CostModel& costs);

Json read_json(const std::string& path);  // MissingInput when absent
void write_text(const std::string& path, const std::string& text);

// Shortest text that round-trips the double.
std::string format_double(double v);

Json to_json(const Vector& v);
Json to_json(const std::vector<Vector>& blocks);
std::vector<Vector> allocations_from_json(const Json& doc);  // [[...]] per resource

// One row per (event, agent).
void write_trace_csv(std::ostream& out, const EventTrace& trace);
Json summary_to_json(const SystemConfig& cfg, const TraceSummary& summary);

Json oracle_to_json(const OptimalAllocation& opt);
Json property_report_to_json(const std::vector<PropertyResult>& results, std::size_t trials, std::uint64_t seed);
Json contraction_to_json(const ContractionReport& report);
Json uniqueness_to_json(const UniquenessResult& result);

// JSON header line, then one line of space-separated entries per row.
void write_matrix_dump(std::ostream& out, const Matrix& m, const Json& header);

// JSON metadata line prefixed by '#', then CSV rows: step, resource, block,
// subblock, then the n entries. Step 0 has resource -1.
void write_trajectory_csv(std::ostream& out, const ChainRun& run, const Layout& layout, const Json& meta);

// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

}  // namespace aimd
