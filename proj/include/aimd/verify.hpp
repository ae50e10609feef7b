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
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "aimd/matrix.hpp"

namespace aimd {

/// Builds AIMD matrices for the suite. Replaceable so the suite can be shown
/// to catch a broken builder.
struct MatrixFactory {
  std::function<AimdMatrix(const BackoffPattern&)> build = [](const BackoffPattern& p) { return AimdMatrix(p); };

  // A builder that silently drops full back-offs (returns the identity).
  static MatrixFactory drop_full_backoff();
};

struct PropertyResult {
  PropertyResult() = default;
  PropertyResult(std::string n, std::string s, std::string m)
      : name(std::move(n)), statement(std::move(s)), metric(std::move(m)) {}

  std::string name;
  std::string statement;
  std::string metric;    // what `worst` measures
  double worst = 0.0;
  double threshold = 0.0;
  bool passed = true;
  std::size_t trials = 0;
  Vector witness;        // maximizing vector, when the property is a norm bound
};

struct PropertySuiteOptions {
  std::size_t agents = 2;
  std::size_t window = 1;
  std::vector<double> betas{0.5};  // one per resource
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  MatrixFactory factory;
};

std::vector<PropertyResult> run_property_suite(const PropertySuiteOptions& options);

}  // namespace aimd
