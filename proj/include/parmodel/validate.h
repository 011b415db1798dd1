// Copyright 2026 The parmodel Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <vector>

#include "parmodel/diagnostic.h"
#include "parmodel/model.h"

namespace parmodel {

struct ValidateOptions {
  /// Reject point-to-point messages between non-adjacent ranks (only
  /// enforced when the cost model does not scale by hops).
  bool strict_neighbors = false;
};

struct ValidationReport {
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return !has_errors(diagnostics); }
  void merge(const ValidationReport& other);
};

/// Shape, process-count and role-coverage checks.
ValidationReport check_topology(const Model& m, const ValidateOptions& options = {});

/// Static send/recv count matching for loop-free flows and collective
/// sequence agreement across ranks. Flows with loops or task pools are
/// reported as deferred to simulation.
ValidationReport check_communications(const Model& m);

/// Non-blocking handle usage and task-farm role placement.
ValidationReport check_stereotypes(const Model& m);

/// All of the above, deduplicated.
ValidationReport validate(const Model& m, const ValidateOptions& options = {});

inline constexpr std::string_view kDeferredMatching = "matching deferred to simulation";

}  // namespace parmodel
