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

// Speedup/efficiency figures and parameter sweeps built on simulator runs.

#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "parmodel/diagnostic.h"
#include "parmodel/model.h"
#include "parmodel/paradigms.h"

namespace parmodel {

enum class SweepDimension { kProcessCount, kProblemSize, kStartup };

std::string_view to_string(SweepDimension d);
/// Accepts `p`, `N`, `t_startup` and the long names.
std::optional<SweepDimension> sweep_dimension_from_string(std::string_view name);

/// t_seq / t_par. Throws std::invalid_argument unless both are positive.
double speedup(double t_seq, double t_par);

struct SweepRow {
  double value = 0;
  int processes = 0;
  double makespan = 0;
  double baseline = 0;  // T(1) for this row's problem
  double speedup = 0;
  double efficiency = 0;

  bool operator==(const SweepRow&) const = default;
};

struct SweepReport {
  SweepDimension dimension = SweepDimension::kProcessCount;
  std::vector<SweepRow> rows;  // ascending by value
  std::vector<std::string> warnings;

  bool operator==(const SweepReport&) const = default;
};

/// How to build the parallel model and its sequential counterpart for one
/// swept value.
struct SweepTemplate {
  std::function<Model(double)> instantiate;
  std::function<Model(double)> sequential;
};

SweepTemplate template_for(const ParadigmSpec& spec, SweepDimension dimension);
/// Model templates sweep the `P` or `N` parameter, or the cost model's
/// t_startup. The baseline is the model collapsed onto one rank.
SweepTemplate template_for(const Model& model, SweepDimension dimension);

/// Single-rank model running every rank's computation back to back with all
/// communication removed. Expressions are evaluated under `params`.
Model sequentialize(const Model& model, const Params& params);

/// A swept value produced an invalid or non-terminating model.
class SweepError : public std::runtime_error {
 public:
  SweepError(const std::string& message, std::vector<Diagnostic> diagnostics = {})
      : std::runtime_error(message), diagnostics_(std::move(diagnostics)) {}
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

/// One independent run per value, computed concurrently; rows sorted.
SweepReport sweep(const SweepTemplate& tmpl, SweepDimension dimension, std::vector<double> values);

enum class ReportFormat { kTable, kCsv };

std::string render_report(const SweepReport& report, ReportFormat format);

}  // namespace parmodel
