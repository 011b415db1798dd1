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

// Generators for the common parallel program shapes. Each returns a plain
// Model that validates cleanly and survives a print/parse round trip, plus
// the single-rank sequential model used as the speedup baseline.

#pragma once

#include <string>
#include <variant>
#include <vector>

#include "parmodel/model.h"

namespace parmodel {

struct MasterWorkerSpec {
  int workers = 1;
  std::vector<double> task_costs;  // µs, dispatched in this order
  TaskPolicy policy = TaskPolicy::kDynamic;
  double payload_bytes = 0;
  double result_bytes = 0;
};

struct SpmdSpec {
  int p = 1;
  double n = 1;             // elements, split evenly (ceil) across ranks
  double element_cost = 0;  // µs per element
  double halo_bytes = 0;
  int steps = 1;
};

struct PipelineSpec {
  int stages = 1;
  int items = 1;
  double stage_cost = 0;  // µs per item per stage
  double item_bytes = 8;
};

struct DivideConquerSpec {
  int arity = 2;
  int depth = 0;
  double split_cost = 0;
  double leaf_cost = 0;
  double join_cost = 0;
  double data_bytes = 8;
};

struct MonteCarloPiSpec {
  int p = 5;
  double n = 1e6;
  double sample_cost = 0.1;
};

struct ParadigmSpec;

struct HybridSpec {
  std::vector<ParadigmSpec> phases;
};

struct ParadigmSpec {
  std::variant<MasterWorkerSpec, SpmdSpec, PipelineSpec, DivideConquerSpec, MonteCarloPiSpec,
               HybridSpec>
      body;
  CostModel costs;
};

Model gen_master_worker(const MasterWorkerSpec& spec, const CostModel& costs = {});
Model gen_spmd(const SpmdSpec& spec, const CostModel& costs = {});
Model gen_pipeline(const PipelineSpec& spec, const CostModel& costs = {});
Model gen_divide_conquer(const DivideConquerSpec& spec, const CostModel& costs = {});
Model gen_monte_carlo_pi(const MonteCarloPiSpec& spec, const CostModel& costs = {});

/// Runs the phases one after another on the same ranks. Phases with the
/// same role layout keep their roles; otherwise every rank gets its own role
/// `p<rank>` and targets are rewritten to absolute ranks. All phases must
/// agree on the process count and on shared parameter values.
Model compose_hybrid(const std::vector<Model>& phases, const CostModel& costs);

/// Dispatches on the spec kind.
Model generate(const ParadigmSpec& spec);

/// Single-rank model doing the same computation with no communication.
Model sequential_baseline(const ParadigmSpec& spec);

/// Total process count of the generated model.
int process_count(const ParadigmSpec& spec);

std::string_view paradigm_name(const ParadigmSpec& spec);

}  // namespace parmodel
