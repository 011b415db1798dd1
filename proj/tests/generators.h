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

// Random model sources for property tests.

#pragma once

#include <fmt/format.h>

#include <random>
#include <string>
#include <vector>

#include "parmodel/paradigms.h"
#include "parmodel/parser.h"

namespace gen {

// Phased programs: every rank walks the same global phase list, so each
// rendezvous only waits on a partner that is finishing earlier phases. The
// result never deadlocks, under either send mode.
inline std::string phased_program(std::mt19937_64& rng, bool buffered, bool hop_scaling) {
  std::uniform_int_distribution<int> ranks(2, 6);
  const int p = ranks(rng);
  std::uniform_int_distribution<int> phases(1, 12);
  std::uniform_int_distribution<int> cost(0, 500);
  std::uniform_int_distribution<int> bytes(0, 4096);
  std::uniform_int_distribution<int> rank(0, p - 1);
  std::uniform_int_distribution<int> kind(0, 9);

  std::vector<std::string> body(p);
  std::vector<std::vector<std::string>> pending(p);  // handles to wait on
  int handle = 0;
  const int count = phases(rng);
  for (int ph = 0; ph < count; ++ph) {
    const int k = kind(rng);
    if (k <= 3) {
      for (int r = 0; r < p; ++r) body[r] += fmt::format("  action \"a{}\" cost {}us\n", ph, cost(rng));
    } else if (k <= 7) {
      const int src = rank(rng);
      int dst = rank(rng);
      if (dst == src) dst = (src + 1) % p;
      const int b = bytes(rng);
      if (k == 7) {
        const std::string h = fmt::format("h{}", handle++);
        body[src] += fmt::format("  send to r{} size {}B nonblocking as {}\n", dst, b, h);
        pending[src].push_back(h);
      } else {
        body[src] += fmt::format("  send to r{} size {}B blocking\n", dst, b);
      }
      body[dst] += fmt::format("  recv from r{} size {}B\n", src, b);
    } else if (k == 8) {
      static const char* kinds[] = {"bcast", "reduce", "gather", "scatter", "barrier"};
      const std::string ck = kinds[rng() % 5];
      const int root = rank(rng);
      const int b = bytes(rng);
      for (int r = 0; r < p; ++r) body[r] += fmt::format("  collective {} root r{} size {}B\n", ck, root, b);
    } else {
      for (int r = 0; r < p; ++r) {
        for (const auto& h : pending[r]) body[r] += fmt::format("  wait {}\n", h);
        pending[r].clear();
      }
    }
  }
  for (int r = 0; r < p; ++r)
    for (const auto& h : pending[r]) body[r] += fmt::format("  wait {}\n", h);

  std::uniform_real_distribution<double> ts(0, 100), tb(0, 0.05);
  std::string text = fmt::format(
      "model \"phased\"\ntopology {}({})\ncosts {{\n  t_startup = {}us\n  t_byte = {}us\n"
      "  hop_scaling = {}\n  send_mode = {}\n}}\n",
      p >= 3 ? "ring" : "bus", p, std::round(ts(rng) * 100) / 100, std::round(tb(rng) * 1e4) / 1e4,
      hop_scaling ? "true" : "false", buffered ? "buffered" : "rendezvous");
  // ring needs three ranks, so two-rank programs run on a bus.
  for (int r = 0; r < p; ++r) {
    const std::string& flow = body[r];
    text += fmt::format("role r{} on rank {} {{\n{}}}\n", r, r, flow.empty() ? "  action \"n\" cost 0us\n" : flow);
  }
  return text;
}

inline parmodel::Model phased_model(std::mt19937_64& rng, bool buffered, bool hop_scaling) {
  const std::string text = phased_program(rng, buffered, hop_scaling);
  auto parsed = parmodel::parse_model(text);
  if (!parsed.ok()) throw std::runtime_error("generator produced an unparsable model:\n" + text);
  return *parsed.model;
}

inline std::vector<double> task_costs(std::mt19937_64& rng, int max_tasks) {
  std::uniform_int_distribution<int> n(1, max_tasks);
  std::uniform_int_distribution<int> c(1, 200);
  std::vector<double> out(n(rng));
  for (auto& x : out) x = c(rng);
  return out;
}

// A random generated paradigm model with the given costs.
inline parmodel::ParadigmSpec paradigm(std::mt19937_64& rng, const parmodel::CostModel& costs) {
  using namespace parmodel;
  ParadigmSpec spec;
  spec.costs = costs;
  switch (rng() % 5) {
    case 0: {
      MasterWorkerSpec s;
      s.workers = 1 + static_cast<int>(rng() % 6);
      s.task_costs = task_costs(rng, 20);
      s.policy = rng() % 2 ? TaskPolicy::kStatic : TaskPolicy::kDynamic;
      s.payload_bytes = static_cast<double>(rng() % 512);
      s.result_bytes = static_cast<double>(rng() % 512);
      spec.body = s;
      break;
    }
    case 1: {
      const int p = 1 + static_cast<int>(rng() % 8);
      spec.body = SpmdSpec{p, static_cast<double>(p * (1 + rng() % 1000)), 0.1 * (1 + rng() % 10),
                           static_cast<double>(rng() % 2048), 1 + static_cast<int>(rng() % 3)};
      break;
    }
    case 2:
      spec.body = PipelineSpec{1 + static_cast<int>(rng() % 6), 1 + static_cast<int>(rng() % 6),
                               static_cast<double>(1 + rng() % 50), static_cast<double>(rng() % 64)};
      break;
    case 3:
      spec.body = DivideConquerSpec{2 + static_cast<int>(rng() % 2), static_cast<int>(rng() % 3),
                                    static_cast<double>(rng() % 20), static_cast<double>(rng() % 200),
                                    static_cast<double>(rng() % 20), static_cast<double>(rng() % 256)};
      break;
    default:
      spec.body = MonteCarloPiSpec{2 + static_cast<int>(rng() % 8), static_cast<double>(1000 * (1 + rng() % 100)),
                                   0.1};
      break;
  }
  return spec;
}

}  // namespace gen
