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

// Text renderings of a model: the process graph as Graphviz DOT, the role
// flows as side-by-side swimlanes, and a simulated run as a timed sequence
// listing. Output depends only on the inputs.

#pragma once

#include <array>
#include <string>
#include <string_view>

#include "parmodel/model.h"
#include "parmodel/simulate.h"
#include "parmodel/topology.h"

namespace parmodel {

/// Every stereotype token an export may contain.
inline constexpr std::array<std::string_view, 11> kStereotypes = {
    "<<action+>>",      "<<subactivity+>>", "<<bsend+>>",  "<<nbsend+>>",
    "<<collective+>>",  "<<synchronous>>",  "<<asynchronous>>", "<<create>>",
    "<<destroy>>",      "<<controller>>",   "<<actor>>",
};

/// Undirected DOT graph: one node per rank labeled `P<rank>:<role>`, one edge
/// per adjacent pair, labeled with the message sizes the model sends over it.
std::string export_topology_dot(const ProcessGraph& g, const Model& m);
std::string export_topology_dot(const Model& m);

/// One column per role, one stereotyped line per flow node.
std::string export_swimlane(const Model& m);

/// Lifelines per rank plus the invoking user; message, create and destroy
/// lines in time order. Line count is message_count + 2p + 1.
std::string export_sequence(const Trace& trace, const Model& m);

}  // namespace parmodel
