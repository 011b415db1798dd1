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

// Deterministic discrete-event execution of a model.
//
// Every rank interprets its role's flow with a local clock. A global queue
// orders rank steps by (time, rank), so messages are posted in time order
// and any-source receives, collective arrivals and task-farm dispatch all
// resolve deterministically. Message cost is t_startup + L*t_byte (times the
// hop count when hop scaling is on). Collectives over g ranks cost
// ceil(log2 g) rounds for bcast/reduce/barrier and a linear root bottleneck
// for gather/scatter. When the queue drains with ranks still blocked the run
// ends with a DeadlockReport instead of a result.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "parmodel/model.h"

namespace parmodel {

enum class EventKind {
  kActionStart,
  kActionEnd,
  kSendStart,
  kSendEnd,
  kRecvStart,
  kRecvEnd,
  kCollectiveStart,
  kCollectiveEnd,
  kTaskAssign,
  kTaskDone,
  kDeadlock,
};

std::string_view to_string(EventKind kind);

struct Event {
  double time = 0;  // µs
  Rank rank = 0;
  EventKind kind = EventKind::kActionStart;
  std::string detail;

  // Structured message data, set on recv_end (one per delivered message) and
  // on the root's collective_end (one per collective instance).
  Rank peer = -1;
  double bytes = 0;
  bool synchronous = true;
  std::string label;

  bool operator==(const Event&) const = default;
};

struct Trace {
  std::vector<Event> events;  // ordered by (time, rank, kind), stable
  double final_time = 0;
};

/// `time_us<TAB>rank<TAB>kind<TAB>detail` per event, times with 3 decimals.
std::string serialize_trace(const Trace& trace);

struct RunMetrics {
  std::vector<double> compute_time;
  std::vector<double> comm_time;
  std::vector<double> idle_time;
  double makespan = 0;
  /// Point-to-point deliveries (task payloads and results included) plus
  /// one per collective instance.
  long long message_count = 0;
  double bytes_sent = 0;
};

struct RunResult {
  Trace trace;
  RunMetrics metrics;
};

struct BlockedRank {
  Rank rank = 0;
  std::string node;          // what it is blocked on
  double since = 0;          // time it blocked
  std::vector<Rank> waits_on;  // wait-for edges
};

enum class DeadlockKind { kCycle, kOrphanWait };

struct DeadlockReport {
  double time = 0;
  std::vector<BlockedRank> blocked;  // ascending rank
  std::vector<Rank> cycle;           // starts at its lowest rank; empty if none
  DeadlockKind kind = DeadlockKind::kOrphanWait;
  Trace partial;                     // events up to the deadlock

  std::string describe() const;
};

/// Builds a report from the blocked set of a quiescent run. Edges to ranks
/// outside the blocked set point at terminated ranks ("orphan wait").
DeadlockReport detect_deadlock_state(std::vector<BlockedRank> blocked, double time);

class SimulationError : public std::runtime_error {
 public:
  SimulationError(const std::string& message, SourcePos pos = {})
      : std::runtime_error(message), pos_(pos) {}
  SourcePos pos() const { return pos_; }

 private:
  SourcePos pos_;
};

using RunOutcome = std::variant<RunResult, DeadlockReport>;

/// Simulates `m` under the given bindings and costs (the model's own
/// `params`/`costs` are ignored). Throws SimulationError for unmatched
/// messages at termination, failed expression evaluation, or mismatched
/// collective/task-farm participation discovered at run time.
RunOutcome run(const Model& m, const Params& params, const CostModel& costs);
RunOutcome run(const Model& m);

/// Convenience: the result, or SimulationError if the run deadlocked.
RunResult run_or_throw(const Model& m);

}  // namespace parmodel
