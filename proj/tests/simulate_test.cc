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

#include "parmodel/simulate.h"

#include <gtest/gtest.h>

#include <map>

#include "generators.h"
#include "oracles.h"
#include "parmodel/paradigms.h"
#include "parmodel/parser.h"
#include "parmodel/validate.h"

namespace parmodel {
namespace {

constexpr double kTol = 1e-9;

Model parse(std::string_view text) {
  ParseResult r = parse_model(text);
  EXPECT_TRUE(r.ok()) << (r.diagnostics.empty() ? "" : r.diagnostics[0].message);
  return r.model.value_or(Model{});
}

RunResult must_run(const Model& m) {
  RunOutcome out = run(m);
  if (auto* d = std::get_if<DeadlockReport>(&out)) ADD_FAILURE() << d->describe();
  return std::get<RunResult>(std::move(out));
}

const Event* find(const Trace& t, Rank rank, EventKind kind) {
  for (const auto& e : t.events)
    if (e.rank == rank && e.kind == kind) return &e;
  return nullptr;
}

void expect_invariants(const RunResult& r) {
  const auto& m = r.metrics;
  EXPECT_NEAR(m.makespan, r.trace.final_time, kTol);
  double latest = 0;
  std::map<Rank, double> last;
  for (std::size_t i = 0; i < r.trace.events.size(); ++i) {
    const Event& e = r.trace.events[i];
    EXPECT_GE(e.time, 0);
    latest = std::max(latest, e.time);
    if (last.count(e.rank)) EXPECT_GE(e.time, last[e.rank]);
    last[e.rank] = e.time;
    if (i > 0) {
      const Event& prev = r.trace.events[i - 1];
      EXPECT_TRUE(prev.time < e.time || (prev.time == e.time && prev.rank <= e.rank));
    }
  }
  EXPECT_EQ(latest, r.trace.final_time);
  for (std::size_t k = 0; k < m.compute_time.size(); ++k) {
    EXPECT_NEAR(m.compute_time[k] + m.comm_time[k] + m.idle_time[k], m.makespan, kTol);
    EXPECT_GE(m.idle_time[k], -kTol);
  }
}

TEST(Simulate, TwoRankHandTrace) {
  const RunResult r = must_run(oracle::load(oracle::model_path("two_rank.pmod")));
  // 100 compute, then one rendezvous transfer of 50 + 1000 * 0.01.
  const double expected = 100 + (50 + 1000 * 0.01);
  ASSERT_NE(find(r.trace, 0, EventKind::kSendEnd), nullptr);
  ASSERT_NE(find(r.trace, 1, EventKind::kRecvEnd), nullptr);
  EXPECT_NEAR(find(r.trace, 0, EventKind::kSendEnd)->time, expected, kTol);
  EXPECT_NEAR(find(r.trace, 1, EventKind::kRecvEnd)->time, expected, kTol);
  EXPECT_NEAR(r.metrics.makespan, expected, kTol);
  EXPECT_EQ(r.metrics.message_count, 1);
  EXPECT_EQ(r.metrics.bytes_sent, 1000);
  EXPECT_NEAR(r.metrics.comm_time[1], 60, kTol);
  EXPECT_NEAR(r.metrics.idle_time[1], 100, kTol);
  expect_invariants(r);
}

TEST(Simulate, SingleRankSequential) {
  const RunResult r = must_run(parse(R"(topology bus(1)
role main on rank 0 { action "work" cost 42us }
)"));
  EXPECT_NEAR(r.metrics.makespan, 42, kTol);
  EXPECT_EQ(r.metrics.comm_time[0], 0);
  EXPECT_EQ(r.metrics.message_count, 0);
}

TEST(Simulate, TwoCycleDeadlock) {
  const RunOutcome out = run(parse(R"(topology bus(2)
role a on rank 0 {
  send to b size 8B blocking
  recv from b size 8B
}
role b on rank 1 {
  send to a size 8B blocking
  recv from a size 8B
}
)"));
  const auto* d = std::get_if<DeadlockReport>(&out);
  ASSERT_NE(d, nullptr);
  EXPECT_EQ(d->kind, DeadlockKind::kCycle);
  EXPECT_EQ(d->cycle, (std::vector<Rank>{0, 1}));
  EXPECT_EQ(d->time, 0);
  ASSERT_EQ(d->blocked.size(), 2u);
  EXPECT_NE(d->describe().find("P0->P1->P0"), std::string::npos);
  EXPECT_NE(find(d->partial, 0, EventKind::kDeadlock), nullptr);
}

TEST(Simulate, ThreeCycleDeadlockFromCorpus) {
  const RunOutcome out = run(oracle::load(oracle::model_path("deadlock3.pmod")));
  const auto* d = std::get_if<DeadlockReport>(&out);
  ASSERT_NE(d, nullptr);
  EXPECT_EQ(d->cycle, (std::vector<Rank>{0, 1, 2}));
}

TEST(Simulate, OrphanWait) {
  const RunOutcome out = run(parse(R"(topology bus(2)
role a on rank 0 { recv from b size 8B }
role b on rank 1 { action "w" cost 5us }
)"));
  const auto* d = std::get_if<DeadlockReport>(&out);
  ASSERT_NE(d, nullptr);
  EXPECT_EQ(d->kind, DeadlockKind::kOrphanWait);
  EXPECT_TRUE(d->cycle.empty());
  ASSERT_EQ(d->blocked.size(), 1u);
  EXPECT_EQ(d->blocked[0].rank, 0);
  EXPECT_EQ(d->blocked[0].waits_on, (std::vector<Rank>{1}));
}

TEST(Simulate, DetectDeadlockStateDirectly) {
  const auto two = detect_deadlock_state({{1, "send", 0, {0}}, {0, "send", 0, {1}}}, 0);
  EXPECT_EQ(two.cycle, (std::vector<Rank>{0, 1}));
  const auto three = detect_deadlock_state({{2, "s", 0, {0}}, {0, "s", 0, {1}}, {1, "s", 0, {2}}}, 0);
  EXPECT_EQ(three.cycle, (std::vector<Rank>{0, 1, 2}));
  const auto orphan = detect_deadlock_state({{0, "recv", 0, {1}}}, 3);
  EXPECT_EQ(orphan.kind, DeadlockKind::kOrphanWait);
  // A tail leading into a cycle reports only the cycle.
  const auto tail = detect_deadlock_state({{0, "s", 0, {3}}, {3, "s", 0, {4}}, {4, "s", 0, {3}}}, 0);
  EXPECT_EQ(tail.cycle, (std::vector<Rank>{3, 4}));
}

TEST(Simulate, BcastLogRounds) {
  const RunResult r = must_run(parse(R"(topology hypercube(3)
costs {
  t_startup = 50us
  t_byte = 0.01us
}
role all on ranks 0..7 { collective bcast root all size 8B }
)"));
  // ceil(log2 8) rounds of 50 + 8 * 0.01.
  EXPECT_NEAR(r.metrics.makespan, 3 * (50 + 8 * 0.01), kTol);
  EXPECT_EQ(r.metrics.message_count, 1);
  expect_invariants(r);
}

TEST(Simulate, CorpusCollectivesHandTrace) {
  const RunResult r = must_run(oracle::load(oracle::model_path("collectives.pmod")));
  // bcast 3*(50+0.08), slowest local 60, gather 7*(50+1024*0.01), barrier 3*50.
  EXPECT_NEAR(r.metrics.makespan, 3 * 50.08 + 60 + 7 * (50 + 10.24) + 150, 1e-9);
  expect_invariants(r);
}

TEST(Simulate, StaticTaskPoolEvenSplit) {
  const RunResult r = must_run(parse(R"(topology farm(5)
role master on rank 0 { taskpool count 8 cost 100us policy static payload 0B result 0B }
role worker on ranks 1..4 { workerloop }
)"));
  EXPECT_NEAR(r.metrics.makespan, 200, kTol);
  for (Rank w = 1; w <= 4; ++w) EXPECT_NEAR(r.metrics.compute_time[w], 200, kTol);
  expect_invariants(r);
}

TEST(Simulate, SkewedTasksStaticVersusDynamic) {
  const std::vector<double> costs{10, 10, 10, 10, 70, 70};
  for (auto policy : {TaskPolicy::kStatic, TaskPolicy::kDynamic}) {
    const RunResult r = must_run(gen_master_worker({2, costs, policy, 0, 0}));
    if (policy == TaskPolicy::kStatic) {
      EXPECT_NEAR(r.metrics.makespan, 150, kTol);
      EXPECT_NEAR(r.metrics.compute_time[1], 30, kTol);
      EXPECT_NEAR(r.metrics.compute_time[2], 150, kTol);
    } else {
      EXPECT_NEAR(r.metrics.makespan, 90, kTol);
      EXPECT_NEAR(r.metrics.compute_time[1], 90, kTol);
      EXPECT_NEAR(r.metrics.compute_time[2], 90, kTol);
    }
    expect_invariants(r);
  }
}

TEST(Simulate, BufferedDynamicTaskFarmHandTrace) {
  // Payload 5 + 256 * 0.001 = 5.256, result 5 + 64 * 0.001 = 5.064; the
  // schedule traced by hand ends with worker 2's last result at 126.216.
  const RunResult r = must_run(oracle::load(oracle::model_path("taskfarm.pmod")));
  EXPECT_NEAR(r.metrics.makespan, 126.216, 1e-9);
  EXPECT_EQ(r.metrics.message_count, 12);
  EXPECT_NEAR(r.metrics.bytes_sent, 6 * 256 + 6 * 64, kTol);
  expect_invariants(r);
}

TEST(Simulate, TaskPoolPropertiesOnRandomInstances) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const auto costs = gen::task_costs(rng, 30);
    const int w = 1 + static_cast<int>(rng() % 6);
    const double total = std::accumulate(costs.begin(), costs.end(), 0.0);
    const double biggest = *std::max_element(costs.begin(), costs.end());
    const RunResult st = must_run(gen_master_worker({w, costs, TaskPolicy::kStatic, 0, 0}));
    const RunResult dy = must_run(gen_master_worker({w, costs, TaskPolicy::kDynamic, 0, 0}));
    EXPECT_NEAR(st.metrics.makespan, oracle::static_blocks(costs, w), kTol);
    EXPECT_NEAR(dy.metrics.makespan, oracle::list_schedule(costs, w), kTol);
    EXPECT_LE(dy.metrics.makespan, total / w + biggest + kTol);
    if (w == 1) EXPECT_NEAR(dy.metrics.makespan, total, kTol);
  }
}

TEST(Simulate, BufferedSendReleasesSenderEarly) {
  const RunResult r = must_run(parse(R"(topology bus(2)
costs {
  t_startup = 50us
  t_byte = 0.01us
  send_mode = buffered
}
role a on rank 0 {
  action "w" cost 100us
  send to b size 1000B blocking
}
role b on rank 1 {
  action "w" cost 300us
  recv from a size 1000B
}
)"));
  EXPECT_NEAR(find(r.trace, 0, EventKind::kSendEnd)->time, 160, kTol);
  // Data arrived at 160, long before the receive was posted at 300.
  EXPECT_NEAR(find(r.trace, 1, EventKind::kRecvEnd)->time, 300, kTol);
  EXPECT_NEAR(r.metrics.comm_time[1], 0, kTol);
  EXPECT_NEAR(r.metrics.makespan, 300, kTol);
  EXPECT_FALSE(find(r.trace, 1, EventKind::kRecvEnd)->synchronous);
  expect_invariants(r);
}

TEST(Simulate, NonblockingSendOverlapsCompute) {
  const RunResult r = must_run(parse(R"(topology bus(2)
costs {
  t_startup = 50us
  t_byte = 0.01us
}
role a on rank 0 {
  send to b size 1000B nonblocking as h
  action "overlap" cost 50us
  wait h
}
role b on rank 1 {
  action "w" cost 100us
  recv from a size 1000B
}
)"));
  // The transfer runs 100..160 once b posts its receive.
  EXPECT_NEAR(r.metrics.makespan, 160, kTol);
  EXPECT_NEAR(r.metrics.comm_time[0], 60, kTol);
  EXPECT_NEAR(r.metrics.idle_time[0], 50, kTol);
  EXPECT_FALSE(find(r.trace, 1, EventKind::kRecvEnd)->synchronous);
  expect_invariants(r);
}

TEST(Simulate, HopScalingMultipliesCost) {
  const std::string text = R"(topology mesh2d(1, 3)
costs {
  t_startup = 10us
  hop_scaling = HOPS
}
role a on rank 0 { send to c size 0B blocking }
role b on rank 1 { action "w" cost 0us }
role c on rank 2 { recv from a size 0B }
)";
  auto with = [&](const char* v) {
    std::string t = text;
    t.replace(t.find("HOPS"), 4, v);
    return must_run(parse(t)).metrics.makespan;
  };
  EXPECT_NEAR(with("true"), 20, kTol);
  EXPECT_NEAR(with("false"), 10, kTol);
}

TEST(Simulate, AnySourceReceiveTakesEarliestPost) {
  const RunResult r = must_run(parse(R"(topology farm(3)
role master on rank 0 {
  recv from worker size 8B
  recv from worker size 8B
}
role worker on ranks 1..2 {
  action "w" cost 30us - me * 10us
  send to master size 8B blocking
}
)"));
  std::vector<Rank> order;
  for (const auto& e : r.trace.events)
    if (e.kind == EventKind::kRecvEnd) order.push_back(e.peer);
  EXPECT_EQ(order, (std::vector<Rank>{2, 1}));
}

TEST(Simulate, UnmatchedMessageAtTerminationIsAnError) {
  EXPECT_THROW(run(parse(R"(topology bus(2)
costs { send_mode = buffered }
role a on rank 0 { send to b size 8B blocking }
role b on rank 1 { action "w" cost 1us }
)")),
               SimulationError);
}

TEST(Simulate, EvaluationFailureIsAnError) {
  EXPECT_THROW(run(parse(R"(topology bus(1)
params { Z = 0 }
role a on rank 0 { action "w" cost 1us / Z }
)")),
               SimulationError);
}

TEST(Simulate, ParamsAndCostsOverrideTheModel) {
  const Model m = oracle::load(oracle::model_path("two_rank.pmod"));
  CostModel fast = m.costs;
  fast.t_startup = 0;
  fast.t_byte = 0;
  const auto out = run(m, m.params, fast);
  EXPECT_NEAR(std::get<RunResult>(out).metrics.makespan, 100, kTol);
}

TEST(Simulate, TraceSerialization) {
  const RunResult r = must_run(oracle::load(oracle::model_path("two_rank.pmod")));
  const std::string text = serialize_trace(r.trace);
  EXPECT_EQ(text.substr(0, text.find('\n')), "0.000\t0\taction_start\twork");
  EXPECT_NE(text.find("160.000\t1\trecv_end\tfrom P0 1000B"), std::string::npos);
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), r.trace.events.size());
}

TEST(Simulate, CorpusInvariantsAndDeterminism) {
  for (const auto& path : oracle::corpus_files()) {
    SCOPED_TRACE(path.string());
    const Model m = oracle::load(path);
    const RunOutcome a = run(m);
    const RunOutcome b = run(m);
    if (std::holds_alternative<DeadlockReport>(a)) {
      EXPECT_EQ(serialize_trace(std::get<DeadlockReport>(a).partial),
                serialize_trace(std::get<DeadlockReport>(b).partial));
      continue;
    }
    expect_invariants(std::get<RunResult>(a));
    EXPECT_EQ(serialize_trace(std::get<RunResult>(a).trace), serialize_trace(std::get<RunResult>(b).trace));
  }
}

TEST(Simulate, RandomProgramsKeepAccountingAndMonotonicity) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 300; ++i) {
    const Model m = gen::phased_model(rng, i % 3 == 0, i % 4 == 0);
    SCOPED_TRACE(print_model(m));
    ASSERT_TRUE(validate(m).ok());
    const RunResult base = must_run(m);
    expect_invariants(base);
    EXPECT_EQ(serialize_trace(base.trace), serialize_trace(must_run(m).trace));

    std::uniform_real_distribution<double> bump(0, 50);
    CostModel slower = m.costs;
    slower.t_startup += bump(rng);
    const auto s = run(m, m.params, slower);
    ASSERT_TRUE(std::holds_alternative<RunResult>(s));
    EXPECT_GE(std::get<RunResult>(s).metrics.makespan, base.metrics.makespan - kTol);
    CostModel heavier = m.costs;
    heavier.t_byte += bump(rng) / 1000;
    const auto h = run(m, m.params, heavier);
    ASSERT_TRUE(std::holds_alternative<RunResult>(h));
    EXPECT_GE(std::get<RunResult>(h).metrics.makespan, base.metrics.makespan - kTol);
  }
}

TEST(Simulate, CleanValidationRulesOutUnmatchedMessages) {
  // Drop one random line from loop-free programs; whatever validation still
  // accepts without deferring must not leave a message behind at the end.
  std::mt19937_64 rng(23);
  int accepted = 0;
  for (int i = 0; i < 400; ++i) {
    std::string text = gen::phased_program(rng, i % 2 == 0, false);
    std::vector<std::size_t> starts;
    for (std::size_t pos = text.find("\n  "); pos != std::string::npos; pos = text.find("\n  ", pos + 1))
      starts.push_back(pos + 1);
    const std::size_t at = starts[rng() % starts.size()];
    text.erase(at, text.find('\n', at) - at + 1);
    const ParseResult parsed = parse_model(text);
    if (!parsed.ok()) continue;
    const ValidationReport report = validate(*parsed.model);
    bool deferred = false;
    for (const auto& d : report.diagnostics)
      deferred |= d.message.find(kDeferredMatching) != std::string::npos;
    if (!report.ok() || deferred) continue;
    ++accepted;
    EXPECT_NO_THROW(run(*parsed.model)) << text;
  }
  EXPECT_GT(accepted, 50);
}

}  // namespace
}  // namespace parmodel
