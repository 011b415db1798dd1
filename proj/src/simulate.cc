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

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <queue>

#include <fmt/format.h>

namespace parmodel {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kActionStart: return "action_start";
    case EventKind::kActionEnd: return "action_end";
    case EventKind::kSendStart: return "send_start";
    case EventKind::kSendEnd: return "send_end";
    case EventKind::kRecvStart: return "recv_start";
    case EventKind::kRecvEnd: return "recv_end";
    case EventKind::kCollectiveStart: return "collective_start";
    case EventKind::kCollectiveEnd: return "collective_end";
    case EventKind::kTaskAssign: return "task_assign";
    case EventKind::kTaskDone: return "task_done";
    case EventKind::kDeadlock: return "deadlock";
  }
  return "?";
}

std::string serialize_trace(const Trace& trace) {
  std::string out;
  for (const auto& e : trace.events)
    out += fmt::format("{:.3f}\t{}\t{}\t{}\n", e.time, e.rank, to_string(e.kind), e.detail);
  return out;
}

std::string DeadlockReport::describe() const {
  std::string out = fmt::format("deadlock at t={:.3f}us: ", time);
  if (kind == DeadlockKind::kCycle) {
    out += "wait-for cycle ";
    for (Rank r : cycle) out += fmt::format("P{}->", r);
    out += fmt::format("P{}\n", cycle.front());
  } else {
    out += "orphan wait (blocked on terminated ranks)\n";
  }
  for (const auto& b : blocked) {
    out += fmt::format("  P{} blocked since {:.3f}us on {}", b.rank, b.since, b.node);
    if (!b.waits_on.empty()) {
      out += " (waits on";
      for (Rank r : b.waits_on) out += fmt::format(" P{}", r);
      out += ")";
    }
    out += "\n";
  }
  return out;
}

DeadlockReport detect_deadlock_state(std::vector<BlockedRank> blocked, double time) {
  DeadlockReport report;
  report.time = time;
  std::sort(blocked.begin(), blocked.end(),
            [](const BlockedRank& a, const BlockedRank& b) { return a.rank < b.rank; });
  for (auto& b : blocked) {
    std::sort(b.waits_on.begin(), b.waits_on.end());
    b.waits_on.erase(std::unique(b.waits_on.begin(), b.waits_on.end()), b.waits_on.end());
  }
  report.blocked = std::move(blocked);

  std::map<Rank, const BlockedRank*> by_rank;
  for (const auto& b : report.blocked) by_rank[b.rank] = &b;

  // Depth-first search over blocked ranks; the first back edge closes a cycle.
  enum class Mark { kNew, kActive, kDone };
  std::map<Rank, Mark> mark;
  std::vector<Rank> path;
  std::function<bool(Rank)> visit = [&](Rank u) -> bool {
    mark[u] = Mark::kActive;
    path.push_back(u);
    for (Rank v : by_rank[u]->waits_on) {
      if (!by_rank.count(v)) continue;
      const Mark mv = mark.count(v) ? mark[v] : Mark::kNew;
      if (mv == Mark::kActive) {
        const auto it = std::find(path.begin(), path.end(), v);
        report.cycle.assign(it, path.end());
        return true;
      }
      if (mv == Mark::kNew && visit(v)) return true;
    }
    path.pop_back();
    mark[u] = Mark::kDone;
    return false;
  };
  for (const auto& b : report.blocked) {
    if (mark.count(b.rank)) continue;
    if (visit(b.rank)) break;
  }
  if (!report.cycle.empty()) {
    std::rotate(report.cycle.begin(), std::min_element(report.cycle.begin(), report.cycle.end()),
                report.cycle.end());
    report.kind = DeadlockKind::kCycle;
  } else {
    report.kind = DeadlockKind::kOrphanWait;
  }
  return report;
}

namespace {

constexpr long long kMaxSteps = 50'000'000;

enum class State { kReady, kBlockedSend, kBlockedRecv, kBlockedWait, kBlockedCollective, kBlockedFarm, kDone };

struct Frame {
  const std::vector<Node>* body;
  std::size_t index;
  long long remaining;  // further iterations after the current one
};

struct Message {
  Rank src = 0;
  Rank dst = 0;
  double bytes = 0;
  double cost = 0;
  double post = 0;
  bool rendezvous = true;
  bool blocking = true;
  double start = -1;  // transfer start, once known
  double done = -1;   // transfer completion, once known
  bool delivered = false;
  std::string label;
};

struct RankState {
  std::vector<Frame> stack;
  double now = 0;
  State state = State::kReady;
  const Node* blocked_on = nullptr;
  double blocked_since = 0;
  int pending_message = -1;          // blocked send or wait
  std::vector<Rank> recv_sources;    // blocked recv
  std::map<std::string, int> handles;
  int collective_seq = 0;
  int farm_seq = 0;
  double compute = 0;
  double comm = 0;
};

struct CollectiveArrival {
  Rank rank;
  double time;
  CollectiveKind kind;
  Rank root;
  double bytes;
  SourcePos pos;
};

struct CollectiveInstance {
  std::vector<CollectiveArrival> arrivals;
};

struct FarmInstance {
  Rank master = -1;
  const TaskPool* pool = nullptr;
  double master_arrival = 0;
  std::map<Rank, double> worker_arrival;
};

class Simulator {
 public:
  Simulator(const Model& m, const Params& params, const CostModel& costs)
      : model_(m), inst_(resolve(m, params)), costs_(costs) {
    const int p = inst_.size();
    ranks_.resize(p);
    hops_.resize(p);
    for (Rank r = 0; r < p; ++r) {
      const int role = inst_.role_of[r];
      if (role < 0 || m.roles[role].body.empty()) {
        ranks_[r].state = State::kDone;
        continue;
      }
      ranks_[r].stack.push_back({&m.roles[role].body, 0, 0});
      bool worker = false;
      for_each_node(m.roles[role].body, [&](const Node& n) {
        if (n.as<WorkerLoop>()) worker = true;
      });
      if (worker) workers_.push_back(r);
      queue_.push({0.0, r});
    }
  }

  RunOutcome execute() {
    while (!queue_.empty()) {
      const auto [t, r] = queue_.top();
      queue_.pop();
      step(r, t);
    }
    return finish();
  }

 private:
  using QueueEntry = std::pair<double, Rank>;

  // ---- helpers ------------------------------------------------------------

  [[noreturn]] void fail(Rank r, const Node* node, const std::string& what) {
    throw SimulationError(fmt::format("P{}: {}", r, what), node ? node->pos : SourcePos{});
  }

  double eval(const Expr& e, Rank me, const Node* /*node*/) {
    try {
      return eval_expr(e, inst_.params, me);
    } catch (const EvalError& err) {
      throw SimulationError(fmt::format("P{}: {}", me, err.what()), err.pos());
    }
  }

  long long count(const Expr& e, Rank me, const Node* /*node*/) {
    try {
      return eval_count(e, inst_.params, me);
    } catch (const EvalError& err) {
      throw SimulationError(fmt::format("P{}: {}", me, err.what()), err.pos());
    }
  }

  int hops(Rank u, Rank v) {
    if (!costs_.hop_scaling) return 1;
    if (hops_[u].empty()) hops_[u] = hop_distances(inst_.graph, u);
    return hops_[u][v];
  }

  Event& emit(double time, Rank rank, EventKind kind, std::string detail) {
    Event e;
    e.time = time;
    e.rank = rank;
    e.kind = kind;
    e.detail = std::move(detail);
    events_.push_back(std::move(e));
    return events_.back();
  }

  void wake(Rank r, double time) {
    auto& rs = ranks_[r];
    rs.now = time;
    rs.state = State::kReady;
    rs.blocked_on = nullptr;
    rs.pending_message = -1;
    if (r != current_) queue_.push({time, r});
  }

  void block(Rank r, State state, const Node* node) {
    auto& rs = ranks_[r];
    rs.state = state;
    rs.blocked_on = node;
    rs.blocked_since = rs.now;
  }

  const Node* next_node(Rank r) {
    auto& rs = ranks_[r];
    while (!rs.stack.empty()) {
      Frame& f = rs.stack.back();
      if (f.index < f.body->size()) {
        const Node& n = (*f.body)[f.index++];
        if (const auto* loop = n.as<Loop>()) {
          const long long c = count(loop->count, r, &n);
          if (c > 0 && !loop->body.empty()) rs.stack.push_back({&loop->body, 0, c - 1});
          continue;
        }
        if (const auto* sub = n.as<SubActivity>()) {
          if (!sub->body.empty()) rs.stack.push_back({&sub->body, 0, 0});
          continue;
        }
        return &n;
      }
      if (f.remaining > 0) {
        --f.remaining;
        f.index = 0;
        continue;
      }
      rs.stack.pop_back();
    }
    return nullptr;
  }

  // ---- main loop ----------------------------------------------------------

  void step(Rank r, double t) {
    current_ = r;
    auto& rs = ranks_[r];
    while (rs.state == State::kReady) {
      if (rs.now > t) {
        queue_.push({rs.now, r});
        break;
      }
      if (++steps_ > kMaxSteps) throw SimulationError("simulation exceeded the step limit");
      const Node* node = next_node(r);
      if (node == nullptr) {
        rs.state = State::kDone;
        break;
      }
      execute(r, *node);
    }
    current_ = -1;
  }

  void execute(Rank r, const Node& node) {
    auto& rs = ranks_[r];
    if (const auto* a = node.as<Action>()) {
      const double c = eval(a->cost, r, &node);
      emit(rs.now, r, EventKind::kActionStart, a->name);
      rs.now += c;
      rs.compute += c;
      emit(rs.now, r, EventKind::kActionEnd, a->name);
    } else if (const auto* s = node.as<Send>()) {
      do_send(r, node, *s);
    } else if (const auto* rv = node.as<Recv>()) {
      do_recv(r, node, *rv);
    } else if (const auto* w = node.as<Wait>()) {
      do_wait(r, node, *w);
    } else if (const auto* c = node.as<Collective>()) {
      do_collective(r, node, *c);
    } else if (const auto* tp = node.as<TaskPool>()) {
      do_farm_arrival(r, node, tp);
    } else if (node.as<WorkerLoop>()) {
      do_farm_arrival(r, node, nullptr);
    }
  }

  // ---- point to point -----------------------------------------------------

  void do_send(Rank r, const Node& node, const Send& s) {
    auto& rs = ranks_[r];
    std::vector<Rank> dst;
    try {
      dst = inst_.resolve_target(s.to, r);
    } catch (const ModelError& err) {
      fail(r, &node, err.what());
    }
    if (dst.size() != 1)
      fail(r, &node, fmt::format("send to role '{}' needs a rank index", s.to.role));
    if (dst[0] == r) fail(r, &node, "send to itself");

    Message msg;
    msg.src = r;
    msg.dst = dst[0];
    msg.bytes = eval(s.size, r, &node);
    msg.cost = costs_.message_cost(msg.bytes, hops(r, msg.dst));
    msg.post = rs.now;
    msg.rendezvous = costs_.send_mode == SendMode::kRendezvous;
    msg.blocking = s.blocking;
    msg.label = to_string(s.to);
    const int id = static_cast<int>(messages_.size());
    const std::string detail = fmt::format("to P{} {}B", msg.dst, format_number(msg.bytes));
    emit(rs.now, r, EventKind::kSendStart, detail);

    if (!msg.rendezvous) {
      msg.start = msg.post;
      msg.done = msg.post + msg.cost;
      emit(msg.done, r, EventKind::kSendEnd, detail);
      if (s.blocking) {
        rs.now = msg.done;
        rs.comm += msg.cost;
      }
    }
    messages_.push_back(msg);
    channels_[{msg.src, msg.dst}].push_back(id);
    if (!s.blocking && !s.handle.empty()) rs.handles[s.handle] = id;
    if (msg.rendezvous && s.blocking) {
      block(r, State::kBlockedSend, &node);
      rs.pending_message = id;
    }

    auto& receiver = ranks_[msg.dst];
    if (receiver.state == State::kBlockedRecv &&
        std::find(receiver.recv_sources.begin(), receiver.recv_sources.end(), r) !=
            receiver.recv_sources.end() &&
        channels_[{msg.src, msg.dst}].front() == id) {
      deliver(id);
    }
  }

  void do_recv(Rank r, const Node& node, const Recv& rv) {
    auto& rs = ranks_[r];
    std::vector<Rank> sources;
    try {
      sources = inst_.resolve_target(rv.from, r);
    } catch (const ModelError& err) {
      fail(r, &node, err.what());
    }
    sources.erase(std::remove(sources.begin(), sources.end(), r), sources.end());
    if (sources.empty()) fail(r, &node, "receive from itself");
    eval(rv.size, r, &node);  // surface evaluation errors at the receive
    emit(rs.now, r, EventKind::kRecvStart,
         sources.size() == 1 ? fmt::format("from P{}", sources[0])
                             : fmt::format("from any of role {}", rv.from.role));
    rs.recv_sources = std::move(sources);
    const int id = pick_message(r);
    if (id < 0) {
      block(r, State::kBlockedRecv, &node);
      return;
    }
    deliver(id);
  }

  // Head of the earliest-posted channel among the receiver's sources.
  int pick_message(Rank r) {
    int best = -1;
    for (Rank src : ranks_[r].recv_sources) {
      const auto it = channels_.find({src, r});
      if (it == channels_.end() || it->second.empty()) continue;
      const int id = it->second.front();
      if (best < 0 || messages_[id].post < messages_[best].post) best = id;
    }
    return best;
  }

  void deliver(int id) {
    Message& msg = messages_[id];
    auto& chan = channels_[{msg.src, msg.dst}];
    chan.pop_front();
    msg.delivered = true;
    auto& receiver = ranks_[msg.dst];
    auto& sender = ranks_[msg.src];
    const double ready = receiver.now;
    double recv_done;
    if (msg.rendezvous) {
      msg.start = std::max(msg.post, ready);
      msg.done = msg.start + msg.cost;
      recv_done = msg.done;
      receiver.comm += msg.cost;
      emit(msg.done, msg.src, EventKind::kSendEnd,
           fmt::format("to P{} {}B", msg.dst, format_number(msg.bytes)));
      if (msg.blocking) {
        sender.comm += msg.cost;
        wake(msg.src, msg.done);
      } else if (sender.state == State::kBlockedWait && sender.pending_message == id) {
        sender.comm += msg.done - std::max(sender.now, msg.start);
        wake(msg.src, msg.done);
      }
    } else {
      recv_done = std::max(msg.done, ready);
      receiver.comm += std::max(0.0, msg.done - std::max(ready, msg.post));
    }
    Event& e = emit(recv_done, msg.dst, EventKind::kRecvEnd,
                    fmt::format("from P{} {}B", msg.src, format_number(msg.bytes)));
    e.peer = msg.src;
    e.bytes = msg.bytes;
    e.synchronous = msg.rendezvous && msg.blocking;
    e.label = msg.label;
    ++message_count_;
    bytes_sent_ += msg.bytes;
    receiver.recv_sources.clear();
    if (receiver.state == State::kBlockedRecv) {
      wake(msg.dst, recv_done);
    } else {
      receiver.now = recv_done;
    }
  }

  void do_wait(Rank r, const Node& node, const Wait& w) {
    auto& rs = ranks_[r];
    const auto it = rs.handles.find(w.handle);
    if (it == rs.handles.end()) fail(r, &node, fmt::format("wait on handle '{}' before any send", w.handle));
    const Message& msg = messages_[it->second];
    if (msg.done >= 0) {
      if (msg.done > rs.now) {
        rs.comm += msg.done - std::max(rs.now, msg.start);
        rs.now = msg.done;
      }
      return;
    }
    block(r, State::kBlockedWait, &node);
    rs.pending_message = it->second;
  }

  // ---- collectives --------------------------------------------------------

  void do_collective(Rank r, const Node& node, const Collective& c) {
    auto& rs = ranks_[r];
    const int k = rs.collective_seq++;
    if (static_cast<int>(collectives_.size()) <= k) collectives_.resize(k + 1);
    auto& instance = collectives_[k];
    Rank root = 0;
    try {
      root = inst_.root_rank(c.root);
    } catch (const ModelError& err) {
      fail(r, &node, err.what());
    }
    instance.arrivals.push_back({r, rs.now, c.kind, root, eval(c.size, r, &node), node.pos});
    emit(rs.now, r, EventKind::kCollectiveStart,
         fmt::format("{} root P{} #{}", to_string(c.kind), root, k));
    block(r, State::kBlockedCollective, &node);
    if (static_cast<int>(instance.arrivals.size()) == inst_.size()) complete_collective(k);
  }

  void complete_collective(int k) {
    auto& arrivals = collectives_[k].arrivals;
    std::sort(arrivals.begin(), arrivals.end(),
              [](const auto& a, const auto& b) { return a.rank < b.rank; });
    const auto& first = arrivals.front();
    for (const auto& a : arrivals) {
      if (a.kind != first.kind || a.root != first.root) {
        throw SimulationError(
            fmt::format("collective mismatch at instance #{}: P{} runs {}(root P{}) but P{} runs "
                        "{}(root P{})",
                        k, first.rank, to_string(first.kind), first.root, a.rank, to_string(a.kind),
                        a.root),
            a.pos);
      }
    }
    const int g = static_cast<int>(arrivals.size());
    const double rounds = g > 1 ? std::ceil(std::log2(static_cast<double>(g))) : 0.0;
    const double root_bytes = arrivals[first.root].bytes;
    double cost = 0;
    double bytes = 0;
    switch (first.kind) {
      case CollectiveKind::kBcast:
      case CollectiveKind::kReduce:
        cost = rounds * (costs_.t_startup + root_bytes * costs_.t_byte);
        bytes = root_bytes;
        break;
      case CollectiveKind::kBarrier:
        cost = rounds * costs_.t_startup;
        break;
      case CollectiveKind::kGather:
      case CollectiveKind::kScatter:
        for (const auto& a : arrivals) {
          if (a.rank == first.root) continue;
          cost += costs_.t_startup + a.bytes * costs_.t_byte;
          bytes += a.bytes;
        }
        break;
    }
    double start = 0;
    for (const auto& a : arrivals) start = std::max(start, a.time);
    const double end = start + cost;
    for (const auto& a : arrivals) {
      ranks_[a.rank].comm += cost;
      Event& e = emit(end, a.rank, EventKind::kCollectiveEnd,
                      fmt::format("{} root P{} #{}", to_string(first.kind), first.root, k));
      if (a.rank == first.root) {
        e.peer = -1;
        e.bytes = bytes;
        e.label = std::string(to_string(first.kind));
        e.synchronous = true;
      }
      wake(a.rank, end);
    }
    ++message_count_;
    bytes_sent_ += bytes;
  }

  // ---- task farm ----------------------------------------------------------

  void do_farm_arrival(Rank r, const Node& node, const TaskPool* pool) {
    auto& rs = ranks_[r];
    const int k = rs.farm_seq++;
    if (static_cast<int>(farms_.size()) <= k) farms_.resize(k + 1);
    auto& farm = farms_[k];
    if (pool) {
      if (farm.master >= 0) fail(r, &node, fmt::format("second taskpool for task farm #{}", k));
      farm.master = r;
      farm.pool = pool;
      farm.master_arrival = rs.now;
      farm_nodes_[k] = &node;
    } else {
      farm.worker_arrival[r] = rs.now;
    }
    block(r, State::kBlockedFarm, &node);
    if (farm.master >= 0 && farm.worker_arrival.size() == workers_.size()) complete_farm(k);
  }

  struct Transfer {
    double start;
    double sender_free;
    double receiver_free;
  };

  Transfer transfer(Rank from, Rank to, double sender_ready, double receiver_ready, double bytes,
                    const std::string& label) {
    const double cost = costs_.message_cost(bytes, hops(from, to));
    Transfer t{};
    const bool rendezvous = costs_.send_mode == SendMode::kRendezvous;
    if (rendezvous) {
      t.start = std::max(sender_ready, receiver_ready);
      t.sender_free = t.receiver_free = t.start + cost;
      ranks_[from].comm += cost;
      ranks_[to].comm += cost;
    } else {
      t.start = sender_ready;
      t.sender_free = sender_ready + cost;
      t.receiver_free = std::max(receiver_ready, t.sender_free);
      ranks_[from].comm += cost;
      ranks_[to].comm += std::max(0.0, t.sender_free - std::max(receiver_ready, sender_ready));
    }
    const std::string bytes_text = format_number(bytes);
    emit(sender_ready, from, EventKind::kSendStart, fmt::format("to P{} {}B {}", to, bytes_text, label));
    emit(t.sender_free, from, EventKind::kSendEnd, fmt::format("to P{} {}B {}", to, bytes_text, label));
    emit(receiver_ready, to, EventKind::kRecvStart, fmt::format("from P{} {}", from, label));
    Event& e = emit(t.receiver_free, to, EventKind::kRecvEnd,
                    fmt::format("from P{} {}B {}", from, bytes_text, label));
    e.peer = from;
    e.bytes = bytes;
    e.synchronous = rendezvous;
    e.label = label;
    ++message_count_;
    bytes_sent_ += bytes;
    return t;
  }

  void complete_farm(int k) {
    const FarmInstance& farm = farms_[k];
    const Node* node = farm_nodes_[k];
    const TaskPool& pool = *farm.pool;
    const Rank master = farm.master;
    const long long n = count(pool.count, master, node);
    if (pool.cost_list && n != static_cast<long long>(pool.costs.size()))
      fail(master, node, fmt::format("taskpool count {} does not match {} listed costs", n, pool.costs.size()));
    if (n > 0 && workers_.empty()) fail(master, node, "taskpool has no workers");
    const double payload = eval(pool.payload, master, node);
    const double result = eval(pool.result, master, node);
    auto task_cost = [&](long long i, Rank worker) {
      return eval(pool.cost_list ? pool.costs[i] : pool.costs.front(), worker, node);
    };

    double tm = farm.master_arrival;
    std::map<Rank, double> release;

    if (pool.policy == TaskPolicy::kDynamic) {
      struct Worker {
        Rank rank;
        double ready;
        long long pending = -1;  // task whose result is still held
        bool finished = false;
      };
      std::vector<Worker> ws;
      for (Rank w : workers_) ws.push_back({w, farm.worker_arrival.at(w)});
      long long next = 0;
      while (true) {
        Worker* pick = nullptr;
        for (auto& w : ws) {
          if (w.finished) continue;
          if (!pick || w.ready < pick->ready) pick = &w;
        }
        if (!pick) break;
        if (pick->pending >= 0) {
          const auto t = transfer(pick->rank, master, pick->ready, tm, result,
                                  fmt::format("result{}", pick->pending));
          tm = t.receiver_free;
          pick->ready = t.sender_free;
          pick->pending = -1;
        }
        if (next < n) {
          const long long i = next++;
          const auto t = transfer(master, pick->rank, tm, pick->ready, payload, fmt::format("task{}", i));
          emit(t.start, master, EventKind::kTaskAssign, fmt::format("task {} -> P{}", i, pick->rank));
          tm = t.sender_free;
          const double c = task_cost(i, pick->rank);
          ranks_[pick->rank].compute += c;
          pick->ready = t.receiver_free + c;
          pick->pending = i;
          emit(pick->ready, pick->rank, EventKind::kTaskDone, fmt::format("task {}", i));
        } else {
          pick->finished = true;
          release[pick->rank] = std::max(pick->ready, tm);
        }
      }
    } else {
      const long long w = static_cast<long long>(workers_.size());
      struct Block {
        Rank rank;
        long long first;
        long long count;
        double finish;
      };
      std::vector<Block> blocks;
      long long first = 0;
      for (long long j = 0; j < w; ++j) {
        const long long size = n / w + (j < n % w ? 1 : 0);
        blocks.push_back({workers_[j], first, size, 0});
        first += size;
      }
      for (auto& b : blocks) {
        const double arrival = farm.worker_arrival.at(b.rank);
        if (b.count == 0) {
          release[b.rank] = std::max(arrival, farm.master_arrival);
          continue;
        }
        const auto t = transfer(master, b.rank, tm, arrival, payload * b.count,
                                fmt::format("tasks{}-{}", b.first, b.first + b.count - 1));
        tm = t.sender_free;
        double clock = t.receiver_free;
        for (long long i = b.first; i < b.first + b.count; ++i) {
          emit(t.start, master, EventKind::kTaskAssign, fmt::format("task {} -> P{}", i, b.rank));
          const double c = task_cost(i, b.rank);
          ranks_[b.rank].compute += c;
          clock += c;
          emit(clock, b.rank, EventKind::kTaskDone, fmt::format("task {}", i));
        }
        b.finish = clock;
      }
      std::vector<Block*> order;
      for (auto& b : blocks)
        if (b.count > 0) order.push_back(&b);
      std::stable_sort(order.begin(), order.end(),
                       [](const Block* a, const Block* b) { return a->finish < b->finish; });
      for (Block* b : order) {
        const auto t = transfer(b->rank, master, b->finish, tm, result * b->count,
                                fmt::format("results{}-{}", b->first, b->first + b->count - 1));
        tm = t.receiver_free;
        release[b->rank] = t.sender_free;
      }
    }
    for (const auto& [rank, time] : release) wake(rank, time);
    wake(master, tm);
  }

  // ---- termination --------------------------------------------------------

  Trace build_trace() {
    Trace trace;
    trace.events = std::move(events_);
    std::stable_sort(trace.events.begin(), trace.events.end(), [](const Event& a, const Event& b) {
      if (a.time != b.time) return a.time < b.time;
      if (a.rank != b.rank) return a.rank < b.rank;
      return a.kind < b.kind;
    });
    for (const auto& e : trace.events) trace.final_time = std::max(trace.final_time, e.time);
    return trace;
  }

  std::vector<Rank> missing_collective(int k) const {
    std::vector<bool> arrived(inst_.size(), false);
    if (k < static_cast<int>(collectives_.size()))
      for (const auto& a : collectives_[k].arrivals) arrived[a.rank] = true;
    std::vector<Rank> out;
    for (Rank r = 0; r < inst_.size(); ++r)
      if (!arrived[r]) out.push_back(r);
    return out;
  }

  RunOutcome finish() {
    std::vector<BlockedRank> blocked;
    double quiescent = 0;
    for (const auto& rs : ranks_) quiescent = std::max(quiescent, rs.now);
    for (Rank r = 0; r < inst_.size(); ++r) {
      const auto& rs = ranks_[r];
      if (rs.state == State::kDone) continue;
      BlockedRank b;
      b.rank = r;
      b.since = rs.blocked_since;
      switch (rs.state) {
        case State::kBlockedSend: {
          const auto& msg = messages_[rs.pending_message];
          b.node = fmt::format("blocking send to P{}", msg.dst);
          b.waits_on = {msg.dst};
          break;
        }
        case State::kBlockedRecv:
          b.node = rs.recv_sources.size() == 1 ? fmt::format("recv from P{}", rs.recv_sources[0])
                                                : "recv from any of " + rank_list(rs.recv_sources);
          b.waits_on = rs.recv_sources;
          break;
        case State::kBlockedWait: {
          const auto& msg = messages_[rs.pending_message];
          b.node = fmt::format("wait {}", rs.blocked_on->as<Wait>()->handle);
          b.waits_on = {msg.dst};
          break;
        }
        case State::kBlockedCollective: {
          const auto* c = rs.blocked_on->as<Collective>();
          b.node = fmt::format("collective {} #{}", to_string(c->kind), rs.collective_seq - 1);
          b.waits_on = missing_collective(rs.collective_seq - 1);
          break;
        }
        case State::kBlockedFarm: {
          const int k = rs.farm_seq - 1;
          const auto& farm = farms_[k];
          b.node = fmt::format("{} #{}", rs.blocked_on->as<TaskPool>() ? "taskpool" : "workerloop", k);
          if (farm.master < 0) {
            b.waits_on = {0};
          } else {
            for (Rank w : workers_)
              if (!farm.worker_arrival.count(w)) b.waits_on.push_back(w);
          }
          break;
        }
        default:
          b.node = "?";
      }
      blocked.push_back(std::move(b));
    }
    if (!blocked.empty()) {
      DeadlockReport report = detect_deadlock_state(std::move(blocked), quiescent);
      if (report.kind == DeadlockKind::kCycle) {
        // A cycle is closed when its last member blocks.
        report.time = 0;
        for (const auto& b : report.blocked)
          if (std::find(report.cycle.begin(), report.cycle.end(), b.rank) != report.cycle.end())
            report.time = std::max(report.time, b.since);
      }
      for (const auto& b : report.blocked)
        emit(report.time, b.rank, EventKind::kDeadlock, b.node);
      report.partial = build_trace();
      return report;
    }
    for (const auto& msg : messages_) {
      if (!msg.delivered) {
        throw SimulationError(fmt::format("unmatched message from P{} to P{} ({}B) remaining at termination",
                                          msg.src, msg.dst, format_number(msg.bytes)));
      }
    }
    RunResult result;
    result.trace = build_trace();
    auto& metrics = result.metrics;
    metrics.makespan = result.trace.final_time;
    for (const auto& rs : ranks_) {
      metrics.compute_time.push_back(rs.compute);
      metrics.comm_time.push_back(rs.comm);
      metrics.idle_time.push_back(metrics.makespan - rs.compute - rs.comm);
    }
    metrics.message_count = message_count_;
    metrics.bytes_sent = bytes_sent_;
    return result;
  }

  static std::string rank_list(const std::vector<Rank>& ranks) {
    std::string out;
    for (Rank r : ranks) out += (out.empty() ? "P" : ", P") + std::to_string(r);
    return out;
  }

  const Model& model_;
  Instance inst_;
  CostModel costs_;
  std::vector<RankState> ranks_;
  std::vector<std::vector<int>> hops_;
  std::vector<Rank> workers_;
  std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>> queue_;
  std::vector<Message> messages_;
  std::map<std::pair<Rank, Rank>, std::deque<int>> channels_;
  std::vector<CollectiveInstance> collectives_;
  std::vector<FarmInstance> farms_;
  std::map<int, const Node*> farm_nodes_;
  std::vector<Event> events_;
  long long message_count_ = 0;
  double bytes_sent_ = 0;
  long long steps_ = 0;
  Rank current_ = -1;
};

}  // namespace

RunOutcome run(const Model& m, const Params& params, const CostModel& costs) {
  try {
    Simulator sim(m, params, costs);
    return sim.execute();
  } catch (const ModelError& err) {
    throw SimulationError(err.what(), err.pos());
  } catch (const TopologyError& err) {
    throw SimulationError(err.what(), m.topology.pos);
  }
}

RunOutcome run(const Model& m) { return run(m, m.params, m.costs); }

RunResult run_or_throw(const Model& m) {
  auto outcome = run(m);
  if (auto* report = std::get_if<DeadlockReport>(&outcome))
    throw SimulationError(report->describe());
  return std::get<RunResult>(std::move(outcome));
}

}  // namespace parmodel
