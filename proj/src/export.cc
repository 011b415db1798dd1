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

#include "parmodel/export.h"

#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>

namespace parmodel {

namespace {

std::string dot_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string role_label(const Instance& inst, Rank r) {
  return inst.role_of[r] < 0 ? fmt::format("P{}", r) : fmt::format("P{}:{}", r, inst.role(r).name);
}

// Size expressions of every message exchanged between each unordered pair.
std::map<std::pair<Rank, Rank>, std::set<std::string>> message_sizes(const Instance& inst) {
  std::map<std::pair<Rank, Rank>, std::set<std::string>> out;
  auto add = [&](Rank a, Rank b, const Expr& size) {
    if (a == b) return;
    out[{std::min(a, b), std::max(a, b)}].insert(to_string(size));
  };
  std::vector<Rank> workers;
  for (Rank r = 0; r < inst.size(); ++r) {
    if (inst.role_of[r] < 0) continue;
    for_each_node(inst.role(r).body, [&](const Node& n) {
      if (n.as<WorkerLoop>()) workers.push_back(r);
    });
  }
  for (Rank r = 0; r < inst.size(); ++r) {
    if (inst.role_of[r] < 0) continue;
    for_each_node(inst.role(r).body, [&](const Node& n) {
      if (const auto* s = n.as<Send>()) {
        try {
          for (Rank dst : inst.resolve_target(s->to, r)) add(r, dst, s->size);
        } catch (const std::exception&) {
          // Unresolvable targets are reported by validation.
        }
      } else if (const auto* tp = n.as<TaskPool>()) {
        for (Rank w : workers) {
          add(r, w, tp->payload);
          add(r, w, tp->result);
        }
      }
    });
  }
  return out;
}

std::string join(const std::set<std::string>& items, std::string_view sep) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += sep;
    out += s;
  }
  return out;
}

// ---- swimlanes --------------------------------------------------------------

struct LaneWriter {
  std::vector<std::string> lines;
  int collectives = 0;

  void note(const Node& n, int depth) {
    if (!n.note.empty()) emit(depth, "note: " + n.note);
  }

  void emit(int depth, const std::string& text) { lines.push_back(std::string(2 * depth, ' ') + text); }

  void body(const std::vector<Node>& nodes, int depth) {
    for (const Node& n : nodes) {
      if (const auto* a = n.as<Action>()) {
        emit(depth, fmt::format("<<action+>> {} ({})", a->name, to_string(a->cost)));
      } else if (const auto* sub = n.as<SubActivity>()) {
        emit(depth, fmt::format("<<subactivity+>> {} {{", sub->name));
        note(n, depth + 1);
        body(sub->body, depth + 1);
        emit(depth, "}");
        continue;
      } else if (const auto* s = n.as<Send>()) {
        std::string text = fmt::format("{} send to {} ({})", s->blocking ? "<<bsend+>>" : "<<nbsend+>>",
                                       to_string(s->to), to_string(s->size));
        if (!s->handle.empty()) text += " as " + s->handle;
        emit(depth, text);
      } else if (const auto* r = n.as<Recv>()) {
        emit(depth, fmt::format("<<bsend+>> recv from {} ({})", to_string(r->from), to_string(r->size)));
      } else if (const auto* w = n.as<Wait>()) {
        emit(depth, fmt::format("<<nbsend+>> wait {}", w->handle));
      } else if (const auto* c = n.as<Collective>()) {
        emit(depth, fmt::format("<<collective+>> {} root {} ({}) [group C{}]", to_string(c->kind), c->root,
                                to_string(c->size), collectives++));
      } else if (const auto* l = n.as<Loop>()) {
        emit(depth, fmt::format("loop {} {{", to_string(l->count)));
        note(n, depth + 1);
        body(l->body, depth + 1);
        emit(depth, "}");
        continue;
      } else if (const auto* tp = n.as<TaskPool>()) {
        emit(depth, fmt::format("<<subactivity+>> taskpool {} tasks {} (payload {}, result {})",
                                to_string(tp->count), to_string(tp->policy), to_string(tp->payload),
                                to_string(tp->result)));
      } else if (n.as<WorkerLoop>()) {
        emit(depth, "<<subactivity+>> workerloop");
      }
      note(n, depth);
    }
  }
};

std::string rank_range(const Instance& inst, std::size_t role) {
  const RoleRanks& rr = inst.role_ranks[role];
  return rr.count() == 1 ? fmt::format("[{}]", rr.first) : fmt::format("[{}..{}]", rr.first, rr.last);
}

std::string rstrip(std::string s) {
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

// Display width in code points, so UTF-8 names keep columns aligned.
std::size_t width(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

}  // namespace

std::string export_topology_dot(const ProcessGraph& g, const Model& m) {
  const Instance inst = resolve(m);
  const auto sizes = message_sizes(inst);
  std::string out = fmt::format("graph {} {{\n", dot_quote(m.name));
  out += "  node [shape=box];\n";
  for (Rank r = 0; r < g.size(); ++r) {
    const std::string label = r < inst.size() ? role_label(inst, r) : fmt::format("P{}", r);
    out += fmt::format("  P{} [label={}];\n", r, dot_quote(label));
  }
  for (const auto& [u, v] : g.edges()) {
    const auto it = sizes.find({u, v});
    if (it == sizes.end()) {
      out += fmt::format("  P{} -- P{};\n", u, v);
    } else {
      out += fmt::format("  P{} -- P{} [label={}];\n", u, v, dot_quote(join(it->second, ", ")));
    }
  }
  out += "}\n";
  return out;
}

std::string export_topology_dot(const Model& m) {
  const Instance inst = resolve(m);
  return export_topology_dot(inst.graph, m);
}

std::string export_swimlane(const Model& m) {
  const Instance inst = resolve(m);
  std::vector<std::vector<std::string>> lanes;
  for (std::size_t i = 0; i < m.roles.size(); ++i) {
    LaneWriter w;
    w.lines.push_back(fmt::format("{} {}", m.roles[i].name, rank_range(inst, i)));
    w.lines.push_back("");
    w.body(m.roles[i].body, 0);
    lanes.push_back(std::move(w.lines));
  }
  std::vector<std::size_t> widths;
  std::size_t rows = 0;
  for (const auto& lane : lanes) {
    std::size_t wmax = 0;
    for (const auto& line : lane) wmax = std::max(wmax, width(line));
    widths.push_back(wmax);
    rows = std::max(rows, lane.size());
  }
  for (std::size_t i = 0; i < lanes.size(); ++i) lanes[i][1] = std::string(widths[i], '-');

  std::string out;
  for (std::size_t row = 0; row < rows; ++row) {
    std::string line;
    for (std::size_t i = 0; i < lanes.size(); ++i) {
      if (i > 0) line += row == 1 ? "-+-" : " | ";
      const std::string cell = row < lanes[i].size() ? lanes[i][row] : "";
      line += cell + std::string(widths[i] - width(cell), ' ');
    }
    out += rstrip(line) + "\n";
  }
  return out;
}

std::string export_sequence(const Trace& trace, const Model& m) {
  const Instance inst = resolve(m);
  const int p = inst.size();
  bool collectives = false;
  std::vector<double> last(p, 0.0);
  for (const auto& e : trace.events) {
    if (e.rank >= 0 && e.rank < p) last[e.rank] = std::max(last[e.rank], e.time);
    if (e.kind == EventKind::kCollectiveEnd) collectives = true;
  }

  std::string out = "<<actor>> User";
  for (Rank r = 0; r < p; ++r) out += fmt::format(" | {} <<controller>>", role_label(inst, r));
  if (collectives) out += " | MainProgram <<controller>>";
  out += "\n";
  for (Rank r = 0; r < p; ++r) out += fmt::format("@{:.3f} User -> P{} : <<create>>\n", 0.0, r);

  // Messages in trace order, each rank's destroy after its last message.
  struct Line {
    double time;
    int order;  // 0 message, 1 destroy
    Rank rank;
    std::string text;
  };
  std::vector<Line> lines;
  for (const auto& e : trace.events) {
    if (e.kind == EventKind::kRecvEnd && e.peer >= 0) {
      lines.push_back({e.time, 0, e.rank,
                       fmt::format("@{:.3f} P{} -> P{} : {}({}B) {}", e.time, e.peer, e.rank, e.label,
                                   format_number(e.bytes), e.synchronous ? "<<synchronous>>" : "<<asynchronous>>")});
    } else if (e.kind == EventKind::kCollectiveEnd && !e.label.empty()) {
      lines.push_back({e.time, 0, e.rank,
                       fmt::format("@{:.3f} MainProgram -> P* : {}({}B) <<synchronous>>", e.time, e.label,
                                   format_number(e.bytes))});
    }
  }
  for (Rank r = 0; r < p; ++r)
    lines.push_back({last[r], 1, r, fmt::format("@{:.3f} P{} : <<destroy>>", last[r], r)});
  std::stable_sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
    if (a.time != b.time) return a.time < b.time;
    if (a.order != b.order) return a.order < b.order;
    return a.order == 1 && a.rank < b.rank;
  });
  for (const auto& l : lines) out += l.text + "\n";
  return out;
}

}  // namespace parmodel
