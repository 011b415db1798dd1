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

#include "parmodel/parser.h"

#include <gtest/gtest.h>

#include "oracles.h"

namespace parmodel {
namespace {

const Diagnostic* first_error(const ParseResult& r) {
  for (const auto& d : r.diagnostics)
    if (d.is_error()) return &d;
  return nullptr;
}

bool mentions(const ParseResult& r, std::string_view text) {
  for (const auto& d : r.diagnostics)
    if (d.message.find(text) != std::string::npos) return true;
  return false;
}

constexpr std::string_view kMinimal = R"(topology bus(1)
role main on rank 0 {
  action "work" cost 42us
}
)";

TEST(Parser, EmptyInputMissesTopology) {
  const ParseResult r = parse_model("");
  ASSERT_FALSE(r.ok());
  const Diagnostic* d = first_error(r);
  ASSERT_NE(d, nullptr);
  EXPECT_EQ(d->message, "missing topology declaration");
  EXPECT_EQ(d->line, 1);
}

TEST(Parser, UnknownTopologyKindHasPosition) {
  const ParseResult r = parse_model("model \"x\"\ntopology ringg(4)\nrole a on rank 0 { action \"w\" cost 1us }\n");
  ASSERT_FALSE(r.ok());
  const Diagnostic* d = first_error(r);
  ASSERT_NE(d, nullptr);
  EXPECT_NE(d->message.find("unknown topology kind 'ringg'"), std::string::npos);
  EXPECT_EQ(d->line, 2);
  EXPECT_EQ(d->column, 10);
  EXPECT_EQ(std::count_if(r.diagnostics.begin(), r.diagnostics.end(), [](auto& x) { return x.is_error(); }), 1);
}

TEST(Parser, MinimalModel) {
  const ParseResult r = parse_model(kMinimal);
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.model->name, "unnamed");
  ASSERT_EQ(r.model->roles.size(), 1u);
  const std::string printed = print_model(*r.model);
  EXPECT_LE(std::count(printed.begin(), printed.end(), '\n'), 12);
  const ParseResult again = parse_model(printed);
  ASSERT_TRUE(again.ok());
  EXPECT_EQ(*again.model, *r.model);
}

TEST(Parser, PiExampleRoundTrips) {
  const ParseResult r = parse_model(oracle::read(oracle::model_path("pi_montecarlo.pmod")));
  ASSERT_TRUE(r.ok());
  const Model& m = *r.model;
  EXPECT_EQ(m.topology.kind, TopologyKind::kFarm);
  EXPECT_EQ(m.roles.size(), 2u);
  const ParseResult again = parse_model(print_model(m));
  ASSERT_TRUE(again.ok());
  EXPECT_EQ(*again.model, m);
  EXPECT_EQ(print_model(*again.model), print_model(m));
}

TEST(Parser, CorpusIsPrintParseFixpoint) {
  for (const auto& path : oracle::corpus_files()) {
    SCOPED_TRACE(path.string());
    const ParseResult r = parse_model(oracle::read(path));
    ASSERT_TRUE(r.ok());
    const std::string printed = print_model(*r.model);
    const ParseResult again = parse_model(printed);
    ASSERT_TRUE(again.ok()) << printed;
    EXPECT_EQ(*again.model, *r.model);
    EXPECT_EQ(print_model(*again.model), printed);
  }
}

TEST(Parser, TrailingCommentsBecomeNotes) {
  const ParseResult r = parse_model(R"(topology bus(1)
# a leading comment is not a note
role main on rank 0 {
  action "w" cost 1us  # MPI_Wtime
}
)");
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.model->roles[0].body[0].note, "MPI_Wtime");
}

TEST(Parser, ReportsSemanticErrors) {
  EXPECT_TRUE(mentions(parse_model(R"(topology bus(2)
role a on rank 0 { action "w" cost 1us }
role a on rank 1 { action "w" cost 1us }
)"),
                       "duplicate role 'a'"));
  EXPECT_TRUE(mentions(parse_model(R"(topology farm(P)
role a on rank 0 { action "w" cost 1us }
)"),
                       "unbound parameter 'P'"));
  EXPECT_TRUE(mentions(parse_model(R"(topology bus(1)
role a on rank 0 { action "w" cost (1us }
)"),
                       "expected"));
  EXPECT_TRUE(mentions(parse_model(R"(topology bus(1)
role a on rank 0 { action "w" cost * 2 }
)"),
                       "malformed expression"));
  EXPECT_TRUE(mentions(parse_model(R"(topology bus(1)
role a on rank 0 { jump "w" }
)"),
                       "unknown keyword 'jump'"));
  EXPECT_TRUE(mentions(parse_model(R"(topology bus(2)
role a on rank 0 { send to b size 1B blocking }
role c on rank 1 { action "w" cost 1us }
)"),
                       "unknown role 'b'"));
  EXPECT_TRUE(mentions(parse_model("topology bus(1)\n"), "missing role declaration"));
  EXPECT_TRUE(mentions(parse_model(R"(topology bus(me)
role a on rank 0 { action "w" cost 1us }
)"),
                       "'me' cannot be used"));
}

TEST(Parser, RecoversAndReportsSeveralErrors) {
  const ParseResult r = parse_model(R"(topology bus(2)
role a on rank 0 {
  action "w" cost * 1
  frobnicate
  action "ok" cost 1us
}
role b on rank 1 { action "w" cost 1us }
)");
  ASSERT_FALSE(r.ok());
  EXPECT_GE(std::count_if(r.diagnostics.begin(), r.diagnostics.end(), [](auto& d) { return d.is_error(); }), 2);
}

TEST(Parser, UnitMismatchIsAWarning) {
  const ParseResult r = parse_model(R"(topology bus(1)
role a on rank 0 { action "w" cost 8B }
)");
  ASSERT_TRUE(r.ok());
  EXPECT_TRUE(mentions(r, "mixes units"));
}

TEST(Parser, ColumnsCountCodePoints) {
  const ParseResult r = parse_model("topology bus(1)\nrole a on rank 0 { action \"μέτρο\" cost ? }\n");
  ASSERT_FALSE(r.ok());
  const Diagnostic* d = first_error(r);
  ASSERT_NE(d, nullptr);
  EXPECT_EQ(d->line, 2);
  EXPECT_EQ(d->column, 40);
}

TEST(Parser, AllNodeKindsRoundTrip) {
  const ParseResult r = parse_model(R"(model "kinds"
topology farm(3)
costs {
  t_startup = 2us
  t_byte = 0.5us
  hop_scaling = true
  send_mode = buffered
}
params {
  W = 2
}
role master on rank 0 {
  subactivity "setup" {
    action "init" cost 1ms  # MPI_Init
  }
  collective scatter root master size 1KB
  taskpool count 3 cost [1us, 2us, 3us] policy static payload 4B result 2B
  send to worker.1 size 8B nonblocking as h
  wait h
  collective barrier root master size 0B
}
role worker on ranks 1..W {
  collective scatter root master size 1KB
  workerloop
  loop 2 * W {
    action "spin" cost me * 1us
  }
  collective barrier root master size 0B
}
)");
  ASSERT_TRUE(r.ok()) << (r.diagnostics.empty() ? "" : r.diagnostics[0].message);
  const ParseResult again = parse_model(print_model(*r.model));
  ASSERT_TRUE(again.ok());
  EXPECT_EQ(*again.model, *r.model);
  EXPECT_EQ(r.model->costs.send_mode, SendMode::kBuffered);
  EXPECT_TRUE(r.model->costs.hop_scaling);
  EXPECT_DOUBLE_EQ(r.model->costs.t_byte, 0.5);
}

TEST(Parser, DiagnosticFormat) {
  Diagnostic d{Severity::kError, "boom", 3, 7};
  EXPECT_EQ(format_diagnostic(d, "f.pmod"), "error f.pmod:3:7 boom");
}

}  // namespace
}  // namespace parmodel
