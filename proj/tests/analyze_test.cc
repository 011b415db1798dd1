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

#include "parmodel/analyze.h"

#include <gtest/gtest.h>

#include <sstream>

#include "oracles.h"
#include "parmodel/simulate.h"

namespace parmodel {
namespace {

std::vector<std::vector<double>> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "value,makespan_us,speedup,efficiency");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

TEST(Analyze, SpeedupDefinition) {
  EXPECT_DOUBLE_EQ(speedup(100, 25), 4);
  EXPECT_THROW(speedup(0, 1), std::invalid_argument);
  EXPECT_THROW(speedup(1, -1), std::invalid_argument);
}

TEST(Analyze, DimensionNames) {
  for (auto d : {SweepDimension::kProcessCount, SweepDimension::kProblemSize, SweepDimension::kStartup})
    EXPECT_EQ(sweep_dimension_from_string(to_string(d)), d);
  EXPECT_FALSE(sweep_dimension_from_string("bogus").has_value());
}

TEST(Analyze, ZeroCommSpmdIsPerfectlyEfficient) {
  const ParadigmSpec spec{SpmdSpec{1, 1200, 0.5, 512, 2}, {}};
  const auto report = sweep(template_for(spec, SweepDimension::kProcessCount), SweepDimension::kProcessCount,
                            {4, 1, 2});
  ASSERT_EQ(report.rows.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(report.rows[i].value, 1 << i);
    EXPECT_EQ(report.rows[i].processes, 1 << i);
    EXPECT_NEAR(report.rows[i].efficiency, 1.0, 1e-9);
  }
  EXPECT_TRUE(report.warnings.empty());
}

TEST(Analyze, HaloCostsEfficiencyDecreasesWithP) {
  ParadigmSpec spec{SpmdSpec{1, 4096, 0.5, 1024, 3}, {}};
  spec.costs.t_startup = 20;
  spec.costs.t_byte = 0.01;
  const auto report = sweep(template_for(spec, SweepDimension::kProcessCount), SweepDimension::kProcessCount,
                            {1, 2, 4, 8, 16});
  for (std::size_t i = 1; i < report.rows.size(); ++i)
    EXPECT_LT(report.rows[i].efficiency, report.rows[i - 1].efficiency);
}

TEST(Analyze, PiModelSweepOverP) {
  const Model pi = oracle::load(oracle::model_path("pi_montecarlo.pmod"));
  const auto report =
      sweep(template_for(pi, SweepDimension::kProcessCount), SweepDimension::kProcessCount, {2, 3, 5, 9});
  double prev = 0;
  for (const auto& row : report.rows) {
    EXPECT_GT(row.speedup, prev);
    EXPECT_LE(row.speedup, row.value - 1 + 1e-9);  // workers do all the sampling
    prev = row.speedup;
  }
  EXPECT_GE(report.rows[2].speedup, 3.9);
  EXPECT_LE(report.rows[2].speedup, 4.0);
}

TEST(Analyze, PiModelSweepOverStartup) {
  const Model pi = oracle::load(oracle::model_path("pi_montecarlo.pmod"));
  const auto report =
      sweep(template_for(pi, SweepDimension::kStartup), SweepDimension::kStartup, {0, 100, 1e5});
  EXPECT_GT(report.rows[0].speedup, report.rows[1].speedup);
  EXPECT_LT(report.rows[2].speedup, 1.0);
}

TEST(Analyze, ProblemSizeSweepScalesWork) {
  const Model pi = oracle::load(oracle::model_path("pi_montecarlo.pmod"));
  const auto report =
      sweep(template_for(pi, SweepDimension::kProblemSize), SweepDimension::kProblemSize, {4e3, 4e4, 4e5});
  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    EXPECT_GT(report.rows[i].makespan, report.rows[i - 1].makespan);
    EXPECT_GT(report.rows[i].speedup, report.rows[i - 1].speedup);
  }
}

TEST(Analyze, SequentializeCollapsesRanks) {
  const Model pi = oracle::load(oracle::model_path("pi_montecarlo.pmod"));
  const Model seq = sequentialize(pi, pi.params);
  EXPECT_EQ(resolve(seq).size(), 1);
  // All sampling plus the master's reduce, without communication.
  EXPECT_NEAR(run_or_throw(seq).metrics.makespan, 100005, 1e-6);
}

TEST(Analyze, MissingParameterIsAnError) {
  const Model m = oracle::load(oracle::model_path("two_rank.pmod"));
  EXPECT_THROW(template_for(m, SweepDimension::kProcessCount), SweepError);
}

TEST(Analyze, DeadlockingValueIsAnError) {
  const Model m = oracle::load(oracle::model_path("deadlock.pmod"));
  EXPECT_THROW(sweep(template_for(m, SweepDimension::kStartup), SweepDimension::kStartup, {1}), SweepError);
  EXPECT_THROW(sweep(template_for(m, SweepDimension::kStartup), SweepDimension::kStartup, {}), SweepError);
}

TEST(Analyze, SuperlinearSpeedupWarns) {
  SweepTemplate tmpl;
  tmpl.instantiate = [](double) {
    return gen_spmd({2, 10, 1, 0, 1});
  };
  tmpl.sequential = [](double) {
    return gen_spmd({1, 100, 1, 0, 1});
  };
  const auto report = sweep(tmpl, SweepDimension::kProcessCount, {2});
  ASSERT_EQ(report.warnings.size(), 1u);
  EXPECT_NE(report.warnings[0].find("superlinear"), std::string::npos);
  EXPECT_NE(render_report(report, ReportFormat::kTable).find("warning: superlinear"), std::string::npos);
}

TEST(Analyze, CsvRoundTrip) {
  ParadigmSpec spec{SpmdSpec{1, 3000, 0.37, 300, 2}, {}};
  spec.costs.t_startup = 13.3;
  spec.costs.t_byte = 0.0021;
  const auto report = sweep(template_for(spec, SweepDimension::kProcessCount), SweepDimension::kProcessCount,
                            {1, 2, 3, 5, 7});
  const auto rows = parse_csv(render_report(report, ReportFormat::kCsv));
  ASSERT_EQ(rows.size(), report.rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ASSERT_EQ(rows[i].size(), 4u);
    EXPECT_NEAR(rows[i][0], report.rows[i].value, 1e-6);
    EXPECT_NEAR(rows[i][1], report.rows[i].makespan, 1e-6);
    EXPECT_NEAR(rows[i][2], report.rows[i].speedup, 1e-6);
    EXPECT_NEAR(rows[i][3], report.rows[i].efficiency, 1e-6);
  }
}

TEST(Analyze, SweepIsDeterministic) {
  const ParadigmSpec spec{MasterWorkerSpec{1, {5, 9, 2, 7, 7, 1, 3}, TaskPolicy::kDynamic, 64, 8}, {}};
  const auto tmpl = template_for(spec, SweepDimension::kProcessCount);
  const auto a = sweep(tmpl, SweepDimension::kProcessCount, {2, 3, 4, 5, 6, 7});
  const auto b = sweep(tmpl, SweepDimension::kProcessCount, {7, 6, 5, 4, 3, 2});
  EXPECT_EQ(a, b);
  EXPECT_EQ(render_report(a, ReportFormat::kTable), render_report(b, ReportFormat::kTable));
}

TEST(Analyze, TableLayout) {
  const ParadigmSpec spec{SpmdSpec{1, 100, 1, 0, 1}, {}};
  const auto report = sweep(template_for(spec, SweepDimension::kProcessCount), SweepDimension::kProcessCount,
                            {1, 2});
  EXPECT_EQ(render_report(report, ReportFormat::kTable),
            "p  procs  makespan_us  speedup  efficiency\n"
            "1      1      100.000   1.0000      1.0000\n"
            "2      2       50.000   2.0000      1.0000\n");
}

}  // namespace
}  // namespace parmodel
