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

#include "parmodel/expr.h"

#include <gtest/gtest.h>

#include <random>

#include "parmodel/parser.h"

namespace parmodel {
namespace {

Expr parse(std::string_view text) {
  std::vector<Diagnostic> diags;
  auto e = parse_expression(text, diags);
  EXPECT_TRUE(e.has_value()) << text;
  return e.value_or(Expr::number(0));
}

TEST(Expr, UnitsNormaliseToMicrosAndBytes) {
  const Params none;
  EXPECT_DOUBLE_EQ(eval_expr(parse("3ms"), none), 3000);
  EXPECT_DOUBLE_EQ(eval_expr(parse("2s"), none), 2e6);
  EXPECT_DOUBLE_EQ(eval_expr(parse("1KB"), none), 1024);
  EXPECT_DOUBLE_EQ(eval_expr(parse("2MB"), none), 2 * 1048576.0);
  EXPECT_DOUBLE_EQ(eval_expr(parse("1.5e3us"), none), 1500);
}

TEST(Expr, PrecedenceAndParams) {
  const Params params{{"N", 1e6}, {"P", 5}};
  EXPECT_DOUBLE_EQ(eval_expr(parse("N / (P - 1) * 0.1us"), params), 25000);
  EXPECT_DOUBLE_EQ(eval_expr(parse("2 + 3 * 4"), params), 14);
  EXPECT_DOUBLE_EQ(eval_expr(parse("(2 + 3) * 4"), params), 20);
  EXPECT_DOUBLE_EQ(eval_expr(parse("10 - 4 - 3"), params), 3);
  EXPECT_DOUBLE_EQ(eval_expr(parse("-2 * -3"), params), 6);
  EXPECT_DOUBLE_EQ(eval_expr(parse("me * 10"), params, 3), 30);
}

TEST(Expr, EvaluationErrors) {
  const Params params{{"N", 4}};
  EXPECT_THROW(eval_expr(parse("M + 1"), params), EvalError);
  EXPECT_THROW(eval_expr(parse("N / 0"), params), EvalError);
  EXPECT_THROW(eval_expr(parse("1 - N"), params), EvalError);
  EXPECT_THROW(eval_expr(parse("me"), params), EvalError);
  EXPECT_THROW(Expr::number(-1), std::invalid_argument);
}

TEST(Expr, CountsRoundHalfUp) {
  const Params none;
  EXPECT_EQ(eval_count(parse("2.5"), none), 3);
  EXPECT_EQ(eval_count(parse("2.49"), none), 2);
  EXPECT_EQ(eval_count(parse("7 / 2"), none), 4);
  EXPECT_EQ(eval_count(parse("0"), none), 0);
}

TEST(Expr, CanonicalText) {
  EXPECT_EQ(to_string(parse("N/(P-1)*0.1us")), "N / (P - 1) * 0.1us");
  EXPECT_EQ(to_string(parse("((a))+(b*c)")), "a + b * c");
  EXPECT_EQ(to_string(parse("a-(b-c)")), "a - (b - c)");
  EXPECT_EQ(to_string(parse("(a-b)-c")), "a - b - c");
  EXPECT_EQ(format_number(1e6), "1000000");
  EXPECT_EQ(format_number(0.1), "0.1");
}

// Random expression trees print to text that parses back to the same tree.
Expr random_expr(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth > 0 ? 6 : 1);
  static const char* names[] = {"N", "P", "me", "x_1"};
  static const Unit units[] = {Unit::kNone, Unit::kMicros, Unit::kMillis, Unit::kBytes, Unit::kKiloBytes};
  switch (pick(rng)) {
    case 0: {
      std::uniform_real_distribution<double> v(0, 1000);
      return Expr::number(std::round(v(rng) * 100) / 100, units[rng() % 5]);
    }
    case 1: return Expr::name(names[rng() % 4]);
    case 2: return Expr::negate(random_expr(rng, depth - 1));
    case 3: return random_expr(rng, depth - 1) + random_expr(rng, depth - 1);
    case 4: return random_expr(rng, depth - 1) - random_expr(rng, depth - 1);
    case 5: return random_expr(rng, depth - 1) * random_expr(rng, depth - 1);
    default: return random_expr(rng, depth - 1) / random_expr(rng, depth - 1);
  }
}

TEST(Expr, PrintParseRoundTripProperty) {
  std::mt19937_64 rng(20261016);
  for (int i = 0; i < 2000; ++i) {
    const Expr e = random_expr(rng, 4);
    const std::string text = to_string(e);
    std::vector<Diagnostic> diags;
    const auto back = parse_expression(text, diags);
    ASSERT_TRUE(back.has_value()) << text;
    EXPECT_EQ(*back, e) << text;
    EXPECT_EQ(to_string(*back), text);
  }
}

}  // namespace
}  // namespace parmodel
