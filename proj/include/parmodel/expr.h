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

#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace parmodel {

/// Literal suffixes. Times normalise to microseconds, sizes to bytes
/// (binary multiples).
enum class Unit { kNone, kMicros, kMillis, kSeconds, kBytes, kKiloBytes, kMegaBytes };

std::string_view to_string(Unit unit);
std::optional<Unit> unit_from_suffix(std::string_view suffix);
double unit_scale(Unit unit);
bool is_time_unit(Unit unit);
bool is_size_unit(Unit unit);

struct SourcePos {
  int line = 1;
  int column = 1;
};

class EvalError : public std::runtime_error {
 public:
  EvalError(const std::string& message, SourcePos pos)
      : std::runtime_error(message), pos_(pos) {}
  SourcePos pos() const { return pos_; }

 private:
  SourcePos pos_;
};

/// Named scalar bindings in declaration order.
class Params {
 public:
  Params() = default;
  Params(std::initializer_list<std::pair<std::string, double>> init);

  const std::vector<std::pair<std::string, double>>& entries() const { return entries_; }
  std::optional<double> get(std::string_view name) const;
  bool contains(std::string_view name) const { return get(name).has_value(); }
  /// Inserts or overwrites; insertion keeps declaration order.
  void set(std::string_view name, double value);
  bool empty() const { return entries_.empty(); }

  bool operator==(const Params&) const = default;

 private:
  std::vector<std::pair<std::string, double>> entries_;
};

/// Immutable arithmetic expression tree. Copies share structure.
class Expr {
 public:
  enum class Op { kNumber, kName, kNeg, kAdd, kSub, kMul, kDiv };

  Expr() : Expr(number(0)) {}

  static Expr number(double value, Unit unit = Unit::kNone, SourcePos pos = {});
  static Expr name(std::string name, SourcePos pos = {});
  static Expr negate(Expr operand, SourcePos pos = {});
  static Expr binary(Op op, Expr lhs, Expr rhs, SourcePos pos = {});

  Op op() const { return node_->op; }
  double value() const { return node_->value; }
  Unit unit() const { return node_->unit; }
  const std::string& identifier() const { return node_->name; }
  const Expr& lhs() const { return *node_->lhs; }
  const Expr& rhs() const { return *node_->rhs; }
  SourcePos pos() const { return node_->pos; }

  bool is_atom() const { return op() == Op::kNumber || op() == Op::kName; }
  /// Collects every identifier referenced, in first-appearance order.
  void collect_names(std::vector<std::string>& out) const;
  bool has_unit(bool (*predicate)(Unit)) const;

  /// Structural equality; source positions are ignored.
  friend bool operator==(const Expr& a, const Expr& b);

 private:
  struct Node {
    Op op = Op::kNumber;
    double value = 0;
    Unit unit = Unit::kNone;
    std::string name;
    std::shared_ptr<const Expr> lhs;
    std::shared_ptr<const Expr> rhs;
    SourcePos pos;
  };
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  std::shared_ptr<const Node> node_;
};

Expr operator+(Expr a, Expr b);
Expr operator-(Expr a, Expr b);
Expr operator*(Expr a, Expr b);
Expr operator/(Expr a, Expr b);

/// The rank variable available inside role flows.
inline constexpr std::string_view kRankVariable = "me";

/// Evaluates with every literal normalised to µs / bytes. Throws EvalError on
/// unbound names, division by zero, a negative or non-finite result.
double eval_expr(const Expr& e, const Params& params, std::optional<int> me = std::nullopt);

/// Count semantics: evaluates, then rounds half-up to an integer.
long long eval_count(const Expr& e, const Params& params, std::optional<int> me = std::nullopt);

/// Canonical text; parses back to a structurally equal expression.
std::string to_string(const Expr& e);

/// Shortest text that reads back to the same double.
std::string format_number(double value);

}  // namespace parmodel
