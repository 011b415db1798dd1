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

#include <charconv>
#include <cmath>

#include <fmt/format.h>

namespace parmodel {

std::string_view to_string(Unit unit) {
  switch (unit) {
    case Unit::kNone: return "";
    case Unit::kMicros: return "us";
    case Unit::kMillis: return "ms";
    case Unit::kSeconds: return "s";
    case Unit::kBytes: return "B";
    case Unit::kKiloBytes: return "KB";
    case Unit::kMegaBytes: return "MB";
  }
  return "";
}

std::optional<Unit> unit_from_suffix(std::string_view suffix) {
  for (auto unit : {Unit::kMicros, Unit::kMillis, Unit::kSeconds, Unit::kBytes,
                    Unit::kKiloBytes, Unit::kMegaBytes}) {
    if (to_string(unit) == suffix) return unit;
  }
  return std::nullopt;
}

double unit_scale(Unit unit) {
  switch (unit) {
    case Unit::kMillis: return 1e3;
    case Unit::kSeconds: return 1e6;
    case Unit::kKiloBytes: return 1024.0;
    case Unit::kMegaBytes: return 1024.0 * 1024.0;
    default: return 1.0;
  }
}

bool is_time_unit(Unit unit) {
  return unit == Unit::kMicros || unit == Unit::kMillis || unit == Unit::kSeconds;
}

bool is_size_unit(Unit unit) {
  return unit == Unit::kBytes || unit == Unit::kKiloBytes || unit == Unit::kMegaBytes;
}

Params::Params(std::initializer_list<std::pair<std::string, double>> init) {
  for (const auto& [name, value] : init) set(name, value);
}

std::optional<double> Params::get(std::string_view name) const {
  for (const auto& [key, value] : entries_)
    if (key == name) return value;
  return std::nullopt;
}

void Params::set(std::string_view name, double value) {
  for (auto& [key, current] : entries_) {
    if (key == name) {
      current = value;
      return;
    }
  }
  entries_.emplace_back(std::string(name), value);
}

Expr Expr::number(double value, Unit unit, SourcePos pos) {
  if (!(value >= 0) || !std::isfinite(value))
    throw std::invalid_argument(fmt::format("literal must be finite and non-negative, got {}", value));
  auto node = std::make_shared<Node>();
  node->op = Op::kNumber;
  node->value = value;
  node->unit = unit;
  node->pos = pos;
  return Expr(std::move(node));
}

Expr Expr::name(std::string name, SourcePos pos) {
  auto node = std::make_shared<Node>();
  node->op = Op::kName;
  node->name = std::move(name);
  node->pos = pos;
  return Expr(std::move(node));
}

Expr Expr::negate(Expr operand, SourcePos pos) {
  auto node = std::make_shared<Node>();
  node->op = Op::kNeg;
  node->lhs = std::make_shared<const Expr>(std::move(operand));
  node->pos = pos;
  return Expr(std::move(node));
}

Expr Expr::binary(Op op, Expr lhs, Expr rhs, SourcePos pos) {
  auto node = std::make_shared<Node>();
  node->op = op;
  node->lhs = std::make_shared<const Expr>(std::move(lhs));
  node->rhs = std::make_shared<const Expr>(std::move(rhs));
  node->pos = pos;
  return Expr(std::move(node));
}

Expr operator+(Expr a, Expr b) { return Expr::binary(Expr::Op::kAdd, std::move(a), std::move(b)); }
Expr operator-(Expr a, Expr b) { return Expr::binary(Expr::Op::kSub, std::move(a), std::move(b)); }
Expr operator*(Expr a, Expr b) { return Expr::binary(Expr::Op::kMul, std::move(a), std::move(b)); }
Expr operator/(Expr a, Expr b) { return Expr::binary(Expr::Op::kDiv, std::move(a), std::move(b)); }

void Expr::collect_names(std::vector<std::string>& out) const {
  switch (op()) {
    case Op::kNumber:
      return;
    case Op::kName:
      for (const auto& seen : out)
        if (seen == identifier()) return;
      out.push_back(identifier());
      return;
    case Op::kNeg:
      lhs().collect_names(out);
      return;
    default:
      lhs().collect_names(out);
      rhs().collect_names(out);
  }
}

bool Expr::has_unit(bool (*predicate)(Unit)) const {
  switch (op()) {
    case Op::kNumber: return predicate(unit());
    case Op::kName: return false;
    case Op::kNeg: return lhs().has_unit(predicate);
    default: return lhs().has_unit(predicate) || rhs().has_unit(predicate);
  }
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  if (a.op() != b.op()) return false;
  switch (a.op()) {
    case Expr::Op::kNumber:
      return a.value() == b.value() && a.unit() == b.unit();
    case Expr::Op::kName:
      return a.identifier() == b.identifier();
    case Expr::Op::kNeg:
      return a.lhs() == b.lhs();
    default:
      return a.lhs() == b.lhs() && a.rhs() == b.rhs();
  }
}

namespace {

double eval_node(const Expr& e, const Params& params, std::optional<int> me) {
  switch (e.op()) {
    case Expr::Op::kNumber:
      return e.value() * unit_scale(e.unit());
    case Expr::Op::kName: {
      if (e.identifier() == kRankVariable) {
        if (!me) throw EvalError("'me' is only defined inside a role flow", e.pos());
        return *me;
      }
      if (auto v = params.get(e.identifier())) return *v;
      throw EvalError(fmt::format("unbound name '{}'", e.identifier()), e.pos());
    }
    case Expr::Op::kNeg:
      return -eval_node(e.lhs(), params, me);
    case Expr::Op::kAdd:
      return eval_node(e.lhs(), params, me) + eval_node(e.rhs(), params, me);
    case Expr::Op::kSub:
      return eval_node(e.lhs(), params, me) - eval_node(e.rhs(), params, me);
    case Expr::Op::kMul:
      return eval_node(e.lhs(), params, me) * eval_node(e.rhs(), params, me);
    case Expr::Op::kDiv: {
      const double num = eval_node(e.lhs(), params, me);
      const double den = eval_node(e.rhs(), params, me);
      if (den == 0) throw EvalError(fmt::format("division by zero in '{}'", to_string(e)), e.pos());
      return num / den;
    }
  }
  return 0;
}

int precedence(const Expr& e) {
  switch (e.op()) {
    case Expr::Op::kAdd:
    case Expr::Op::kSub: return 1;
    case Expr::Op::kMul:
    case Expr::Op::kDiv: return 2;
    case Expr::Op::kNeg: return 3;
    default: return 4;
  }
}

void print(const Expr& e, std::string& out) {
  auto child = [&out](const Expr& c, bool parens) {
    if (parens) out += '(';
    print(c, out);
    if (parens) out += ')';
  };
  switch (e.op()) {
    case Expr::Op::kNumber:
      out += format_number(e.value());
      out += to_string(e.unit());
      return;
    case Expr::Op::kName:
      out += e.identifier();
      return;
    case Expr::Op::kNeg:
      out += '-';
      child(e.lhs(), precedence(e.lhs()) < 3);
      return;
    default: {
      const int prec = precedence(e);
      child(e.lhs(), precedence(e.lhs()) < prec);
      switch (e.op()) {
        case Expr::Op::kAdd: out += " + "; break;
        case Expr::Op::kSub: out += " - "; break;
        case Expr::Op::kMul: out += " * "; break;
        default: out += " / "; break;
      }
      child(e.rhs(), precedence(e.rhs()) <= prec);
    }
  }
}

}  // namespace

double eval_expr(const Expr& e, const Params& params, std::optional<int> me) {
  const double v = eval_node(e, params, me);
  if (!std::isfinite(v)) throw EvalError(fmt::format("'{}' is not finite", to_string(e)), e.pos());
  if (v < 0) throw EvalError(fmt::format("'{}' evaluates to negative value {}", to_string(e), v), e.pos());
  return v;
}

long long eval_count(const Expr& e, const Params& params, std::optional<int> me) {
  const double v = eval_expr(e, params, me);
  if (v > 9e15) throw EvalError(fmt::format("count '{}' is too large", to_string(e)), e.pos());
  return static_cast<long long>(std::floor(v + 0.5));
}

std::string to_string(const Expr& e) {
  std::string out;
  print(e, out);
  return out;
}

std::string format_number(double value) {
  if (value == std::floor(value) && std::fabs(value) < 1e15) {
    return fmt::format("{}", static_cast<long long>(value));
  }
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

}  // namespace parmodel
