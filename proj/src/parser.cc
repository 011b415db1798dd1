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

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <map>
#include <set>

#include <fmt/format.h>

namespace parmodel {

std::string format_diagnostic(const Diagnostic& d, std::string_view file) {
  return fmt::format("{} {}:{}:{} {}", d.is_error() ? "error" : "warning", file, d.line, d.column,
                     d.message);
}

bool has_errors(const std::vector<Diagnostic>& diagnostics) {
  return std::any_of(diagnostics.begin(), diagnostics.end(),
                     [](const Diagnostic& d) { return d.is_error(); });
}

namespace {

enum class Tok {
  kIdent, kNumber, kString, kLBrace, kRBrace, kLParen, kRParen, kLBracket, kRBracket,
  kComma, kDot, kDotDot, kEq, kPlus, kMinus, kStar, kSlash, kEnd,
};

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;
  double number = 0;
  Unit unit = Unit::kNone;
  SourcePos pos;
  bool line_start = false;  // first token on its line
};

struct Comment {
  int line = 0;
  std::string text;
  bool trailing = false;
  bool used = false;
};

constexpr std::array kReserved = {
    "model", "topology", "costs", "params", "role", "on", "rank", "ranks", "action", "cost",
    "subactivity", "send", "to", "size", "blocking", "nonblocking", "as", "recv", "from",
    "wait", "collective", "root", "loop", "taskpool", "count", "policy", "payload", "result",
    "workerloop", "me",
};

bool is_reserved(std::string_view word) {
  return std::find(kReserved.begin(), kReserved.end(), word) != kReserved.end();
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Lexer {
 public:
  Lexer(std::string_view src, std::vector<Diagnostic>& diags) : src_(src), diags_(diags) {}

  void run(std::vector<Token>& tokens, std::vector<Comment>& comments) {
    int last_token_line = 0;
    while (true) {
      skip_space();
      if (at_end()) break;
      const SourcePos pos{line_, col_};
      const char c = src_[i_];
      if (c == '#') {
        const std::size_t start = ++i_;
        ++col_;
        while (!at_end() && src_[i_] != '\n') advance();
        std::string text(src_.substr(start, i_ - start));
        const auto first = text.find_first_not_of(" \t");
        const auto last = text.find_last_not_of(" \t\r");
        text = first == std::string::npos ? "" : text.substr(first, last - first + 1);
        comments.push_back({pos.line, text, last_token_line == pos.line});
        continue;
      }
      Token tok;
      tok.pos = pos;
      tok.line_start = last_token_line != pos.line;
      if (!lex_token(tok)) continue;
      last_token_line = pos.line;
      tokens.push_back(std::move(tok));
    }
    Token end;
    end.kind = Tok::kEnd;
    end.pos = {line_, col_};
    end.line_start = true;
    tokens.push_back(end);
  }

 private:
  bool at_end() const { return i_ >= src_.size(); }

  void advance() {
    const unsigned char c = static_cast<unsigned char>(src_[i_++]);
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else if ((c & 0xC0) != 0x80) {
      ++col_;
    }
  }

  void skip_space() {
    while (!at_end() && (src_[i_] == ' ' || src_[i_] == '\t' || src_[i_] == '\r' || src_[i_] == '\n'))
      advance();
  }

  void error(SourcePos pos, std::string message) {
    diags_.push_back({Severity::kError, std::move(message), pos.line, pos.column});
  }

  bool lex_token(Token& tok) {
    const char c = src_[i_];
    if (ident_start(c)) {
      const std::size_t start = i_;
      while (!at_end() && ident_char(src_[i_])) advance();
      tok.kind = Tok::kIdent;
      tok.text = std::string(src_.substr(start, i_ - start));
      return true;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) return lex_number(tok);
    if (c == '"') return lex_string(tok);
    auto single = [&](Tok kind) {
      tok.kind = kind;
      tok.text = std::string(1, c);
      advance();
      return true;
    };
    switch (c) {
      case '{': return single(Tok::kLBrace);
      case '}': return single(Tok::kRBrace);
      case '(': return single(Tok::kLParen);
      case ')': return single(Tok::kRParen);
      case '[': return single(Tok::kLBracket);
      case ']': return single(Tok::kRBracket);
      case ',': return single(Tok::kComma);
      case '=': return single(Tok::kEq);
      case '+': return single(Tok::kPlus);
      case '-': return single(Tok::kMinus);
      case '*': return single(Tok::kStar);
      case '/': return single(Tok::kSlash);
      case '.':
        if (i_ + 1 < src_.size() && src_[i_ + 1] == '.') {
          advance();
          advance();
          tok.kind = Tok::kDotDot;
          tok.text = "..";
          return true;
        }
        return single(Tok::kDot);
      default:
        break;
    }
    const std::size_t start = i_;
    advance();
    while (!at_end() && (static_cast<unsigned char>(src_[i_]) & 0xC0) == 0x80) advance();
    error(tok.pos, fmt::format("unexpected character '{}'", src_.substr(start, i_ - start)));
    return false;
  }

  bool lex_number(Token& tok) {
    const std::size_t start = i_;
    auto digits = [&] {
      while (!at_end() && std::isdigit(static_cast<unsigned char>(src_[i_]))) advance();
    };
    digits();
    if (i_ + 1 < src_.size() && src_[i_] == '.' && std::isdigit(static_cast<unsigned char>(src_[i_ + 1]))) {
      advance();
      digits();
    }
    if (i_ < src_.size() && (src_[i_] == 'e' || src_[i_] == 'E')) {
      std::size_t j = i_ + 1;
      if (j < src_.size() && (src_[j] == '+' || src_[j] == '-')) ++j;
      if (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j]))) {
        while (i_ < j) advance();
        digits();
      }
    }
    const std::string_view text = src_.substr(start, i_ - start);
    tok.kind = Tok::kNumber;
    tok.text = std::string(text);
    tok.number = std::strtod(tok.text.c_str(), nullptr);
    if (!at_end() && ident_start(src_[i_])) {
      const SourcePos upos{line_, col_};
      const std::size_t ustart = i_;
      while (!at_end() && ident_char(src_[i_])) advance();
      const std::string_view suffix = src_.substr(ustart, i_ - ustart);
      if (auto unit = unit_from_suffix(suffix)) {
        tok.unit = *unit;
        tok.text += suffix;
      } else {
        error(upos, fmt::format("unknown unit suffix '{}' (expected us, ms, s, B, KB or MB)", suffix));
      }
    }
    return true;
  }

  bool lex_string(Token& tok) {
    advance();  // opening quote
    std::string value;
    while (!at_end() && src_[i_] != '"' && src_[i_] != '\n') {
      if (src_[i_] == '\\' && i_ + 1 < src_.size() && (src_[i_ + 1] == '"' || src_[i_ + 1] == '\\')) {
        advance();
      }
      value += src_[i_];
      advance();
    }
    if (at_end() || src_[i_] != '"') {
      error(tok.pos, "unterminated string literal");
      return false;
    }
    advance();
    tok.kind = Tok::kString;
    tok.text = std::move(value);
    return true;
  }

  std::string_view src_;
  std::vector<Diagnostic>& diags_;
  std::size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;
};

struct ParseFailure {};

class Parser {
 public:
  Parser(std::vector<Token> tokens, std::vector<Comment> comments, std::vector<Diagnostic>& diags)
      : toks_(std::move(tokens)), comments_(std::move(comments)), diags_(diags) {}

  std::optional<Model> parse_document() {
    Model m;
    bool have_topology = false;
    bool have_costs = false;
    bool have_params = false;
    bool saw_role = false;

    if (is_word("model")) {
      try {
        next();
        m.name = expect(Tok::kString, "model name string").text;
      } catch (const ParseFailure&) {
        sync_top_level();
      }
    }
    while (peek().kind != Tok::kEnd) {
      const Token& tok = peek();
      try {
        if (is_word("topology")) {
          if (have_topology) error(tok.pos, "duplicate topology declaration");
          have_topology = true;
          m.topology = parse_topology();
        } else if (is_word("costs")) {
          if (have_costs) error(tok.pos, "duplicate costs block");
          m.costs = parse_costs();
          have_costs = true;
        } else if (is_word("params")) {
          if (have_params) error(tok.pos, "duplicate params block");
          m.params = parse_params();
          have_params = true;
        } else if (is_word("role")) {
          saw_role = true;
          m.roles.push_back(parse_role());
        } else if (is_word("model")) {
          error(tok.pos, "model header must come first");
          throw ParseFailure{};
        } else if (tok.kind == Tok::kIdent) {
          error(tok.pos, fmt::format("unknown keyword '{}'", tok.text));
          throw ParseFailure{};
        } else {
          error(tok.pos, fmt::format("unexpected '{}' at top level", tok.text));
          throw ParseFailure{};
        }
      } catch (const ParseFailure&) {
        sync_top_level();
      }
    }
    if (!have_topology) {
      const SourcePos pos = toks_.size() > 1 ? toks_.front().pos : SourcePos{1, 1};
      error(pos, "missing topology declaration");
    }
    if (!saw_role) error(peek().pos, "missing role declaration (at least one role is required)");
    check_semantics(m);
    if (has_errors(diags_)) return std::nullopt;
    return m;
  }

  std::optional<Expr> parse_lone_expression() {
    try {
      Expr e = parse_expr();
      if (peek().kind != Tok::kEnd) {
        error(peek().pos, fmt::format("unexpected '{}' after expression", peek().text));
        return std::nullopt;
      }
      return e;
    } catch (const ParseFailure&) {
      return std::nullopt;
    }
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  const Token& next() {
    const Token& t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  bool is_word(std::string_view word, std::size_t ahead = 0) const {
    return peek(ahead).kind == Tok::kIdent && peek(ahead).text == word;
  }

  void error(SourcePos pos, std::string message) {
    diags_.push_back({Severity::kError, std::move(message), pos.line, pos.column});
  }
  void warning(SourcePos pos, std::string message) {
    diags_.push_back({Severity::kWarning, std::move(message), pos.line, pos.column});
  }

  static std::string describe(const Token& t) {
    switch (t.kind) {
      case Tok::kEnd: return "end of input";
      case Tok::kString: return fmt::format("string \"{}\"", t.text);
      default: return fmt::format("'{}'", t.text);
    }
  }

  [[noreturn]] void fail(const Token& at, std::string_view expected) {
    error(at.pos, fmt::format("expected {} but found {}", expected, describe(at)));
    throw ParseFailure{};
  }

  const Token& expect(Tok kind, std::string_view what) {
    if (peek().kind != kind) fail(peek(), what);
    return next();
  }

  void expect_word(std::string_view word) {
    if (!is_word(word)) fail(peek(), fmt::format("'{}'", word));
    next();
  }

  std::string expect_name(std::string_view what) {
    const Token& t = peek();
    if (t.kind != Tok::kIdent) fail(t, what);
    if (is_reserved(t.text)) {
      error(t.pos, fmt::format("'{}' is a reserved word and cannot be used as {}", t.text, what));
      throw ParseFailure{};
    }
    return next().text;
  }

  // Skip to the next token that starts a top-level section on a fresh line.
  void sync_top_level() {
    if (peek().kind != Tok::kEnd) next();
    while (peek().kind != Tok::kEnd) {
      const Token& t = peek();
      if (t.line_start && t.kind == Tok::kIdent &&
          (t.text == "role" || t.text == "topology" || t.text == "costs" || t.text == "params"))
        return;
      next();
    }
  }

  // Skip to the first word or closing brace that starts a later line.
  void sync_node(int error_line) {
    while (peek().kind != Tok::kEnd) {
      const Token& t = peek();
      if (t.pos.line > error_line && t.line_start && (t.kind == Tok::kIdent || t.kind == Tok::kRBrace))
        return;
      next();
    }
  }

  // --- expressions -------------------------------------------------------

  Expr parse_expr() {
    Expr lhs = parse_term();
    while (peek().kind == Tok::kPlus || peek().kind == Tok::kMinus) {
      const Token& op = next();
      Expr rhs = parse_term();
      lhs = Expr::binary(op.kind == Tok::kPlus ? Expr::Op::kAdd : Expr::Op::kSub, lhs, rhs, op.pos);
    }
    return lhs;
  }

  Expr parse_term() {
    Expr lhs = parse_unary();
    while (peek().kind == Tok::kStar || peek().kind == Tok::kSlash) {
      const Token& op = next();
      Expr rhs = parse_unary();
      lhs = Expr::binary(op.kind == Tok::kStar ? Expr::Op::kMul : Expr::Op::kDiv, lhs, rhs, op.pos);
    }
    return lhs;
  }

  Expr parse_unary() {
    if (peek().kind == Tok::kMinus) {
      const Token& op = next();
      return Expr::negate(parse_unary(), op.pos);
    }
    return parse_primary();
  }

  Expr parse_primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::kNumber: {
        next();
        if (!std::isfinite(t.number)) {
          error(t.pos, fmt::format("number '{}' is out of range", t.text));
          throw ParseFailure{};
        }
        return Expr::number(t.number, t.unit, t.pos);
      }
      case Tok::kIdent:
        if (is_reserved(t.text) && t.text != kRankVariable) break;
        next();
        return Expr::name(t.text, t.pos);
      case Tok::kLParen: {
        next();
        Expr inner = parse_expr();
        expect(Tok::kRParen, "')'");
        return inner;
      }
      default:
        break;
    }
    error(t.pos, fmt::format("malformed expression: expected a number, name or '(' but found {}",
                             describe(t)));
    throw ParseFailure{};
  }

  // --- sections ----------------------------------------------------------

  TopologyDecl parse_topology() {
    expect_word("topology");
    const Token& kind_tok = peek();
    if (kind_tok.kind != Tok::kIdent) fail(kind_tok, "topology kind");
    const auto kind = topology_kind_from_string(kind_tok.text);
    if (!kind) {
      error(kind_tok.pos,
            fmt::format("unknown topology kind '{}' (expected farm, bus, star, ring, mesh2d, "
                        "hypercube or tree)",
                        kind_tok.text));
      throw ParseFailure{};
    }
    next();
    TopologyDecl decl;
    decl.kind = *kind;
    decl.pos = kind_tok.pos;
    expect(Tok::kLParen, "'('");
    if (peek().kind != Tok::kRParen) {
      decl.args.push_back(parse_expr());
      while (peek().kind == Tok::kComma) {
        next();
        decl.args.push_back(parse_expr());
      }
    }
    expect(Tok::kRParen, "')'");
    if (static_cast<int>(decl.args.size()) != topology_arity(decl.kind)) {
      error(kind_tok.pos, fmt::format("{} takes {} argument(s), got {}", to_string(decl.kind),
                                      topology_arity(decl.kind), decl.args.size()));
    }
    return decl;
  }

  CostModel parse_costs() {
    expect_word("costs");
    expect(Tok::kLBrace, "'{'");
    CostModel costs;
    std::set<std::string> seen;
    while (peek().kind != Tok::kRBrace) {
      const Token& key = peek();
      if (key.kind != Tok::kIdent) fail(key, "cost key or '}'");
      next();
      expect(Tok::kEq, "'='");
      if (!seen.insert(key.text).second) error(key.pos, fmt::format("duplicate cost key '{}'", key.text));
      if (key.text == "t_startup" || key.text == "t_byte") {
        const Expr value = parse_expr();
        if (value.has_unit(is_size_unit)) error(value.pos(), fmt::format("{} must be a time", key.text));
        try {
          (key.text == "t_startup" ? costs.t_startup : costs.t_byte) = eval_expr(value, Params{});
        } catch (const EvalError& err) {
          error(err.pos(), fmt::format("{} must be a constant: {}", key.text, err.what()));
        }
      } else if (key.text == "hop_scaling") {
        if (is_word("true") || is_word("false")) {
          costs.hop_scaling = next().text == "true";
        } else {
          fail(peek(), "true or false");
        }
      } else if (key.text == "send_mode") {
        if (is_word("rendezvous") || is_word("buffered")) {
          costs.send_mode = next().text == "rendezvous" ? SendMode::kRendezvous : SendMode::kBuffered;
        } else {
          fail(peek(), "rendezvous or buffered");
        }
      } else {
        error(key.pos, fmt::format("unknown cost key '{}' (expected t_startup, t_byte, hop_scaling "
                                   "or send_mode)",
                                   key.text));
        throw ParseFailure{};
      }
    }
    next();
    return costs;
  }

  Params parse_params() {
    expect_word("params");
    expect(Tok::kLBrace, "'{'");
    Params params;
    while (peek().kind != Tok::kRBrace) {
      const Token& name_tok = peek();
      const std::string name = expect_name("parameter name");
      expect(Tok::kEq, "'='");
      const Token& value = expect(Tok::kNumber, "number");
      if (value.unit != Unit::kNone)
        error(value.pos, fmt::format("parameter '{}' must be a plain number", name));
      if (params.contains(name)) error(name_tok.pos, fmt::format("duplicate parameter '{}'", name));
      params.set(name, value.number);
    }
    next();
    return params;
  }

  RoleDecl parse_role() {
    RoleDecl role;
    role.pos = peek().pos;
    expect_word("role");
    role.name = expect_name("role name");
    expect_word("on");
    if (is_word("rank")) {
      next();
      role.ranks.first = parse_expr();
    } else if (is_word("ranks")) {
      next();
      role.ranks.first = parse_expr();
      expect(Tok::kDotDot, "'..'");
      role.ranks.last = parse_expr();
    } else {
      fail(peek(), "'rank' or 'ranks'");
    }
    role.body = parse_block();
    return role;
  }

  std::vector<Node> parse_block() {
    expect(Tok::kLBrace, "'{'");
    std::vector<Node> body;
    while (peek().kind != Tok::kRBrace) {
      if (peek().kind == Tok::kEnd || is_word("role")) fail(peek(), "'}'");
      const int line = peek().pos.line;
      try {
        body.push_back(parse_node());
      } catch (const ParseFailure&) {
        sync_node(line);
      }
    }
    next();
    return body;
  }

  Target parse_target() {
    Target t;
    t.role = expect_name("role name");
    if (peek().kind == Tok::kDot) {
      next();
      t.index = parse_primary();
    }
    return t;
  }

  std::string note_for_line(int line) {
    for (auto& c : comments_) {
      if (c.line == line && c.trailing && !c.used) {
        c.used = true;
        return c.text;
      }
    }
    return {};
  }

  void check_units(const Expr& e, bool expect_time) {
    if (expect_time ? e.has_unit(is_size_unit) : e.has_unit(is_time_unit)) {
      warning(e.pos(), fmt::format("'{}' mixes units: a {} is expected here", to_string(e),
                                   expect_time ? "time" : "size"));
    }
  }

  Node parse_node() {
    const Token& kw = peek();
    Node node;
    node.pos = kw.pos;
    if (kw.kind != Tok::kIdent) fail(kw, "activity node");
    const std::string word = kw.text;
    next();
    if (word == "action") {
      Action a;
      a.name = expect(Tok::kString, "action name string").text;
      expect_word("cost");
      a.cost = parse_expr();
      check_units(a.cost, true);
      node.kind = std::move(a);
    } else if (word == "subactivity") {
      SubActivity s;
      s.name = expect(Tok::kString, "subactivity name string").text;
      node.note = note_for_line(kw.pos.line);
      s.body = parse_block();
      node.kind = std::move(s);
      return node;
    } else if (word == "send") {
      Send s;
      expect_word("to");
      s.to = parse_target();
      expect_word("size");
      s.size = parse_expr();
      check_units(s.size, false);
      if (is_word("blocking")) {
        next();
      } else if (is_word("nonblocking")) {
        next();
        s.blocking = false;
        if (is_word("as")) {
          next();
          s.handle = expect_name("handle name");
        }
      } else {
        fail(peek(), "'blocking' or 'nonblocking'");
      }
      node.kind = std::move(s);
    } else if (word == "recv") {
      Recv r;
      expect_word("from");
      r.from = parse_target();
      expect_word("size");
      r.size = parse_expr();
      check_units(r.size, false);
      node.kind = std::move(r);
    } else if (word == "wait") {
      node.kind = Wait{expect_name("handle name")};
    } else if (word == "collective") {
      Collective c;
      const Token& kind_tok = peek();
      if (kind_tok.kind != Tok::kIdent) fail(kind_tok, "collective kind");
      const auto kind = collective_kind_from_string(kind_tok.text);
      if (!kind) {
        error(kind_tok.pos,
              fmt::format("unknown collective kind '{}' (expected bcast, reduce, gather, scatter "
                          "or barrier)",
                          kind_tok.text));
        throw ParseFailure{};
      }
      next();
      c.kind = *kind;
      expect_word("root");
      c.root = expect_name("root role name");
      expect_word("size");
      c.size = parse_expr();
      check_units(c.size, false);
      node.kind = std::move(c);
    } else if (word == "loop") {
      Loop l;
      l.count = parse_expr();
      node.note = note_for_line(kw.pos.line);
      l.body = parse_block();
      node.kind = std::move(l);
      return node;
    } else if (word == "taskpool") {
      TaskPool tp;
      expect_word("count");
      tp.count = parse_expr();
      expect_word("cost");
      if (peek().kind == Tok::kLBracket) {
        next();
        tp.cost_list = true;
        tp.costs.push_back(parse_expr());
        while (peek().kind == Tok::kComma) {
          next();
          tp.costs.push_back(parse_expr());
        }
        expect(Tok::kRBracket, "',' or ']'");
      } else {
        tp.costs.push_back(parse_expr());
      }
      for (const auto& c : tp.costs) check_units(c, true);
      expect_word("policy");
      if (is_word("static") || is_word("dynamic")) {
        tp.policy = next().text == "static" ? TaskPolicy::kStatic : TaskPolicy::kDynamic;
      } else {
        fail(peek(), "'static' or 'dynamic'");
      }
      expect_word("payload");
      tp.payload = parse_expr();
      expect_word("result");
      tp.result = parse_expr();
      check_units(tp.payload, false);
      check_units(tp.result, false);
      node.kind = std::move(tp);
    } else if (word == "workerloop") {
      node.kind = WorkerLoop{};
    } else {
      error(kw.pos, fmt::format("unknown keyword '{}'", word));
      throw ParseFailure{};
    }
    node.note = note_for_line(kw.pos.line);
    return node;
  }

  // --- semantic checks ---------------------------------------------------

  void check_names(const Expr& e, const Params& params, bool allow_me, std::string_view where) {
    std::vector<std::string> names;
    e.collect_names(names);
    for (const auto& n : names) {
      if (n == kRankVariable) {
        if (!allow_me) error(e.pos(), fmt::format("'me' cannot be used in {}", where));
      } else if (!params.contains(n)) {
        error(e.pos(), fmt::format("unbound parameter '{}' in {}", n, where));
      }
    }
  }

  void check_role_ref(const Model& m, const std::string& role, SourcePos pos) {
    if (m.find_role(role) == nullptr) error(pos, fmt::format("unknown role '{}'", role));
  }

  void check_semantics(const Model& m) {
    for (const auto& arg : m.topology.args) check_names(arg, m.params, false, "topology arguments");
    std::set<std::string> role_names;
    for (const auto& role : m.roles) {
      if (!role_names.insert(role.name).second)
        error(role.pos, fmt::format("duplicate role '{}'", role.name));
      check_names(role.ranks.first, m.params, false, "a rank range");
      if (role.ranks.last) check_names(*role.ranks.last, m.params, false, "a rank range");
      for_each_node(role.body, [&](const Node& node) {
        auto expr = [&](const Expr& e) { check_names(e, m.params, true, "role flow"); };
        std::visit(
            [&](const auto& n) {
              using T = std::decay_t<decltype(n)>;
              if constexpr (std::is_same_v<T, Action>) {
                expr(n.cost);
              } else if constexpr (std::is_same_v<T, Send>) {
                check_role_ref(m, n.to.role, node.pos);
                if (n.to.index) expr(*n.to.index);
                expr(n.size);
              } else if constexpr (std::is_same_v<T, Recv>) {
                check_role_ref(m, n.from.role, node.pos);
                if (n.from.index) expr(*n.from.index);
                expr(n.size);
              } else if constexpr (std::is_same_v<T, Collective>) {
                check_role_ref(m, n.root, node.pos);
                expr(n.size);
              } else if constexpr (std::is_same_v<T, Loop>) {
                expr(n.count);
              } else if constexpr (std::is_same_v<T, TaskPool>) {
                expr(n.count);
                for (const auto& c : n.costs) expr(c);
                expr(n.payload);
                expr(n.result);
              }
            },
            node.kind);
      });
    }
  }

  std::vector<Token> toks_;
  std::vector<Comment> comments_;
  std::vector<Diagnostic>& diags_;
  std::size_t pos_ = 0;
};

// --- printer ---------------------------------------------------------------

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

void print_body(const std::vector<Node>& body, int depth, std::string& out);

void print_node(const Node& node, int depth, std::string& out) {
  const std::string indent(2 * depth, ' ');
  std::string line = indent;
  const std::string note = node.note.empty() ? "" : "  # " + node.note;
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Action>) {
          line += fmt::format("action {} cost {}", quote(n.name), to_string(n.cost));
        } else if constexpr (std::is_same_v<T, SubActivity>) {
          out += fmt::format("{}subactivity {} {{{}\n", indent, quote(n.name), note);
          print_body(n.body, depth + 1, out);
          out += indent + "}\n";
          line.clear();
        } else if constexpr (std::is_same_v<T, Send>) {
          line += fmt::format("send to {} size {} {}", to_string(n.to), to_string(n.size),
                              n.blocking ? "blocking" : "nonblocking");
          if (!n.blocking && !n.handle.empty()) line += " as " + n.handle;
        } else if constexpr (std::is_same_v<T, Recv>) {
          line += fmt::format("recv from {} size {}", to_string(n.from), to_string(n.size));
        } else if constexpr (std::is_same_v<T, Wait>) {
          line += "wait " + n.handle;
        } else if constexpr (std::is_same_v<T, Collective>) {
          line += fmt::format("collective {} root {} size {}", to_string(n.kind), n.root,
                              to_string(n.size));
        } else if constexpr (std::is_same_v<T, Loop>) {
          out += fmt::format("{}loop {} {{{}\n", indent, to_string(n.count), note);
          print_body(n.body, depth + 1, out);
          out += indent + "}\n";
          line.clear();
        } else if constexpr (std::is_same_v<T, TaskPool>) {
          std::string cost;
          if (n.cost_list) {
            cost = "[";
            for (std::size_t i = 0; i < n.costs.size(); ++i) {
              if (i) cost += ", ";
              cost += to_string(n.costs[i]);
            }
            cost += "]";
          } else {
            cost = to_string(n.costs.at(0));
          }
          line += fmt::format("taskpool count {} cost {} policy {} payload {} result {}",
                              to_string(n.count), cost, to_string(n.policy), to_string(n.payload),
                              to_string(n.result));
        } else if constexpr (std::is_same_v<T, WorkerLoop>) {
          line += "workerloop";
        }
      },
      node.kind);
  if (!line.empty()) out += line + note + "\n";
}

void print_body(const std::vector<Node>& body, int depth, std::string& out) {
  for (const auto& node : body) print_node(node, depth, out);
}

}  // namespace

ParseResult parse_model(std::string_view source) {
  ParseResult result;
  std::vector<Token> tokens;
  std::vector<Comment> comments;
  Lexer(source, result.diagnostics).run(tokens, comments);
  Parser parser(std::move(tokens), std::move(comments), result.diagnostics);
  auto model = parser.parse_document();
  if (!has_errors(result.diagnostics)) result.model = std::move(model);
  return result;
}

std::optional<Expr> parse_expression(std::string_view source, std::vector<Diagnostic>& diagnostics) {
  std::vector<Token> tokens;
  std::vector<Comment> comments;
  const std::size_t before = diagnostics.size();
  Lexer(source, diagnostics).run(tokens, comments);
  if (diagnostics.size() != before) return std::nullopt;
  Parser parser(std::move(tokens), std::move(comments), diagnostics);
  return parser.parse_lone_expression();
}

std::string print_model(const Model& m) {
  std::string out;
  out += fmt::format("model {}\n", quote(m.name));
  out += fmt::format("topology {}(", to_string(m.topology.kind));
  for (std::size_t i = 0; i < m.topology.args.size(); ++i) {
    if (i) out += ", ";
    out += to_string(m.topology.args[i]);
  }
  out += ")\n";
  out += "costs {\n";
  out += fmt::format("  t_startup = {}us\n", format_number(m.costs.t_startup));
  out += fmt::format("  t_byte = {}us\n", format_number(m.costs.t_byte));
  out += fmt::format("  hop_scaling = {}\n", m.costs.hop_scaling ? "true" : "false");
  out += fmt::format("  send_mode = {}\n", to_string(m.costs.send_mode));
  out += "}\n";
  if (!m.params.empty()) {
    out += "params {\n";
    for (const auto& [name, value] : m.params.entries())
      out += fmt::format("  {} = {}\n", name, format_number(value));
    out += "}\n";
  }
  for (std::size_t i = 0; i < m.roles.size(); ++i) {
    const auto& role = m.roles[i];
    if (i) out += "\n";
    if (role.ranks.last) {
      out += fmt::format("role {} on ranks {}..{} {{\n", role.name, to_string(role.ranks.first),
                         to_string(*role.ranks.last));
    } else {
      out += fmt::format("role {} on rank {} {{\n", role.name, to_string(role.ranks.first));
    }
    print_body(role.body, 1, out);
    out += "}\n";
  }
  return out;
}

}  // namespace parmodel
