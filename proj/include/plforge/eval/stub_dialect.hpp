// Copyright 2026 The plforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// A small indentation-based test dialect with Mojo/Python surface syntax,
// interpreted by the plforge-stubrun tool so the evaluation harness can be
// exercised without a real toolchain.
//
// Supported: fn/def with optional type annotations, var/let, assignment and
// += -= *=, return, if/elif/else, while, for-in (range, lists, strings),
// assert, print, pass, break, continue. Values are 64-bit ints, bools,
// strings, lists, None and function references. `/` is floor division.
// Builtins: len abs min max str int print range alloc(mebibytes).
//
// Diagnostics (first line of stderr):
//   parse error: line N: ...        syntax
//   compile error: line N: ...      unknown declaration, bad arity, misplaced
//                                   return/break/continue
//   runtime error: line N: ...
//   AssertionError: line N[: msg]
//   MemoryError: ...

#pragma once

#include <algorithm>
#include <cctype>
#include <climits>
#include <cstdint>
#include <cstring>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

namespace plforge::stub {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& msg)
      : std::runtime_error("parse error: line " + std::to_string(line) + ": " + msg) {}
};

class CompileError : public std::runtime_error {
 public:
  CompileError(int line, const std::string& msg)
      : std::runtime_error("compile error: line " + std::to_string(line) + ": " + msg) {}
};

class RuntimeFault : public std::runtime_error {
 public:
  RuntimeFault(int line, const std::string& msg)
      : std::runtime_error("runtime error: line " + std::to_string(line) + ": " + msg) {}
};

class AssertionFault : public std::runtime_error {
 public:
  AssertionFault(int line, const std::string& msg)
      : std::runtime_error("AssertionError: line " + std::to_string(line) + (msg.empty() ? "" : ": " + msg)) {}
};

class MemoryFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Lexer

enum class Tok { name, integer, string, op, newline, indent, dedent, end };

struct Token {
  Tok kind;
  std::string text;
  std::int64_t value = 0;
  int line = 0;
};

inline std::vector<Token> lex(const std::string& src) {
  std::vector<Token> out;
  std::vector<int> indents{0};
  std::vector<std::pair<char, int>> brackets;
  int line = 1;
  std::size_t i = 0;
  bool at_line_start = true;
  auto emit = [&](Tok k, std::string t, std::int64_t v = 0) { out.push_back({k, std::move(t), v, line}); };

  while (i <= src.size()) {
    if (at_line_start && brackets.empty()) {
      int col = 0;
      std::size_t j = i;
      while (j < src.size() && (src[j] == ' ' || src[j] == '\t' || src[j] == '\r')) {
        if (src[j] == '\t') throw ParseError(line, "tab in indentation");
        if (src[j] == ' ') ++col;
        ++j;
      }
      if (j >= src.size()) {
        i = src.size() + 1;
        break;
      }
      if (src[j] == '\n' || src[j] == '#') {
        while (j < src.size() && src[j] != '\n') ++j;
        i = j + 1;
        ++line;
        continue;
      }
      if (col > indents.back()) {
        indents.push_back(col);
        emit(Tok::indent, "");
      } else {
        while (col < indents.back()) {
          indents.pop_back();
          emit(Tok::dedent, "");
        }
        if (col != indents.back()) throw ParseError(line, "inconsistent indentation");
      }
      i = j;
      at_line_start = false;
    }
    if (i >= src.size()) break;
    char c = src[i];
    if (c == '\n') {
      if (brackets.empty()) {
        emit(Tok::newline, "");
        at_line_start = true;
      }
      ++line;
      ++i;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
      continue;
    }
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') ++i;
      continue;
    }
    if (c == '\\' && i + 1 < src.size() && src[i + 1] == '\n') {
      i += 2;
      ++line;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      emit(Tok::name, src.substr(i, j - i));
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      std::int64_t v = 0;
      while (j < src.size() && (std::isdigit(static_cast<unsigned char>(src[j])) || src[j] == '_')) {
        if (src[j] != '_' && __builtin_mul_overflow(v, 10, &v)) throw ParseError(line, "integer literal too large");
        if (src[j] != '_' && __builtin_add_overflow(v, src[j] - '0', &v))
          throw ParseError(line, "integer literal too large");
        ++j;
      }
      if (j < src.size() && (std::isalpha(static_cast<unsigned char>(src[j])) || src[j] == '.'))
        throw ParseError(line, "malformed number");
      emit(Tok::integer, src.substr(i, j - i), v);
      i = j;
      continue;
    }
    if (c == '"' || c == '\'') {
      const int start_line = line;
      bool triple = src.compare(i, 3, std::string(3, c)) == 0;
      std::size_t j = i + (triple ? 3 : 1);
      std::string value;
      while (true) {
        if (j >= src.size()) throw ParseError(start_line, "unterminated string literal");
        if (triple ? src.compare(j, 3, std::string(3, c)) == 0 : src[j] == c) break;
        if (src[j] == '\n') {
          if (!triple) throw ParseError(start_line, "unterminated string literal");
          ++line;
        }
        if (src[j] == '\\' && j + 1 < src.size()) {
          char e = src[++j];
          switch (e) {
            case 'n': value += '\n'; break;
            case 't': value += '\t'; break;
            case '\n': ++line; break;
            default: value += e;
          }
          ++j;
          continue;
        }
        value += src[j++];
      }
      out.push_back({Tok::string, value, 0, start_line});
      i = j + (triple ? 3 : 1);
      continue;
    }
    static const char* two[] = {"->", "==", "!=", "<=", ">=", "//", "+=", "-=", "*="};
    bool matched = false;
    for (const char* op : two) {
      if (src.compare(i, 2, op) == 0) {
        emit(Tok::op, op);
        i += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (std::strchr("()[],:.+-*/%<>=@", c)) {
      if (c == '(' || c == '[') brackets.emplace_back(c, line);
      if (c == ')' || c == ']') {
        char want = c == ')' ? '(' : '[';
        if (brackets.empty() || brackets.back().first != want)
          throw ParseError(line, std::string("unbalanced '") + c + "'");
        brackets.pop_back();
      }
      emit(Tok::op, std::string(1, c));
      ++i;
      continue;
    }
    throw ParseError(line, std::string("unexpected character '") + c + "'");
  }
  if (!brackets.empty())
    throw ParseError(brackets.back().second, std::string("unbalanced '") + brackets.back().first + "'");
  if (!out.empty() && out.back().kind != Tok::newline && out.back().kind != Tok::dedent) emit(Tok::newline, "");
  while (indents.size() > 1) {
    indents.pop_back();
    emit(Tok::dedent, "");
  }
  emit(Tok::end, "");
  return out;
}

// ---------------------------------------------------------------------------
// AST

enum class Ex { integer, string, boolean, none, name, list, unary, binary, logic_and, logic_or, logic_not, compare,
                call, index, slice, method };

struct Expr {
  Ex kind;
  int line = 0;
  std::int64_t ival = 0;
  std::string text;                        // name, op, string value, method name
  std::vector<std::string> ops;            // compare chain operators
  std::vector<std::unique_ptr<Expr>> kids;  // operands; nullptr for absent slice bounds
};
using ExprPtr = std::unique_ptr<Expr>;

enum class St { var_decl, assign, aug_assign, expr, ret, if_, while_, for_, assert_, pass, break_, continue_ };

struct Stmt;
using Block = std::vector<std::unique_ptr<Stmt>>;

struct Stmt {
  St kind;
  int line = 0;
  std::string name;  // declared name, loop variable, aug op
  ExprPtr target, value, extra;
  std::vector<std::pair<ExprPtr, Block>> branches;  // if/elif conditions (nullptr = else)
  Block body;
};

struct Function {
  std::string name;
  std::vector<std::string> params;
  Block body;
  int line = 0;
};

struct Program {
  std::vector<Function> functions;
  Block top;
};

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : t_(std::move(toks)) {}

  Program parse() {
    Program p;
    while (!at(Tok::end)) {
      if (at(Tok::newline)) {
        ++pos_;
        continue;
      }
      skip_decorators();
      if (at_name("fn") || at_name("def")) {
        p.functions.push_back(function());
      } else {
        p.top.push_back(statement());
      }
    }
    return p;
  }

 private:
  std::vector<Token> t_;
  std::size_t pos_ = 0;

  const Token& cur() const { return t_[pos_]; }
  bool at(Tok k) const { return cur().kind == k; }
  bool at_op(std::string_view op) const { return cur().kind == Tok::op && cur().text == op; }
  bool at_name(std::string_view n) const { return cur().kind == Tok::name && cur().text == n; }
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(cur().line, msg); }

  const Token& take() { return t_[pos_++]; }
  void expect_op(std::string_view op) {
    if (!at_op(op)) fail("expected '" + std::string(op) + "'" + got());
    ++pos_;
  }
  std::string expect_name() {
    if (!at(Tok::name)) fail("expected a name" + got());
    return take().text;
  }
  std::string got() const {
    switch (cur().kind) {
      case Tok::newline: return ", found end of line";
      case Tok::indent: return ", found indent";
      case Tok::dedent: return ", found dedent";
      case Tok::end: return ", found end of file";
      default: return ", found '" + cur().text + "'";
    }
  }
  void end_statement() {
    if (at(Tok::newline)) {
      ++pos_;
      return;
    }
    if (at(Tok::dedent) || at(Tok::end)) return;
    fail("expected end of statement" + got());
  }

  void skip_decorators() {
    while (at_op("@")) {
      ++pos_;
      expect_name();
      if (at_op("(")) {
        int depth = 0;
        do {
          if (at_op("(")) ++depth;
          if (at_op(")")) --depth;
          ++pos_;
        } while (depth > 0 && !at(Tok::end));
      }
      if (at(Tok::newline)) ++pos_;
    }
  }

  void type_expr() {
    expect_name();
    while (at_op(".")) {
      ++pos_;
      expect_name();
    }
    if (at_op("[")) {
      ++pos_;
      type_expr();
      while (at_op(",")) {
        ++pos_;
        type_expr();
      }
      expect_op("]");
    }
  }

  Function function() {
    Function f;
    f.line = cur().line;
    ++pos_;
    f.name = expect_name();
    expect_op("(");
    while (!at_op(")")) {
      if (at_name("owned") || at_name("inout") || at_name("borrowed") || at_name("mut")) ++pos_;
      f.params.push_back(expect_name());
      if (at_op(":")) {
        ++pos_;
        type_expr();
      }
      if (!at_op(")")) expect_op(",");
    }
    expect_op(")");
    if (at_name("raises")) ++pos_;
    if (at_op("->")) {
      ++pos_;
      type_expr();
    }
    expect_op(":");
    f.body = block();
    return f;
  }

  Block block() {
    Block b;
    if (!at(Tok::newline)) {
      b.push_back(simple_statement());
      return b;
    }
    ++pos_;
    if (!at(Tok::indent)) fail("expected an indented block");
    ++pos_;
    while (!at(Tok::dedent) && !at(Tok::end)) {
      if (at_name("fn") || at_name("def") || at_op("@")) fail("nested function definitions are not supported");
      b.push_back(statement());
    }
    if (at(Tok::dedent)) ++pos_;
    return b;
  }

  std::unique_ptr<Stmt> make(St k) {
    auto s = std::make_unique<Stmt>();
    s->kind = k;
    s->line = cur().line;
    return s;
  }

  std::unique_ptr<Stmt> statement() {
    if (at_name("if")) {
      auto s = make(St::if_);
      ++pos_;
      auto cond = expression();
      expect_op(":");
      s->branches.emplace_back(std::move(cond), block());
      while (at_name("elif")) {
        ++pos_;
        auto c = expression();
        expect_op(":");
        s->branches.emplace_back(std::move(c), block());
      }
      if (at_name("else")) {
        ++pos_;
        expect_op(":");
        s->branches.emplace_back(nullptr, block());
      }
      return s;
    }
    if (at_name("while")) {
      auto s = make(St::while_);
      ++pos_;
      s->value = expression();
      expect_op(":");
      s->body = block();
      return s;
    }
    if (at_name("for")) {
      auto s = make(St::for_);
      ++pos_;
      s->name = expect_name();
      if (!at_name("in")) fail("expected 'in'" + got());
      ++pos_;
      s->value = expression();
      expect_op(":");
      s->body = block();
      return s;
    }
    return simple_statement();
  }

  std::unique_ptr<Stmt> simple_statement() {
    std::unique_ptr<Stmt> s;
    if (at_name("var") || at_name("let")) {
      s = make(St::var_decl);
      ++pos_;
      s->name = expect_name();
      if (at_op(":")) {
        ++pos_;
        type_expr();
      }
      if (at_op("=")) {
        ++pos_;
        s->value = expression();
      }
    } else if (at_name("return")) {
      s = make(St::ret);
      ++pos_;
      if (!at(Tok::newline) && !at(Tok::dedent) && !at(Tok::end)) s->value = expression();
    } else if (at_name("assert")) {
      s = make(St::assert_);
      ++pos_;
      s->value = expression();
      if (at_op(",")) {
        ++pos_;
        s->extra = expression();
      }
    } else if (at_name("pass")) {
      s = make(St::pass);
      ++pos_;
    } else if (at_name("break")) {
      s = make(St::break_);
      ++pos_;
    } else if (at_name("continue")) {
      s = make(St::continue_);
      ++pos_;
    } else {
      s = make(St::expr);
      auto e = expression();
      if (at_op("=")) {
        ++pos_;
        check_target(*e);
        s->kind = St::assign;
        s->target = std::move(e);
        s->value = expression();
      } else if (at_op("+=") || at_op("-=") || at_op("*=")) {
        check_target(*e);
        s->kind = St::aug_assign;
        s->name = take().text.substr(0, 1);
        s->target = std::move(e);
        s->value = expression();
      } else {
        s->value = std::move(e);
      }
    }
    end_statement();
    return s;
  }

  void check_target(const Expr& e) const {
    if (e.kind != Ex::name && e.kind != Ex::index) throw ParseError(e.line, "cannot assign to expression");
  }

  ExprPtr node(Ex k, int line) {
    auto e = std::make_unique<Expr>();
    e->kind = k;
    e->line = line;
    return e;
  }

  ExprPtr expression() { return or_expr(); }

  ExprPtr or_expr() {
    auto lhs = and_expr();
    while (at_name("or")) {
      auto e = node(Ex::logic_or, take().line);
      e->kids.push_back(std::move(lhs));
      e->kids.push_back(and_expr());
      lhs = std::move(e);
    }
    return lhs;
  }

  ExprPtr and_expr() {
    auto lhs = not_expr();
    while (at_name("and")) {
      auto e = node(Ex::logic_and, take().line);
      e->kids.push_back(std::move(lhs));
      e->kids.push_back(not_expr());
      lhs = std::move(e);
    }
    return lhs;
  }

  ExprPtr not_expr() {
    if (at_name("not")) {
      auto e = node(Ex::logic_not, take().line);
      e->kids.push_back(not_expr());
      return e;
    }
    return comparison();
  }

  bool at_compare() const {
    if (cur().kind == Tok::op)
      return cur().text == "==" || cur().text == "!=" || cur().text == "<" || cur().text == "<=" ||
             cur().text == ">" || cur().text == ">=";
    return at_name("in") || (at_name("not") && t_[pos_ + 1].kind == Tok::name && t_[pos_ + 1].text == "in");
  }

  ExprPtr comparison() {
    auto first = additive();
    if (!at_compare()) return first;
    auto e = node(Ex::compare, cur().line);
    e->kids.push_back(std::move(first));
    while (at_compare()) {
      if (at_name("not")) {
        pos_ += 2;
        e->ops.push_back("not in");
      } else {
        e->ops.push_back(take().text);
      }
      e->kids.push_back(additive());
    }
    return e;
  }

  ExprPtr additive() {
    auto lhs = term();
    while (at_op("+") || at_op("-")) {
      auto e = node(Ex::binary, cur().line);
      e->text = take().text;
      e->kids.push_back(std::move(lhs));
      e->kids.push_back(term());
      lhs = std::move(e);
    }
    return lhs;
  }

  ExprPtr term() {
    auto lhs = unary();
    while (at_op("*") || at_op("/") || at_op("//") || at_op("%")) {
      auto e = node(Ex::binary, cur().line);
      e->text = take().text;
      e->kids.push_back(std::move(lhs));
      e->kids.push_back(unary());
      lhs = std::move(e);
    }
    return lhs;
  }

  ExprPtr unary() {
    if (at_op("-") || at_op("+")) {
      auto e = node(Ex::unary, cur().line);
      e->text = take().text;
      e->kids.push_back(unary());
      return e;
    }
    return postfix();
  }

  std::vector<ExprPtr> arguments() {
    std::vector<ExprPtr> args;
    expect_op("(");
    while (!at_op(")")) {
      args.push_back(expression());
      if (!at_op(")")) expect_op(",");
    }
    expect_op(")");
    return args;
  }

  ExprPtr postfix() {
    auto e = atom();
    while (true) {
      if (at_op("(")) {
        auto call = node(Ex::call, cur().line);
        call->kids.push_back(std::move(e));
        for (auto& a : arguments()) call->kids.push_back(std::move(a));
        e = std::move(call);
      } else if (at_op("[")) {
        int line = take().line;
        ExprPtr lo, hi;
        if (!at_op(":")) lo = expression();
        if (at_op(":")) {
          ++pos_;
          if (!at_op("]")) hi = expression();
          auto s = node(Ex::slice, line);
          s->kids.push_back(std::move(e));
          s->kids.push_back(std::move(lo));
          s->kids.push_back(std::move(hi));
          e = std::move(s);
        } else {
          auto ix = node(Ex::index, line);
          ix->kids.push_back(std::move(e));
          ix->kids.push_back(std::move(lo));
          e = std::move(ix);
        }
        expect_op("]");
      } else if (at_op(".")) {
        int line = take().line;
        auto m = node(Ex::method, line);
        m->text = expect_name();
        m->kids.push_back(std::move(e));
        for (auto& a : arguments()) m->kids.push_back(std::move(a));
        e = std::move(m);
      } else {
        return e;
      }
    }
  }

  ExprPtr atom() {
    const Token& tk = cur();
    if (tk.kind == Tok::integer) {
      auto e = node(Ex::integer, tk.line);
      e->ival = tk.value;
      ++pos_;
      return e;
    }
    if (tk.kind == Tok::string) {
      auto e = node(Ex::string, tk.line);
      e->text = tk.text;
      ++pos_;
      while (at(Tok::string)) e->text += take().text;  // adjacent literals
      return e;
    }
    if (tk.kind == Tok::name) {
      static const std::set<std::string> reserved = {"fn", "def", "var", "let", "if", "elif", "else", "while",
                                                     "for", "in", "return", "assert", "pass", "break",
                                                     "continue", "and", "or", "not"};
      if (tk.text == "True" || tk.text == "False") {
        auto e = node(Ex::boolean, tk.line);
        e->ival = tk.text == "True";
        ++pos_;
        return e;
      }
      if (tk.text == "None") {
        ++pos_;
        return node(Ex::none, tk.line);
      }
      if (reserved.count(tk.text)) fail("unexpected keyword '" + tk.text + "'");
      auto e = node(Ex::name, tk.line);
      e->text = tk.text;
      ++pos_;
      return e;
    }
    if (at_op("(")) {
      ++pos_;
      auto e = expression();
      expect_op(")");
      return e;
    }
    if (at_op("[")) {
      auto e = node(Ex::list, take().line);
      while (!at_op("]")) {
        e->kids.push_back(expression());
        if (!at_op("]")) expect_op(",");
      }
      expect_op("]");
      return e;
    }
    fail("expected an expression" + got());
  }
};

inline const std::set<std::string>& builtin_names() {
  static const std::set<std::string> names = {"len", "abs", "min", "max", "str", "int", "print", "range", "alloc"};
  return names;
}

// ---------------------------------------------------------------------------
// Static checks

class Checker {
 public:
  explicit Checker(const Program& p) : p_(p) {}

  void run() {
    for (const auto& f : p_.functions) {
      if (!arity_.emplace(f.name, f.params.size()).second)
        throw CompileError(f.line, "function '" + f.name + "' defined twice");
      globals_.insert(f.name);
    }
    collect(p_.top, globals_);
    for (const auto& f : p_.functions) {
      std::set<std::string> locals(f.params.begin(), f.params.end());
      collect(f.body, locals);
      check_block(f.body, locals, true, 0);
    }
    check_block(p_.top, globals_, false, 0);
  }

 private:
  const Program& p_;
  std::set<std::string> globals_;
  std::map<std::string, std::size_t> arity_;

  static void collect(const Block& b, std::set<std::string>& names) {
    for (const auto& s : b) {
      if (s->kind == St::var_decl || s->kind == St::for_) names.insert(s->name);
      if (s->kind == St::assign && s->target->kind == Ex::name) names.insert(s->target->text);
      for (const auto& [c, body] : s->branches) collect(body, names);
      collect(s->body, names);
    }
  }

  void check_block(const Block& b, const std::set<std::string>& scope, bool in_fn, int loops) {
    for (const auto& s : b) {
      switch (s->kind) {
        case St::ret:
          if (!in_fn) throw CompileError(s->line, "'return' outside function");
          break;
        case St::break_:
        case St::continue_:
          if (!loops) throw CompileError(s->line, "'" + std::string(s->kind == St::break_ ? "break" : "continue") +
                                                      "' outside loop");
          break;
        default: break;
      }
      for (const auto* e : {s->target.get(), s->value.get(), s->extra.get()})
        if (e && !(s->kind == St::assign && e == s->target.get() && e->kind == Ex::name)) check_expr(*e, scope);
      for (const auto& [c, body] : s->branches) {
        if (c) check_expr(*c, scope);
        check_block(body, scope, in_fn, loops);
      }
      check_block(s->body, scope, in_fn, loops + (s->kind == St::while_ || s->kind == St::for_));
    }
  }

  void check_expr(const Expr& e, const std::set<std::string>& scope) {
    if (e.kind == Ex::name) {
      if (!scope.count(e.text) && !globals_.count(e.text) && !builtin_names().count(e.text))
        throw CompileError(e.line, "use of unknown declaration '" + e.text + "'");
      return;
    }
    if (e.kind == Ex::call && e.kids[0]->kind == Ex::name) {
      auto it = arity_.find(e.kids[0]->text);
      if (it != arity_.end() && (&scope == &globals_ || !scope.count(e.kids[0]->text)) && it->second != e.kids.size() - 1)
        throw CompileError(e.line, "'" + it->first + "' expects " + std::to_string(it->second) + " arguments, got " +
                                       std::to_string(e.kids.size() - 1));
    }
    for (const auto& k : e.kids)
      if (k) check_expr(*k, scope);
  }
};

// ---------------------------------------------------------------------------
// Values and interpreter

struct Value;
using ListPtr = std::shared_ptr<std::vector<Value>>;
struct FuncRef {
  std::string name;
};
struct None {};

struct Value {
  std::variant<None, std::int64_t, bool, std::string, ListPtr, FuncRef> v;

  bool is_int() const { return std::holds_alternative<std::int64_t>(v) || std::holds_alternative<bool>(v); }
  std::int64_t as_int() const {
    if (auto* b = std::get_if<bool>(&v)) return *b;
    return std::get<std::int64_t>(v);
  }
};

inline std::string type_name(const Value& x) {
  switch (x.v.index()) {
    case 0: return "None";
    case 1: return "Int";
    case 2: return "Bool";
    case 3: return "String";
    case 4: return "List";
    default: return "Function";
  }
}

inline std::string repr(const Value& x, bool quote);

inline std::string repr(const Value& x, bool quote) {
  if (std::holds_alternative<None>(x.v)) return "None";
  if (auto* b = std::get_if<bool>(&x.v)) return *b ? "True" : "False";
  if (auto* i = std::get_if<std::int64_t>(&x.v)) return std::to_string(*i);
  if (auto* s = std::get_if<std::string>(&x.v)) return quote ? "'" + *s + "'" : *s;
  if (auto* l = std::get_if<ListPtr>(&x.v)) {
    std::string out = "[";
    for (std::size_t k = 0; k < (*l)->size(); ++k) out += (k ? ", " : "") + repr((**l)[k], true);
    return out + "]";
  }
  return "<fn " + std::get<FuncRef>(x.v).name + ">";
}

inline bool truthy(const Value& x) {
  switch (x.v.index()) {
    case 0: return false;
    case 1: return std::get<std::int64_t>(x.v) != 0;
    case 2: return std::get<bool>(x.v);
    case 3: return !std::get<std::string>(x.v).empty();
    case 4: return !std::get<ListPtr>(x.v)->empty();
    default: return true;
  }
}

inline bool equal(const Value& a, const Value& b) {
  if (a.is_int() && b.is_int()) return a.as_int() == b.as_int();
  if (a.v.index() != b.v.index()) return false;
  if (std::holds_alternative<None>(a.v)) return true;
  if (auto* s = std::get_if<std::string>(&a.v)) return *s == std::get<std::string>(b.v);
  if (auto* l = std::get_if<ListPtr>(&a.v)) {
    const auto& x = **l;
    const auto& y = *std::get<ListPtr>(b.v);
    if (x.size() != y.size()) return false;
    for (std::size_t k = 0; k < x.size(); ++k)
      if (!equal(x[k], y[k])) return false;
    return true;
  }
  return std::get<FuncRef>(a.v).name == std::get<FuncRef>(b.v).name;
}

class Interpreter {
 public:
  Interpreter(const Program& p, std::ostream& out) : p_(p), out_(out) {
    for (const auto& f : p_.functions) fns_[f.name] = &f;
  }

  void run() {
    exec_block(p_.top, globals_, false);
  }

  std::size_t max_depth = 1000;

 private:
  using Frame = std::map<std::string, Value>;
  enum class Flow { normal, ret, brk, cont };

  const Program& p_;
  std::ostream& out_;
  std::map<std::string, const Function*> fns_;
  Frame globals_;
  Value ret_;
  std::size_t depth_ = 0;

  Value lookup(const std::string& name, Frame& frame, int line) {
    if (auto it = frame.find(name); it != frame.end()) return it->second;
    if (auto it = globals_.find(name); it != globals_.end()) return it->second;
    if (fns_.count(name) || builtin_names().count(name)) return {FuncRef{name}};
    throw RuntimeFault(line, "name '" + name + "' is not defined");
  }

  Flow exec_block(const Block& b, Frame& frame, bool in_fn) {
    for (const auto& s : b) {
      auto f = exec(*s, frame, in_fn);
      if (f != Flow::normal) return f;
    }
    return Flow::normal;
  }

  void store(const Expr& target, Value v, Frame& frame) {
    if (target.kind == Ex::name) {
      frame[target.text] = std::move(v);
      return;
    }
    auto container = eval(*target.kids[0], frame);
    auto* list = std::get_if<ListPtr>(&container.v);
    if (!list) throw RuntimeFault(target.line, type_name(container) + " does not support item assignment");
    auto idx = index_of(eval(*target.kids[1], frame), (*list)->size(), target.line);
    (**list)[idx] = std::move(v);
  }

  static std::size_t index_of(const Value& i, std::size_t size, int line) {
    if (!i.is_int()) throw RuntimeFault(line, "index must be Int, not " + type_name(i));
    auto k = i.as_int();
    if (k < 0) k += static_cast<std::int64_t>(size);
    if (k < 0 || k >= static_cast<std::int64_t>(size)) throw RuntimeFault(line, "index out of range");
    return static_cast<std::size_t>(k);
  }

  Flow exec(const Stmt& s, Frame& frame, bool in_fn) {
    switch (s.kind) {
      case St::var_decl:
        frame[s.name] = s.value ? eval(*s.value, frame) : Value{};
        return Flow::normal;
      case St::assign:
        store(*s.target, eval(*s.value, frame), frame);
        return Flow::normal;
      case St::aug_assign: {
        auto cur = eval(*s.target, frame);
        store(*s.target, binary(s.name, cur, eval(*s.value, frame), s.line), frame);
        return Flow::normal;
      }
      case St::expr:
        eval(*s.value, frame);
        return Flow::normal;
      case St::ret:
        ret_ = s.value ? eval(*s.value, frame) : Value{};
        return Flow::ret;
      case St::if_:
        for (const auto& [cond, body] : s.branches)
          if (!cond || truthy(eval(*cond, frame))) return exec_block(body, frame, in_fn);
        return Flow::normal;
      case St::while_:
        while (truthy(eval(*s.value, frame))) {
          auto f = exec_block(s.body, frame, in_fn);
          if (f == Flow::brk) break;
          if (f == Flow::ret) return f;
        }
        return Flow::normal;
      case St::for_:
        return exec_for(s, frame, in_fn);
      case St::assert_:
        if (!truthy(eval(*s.value, frame)))
          throw AssertionFault(s.line, s.extra ? repr(eval(*s.extra, frame), false) : "");
        return Flow::normal;
      case St::pass:
        return Flow::normal;
      case St::break_:
        return Flow::brk;
      case St::continue_:
        return Flow::cont;
    }
    return Flow::normal;
  }

  Flow exec_for(const Stmt& s, Frame& frame, bool in_fn) {
    const Expr& it = *s.value;
    auto loop = [&](const Value& v) -> std::optional<Flow> {
      frame[s.name] = v;
      auto f = exec_block(s.body, frame, in_fn);
      if (f == Flow::brk) return Flow::normal;
      if (f == Flow::ret) return f;
      return std::nullopt;
    };
    // range() iterates lazily.
    if (it.kind == Ex::call && it.kids[0]->kind == Ex::name && it.kids[0]->text == "range" &&
        !frame.count("range") && !fns_.count("range")) {
      auto [lo, hi, step] = range_args(it, frame);
      for (std::int64_t i = lo; step > 0 ? i < hi : i > hi; i += step)
        if (auto f = loop(Value{i})) return *f;
      return Flow::normal;
    }
    auto seq = eval(it, frame);
    if (auto* l = std::get_if<ListPtr>(&seq.v)) {
      auto snapshot = **l;
      for (const auto& v : snapshot)
        if (auto f = loop(v)) return *f;
      return Flow::normal;
    }
    if (auto* str = std::get_if<std::string>(&seq.v)) {
      for (char c : *str)
        if (auto f = loop(Value{std::string(1, c)})) return *f;
      return Flow::normal;
    }
    throw RuntimeFault(s.line, type_name(seq) + " is not iterable");
  }

  std::tuple<std::int64_t, std::int64_t, std::int64_t> range_args(const Expr& call, Frame& frame) {
    std::vector<std::int64_t> a;
    for (std::size_t k = 1; k < call.kids.size(); ++k) {
      auto v = eval(*call.kids[k], frame);
      if (!v.is_int()) throw RuntimeFault(call.line, "range() expects Int arguments");
      a.push_back(v.as_int());
    }
    if (a.empty() || a.size() > 3) throw RuntimeFault(call.line, "range() takes 1 to 3 arguments");
    if (a.size() == 1) return {0, a[0], 1};
    std::int64_t step = a.size() == 3 ? a[2] : 1;
    if (step == 0) throw RuntimeFault(call.line, "range() step must not be zero");
    return {a[0], a[1], step};
  }

  template <typename Op>
  static std::int64_t checked(Op op, std::int64_t x, std::int64_t y, int line) {
    std::int64_t r = 0;
    if (op(x, y, &r)) throw RuntimeFault(line, "integer overflow");
    return r;
  }
  static constexpr auto add_ = [](std::int64_t a, std::int64_t b, std::int64_t* r) {
    return __builtin_add_overflow(a, b, r);
  };
  static constexpr auto sub_ = [](std::int64_t a, std::int64_t b, std::int64_t* r) {
    return __builtin_sub_overflow(a, b, r);
  };
  static constexpr auto mul_ = [](std::int64_t a, std::int64_t b, std::int64_t* r) {
    return __builtin_mul_overflow(a, b, r);
  };

  Value binary(const std::string& op, const Value& a, const Value& b, int line) {
    if (a.is_int() && b.is_int()) {
      std::int64_t x = a.as_int(), y = b.as_int();
      if (op == "+") return {checked(add_, x, y, line)};
      if (op == "-") return {checked(sub_, x, y, line)};
      if (op == "*") return {checked(mul_, x, y, line)};
      if (y == 0) throw RuntimeFault(line, "division by zero");
      if (x == INT64_MIN && y == -1) throw RuntimeFault(line, "integer overflow");
      std::int64_t q = x / y, m = x % y;
      if (m != 0 && ((m < 0) != (y < 0))) {
        --q;
        m += y;
      }
      if (op == "/" || op == "//") return {q};
      if (op == "%") return {m};
    }
    if (op == "+") {
      if (auto* s = std::get_if<std::string>(&a.v))
        if (auto* t = std::get_if<std::string>(&b.v)) return {*s + *t};
      if (auto* l = std::get_if<ListPtr>(&a.v))
        if (auto* m = std::get_if<ListPtr>(&b.v)) {
          auto out = std::make_shared<std::vector<Value>>(**l);
          out->insert(out->end(), (*m)->begin(), (*m)->end());
          return {out};
        }
    }
    if (op == "*") {
      if (auto* s = std::get_if<std::string>(&a.v); s && b.is_int()) {
        std::string out;
        for (std::int64_t k = 0; k < b.as_int(); ++k) out += *s;
        return {out};
      }
    }
    throw RuntimeFault(line, "unsupported operand types for " + op + ": " + type_name(a) + " and " + type_name(b));
  }

  bool compare(const std::string& op, const Value& a, const Value& b, int line) {
    if (op == "==") return equal(a, b);
    if (op == "!=") return !equal(a, b);
    if (op == "in" || op == "not in") {
      bool found = false;
      if (auto* l = std::get_if<ListPtr>(&b.v)) {
        for (const auto& v : **l) found = found || equal(a, v);
      } else if (auto* s = std::get_if<std::string>(&b.v); s && std::holds_alternative<std::string>(a.v)) {
        found = s->find(std::get<std::string>(a.v)) != std::string::npos;
      } else {
        throw RuntimeFault(line, "'in' needs a List or String on the right");
      }
      return op == "in" ? found : !found;
    }
    int c = 0;
    if (a.is_int() && b.is_int()) {
      c = a.as_int() < b.as_int() ? -1 : a.as_int() > b.as_int();
    } else if (std::holds_alternative<std::string>(a.v) && std::holds_alternative<std::string>(b.v)) {
      c = std::get<std::string>(a.v).compare(std::get<std::string>(b.v));
    } else {
      throw RuntimeFault(line, "cannot order " + type_name(a) + " and " + type_name(b));
    }
    if (op == "<") return c < 0;
    if (op == "<=") return c <= 0;
    if (op == ">") return c > 0;
    return c >= 0;
  }

  Value eval(const Expr& e, Frame& frame) {
    switch (e.kind) {
      case Ex::integer: return {e.ival};
      case Ex::string: return {e.text};
      case Ex::boolean: return {e.ival != 0};
      case Ex::none: return {};
      case Ex::name: return lookup(e.text, frame, e.line);
      case Ex::list: {
        auto l = std::make_shared<std::vector<Value>>();
        for (const auto& k : e.kids) l->push_back(eval(*k, frame));
        return {l};
      }
      case Ex::unary: {
        auto v = eval(*e.kids[0], frame);
        if (!v.is_int()) throw RuntimeFault(e.line, "bad operand type for unary " + e.text + ": " + type_name(v));
        if (e.text == "+") return {v.as_int()};
        return {checked(sub_, 0, v.as_int(), e.line)};
      }
      case Ex::binary: return binary(e.text, eval(*e.kids[0], frame), eval(*e.kids[1], frame), e.line);
      case Ex::logic_and: {
        auto a = eval(*e.kids[0], frame);
        return truthy(a) ? eval(*e.kids[1], frame) : a;
      }
      case Ex::logic_or: {
        auto a = eval(*e.kids[0], frame);
        return truthy(a) ? a : eval(*e.kids[1], frame);
      }
      case Ex::logic_not: return {!truthy(eval(*e.kids[0], frame))};
      case Ex::compare: {
        auto lhs = eval(*e.kids[0], frame);
        for (std::size_t k = 0; k < e.ops.size(); ++k) {
          auto rhs = eval(*e.kids[k + 1], frame);
          if (!compare(e.ops[k], lhs, rhs, e.line)) return {false};
          lhs = std::move(rhs);
        }
        return {true};
      }
      case Ex::index: {
        auto c = eval(*e.kids[0], frame);
        auto i = eval(*e.kids[1], frame);
        if (auto* l = std::get_if<ListPtr>(&c.v)) return (**l)[index_of(i, (*l)->size(), e.line)];
        if (auto* s = std::get_if<std::string>(&c.v)) return {std::string(1, (*s)[index_of(i, s->size(), e.line)])};
        throw RuntimeFault(e.line, type_name(c) + " is not subscriptable");
      }
      case Ex::slice: return slice(e, frame);
      case Ex::method: return method(e, frame);
      case Ex::call: return call(e, frame);
    }
    return {};
  }

  Value slice(const Expr& e, Frame& frame) {
    auto c = eval(*e.kids[0], frame);
    std::int64_t size = 0;
    if (auto* l = std::get_if<ListPtr>(&c.v)) size = static_cast<std::int64_t>((*l)->size());
    else if (auto* s = std::get_if<std::string>(&c.v)) size = static_cast<std::int64_t>(s->size());
    else throw RuntimeFault(e.line, type_name(c) + " is not sliceable");
    auto bound = [&](const ExprPtr& x, std::int64_t dflt) {
      if (!x) return dflt;
      auto v = eval(*x, frame);
      if (!v.is_int()) throw RuntimeFault(e.line, "slice bounds must be Int");
      auto k = v.as_int();
      if (k < 0) k += size;
      return std::clamp<std::int64_t>(k, 0, size);
    };
    auto lo = bound(e.kids[1], 0), hi = std::max(lo, bound(e.kids[2], size));
    if (auto* l = std::get_if<ListPtr>(&c.v))
      return {std::make_shared<std::vector<Value>>((*l)->begin() + lo, (*l)->begin() + hi)};
    return {std::get<std::string>(c.v).substr(static_cast<std::size_t>(lo), static_cast<std::size_t>(hi - lo))};
  }

  Value method(const Expr& e, Frame& frame) {
    auto obj = eval(*e.kids[0], frame);
    std::vector<Value> args;
    for (std::size_t k = 1; k < e.kids.size(); ++k) args.push_back(eval(*e.kids[k], frame));
    if (auto* l = std::get_if<ListPtr>(&obj.v)) {
      if (e.text == "append" && args.size() == 1) {
        (*l)->push_back(args[0]);
        return {};
      }
      if (e.text == "pop" && args.empty()) {
        if ((*l)->empty()) throw RuntimeFault(e.line, "pop from empty list");
        auto v = (*l)->back();
        (*l)->pop_back();
        return v;
      }
    }
    throw RuntimeFault(e.line, type_name(obj) + " has no method '" + e.text + "'");
  }

  Value call(const Expr& e, Frame& frame) {
    auto callee = eval(*e.kids[0], frame);
    auto* fn = std::get_if<FuncRef>(&callee.v);
    if (!fn) throw RuntimeFault(e.line, type_name(callee) + " is not callable");
    std::vector<Value> args;
    for (std::size_t k = 1; k < e.kids.size(); ++k) args.push_back(eval(*e.kids[k], frame));
    if (auto it = fns_.find(fn->name); it != fns_.end()) return invoke(*it->second, std::move(args), e.line);
    return builtin(fn->name, args, e.line);
  }

  Value invoke(const Function& f, std::vector<Value> args, int line) {
    if (args.size() != f.params.size())
      throw RuntimeFault(line, f.name + "() takes " + std::to_string(f.params.size()) + " arguments, got " +
                                   std::to_string(args.size()));
    if (++depth_ > max_depth) throw RuntimeFault(line, "maximum recursion depth exceeded");
    Frame local;
    for (std::size_t k = 0; k < args.size(); ++k) local[f.params[k]] = std::move(args[k]);
    ret_ = {};
    exec_block(f.body, local, true);
    --depth_;
    Value r = std::move(ret_);
    ret_ = {};
    return r;
  }

  Value builtin(const std::string& name, const std::vector<Value>& a, int line) {
    auto need = [&](std::size_t n) {
      if (a.size() != n)
        throw RuntimeFault(line, name + "() takes " + std::to_string(n) + " argument" + (n == 1 ? "" : "s"));
    };
    if (name == "print") {
      for (std::size_t k = 0; k < a.size(); ++k) out_ << (k ? " " : "") << repr(a[k], false);
      out_ << "\n";
      return {};
    }
    if (name == "len") {
      need(1);
      if (auto* s = std::get_if<std::string>(&a[0].v)) return {static_cast<std::int64_t>(s->size())};
      if (auto* l = std::get_if<ListPtr>(&a[0].v)) return {static_cast<std::int64_t>((*l)->size())};
      throw RuntimeFault(line, type_name(a[0]) + " has no len()");
    }
    if (name == "abs") {
      need(1);
      if (!a[0].is_int()) throw RuntimeFault(line, "abs() expects Int");
      if (a[0].as_int() == INT64_MIN) throw RuntimeFault(line, "integer overflow");
      return {a[0].as_int() < 0 ? -a[0].as_int() : a[0].as_int()};
    }
    if (name == "min" || name == "max") {
      std::vector<Value> items = a;
      if (a.size() == 1)
        if (auto* l = std::get_if<ListPtr>(&a[0].v)) items = **l;
      if (items.empty()) throw RuntimeFault(line, name + "() of empty sequence");
      Value best = items[0];
      for (std::size_t k = 1; k < items.size(); ++k)
        if (compare(name == "min" ? "<" : ">", items[k], best, line)) best = items[k];
      return best;
    }
    if (name == "str") {
      need(1);
      return {repr(a[0], false)};
    }
    if (name == "int") {
      need(1);
      if (a[0].is_int()) return {a[0].as_int()};
      if (auto* s = std::get_if<std::string>(&a[0].v)) {
        try {
          std::size_t used = 0;
          auto v = std::stoll(*s, &used);
          if (used == s->size()) return {static_cast<std::int64_t>(v)};
        } catch (const std::exception&) {
        }
        throw RuntimeFault(line, "invalid literal for int(): '" + *s + "'");
      }
      throw RuntimeFault(line, "int() cannot convert " + type_name(a[0]));
    }
    if (name == "range") {
      if (a.empty() || a.size() > 3) throw RuntimeFault(line, "range() takes 1 to 3 arguments");
      for (const auto& v : a)
        if (!v.is_int()) throw RuntimeFault(line, "range() expects Int arguments");
      std::int64_t lo = a.size() == 1 ? 0 : a[0].as_int(), hi = a.size() == 1 ? a[0].as_int() : a[1].as_int();
      std::int64_t step = a.size() == 3 ? a[2].as_int() : 1;
      if (step == 0) throw RuntimeFault(line, "range() step must not be zero");
      auto l = std::make_shared<std::vector<Value>>();
      for (std::int64_t i = lo; step > 0 ? i < hi : i > hi; i += step) l->push_back({i});
      return {l};
    }
    if (name == "alloc") {
      need(1);
      if (!a[0].is_int() || a[0].as_int() < 0) throw RuntimeFault(line, "alloc() expects a non-negative Int");
      const auto bytes = static_cast<std::size_t>(a[0].as_int()) << 20;
      try {
        std::vector<char> block(bytes);
        for (std::size_t k = 0; k < block.size(); k += 4096) block[k] = 1;
      } catch (const std::bad_alloc&) {
        throw MemoryFault("MemoryError: alloc(" + std::to_string(a[0].as_int()) + " MiB) failed");
      }
      return {a[0].as_int()};
    }
    throw RuntimeFault(line, "name '" + name + "' is not callable");
  }
};

inline Program parse_program(const std::string& source) { return Parser(lex(source)).parse(); }

inline void check_program(const Program& p) { Checker(p).run(); }

// Mirrors the stub runner's command line. Returns the process exit code.
inline int run_source(const std::string& source, bool check_only, std::ostream& out, std::ostream& err) {
  try {
    auto program = parse_program(source);
    check_program(program);
    if (check_only) return 0;
    Interpreter(program, out).run();
    return 0;
  } catch (const ParseError& e) {
    err << e.what() << "\n";
  } catch (const CompileError& e) {
    err << e.what() << "\n";
  } catch (const AssertionFault& e) {
    err << e.what() << "\n";
  } catch (const RuntimeFault& e) {
    err << e.what() << "\n";
  } catch (const MemoryFault& e) {
    err << e.what() << "\n";
  } catch (const std::bad_alloc&) {
    err << "MemoryError: out of memory\n";
  }
  out.flush();
  return 1;
}

}  // namespace plforge::stub
