#pragma once

#include <cctype>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "resmc/errors.hpp"
#include "resmc/model.hpp"
#include "resmc/property.hpp"

namespace resmc {

// Textual model format (.gcm). One declaration per statement:
//
//   var <name> : [<lo>..<hi>] init <int>;
//   var <name> init <int>;                      // bounds default [0, 2^31-1]
//   label <name> = <boolexpr>;
//   [<cmd>] <boolexpr> -> <rateexpr> : <var>'=<intexpr>, ... ;
//
// Arithmetic uses + - * / with integer and decimal literals; boolean
// expressions combine comparisons (< <= = >= > !=) with ! & | and parentheses.
// Line comments start with //.

namespace detail {

enum class TokKind {
  kEnd,
  kIdent,
  kNumber,
  kPunct,
};

struct Token {
  TokKind kind = TokKind::kEnd;
  std::string text;
  double number = 0.0;
  bool number_is_integer = false;
  int line = 1;
  int column = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }

  const Token& peek() const { return current_; }

  Token take() {
    Token t = current_;
    advance();
    return t;
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(message, current_.line, current_.column);
  }

 private:
  void advance() {
    skip_space();
    current_ = Token{};
    current_.line = line_;
    current_.column = column_;
    if (pos_ >= src_.size()) {
      current_.kind = TokKind::kEnd;
      current_.text = "end of input";
      return;
    }
    const char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_')) {
        bump();
      }
      current_.kind = TokKind::kIdent;
      current_.text = std::string(src_.substr(start, pos_ - start));
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      lex_number();
      return;
    }
    lex_punct();
  }

  void lex_number() {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
      bump();
    }
    bool integer = true;
    // A '.' continues the number only when followed by a digit, so that
    // "0..5" lexes as 0, "..", 5.
    if (pos_ + 1 < src_.size() && src_[pos_] == '.' &&
        std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
      integer = false;
      bump();
      while (pos_ < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        bump();
      }
    }
    current_.kind = TokKind::kNumber;
    current_.text = std::string(src_.substr(start, pos_ - start));
    current_.number = std::stod(current_.text);
    current_.number_is_integer = integer;
  }

  void lex_punct() {
    static constexpr std::string_view kTwoChar[] = {"->", "..", "<=", ">=",
                                                    "!=", "==", "&&", "||"};
    for (std::string_view two : kTwoChar) {
      if (src_.substr(pos_, 2) == two) {
        current_.kind = TokKind::kPunct;
        current_.text = std::string(two);
        bump();
        bump();
        return;
      }
    }
    static constexpr std::string_view kOneChar = "[]():;,'<>=!&|+-*/";
    if (kOneChar.find(src_[pos_]) != std::string_view::npos) {
      current_.kind = TokKind::kPunct;
      current_.text = std::string(1, src_[pos_]);
      bump();
      return;
    }
    throw ParseError("unexpected character '" + std::string(1, src_[pos_]) + "'",
                     line_, column_);
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') bump();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        bump();
      } else {
        break;
      }
    }
  }

  void bump() {
    if (src_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
  Token current_;
};

// Recursive-descent expression parser shared by guards, rates, label bodies
// and updates. Produces an untyped tree; type checks happen at the use site.
class ExprParser {
 public:
  ExprParser(Lexer& lex, const Model& model) : lex_(lex), model_(model) {}

  Expr parse_bool() {
    Token at = lex_.peek();
    Expr e = parse_or();
    if (!e.is_boolean()) {
      throw ParseError("expected a boolean expression", at.line, at.column);
    }
    return e;
  }

  Expr parse_arith() {
    Token at = lex_.peek();
    Expr e = parse_or();
    if (e.is_boolean()) {
      throw ParseError("expected an arithmetic expression", at.line, at.column);
    }
    return e;
  }

 private:
  Expr parse_or() {
    Expr lhs = parse_and();
    while (is_punct("|") || is_punct("||")) {
      Token op = lex_.take();
      Expr rhs = parse_and();
      require_boolean(lhs, op);
      require_boolean(rhs, op);
      lhs = Expr::make_binary(ExprOp::kOr, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  Expr parse_and() {
    Expr lhs = parse_cmp();
    while (is_punct("&") || is_punct("&&")) {
      Token op = lex_.take();
      Expr rhs = parse_cmp();
      require_boolean(lhs, op);
      require_boolean(rhs, op);
      lhs = Expr::make_binary(ExprOp::kAnd, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  Expr parse_cmp() {
    Expr lhs = parse_add();
    ExprOp op;
    if (is_punct("<")) {
      op = ExprOp::kLt;
    } else if (is_punct("<=")) {
      op = ExprOp::kLe;
    } else if (is_punct("=") || is_punct("==")) {
      op = ExprOp::kEq;
    } else if (is_punct(">=")) {
      op = ExprOp::kGe;
    } else if (is_punct(">")) {
      op = ExprOp::kGt;
    } else if (is_punct("!=")) {
      op = ExprOp::kNe;
    } else {
      return lhs;
    }
    Token at = lex_.take();
    Expr rhs = parse_add();
    require_arith(lhs, at);
    require_arith(rhs, at);
    return Expr::make_binary(op, std::move(lhs), std::move(rhs));
  }

  Expr parse_add() {
    Expr lhs = parse_mul();
    while (is_punct("+") || is_punct("-")) {
      Token op = lex_.take();
      Expr rhs = parse_mul();
      require_arith(lhs, op);
      require_arith(rhs, op);
      lhs = Expr::make_binary(op.text == "+" ? ExprOp::kAdd : ExprOp::kSub,
                              std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  Expr parse_mul() {
    Expr lhs = parse_unary();
    while (is_punct("*") || is_punct("/")) {
      Token op = lex_.take();
      Expr rhs = parse_unary();
      require_arith(lhs, op);
      require_arith(rhs, op);
      lhs = Expr::make_binary(op.text == "*" ? ExprOp::kMul : ExprOp::kDiv,
                              std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  Expr parse_unary() {
    if (is_punct("!")) {
      Token op = lex_.take();
      Expr e = parse_unary();
      require_boolean(e, op);
      return Expr::make_unary(ExprOp::kNot, std::move(e));
    }
    if (is_punct("-")) {
      Token op = lex_.take();
      Expr e = parse_unary();
      require_arith(e, op);
      return Expr::make_unary(ExprOp::kNeg, std::move(e));
    }
    return parse_primary();
  }

  Expr parse_primary() {
    const Token& t = lex_.peek();
    if (t.kind == TokKind::kNumber) {
      return Expr::make_literal(lex_.take().number);
    }
    if (t.kind == TokKind::kIdent) {
      Token id = lex_.take();
      int index = model_.variable_index(id.text);
      if (index < 0) {
        throw ParseError("undeclared variable '" + id.text + "'", id.line,
                         id.column);
      }
      return Expr::make_variable(index);
    }
    if (is_punct("(")) {
      lex_.take();
      Expr e = parse_or();
      expect_punct(")");
      return e;
    }
    lex_.fail("expected an expression, got '" + t.text + "'");
  }

  bool is_punct(std::string_view s) const {
    return lex_.peek().kind == TokKind::kPunct && lex_.peek().text == s;
  }

  void expect_punct(std::string_view s) {
    if (!is_punct(s)) {
      lex_.fail("expected '" + std::string(s) + "', got '" + lex_.peek().text +
                "'");
    }
    lex_.take();
  }

  void require_boolean(const Expr& e, const Token& at) const {
    if (!e.is_boolean()) {
      throw ParseError("operand of '" + at.text + "' must be boolean", at.line,
                       at.column);
    }
  }

  void require_arith(const Expr& e, const Token& at) const {
    if (e.is_boolean()) {
      throw ParseError("operand of '" + at.text + "' must be arithmetic",
                       at.line, at.column);
    }
  }

  Lexer& lex_;
  const Model& model_;
};

}  // namespace detail

inline Model parse_model(std::string_view text) {
  using detail::Lexer;
  using detail::TokKind;
  using detail::Token;

  constexpr std::int64_t kDefaultUpper = 2147483647;  // 2^31 - 1

  Model model;
  Lexer lex(text);
  std::set<std::string> command_names;

  auto expect_punct = [&](std::string_view s) {
    const Token& t = lex.peek();
    if (t.kind != TokKind::kPunct || t.text != s) {
      lex.fail("expected '" + std::string(s) + "', got '" + t.text + "'");
    }
    return lex.take();
  };
  auto expect_ident = [&]() {
    if (lex.peek().kind != TokKind::kIdent) {
      lex.fail("expected an identifier, got '" + lex.peek().text + "'");
    }
    return lex.take();
  };
  auto expect_int = [&]() {
    bool negative = false;
    if (lex.peek().kind == TokKind::kPunct && lex.peek().text == "-") {
      lex.take();
      negative = true;
    }
    const Token& t = lex.peek();
    if (t.kind != TokKind::kNumber || !t.number_is_integer) {
      lex.fail("expected an integer, got '" + t.text + "'");
    }
    Token tok = lex.take();
    auto v = static_cast<std::int64_t>(tok.number);
    return negative ? -v : v;
  };

  while (lex.peek().kind != TokKind::kEnd) {
    const Token& t = lex.peek();
    if (t.kind == TokKind::kIdent && t.text == "var") {
      lex.take();
      Token name = expect_ident();
      if (model.variable_index(name.text) >= 0) {
        throw ParseError("duplicate variable '" + name.text + "'", name.line,
                         name.column);
      }
      VariableDecl decl;
      decl.name = name.text;
      decl.lower = 0;
      decl.upper = kDefaultUpper;
      if (lex.peek().kind == TokKind::kPunct && lex.peek().text == ":") {
        lex.take();
        expect_punct("[");
        decl.lower = expect_int();
        expect_punct("..");
        decl.upper = expect_int();
        expect_punct("]");
        if (decl.lower > decl.upper) {
          throw ParseError("empty range for variable '" + name.text + "'",
                           name.line, name.column);
        }
      }
      Token kw = expect_ident();
      if (kw.text != "init") {
        throw ParseError("expected 'init', got '" + kw.text + "'", kw.line,
                         kw.column);
      }
      decl.init = expect_int();
      if (decl.init < decl.lower || decl.init > decl.upper) {
        throw ParseError("initial value of '" + name.text +
                             "' is outside its declared range",
                         name.line, name.column);
      }
      expect_punct(";");
      model.variables.push_back(std::move(decl));
    } else if (t.kind == TokKind::kIdent && t.text == "label") {
      lex.take();
      Token name = expect_ident();
      if (model.label_index(name.text) >= 0 ||
          model.variable_index(name.text) >= 0) {
        throw ParseError("label '" + name.text +
                             "' clashes with an existing name",
                         name.line, name.column);
      }
      expect_punct("=");
      detail::ExprParser ep(lex, model);
      LabelDecl label;
      label.name = name.text;
      label.expr = ep.parse_bool();
      expect_punct(";");
      model.labels.push_back(std::move(label));
    } else if (t.kind == TokKind::kPunct && t.text == "[") {
      lex.take();
      Token name = expect_ident();
      if (!command_names.insert(name.text).second) {
        throw ParseError("duplicate command name '" + name.text + "'",
                         name.line, name.column);
      }
      expect_punct("]");
      detail::ExprParser ep(lex, model);
      Command cmd;
      cmd.name = name.text;
      cmd.guard = ep.parse_bool();
      expect_punct("->");
      cmd.rate = ep.parse_arith();
      expect_punct(":");
      std::set<int> updated;
      while (true) {
        Token var = expect_ident();
        int index = model.variable_index(var.text);
        if (index < 0) {
          throw ParseError("undeclared variable '" + var.text + "'", var.line,
                           var.column);
        }
        if (!updated.insert(index).second) {
          throw ParseError("variable '" + var.text +
                               "' updated twice in one command",
                           var.line, var.column);
        }
        expect_punct("'");
        expect_punct("=");
        cmd.updates.emplace_back(index, ep.parse_arith());
        if (lex.peek().kind == TokKind::kPunct && lex.peek().text == ",") {
          lex.take();
          continue;
        }
        break;
      }
      expect_punct(";");
      model.commands.push_back(std::move(cmd));
    } else {
      lex.fail("expected 'var', 'label' or '[', got '" + t.text + "'");
    }
  }

  if (model.commands.empty()) {
    throw ParseError("model declares no commands", 1, 1);
  }
  model.compile();
  return model;
}

// Temporal property syntax: atoms are `ident cmp int`, bare label names, or
// the constants true/false; operators (loosest to tightest) are |, &, U, and
// the prefix trio ! F X. F, X and U are reserved words here.
inline PropPtr parse_property(std::string_view text, const Model& model) {
  using detail::Lexer;
  using detail::TokKind;
  using detail::Token;

  Lexer lex(text);

  auto is_punct = [&](std::string_view s) {
    return lex.peek().kind == TokKind::kPunct && lex.peek().text == s;
  };
  auto is_word = [&](std::string_view s) {
    return lex.peek().kind == TokKind::kIdent && lex.peek().text == s;
  };

  struct Parser {
    Lexer& lex;
    const Model& model;
    decltype(is_punct)& punct;
    decltype(is_word)& word;

    PropPtr parse_or() {
      PropPtr lhs = parse_and();
      while (punct("|") || punct("||")) {
        lex.take();
        lhs = wrap_or(std::move(lhs), parse_and());
      }
      return lhs;
    }

    // Keeps user-written boolean structure intact (no constant folding), so
    // parse -> print round-trips are faithful.
    static PropPtr wrap_or(PropPtr a, PropPtr b) {
      PropNode n;
      n.kind = PropKind::kOr;
      n.left = std::move(a);
      n.right = std::move(b);
      return std::make_shared<PropNode>(n);
    }
    static PropPtr wrap_and(PropPtr a, PropPtr b) {
      PropNode n;
      n.kind = PropKind::kAnd;
      n.left = std::move(a);
      n.right = std::move(b);
      return std::make_shared<PropNode>(n);
    }
    static PropPtr wrap_not(PropPtr a) {
      PropNode n;
      n.kind = PropKind::kNot;
      n.left = std::move(a);
      return std::make_shared<PropNode>(n);
    }

    PropPtr parse_and() {
      PropPtr lhs = parse_until();
      while (punct("&") || punct("&&")) {
        lex.take();
        lhs = wrap_and(std::move(lhs), parse_until());
      }
      return lhs;
    }

    PropPtr parse_until() {
      PropPtr lhs = parse_unary();
      if (word("U")) {
        lex.take();
        return prop::until(std::move(lhs), parse_until());
      }
      return lhs;
    }

    PropPtr parse_unary() {
      if (punct("!")) {
        lex.take();
        return wrap_not(parse_unary());
      }
      if (word("F")) {
        lex.take();
        return prop::eventually(parse_unary());
      }
      if (word("X")) {
        lex.take();
        return prop::next(parse_unary());
      }
      if (punct("(")) {
        lex.take();
        PropPtr inner = parse_or();
        if (!punct(")")) lex.fail("expected ')'");
        lex.take();
        return inner;
      }
      return parse_atom();
    }

    PropPtr parse_atom() {
      if (lex.peek().kind != TokKind::kIdent) {
        lex.fail("expected an atom, got '" + lex.peek().text + "'");
      }
      Token id = lex.take();
      if (id.text == "true") return prop::constant(true);
      if (id.text == "false") return prop::constant(false);

      CmpOp op;
      bool has_cmp = true;
      if (punct("<")) {
        op = CmpOp::kLt;
      } else if (punct("<=")) {
        op = CmpOp::kLe;
      } else if (punct("=") || punct("==")) {
        op = CmpOp::kEq;
      } else if (punct(">=")) {
        op = CmpOp::kGe;
      } else if (punct(">")) {
        op = CmpOp::kGt;
      } else if (punct("!=")) {
        op = CmpOp::kNe;
      } else {
        has_cmp = false;
      }

      if (!has_cmp) {
        int label = model.label_index(id.text);
        if (label >= 0) return prop::label_atom(label);
        if (model.variable_index(id.text) >= 0) {
          throw ParseError("variable '" + id.text +
                               "' needs a comparison (e.g. " + id.text + " > 0)",
                           id.line, id.column);
        }
        throw ParseError("unknown identifier '" + id.text + "'", id.line,
                         id.column);
      }

      lex.take();
      bool negative = false;
      if (punct("-")) {
        lex.take();
        negative = true;
      }
      if (lex.peek().kind != TokKind::kNumber ||
          !lex.peek().number_is_integer) {
        lex.fail("expected an integer bound");
      }
      Token num = lex.take();
      auto bound = static_cast<std::int64_t>(num.number);
      if (negative) bound = -bound;

      int variable = model.variable_index(id.text);
      if (variable >= 0) return prop::var_atom(variable, op, bound);
      int label = model.label_index(id.text);
      if (label >= 0) {
        // Labels are 0/1-valued; comparing against an integer is accepted.
        PropPtr atom = prop::label_atom(label);
        const bool holds_when_true = prop::cmp_eval(1, op, bound);
        const bool holds_when_false = prop::cmp_eval(0, op, bound);
        if (holds_when_true && holds_when_false) return prop::constant(true);
        if (!holds_when_true && !holds_when_false) return prop::constant(false);
        return holds_when_true ? atom : wrap_not(atom);
      }
      throw ParseError("unknown identifier '" + id.text + "'", id.line,
                       id.column);
    }
  };

  Parser parser{lex, model, is_punct, is_word};
  PropPtr result = parser.parse_or();
  if (lex.peek().kind != TokKind::kEnd) {
    lex.fail("unexpected trailing input '" + lex.peek().text + "'");
  }
  return result;
}

// Canonical text form; parse(print(parse(text))) is structurally identical
// to parse(text).
inline std::string print_model(const Model& model) {
  const std::vector<std::string> names = model.variable_names();
  std::string out;
  for (const VariableDecl& v : model.variables) {
    out += "var " + v.name + " : [" + std::to_string(v.lower) + ".." +
           std::to_string(v.upper) + "] init " + std::to_string(v.init) + ";\n";
  }
  for (const LabelDecl& l : model.labels) {
    out += "label " + l.name + " = " + expr_to_string(l.expr, names) + ";\n";
  }
  for (const Command& c : model.commands) {
    out += "[" + c.name + "] " + expr_to_string(c.guard, names) + " -> " +
           expr_to_string(c.rate, names) + " : ";
    for (std::size_t i = 0; i < c.updates.size(); ++i) {
      if (i) out += ", ";
      out += names[static_cast<std::size_t>(c.updates[i].first)] + "'=" +
             expr_to_string(c.updates[i].second, names);
    }
    out += ";\n";
  }
  return out;
}

}  // namespace resmc
