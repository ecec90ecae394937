#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "resmc/errors.hpp"

namespace resmc {

// Expressions over the model's integer variables. One node type covers both
// arithmetic (double-valued) and boolean (0/1-valued) forms; parse-time type
// checking keeps them apart where the grammar requires it.
enum class ExprOp {
  kLiteral,
  kVariable,
  kNeg,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kLt,
  kLe,
  kEq,
  kGe,
  kGt,
  kNe,
  kNot,
  kAnd,
  kOr,
};

inline bool is_comparison(ExprOp op) {
  return op >= ExprOp::kLt && op <= ExprOp::kNe;
}

struct Expr {
  ExprOp op = ExprOp::kLiteral;
  double literal = 0.0;
  int variable = -1;  // index into the model's variable list
  std::vector<Expr> args;

  static Expr make_literal(double v) {
    Expr e;
    e.op = ExprOp::kLiteral;
    e.literal = v;
    return e;
  }
  static Expr make_variable(int index) {
    Expr e;
    e.op = ExprOp::kVariable;
    e.variable = index;
    return e;
  }
  static Expr make_unary(ExprOp op, Expr a) {
    Expr e;
    e.op = op;
    e.args.push_back(std::move(a));
    return e;
  }
  static Expr make_binary(ExprOp op, Expr a, Expr b) {
    Expr e;
    e.op = op;
    e.args.push_back(std::move(a));
    e.args.push_back(std::move(b));
    return e;
  }

  // True when every leaf is a literal or a comparison/boolean thereof.
  bool is_boolean() const {
    switch (op) {
      case ExprOp::kNot:
      case ExprOp::kAnd:
      case ExprOp::kOr:
        return true;
      default:
        return is_comparison(op);
    }
  }
};

// Shortest round-trip formatting; integral values print without a fraction.
inline std::string format_number(double v) {
  if (v == static_cast<double>(static_cast<long long>(v)) &&
      std::abs(v) < 9.0e15) {
    return std::to_string(static_cast<long long>(v));
  }
  char buf[48];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

namespace detail {

inline int precedence(ExprOp op) {
  switch (op) {
    case ExprOp::kOr:
      return 1;
    case ExprOp::kAnd:
      return 2;
    case ExprOp::kNot:
      return 3;
    case ExprOp::kLt:
    case ExprOp::kLe:
    case ExprOp::kEq:
    case ExprOp::kGe:
    case ExprOp::kGt:
    case ExprOp::kNe:
      return 4;
    case ExprOp::kAdd:
    case ExprOp::kSub:
      return 5;
    case ExprOp::kMul:
    case ExprOp::kDiv:
      return 6;
    case ExprOp::kNeg:
      return 7;
    default:
      return 8;
  }
}

inline const char* op_token(ExprOp op) {
  switch (op) {
    case ExprOp::kAdd:
      return " + ";
    case ExprOp::kSub:
      return " - ";
    case ExprOp::kMul:
      return " * ";
    case ExprOp::kDiv:
      return " / ";
    case ExprOp::kLt:
      return " < ";
    case ExprOp::kLe:
      return " <= ";
    case ExprOp::kEq:
      return " = ";
    case ExprOp::kGe:
      return " >= ";
    case ExprOp::kGt:
      return " > ";
    case ExprOp::kNe:
      return " != ";
    case ExprOp::kAnd:
      return " & ";
    case ExprOp::kOr:
      return " | ";
    default:
      return "?";
  }
}

}  // namespace detail

// Renders with the minimal parentheses the grammar needs to reparse the
// same tree. `variable_names` is indexed by Expr::variable.
inline void print_expr(const Expr& e, std::span<const std::string> variable_names,
                       std::string& out, int parent_prec = 0) {
  const int prec = detail::precedence(e.op);
  const bool parens = prec < parent_prec;
  if (parens) out += '(';
  switch (e.op) {
    case ExprOp::kLiteral:
      out += format_number(e.literal);
      break;
    case ExprOp::kVariable:
      out += variable_names[static_cast<std::size_t>(e.variable)];
      break;
    case ExprOp::kNeg:
      out += '-';
      print_expr(e.args[0], variable_names, out, prec + 1);
      break;
    case ExprOp::kNot:
      out += '!';
      print_expr(e.args[0], variable_names, out, prec + 1);
      break;
    default:
      // Left-associative binaries: the right child needs one level more.
      print_expr(e.args[0], variable_names, out, prec);
      out += detail::op_token(e.op);
      print_expr(e.args[1], variable_names, out, prec + 1);
      break;
  }
  if (parens) out += ')';
}

inline std::string expr_to_string(const Expr& e,
                                  std::span<const std::string> variable_names) {
  std::string out;
  print_expr(e, variable_names, out);
  return out;
}

// Flat postfix program; evaluation walks an instruction array instead of
// chasing tree pointers in the simulator's inner loop.
class CompiledExpr {
 public:
  CompiledExpr() = default;

  explicit CompiledExpr(const Expr& e) {
    int depth = 0;
    compile(e, depth);
  }

  // Evaluates against variable values (booleans come back as 0.0/1.0).
  double eval(std::span<const std::int64_t> values) const {
    double stack[kMaxDepth];
    int top = -1;
    for (const Instr& ins : code_) {
      switch (ins.op) {
        case ExprOp::kLiteral:
          stack[++top] = ins.literal;
          break;
        case ExprOp::kVariable:
          stack[++top] = static_cast<double>(values[ins.variable]);
          break;
        case ExprOp::kNeg:
          stack[top] = -stack[top];
          break;
        case ExprOp::kNot:
          stack[top] = stack[top] == 0.0 ? 1.0 : 0.0;
          break;
        case ExprOp::kAdd:
          --top;
          stack[top] += stack[top + 1];
          break;
        case ExprOp::kSub:
          --top;
          stack[top] -= stack[top + 1];
          break;
        case ExprOp::kMul:
          --top;
          stack[top] *= stack[top + 1];
          break;
        case ExprOp::kDiv:
          --top;
          if (stack[top + 1] == 0.0) throw EvalError("division by zero");
          stack[top] /= stack[top + 1];
          break;
        case ExprOp::kLt:
          --top;
          stack[top] = stack[top] < stack[top + 1] ? 1.0 : 0.0;
          break;
        case ExprOp::kLe:
          --top;
          stack[top] = stack[top] <= stack[top + 1] ? 1.0 : 0.0;
          break;
        case ExprOp::kEq:
          --top;
          stack[top] = stack[top] == stack[top + 1] ? 1.0 : 0.0;
          break;
        case ExprOp::kGe:
          --top;
          stack[top] = stack[top] >= stack[top + 1] ? 1.0 : 0.0;
          break;
        case ExprOp::kGt:
          --top;
          stack[top] = stack[top] > stack[top + 1] ? 1.0 : 0.0;
          break;
        case ExprOp::kNe:
          --top;
          stack[top] = stack[top] != stack[top + 1] ? 1.0 : 0.0;
          break;
        case ExprOp::kAnd:
          --top;
          stack[top] =
              (stack[top] != 0.0 && stack[top + 1] != 0.0) ? 1.0 : 0.0;
          break;
        case ExprOp::kOr:
          --top;
          stack[top] =
              (stack[top] != 0.0 || stack[top + 1] != 0.0) ? 1.0 : 0.0;
          break;
      }
    }
    return stack[0];
  }

  bool eval_bool(std::span<const std::int64_t> values) const {
    return eval(values) != 0.0;
  }

  bool empty() const { return code_.empty(); }

 private:
  static constexpr int kMaxDepth = 64;

  struct Instr {
    ExprOp op;
    double literal = 0.0;
    int variable = 0;
  };

  void compile(const Expr& e, int& depth) {
    switch (e.op) {
      case ExprOp::kLiteral:
        code_.push_back({ExprOp::kLiteral, e.literal, 0});
        bump(depth);
        break;
      case ExprOp::kVariable:
        code_.push_back({ExprOp::kVariable, 0.0, e.variable});
        bump(depth);
        break;
      default:
        for (const Expr& a : e.args) compile(a, depth);
        code_.push_back({e.op, 0.0, 0});
        depth -= static_cast<int>(e.args.size()) - 1;
        break;
    }
  }

  void bump(int& depth) {
    if (++depth > kMaxDepth) throw EvalError("expression too deeply nested");
  }

  std::vector<Instr> code_;
};

}  // namespace resmc
