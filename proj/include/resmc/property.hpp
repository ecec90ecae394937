#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "resmc/model.hpp"

namespace resmc {

// Temporal property over finite traces. Atoms compare a variable against an
// integer constant or reference a model label. `F phi` is represented as
// `true U phi` from construction on; the printer restores the sugar.
enum class PropKind {
  kTrue,
  kFalse,
  kVarAtom,
  kLabelAtom,
  kNot,
  kAnd,
  kOr,
  kNext,
  kUntil,
};

enum class CmpOp { kLt, kLe, kEq, kGe, kGt, kNe };

struct PropNode;
using PropPtr = std::shared_ptr<const PropNode>;

struct PropNode {
  PropKind kind = PropKind::kTrue;
  int index = -1;  // variable or label index
  CmpOp cmp = CmpOp::kEq;
  std::int64_t bound = 0;
  PropPtr left;
  PropPtr right;
};

namespace prop {

inline PropPtr constant(bool value) {
  static const PropPtr t = std::make_shared<PropNode>(PropNode{PropKind::kTrue});
  static const PropPtr f =
      std::make_shared<PropNode>(PropNode{PropKind::kFalse});
  return value ? t : f;
}

inline PropPtr var_atom(int variable, CmpOp cmp, std::int64_t bound) {
  PropNode n;
  n.kind = PropKind::kVarAtom;
  n.index = variable;
  n.cmp = cmp;
  n.bound = bound;
  return std::make_shared<PropNode>(n);
}

inline PropPtr label_atom(int label) {
  PropNode n;
  n.kind = PropKind::kLabelAtom;
  n.index = label;
  return std::make_shared<PropNode>(n);
}

inline bool is_const(const PropPtr& p) {
  return p->kind == PropKind::kTrue || p->kind == PropKind::kFalse;
}

inline bool const_value(const PropPtr& p) { return p->kind == PropKind::kTrue; }

// Structural equality; used to collapse `a & a` style residues during
// formula progression so monitors stay small.
inline bool equal(const PropPtr& a, const PropPtr& b) {
  if (a == b) return true;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case PropKind::kTrue:
    case PropKind::kFalse:
      return true;
    case PropKind::kVarAtom:
      return a->index == b->index && a->cmp == b->cmp && a->bound == b->bound;
    case PropKind::kLabelAtom:
      return a->index == b->index;
    case PropKind::kNot:
      return equal(a->left, b->left);
    default:
      return equal(a->left, b->left) && equal(a->right, b->right);
  }
}

inline PropPtr negation(PropPtr a) {
  if (is_const(a)) return constant(!const_value(a));
  if (a->kind == PropKind::kNot) return a->left;
  PropNode n;
  n.kind = PropKind::kNot;
  n.left = std::move(a);
  return std::make_shared<PropNode>(n);
}

inline PropPtr conjunction(PropPtr a, PropPtr b) {
  if (is_const(a)) return const_value(a) ? b : constant(false);
  if (is_const(b)) return const_value(b) ? a : constant(false);
  if (equal(a, b)) return a;
  PropNode n;
  n.kind = PropKind::kAnd;
  n.left = std::move(a);
  n.right = std::move(b);
  return std::make_shared<PropNode>(n);
}

inline PropPtr disjunction(PropPtr a, PropPtr b) {
  if (is_const(a)) return const_value(a) ? constant(true) : b;
  if (is_const(b)) return const_value(b) ? constant(true) : a;
  if (equal(a, b)) return a;
  PropNode n;
  n.kind = PropKind::kOr;
  n.left = std::move(a);
  n.right = std::move(b);
  return std::make_shared<PropNode>(n);
}

inline PropPtr next(PropPtr a) {
  PropNode n;
  n.kind = PropKind::kNext;
  n.left = std::move(a);
  return std::make_shared<PropNode>(n);
}

inline PropPtr until(PropPtr a, PropPtr b) {
  PropNode n;
  n.kind = PropKind::kUntil;
  n.left = std::move(a);
  n.right = std::move(b);
  return std::make_shared<PropNode>(n);
}

inline PropPtr eventually(PropPtr a) { return until(constant(true), std::move(a)); }

inline const char* cmp_token(CmpOp op) {
  switch (op) {
    case CmpOp::kLt:
      return "<";
    case CmpOp::kLe:
      return "<=";
    case CmpOp::kEq:
      return "=";
    case CmpOp::kGe:
      return ">=";
    case CmpOp::kGt:
      return ">";
    case CmpOp::kNe:
      return "!=";
  }
  return "?";
}

inline bool cmp_eval(std::int64_t lhs, CmpOp op, std::int64_t rhs) {
  switch (op) {
    case CmpOp::kLt:
      return lhs < rhs;
    case CmpOp::kLe:
      return lhs <= rhs;
    case CmpOp::kEq:
      return lhs == rhs;
    case CmpOp::kGe:
      return lhs >= rhs;
    case CmpOp::kGt:
      return lhs > rhs;
    case CmpOp::kNe:
      return lhs != rhs;
  }
  return false;
}

// True/false value of an atomic or boolean-only node in `state`. Pre: the
// node contains no temporal operator.
inline bool eval_state_pred(const PropPtr& p, const Model& model,
                            const State& state) {
  switch (p->kind) {
    case PropKind::kTrue:
      return true;
    case PropKind::kFalse:
      return false;
    case PropKind::kVarAtom:
      return cmp_eval(state.values[p->index], p->cmp, p->bound);
    case PropKind::kLabelAtom:
      return model.labels[p->index].compiled.eval_bool(state.values);
    case PropKind::kNot:
      return !eval_state_pred(p->left, model, state);
    case PropKind::kAnd:
      return eval_state_pred(p->left, model, state) &&
             eval_state_pred(p->right, model, state);
    case PropKind::kOr:
      return eval_state_pred(p->left, model, state) ||
             eval_state_pred(p->right, model, state);
    default:
      throw InternalError("temporal operator in state predicate");
  }
}

inline bool is_state_pred(const PropPtr& p) {
  switch (p->kind) {
    case PropKind::kNext:
    case PropKind::kUntil:
      return false;
    case PropKind::kNot:
      return is_state_pred(p->left);
    case PropKind::kAnd:
    case PropKind::kOr:
      return is_state_pred(p->left) && is_state_pred(p->right);
    default:
      return true;
  }
}

namespace detail {

inline int prop_precedence(PropKind k) {
  switch (k) {
    case PropKind::kOr:
      return 1;
    case PropKind::kAnd:
      return 2;
    case PropKind::kUntil:
      return 3;
    default:
      return 4;  // unary and atoms
  }
}

}  // namespace detail

// Canonical rendering: deterministic, reparses to an equal tree, and doubles
// as a map key when enumerating monitor residues.
inline void print_property(const PropPtr& p, const Model& model,
                           std::string& out, int parent_prec = 0) {
  const int prec = detail::prop_precedence(p->kind);
  const bool parens = prec < parent_prec;
  if (parens) out += '(';
  switch (p->kind) {
    case PropKind::kTrue:
      out += "true";
      break;
    case PropKind::kFalse:
      out += "false";
      break;
    case PropKind::kVarAtom:
      out += model.variables[p->index].name;
      out += ' ';
      out += cmp_token(p->cmp);
      out += ' ';
      out += std::to_string(p->bound);
      break;
    case PropKind::kLabelAtom:
      out += model.labels[p->index].name;
      break;
    case PropKind::kNot:
      out += "! ";
      print_property(p->left, model, out, prec + 1);
      break;
    case PropKind::kNext:
      out += "X ";
      print_property(p->left, model, out, prec + 1);
      break;
    case PropKind::kUntil:
      if (p->left->kind == PropKind::kTrue) {
        out += "F ";
        print_property(p->right, model, out, prec + 1);
      } else {
        print_property(p->left, model, out, prec + 1);
        out += " U ";
        print_property(p->right, model, out, prec);  // right-associative
      }
      break;
    case PropKind::kAnd:
      print_property(p->left, model, out, prec);
      out += " & ";
      print_property(p->right, model, out, prec + 1);
      break;
    case PropKind::kOr:
      print_property(p->left, model, out, prec);
      out += " | ";
      print_property(p->right, model, out, prec + 1);
      break;
  }
  if (parens) out += ')';
}

inline std::string property_to_string(const PropPtr& p, const Model& model) {
  std::string out;
  print_property(p, model, out);
  return out;
}

}  // namespace prop

using prop::eval_state_pred;
using prop::is_state_pred;
using prop::print_property;
using prop::property_to_string;

}  // namespace resmc
