#pragma once

#include "resmc/errors.hpp"
#include "resmc/model.hpp"
#include "resmc/property.hpp"

namespace resmc {

enum class Verdict { kTrue, kFalse, kUndecided };

namespace detail {

// One-state progression: the result holds on the trace suffix starting at
// `state` iff the returned formula holds on the suffix starting one step
// later. Constant folding in the prop:: builders keeps residuals compact.
inline PropPtr progress(const PropPtr& p, const Model& model,
                        const State& state) {
  switch (p->kind) {
    case PropKind::kTrue:
    case PropKind::kFalse:
      return p;
    case PropKind::kVarAtom:
    case PropKind::kLabelAtom:
      return prop::constant(eval_state_pred(p, model, state));
    case PropKind::kNot:
      return prop::negation(progress(p->left, model, state));
    case PropKind::kAnd:
      return prop::conjunction(progress(p->left, model, state),
                               progress(p->right, model, state));
    case PropKind::kOr:
      return prop::disjunction(progress(p->left, model, state),
                               progress(p->right, model, state));
    case PropKind::kNext:
      return p->left;
    case PropKind::kUntil:
      // a U b  =  b | (a & X(a U b))
      return prop::disjunction(
          progress(p->right, model, state),
          prop::conjunction(progress(p->left, model, state), p));
  }
  throw InternalError("progress: unhandled property node");
}

// Value of a residual formula when the trace ends here: obligations that
// still demand a state (atoms, X, U) fail, boolean structure composes.
inline bool empty_suffix_value(const PropPtr& p) {
  switch (p->kind) {
    case PropKind::kTrue:
      return true;
    case PropKind::kFalse:
    case PropKind::kVarAtom:
    case PropKind::kLabelAtom:
    case PropKind::kNext:
    case PropKind::kUntil:
      return false;
    case PropKind::kNot:
      return !empty_suffix_value(p->left);
    case PropKind::kAnd:
      return empty_suffix_value(p->left) && empty_suffix_value(p->right);
    case PropKind::kOr:
      return empty_suffix_value(p->left) || empty_suffix_value(p->right);
  }
  throw InternalError("empty_suffix_value: unhandled property node");
}

}  // namespace detail

// Incremental acceptance check over a growing trace. Feed states in order
// via step(); once the verdict leaves kUndecided further states are ignored.
// finalize() forces a decision when the trace ends while still undecided.
class Monitor {
 public:
  Monitor(PropPtr property, const Model& model)
      : model_(&model), residual_(std::move(property)) {}

  // Consumes the next trace state (call first with the initial state).
  void step(const State& state) {
    if (decided()) return;
    residual_ = detail::progress(residual_, *model_, state);
  }

  Verdict verdict() const {
    if (!prop::is_const(residual_)) return Verdict::kUndecided;
    return prop::const_value(residual_) ? Verdict::kTrue : Verdict::kFalse;
  }

  bool decided() const { return prop::is_const(residual_); }

  // Decides a still-open residual as if the trace ended here. Returns the
  // final verdict (never kUndecided).
  Verdict finalize() {
    if (!decided()) {
      residual_ = prop::constant(detail::empty_suffix_value(residual_));
    }
    return verdict();
  }

  const PropPtr& residual() const { return residual_; }

 private:
  const Model* model_;
  PropPtr residual_;
};

}  // namespace resmc
