#include "rpg/autodiff.hpp"

#include <cmath>
#include <string>

#include "rpg/errors.hpp"

namespace rpg {

double Var::value() const { return tape_->value(*this); }

Tape::Tape(std::span<const double> params) : param_count_(params.size()) {
  nodes_.reserve(params.size() + 64);
  for (double p : params) nodes_.push_back({p, 0.0, 0.0, kNone, kNone, Op::Param});
}

Var Tape::param(std::size_t i) {
  if (i >= param_count_) throw DomainError("param index out of range");
  return Var(this, static_cast<std::uint32_t>(i));
}

Var Tape::constant(double v) { return push({v, 0.0, 0.0, kNone, kNone, Op::Const}); }

Var Tape::push(Node n) {
  nodes_.push_back(n);
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

void Tape::check(Var v) const {
  if (v.tape_ != this || v.id_ >= nodes_.size()) {
    throw DomainError("operand does not live on this tape");
  }
}

Var Tape::add(Var a, Var b) {
  check(a);
  check(b);
  return push({value(a) + value(b), 1.0, 1.0, a.id_, b.id_, Op::Add});
}

Var Tape::sub(Var a, Var b) {
  check(a);
  check(b);
  return push({value(a) - value(b), 1.0, -1.0, a.id_, b.id_, Op::Sub});
}

Var Tape::mul(Var a, Var b) {
  check(a);
  check(b);
  const double va = value(a);
  const double vb = value(b);
  return push({va * vb, vb, va, a.id_, b.id_, Op::Mul});
}

Var Tape::div(Var a, Var b) {
  check(a);
  check(b);
  const double va = value(a);
  const double vb = value(b);
  if (vb == 0.0) throw DomainError("division by zero on tape");
  return push({va / vb, 1.0 / vb, -va / (vb * vb), a.id_, b.id_, Op::Div});
}

Var Tape::ln(Var a) {
  check(a);
  const double va = value(a);
  if (!(va > 0.0)) throw DomainError("ln of nonpositive value " + std::to_string(va));
  return push({std::log(va), 1.0 / va, 0.0, a.id_, kNone, Op::Ln});
}

Var Tape::exp(Var a) {
  check(a);
  const double e = std::exp(value(a));
  return push({e, e, 0.0, a.id_, kNone, Op::Exp});
}

Var Tape::neg(Var a) {
  check(a);
  return push({-value(a), -1.0, 0.0, a.id_, kNone, Op::Neg});
}

Var Tape::max(Var a, Var b) {
  check(a);
  check(b);
  const bool first = value(a) >= value(b);
  return push({first ? value(a) : value(b), first ? 1.0 : 0.0, first ? 0.0 : 1.0, a.id_, b.id_,
               Op::Max});
}

Var Tape::min(Var a, Var b) {
  check(a);
  check(b);
  const bool first = value(a) <= value(b);
  return push({first ? value(a) : value(b), first ? 1.0 : 0.0, first ? 0.0 : 1.0, a.id_, b.id_,
               Op::Min});
}

Var Tape::stop_gradient(Var a) {
  check(a);
  return push({value(a), 0.0, 0.0, kNone, kNone, Op::StopGradient});
}

std::vector<double> Tape::backward(Var root) const {
  check(root);
  std::vector<double> adj(root.id_ + 1, 0.0);
  adj[root.id_] = 1.0;
  for (std::size_t i = root.id_ + 1; i-- > 0;) {
    const double g = adj[i];
    if (g == 0.0) continue;
    const Node& n = nodes_[i];
    if (n.a != kNone) adj[n.a] += g * n.da;
    if (n.b != kNone) adj[n.b] += g * n.db;
  }
  std::vector<double> grad(param_count_, 0.0);
  for (std::size_t i = 0; i < param_count_ && i < adj.size(); ++i) grad[i] = adj[i];
  return grad;
}

namespace {

Tape& owner(Var v) {
  if (v.tape() == nullptr) throw DomainError("operation on an unbound Var");
  return *v.tape();
}

}  // namespace

Var operator+(Var a, Var b) { return owner(a).add(a, b); }
Var operator-(Var a, Var b) { return owner(a).sub(a, b); }
Var operator*(Var a, Var b) { return owner(a).mul(a, b); }
Var operator/(Var a, Var b) { return owner(a).div(a, b); }
Var operator-(Var a) { return owner(a).neg(a); }

Var operator+(Var a, double b) { return a + owner(a).constant(b); }
Var operator+(double a, Var b) { return owner(b).constant(a) + b; }
Var operator-(Var a, double b) { return a - owner(a).constant(b); }
Var operator-(double a, Var b) { return owner(b).constant(a) - b; }
Var operator*(Var a, double b) { return a * owner(a).constant(b); }
Var operator*(double a, Var b) { return owner(b).constant(a) * b; }
Var operator/(Var a, double b) { return a / owner(a).constant(b); }
Var operator/(double a, Var b) { return owner(b).constant(a) / b; }

Var ln(Var a) { return owner(a).ln(a); }
Var exp(Var a) { return owner(a).exp(a); }
Var max(Var a, Var b) { return owner(a).max(a, b); }
Var min(Var a, Var b) { return owner(a).min(a, b); }
Var stop_gradient(Var a) { return owner(a).stop_gradient(a); }

}  // namespace rpg
