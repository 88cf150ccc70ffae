#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace rpg {

class Tape;

enum class Op : std::uint8_t {
  Const,
  Param,
  Add,
  Sub,
  Mul,
  Div,
  Ln,
  Exp,
  Neg,
  Max,
  Min,
  StopGradient,
};

/// Handle to a node on a Tape. Cheap to copy; only valid while its tape lives.
class Var {
 public:
  Var() = default;

  double value() const;
  std::uint32_t id() const { return id_; }
  Tape* tape() const { return tape_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

/// Scalar reverse-mode tape.
///
/// Nodes are appended in creation order, so the creation order is a
/// topological order and backward() is a single reverse sweep. Each node
/// stores the local partials with respect to its (at most two) parents,
/// computed when the node is created.
///
/// Max/Min route the gradient to the first operand on ties. StopGradient
/// keeps its parent's value and has no parent edge, so no adjoint flows
/// through it.
///
/// A tape is single-owner: build and differentiate it on one thread.
class Tape {
 public:
  /// Registers one Param node per entry of `params`, with ids 0..n-1.
  explicit Tape(std::span<const double> params);

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  std::size_t param_count() const { return param_count_; }
  std::size_t size() const { return nodes_.size(); }

  Var param(std::size_t i);
  Var constant(double v);

  double value(Var v) const { return nodes_[v.id_].value; }
  Op op(Var v) const { return nodes_[v.id_].op; }

  /// d root / d param_i for every param. Does not modify the tape.
  std::vector<double> backward(Var root) const;

  // Forward operations; most callers use the free operators below.
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);   ///< throws DomainError when b == 0
  Var ln(Var a);           ///< throws DomainError when a <= 0
  Var exp(Var a);
  Var neg(Var a);
  Var max(Var a, Var b);
  Var min(Var a, Var b);
  Var stop_gradient(Var a);

 private:
  static constexpr std::uint32_t kNone = 0xffffffffu;

  struct Node {
    double value = 0.0;
    double da = 0.0;  // d value / d parent a
    double db = 0.0;  // d value / d parent b
    std::uint32_t a = kNone;
    std::uint32_t b = kNone;
    Op op = Op::Const;
  };

  Var push(Node n);
  void check(Var v) const;

  std::vector<Node> nodes_;
  std::size_t param_count_ = 0;
};

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);

Var operator+(Var a, double b);
Var operator+(double a, Var b);
Var operator-(Var a, double b);
Var operator-(double a, Var b);
Var operator*(Var a, double b);
Var operator*(double a, Var b);
Var operator/(Var a, double b);
Var operator/(double a, Var b);

Var ln(Var a);
Var exp(Var a);
Var max(Var a, Var b);
Var min(Var a, Var b);
Var stop_gradient(Var a);

}  // namespace rpg
