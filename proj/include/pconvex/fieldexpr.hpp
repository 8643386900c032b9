#pragma once

// Scalar-field expressions over x1..xn with exact second-order forward
// differentiation.
//
// Grammar (whitespace insignificant):
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := ('-'|'+') unary | factor
//   factor := base ('^' unary)?            right associative
//   base   := number | var | '(' expr ')' | func '(' expr ')'
//   func   := exp | log | sqrt
//   var    := x[1-9][0-9]*
// Unary minus is stored as (0 - e).

#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "pconvex/field.hpp"

namespace pconvex {

class ScalarFieldExpr {
 public:
  enum class Op { Num, Var, Add, Sub, Mul, Div, Pow, Exp, Log, Sqrt };

  struct Node {
    Op op = Op::Num;
    double num = 0.0;  // Num
    int var = 0;       // Var, 0-based
    std::shared_ptr<const Node> lhs, rhs;
  };
  using NodePtr = std::shared_ptr<const Node>;

  ScalarFieldExpr() = default;
  ScalarFieldExpr(NodePtr root, int n);

  static ScalarFieldExpr parse(std::string_view src, int n);

  // Tree builders. A negative literal is built as (0 - |v|) so that printing
  // round-trips.
  static NodePtr num(double v);
  static NodePtr var(int i);  // 0-based
  static NodePtr binary(Op op, NodePtr a, NodePtr b);
  static NodePtr call(Op op, NodePtr a);

  int dim() const noexcept { return n_; }
  const NodePtr& root() const noexcept { return root_; }

  /// Fully parenthesized text that parses back to the same tree.
  std::string to_string() const;

  double eval(std::span<const double> x) const;
  Jet2 eval_jet2(std::span<const double> x) const;

  Field as_field() const;

  friend bool operator==(const ScalarFieldExpr& a, const ScalarFieldExpr& b);

 private:
  NodePtr root_;
  int n_ = 0;
};

bool same_tree(const ScalarFieldExpr::NodePtr& a, const ScalarFieldExpr::NodePtr& b);
std::string node_to_string(const ScalarFieldExpr::NodePtr& node);

inline Jet2 eval_jet2(const ScalarFieldExpr& f, std::span<const double> x) { return f.eval_jet2(x); }

/// rho = -(-r * exp(-K*phi))^eta. Requires K > 0 and 0 < eta <= 1; eta = 1 is
/// the degenerate case rho = r * exp(-K*phi) and sets *degenerate if given.
ScalarFieldExpr compose_df(const ScalarFieldExpr& r, const ScalarFieldExpr& phi, double K, double eta,
                           bool* degenerate = nullptr);

}  // namespace pconvex
