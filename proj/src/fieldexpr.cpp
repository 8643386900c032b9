#include "pconvex/fieldexpr.hpp"

#include <charconv>
#include <cmath>
#include <cctype>

#include "pconvex/errors.hpp"

namespace pconvex {

using Op = ScalarFieldExpr::Op;
using NodePtr = ScalarFieldExpr::NodePtr;
using Node = ScalarFieldExpr::Node;

// --- builders --------------------------------------------------------------

NodePtr ScalarFieldExpr::num(double v) {
  if (!std::isfinite(v)) throw Error("non-finite literal in expression");
  if (v < 0.0 || (v == 0.0 && std::signbit(v))) return binary(Op::Sub, num(0.0), num(-v));
  auto n = std::make_shared<Node>();
  n->op = Op::Num;
  n->num = v;
  return n;
}

NodePtr ScalarFieldExpr::var(int i) {
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->var = i;
  return n;
}

NodePtr ScalarFieldExpr::binary(Op op, NodePtr a, NodePtr b) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

NodePtr ScalarFieldExpr::call(Op op, NodePtr a) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(a);
  return n;
}

ScalarFieldExpr::ScalarFieldExpr(NodePtr root, int n) : root_(std::move(root)), n_(n) {}

// --- parser ----------------------------------------------------------------

namespace {

class Parser {
 public:
  Parser(std::string_view src, int n) : src_(src), n_(n) {}

  NodePtr run() {
    skip();
    if (pos_ >= src_.size()) throw SyntaxError("empty expression", pos_);
    NodePtr e = expr();
    skip();
    if (pos_ != src_.size()) throw SyntaxError(std::string("unexpected '") + src_[pos_] + "'", pos_);
    return e;
  }

 private:
  void skip() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr e = term();
    for (;;) {
      if (accept('+'))
        e = ScalarFieldExpr::binary(Op::Add, e, term());
      else if (accept('-'))
        e = ScalarFieldExpr::binary(Op::Sub, e, term());
      else
        return e;
    }
  }

  NodePtr term() {
    NodePtr e = unary();
    for (;;) {
      if (accept('*'))
        e = ScalarFieldExpr::binary(Op::Mul, e, unary());
      else if (accept('/'))
        e = ScalarFieldExpr::binary(Op::Div, e, unary());
      else
        return e;
    }
  }

  NodePtr unary() {
    if (accept('-')) return ScalarFieldExpr::binary(Op::Sub, ScalarFieldExpr::num(0.0), unary());
    if (accept('+')) return unary();
    return factor();
  }

  NodePtr factor() {
    NodePtr b = base();
    if (accept('^')) return ScalarFieldExpr::binary(Op::Pow, b, unary());
    return b;
  }

  NodePtr base() {
    skip();
    if (pos_ >= src_.size()) throw SyntaxError("unexpected end of expression", pos_);
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (c == '(') {
      ++pos_;
      NodePtr e = expr();
      if (!accept(')')) throw SyntaxError("expected ')'", pos_);
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    throw SyntaxError(std::string("unexpected '") + c + "'", pos_);
  }

  NodePtr number() {
    const std::size_t start = pos_;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(src_.data() + pos_, src_.data() + src_.size(), v);
    if (ec != std::errc() || ptr == src_.data() + pos_) throw SyntaxError("malformed number", start);
    pos_ = static_cast<std::size_t>(ptr - src_.data());
    return ScalarFieldExpr::num(v);
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    std::size_t end = pos_;
    while (end < src_.size() && std::isalpha(static_cast<unsigned char>(src_[end]))) ++end;
    const std::string_view word = src_.substr(start, end - start);

    if (word == "x") {
      std::size_t d = end;
      while (d < src_.size() && std::isdigit(static_cast<unsigned char>(src_[d]))) ++d;
      if (d == end || src_[end] == '0') throw SyntaxError("malformed variable name", start);
      long idx = 0;
      std::from_chars(src_.data() + end, src_.data() + d, idx);
      if (idx > n_) throw UnknownVariable("variable x" + std::to_string(idx) + " exceeds dimension " + std::to_string(n_), start);
      pos_ = d;
      return ScalarFieldExpr::var(static_cast<int>(idx - 1));
    }

    Op op;
    if (word == "exp")
      op = Op::Exp;
    else if (word == "log")
      op = Op::Log;
    else if (word == "sqrt")
      op = Op::Sqrt;
    else
      throw SyntaxError("unknown identifier '" + std::string(word) + "'", start);
    pos_ = end;
    if (!accept('(')) throw SyntaxError("expected '(' after " + std::string(word), pos_);
    skip();
    if (pos_ < src_.size() && src_[pos_] == ')')
      throw ArityError(std::string(word) + " takes exactly one argument", pos_);
    NodePtr arg = expr();
    skip();
    if (pos_ < src_.size() && src_[pos_] == ',')
      throw ArityError(std::string(word) + " takes exactly one argument", pos_);
    if (!accept(')')) throw SyntaxError("expected ')'", pos_);
    return ScalarFieldExpr::call(op, arg);
  }

  std::string_view src_;
  int n_;
  std::size_t pos_ = 0;
};

// --- printing --------------------------------------------------------------

void print(const NodePtr& n, std::string& out) {
  switch (n->op) {
    case Op::Num: {
      char buf[64];
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, n->num);
      out.append(buf, ptr);
      return;
    }
    case Op::Var:
      out += "x" + std::to_string(n->var + 1);
      return;
    case Op::Exp:
    case Op::Log:
    case Op::Sqrt:
      out += n->op == Op::Exp ? "exp(" : n->op == Op::Log ? "log(" : "sqrt(";
      print(n->lhs, out);
      out += ")";
      return;
    default: {
      const char* sym = n->op == Op::Add   ? " + "
                        : n->op == Op::Sub ? " - "
                        : n->op == Op::Mul ? " * "
                        : n->op == Op::Div ? " / "
                                           : " ^ ";
      out += "(";
      print(n->lhs, out);
      out += sym;
      print(n->rhs, out);
      out += ")";
    }
  }
}

// --- evaluation ------------------------------------------------------------

bool is_constant(const NodePtr& n) {
  if (!n) return true;
  if (n->op == Op::Var) return false;
  return is_constant(n->lhs) && is_constant(n->rhs);
}

double eval_value(const NodePtr& n, std::span<const double> x);

// Integer exponent when the exponent subtree is a constant integer of modest size.
bool integer_exponent(const NodePtr& e, long& k) {
  if (!is_constant(e)) return false;
  const double v = eval_value(e, {});
  if (v != std::round(v) || std::abs(v) > 64) return false;
  k = static_cast<long>(v);
  return true;
}

double ipow(double a, long k) {
  double r = 1.0, b = a;
  for (long m = k < 0 ? -k : k; m; m >>= 1) {
    if (m & 1) r *= b;
    b *= b;
  }
  return r;
}

Jet2 ipow(const Jet2& a, long k, int n) {
  Jet2 r = Jet2::constant(n, 1.0), b = a;
  bool first = true;
  for (long m = k < 0 ? -k : k; m; m >>= 1) {
    if (m & 1) {
      r = first ? b : r * b;
      first = false;
    }
    if (m > 1) b = b * b;
  }
  return r;
}

[[noreturn]] void domain(const char* what, const NodePtr& n) { throw DomainError(what, node_to_string(n)); }

double eval_value(const NodePtr& n, std::span<const double> x) {
  switch (n->op) {
    case Op::Num:
      return n->num;
    case Op::Var:
      return x[n->var];
    case Op::Add:
      return eval_value(n->lhs, x) + eval_value(n->rhs, x);
    case Op::Sub:
      return eval_value(n->lhs, x) - eval_value(n->rhs, x);
    case Op::Mul:
      return eval_value(n->lhs, x) * eval_value(n->rhs, x);
    case Op::Div: {
      const double d = eval_value(n->rhs, x);
      if (d == 0.0) domain("division by zero", n);
      return eval_value(n->lhs, x) / d;
    }
    case Op::Pow: {
      const double a = eval_value(n->lhs, x);
      long k = 0;
      if (integer_exponent(n->rhs, k)) {
        if (k < 0 && a == 0.0) domain("negative power of zero", n);
        return k < 0 ? 1.0 / ipow(a, k) : ipow(a, k);
      }
      if (a <= 0.0) domain("non-integer power of non-positive base", n);
      return std::pow(a, eval_value(n->rhs, x));
    }
    case Op::Exp:
      return std::exp(eval_value(n->lhs, x));
    case Op::Log: {
      const double a = eval_value(n->lhs, x);
      if (a <= 0.0) domain("log of non-positive value", n);
      return std::log(a);
    }
    case Op::Sqrt: {
      const double a = eval_value(n->lhs, x);
      if (a <= 0.0) domain("sqrt of non-positive value", n);
      return std::sqrt(a);
    }
  }
  return 0.0;
}

Jet2 eval_jet(const NodePtr& n, std::span<const double> x, int dim) {
  switch (n->op) {
    case Op::Num:
      return Jet2::constant(dim, n->num);
    case Op::Var:
      return Jet2::variable(dim, n->var, x[n->var]);
    case Op::Add:
      return eval_jet(n->lhs, x, dim) + eval_jet(n->rhs, x, dim);
    case Op::Sub:
      return eval_jet(n->lhs, x, dim) - eval_jet(n->rhs, x, dim);
    case Op::Mul:
      return eval_jet(n->lhs, x, dim) * eval_jet(n->rhs, x, dim);
    case Op::Div: {
      const Jet2 d = eval_jet(n->rhs, x, dim);
      if (d.value == 0.0) domain("division by zero", n);
      return eval_jet(n->lhs, x, dim) / d;
    }
    case Op::Pow: {
      const Jet2 a = eval_jet(n->lhs, x, dim);
      long k = 0;
      if (integer_exponent(n->rhs, k)) {
        if (k == 0) return Jet2::constant(dim, 1.0);
        if (k < 0 && a.value == 0.0) domain("negative power of zero", n);
        const Jet2 pk = ipow(a, k, dim);
        return k < 0 ? Jet2::constant(dim, 1.0) / pk : pk;
      }
      if (a.value <= 0.0) domain("non-integer power of non-positive base", n);
      if (is_constant(n->rhs)) {
        const double c = eval_value(n->rhs, {});
        const double v = std::pow(a.value, c);
        return chain(a, v, c * v / a.value, c * (c - 1.0) * v / (a.value * a.value));
      }
      // a^b = exp(b log a)
      const Jet2 la = chain(a, std::log(a.value), 1.0 / a.value, -1.0 / (a.value * a.value));
      const Jet2 e = eval_jet(n->rhs, x, dim) * la;
      const double v = std::exp(e.value);
      return chain(e, v, v, v);
    }
    case Op::Exp: {
      const Jet2 a = eval_jet(n->lhs, x, dim);
      const double v = std::exp(a.value);
      return chain(a, v, v, v);
    }
    case Op::Log: {
      const Jet2 a = eval_jet(n->lhs, x, dim);
      if (a.value <= 0.0) domain("log of non-positive value", n);
      return chain(a, std::log(a.value), 1.0 / a.value, -1.0 / (a.value * a.value));
    }
    case Op::Sqrt: {
      const Jet2 a = eval_jet(n->lhs, x, dim);
      if (a.value <= 0.0) domain("sqrt of non-positive value", n);
      const double s = std::sqrt(a.value);
      return chain(a, s, 0.5 / s, -0.25 / (s * a.value));
    }
  }
  return {};
}

}  // namespace

ScalarFieldExpr ScalarFieldExpr::parse(std::string_view src, int n) {
  if (n < 1) throw ShapeError("expression dimension must be positive");
  return ScalarFieldExpr(Parser(src, n).run(), n);
}

std::string node_to_string(const NodePtr& node) {
  std::string out;
  print(node, out);
  return out;
}

std::string ScalarFieldExpr::to_string() const { return node_to_string(root_); }

bool same_tree(const NodePtr& a, const NodePtr& b) {
  if (!a || !b) return !a && !b;
  if (a->op != b->op) return false;
  if (a->op == Op::Num) return a->num == b->num;
  if (a->op == Op::Var) return a->var == b->var;
  return same_tree(a->lhs, b->lhs) && same_tree(a->rhs, b->rhs);
}

bool operator==(const ScalarFieldExpr& a, const ScalarFieldExpr& b) {
  return a.n_ == b.n_ && same_tree(a.root_, b.root_);
}

double ScalarFieldExpr::eval(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != n_) throw ShapeError("point dimension does not match expression");
  return eval_value(root_, x);
}

Jet2 ScalarFieldExpr::eval_jet2(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != n_) throw ShapeError("point dimension does not match expression");
  return eval_jet(root_, x, n_);
}

Field ScalarFieldExpr::as_field() const {
  const ScalarFieldExpr self = *this;
  return Field(
      n_, [self](std::span<const double> x) { return self.eval_jet2(x); }, to_string(),
      [self](std::span<const double> x) { return self.eval(x); });
}

ScalarFieldExpr compose_df(const ScalarFieldExpr& r, const ScalarFieldExpr& phi, double K, double eta,
                           bool* degenerate) {
  if (r.dim() != phi.dim()) throw ShapeError("compose_df: dimension mismatch");
  if (!(K > 0.0)) throw PreconditionError("compose_df: K must be positive");
  if (!(eta > 0.0 && eta <= 1.0)) throw PreconditionError("compose_df: eta must lie in (0, 1]");
  if (degenerate) *degenerate = eta == 1.0;
  using E = ScalarFieldExpr;
  // -(-r * exp(-(K*phi)))^eta
  NodePtr neg_r = E::binary(Op::Sub, E::num(0.0), r.root());
  NodePtr damp = E::call(Op::Exp, E::binary(Op::Sub, E::num(0.0), E::binary(Op::Mul, E::num(K), phi.root())));
  NodePtr base = E::binary(Op::Mul, neg_r, damp);
  NodePtr rho = E::binary(Op::Sub, E::num(0.0), E::binary(Op::Pow, base, E::num(eta)));
  return ScalarFieldExpr(rho, r.dim());
}

}  // namespace pconvex
