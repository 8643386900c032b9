#pragma once

// Second-order jets and the type-erased scalar field used for weights,
// defining functions and form coefficients.

#include <functional>
#include <memory>
#include <span>
#include <string>

#include <Eigen/Dense>

namespace pconvex {

/// Value, gradient and (symmetric) Hessian of a scalar function at a point.
struct Jet2 {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;

  static Jet2 constant(int n, double v);
  static Jet2 variable(int n, int i, double v);  // 0-based coordinate
};

Jet2 operator+(const Jet2& a, const Jet2& b);
Jet2 operator-(const Jet2& a, const Jet2& b);
Jet2 operator*(const Jet2& a, const Jet2& b);
Jet2 operator*(double s, const Jet2& a);
Jet2 operator/(const Jet2& a, const Jet2& b);

/// f(a) given f, f', f'' at a.value.
Jet2 chain(const Jet2& a, double f, double df, double d2f);

class Field {
 public:
  using JetFn = std::function<Jet2(std::span<const double>)>;
  using ValueFn = std::function<double(std::span<const double>)>;

  Field() = default;
  Field(int n, JetFn jet, std::string label, ValueFn value = {});

  static Field constant(int n, double c);
  /// a * f + b * g, evaluated as a*f(x) + b*g(x).
  static Field combine(double a, const Field& f, double b, const Field& g);

  int dim() const noexcept { return n_; }
  const std::string& label() const noexcept { return label_; }
  explicit operator bool() const noexcept { return static_cast<bool>(jet_); }

  Jet2 jet(std::span<const double> x) const;
  double value(std::span<const double> x) const;

 private:
  int n_ = 0;
  std::shared_ptr<const JetFn> jet_;
  std::shared_ptr<const ValueFn> value_;
  std::string label_;
};

}  // namespace pconvex
