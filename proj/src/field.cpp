#include "pconvex/field.hpp"

#include "pconvex/errors.hpp"

namespace pconvex {

Jet2 Jet2::constant(int n, double v) {
  return {v, Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, n)};
}

Jet2 Jet2::variable(int n, int i, double v) {
  Jet2 j = constant(n, v);
  j.grad[i] = 1.0;
  return j;
}

Jet2 operator+(const Jet2& a, const Jet2& b) { return {a.value + b.value, a.grad + b.grad, a.hess + b.hess}; }

Jet2 operator-(const Jet2& a, const Jet2& b) { return {a.value - b.value, a.grad - b.grad, a.hess - b.hess}; }

Jet2 operator*(const Jet2& a, const Jet2& b) {
  Eigen::MatrixXd cross = a.grad * b.grad.transpose();
  return {a.value * b.value, a.value * b.grad + b.value * a.grad,
          a.value * b.hess + b.value * a.hess + cross + cross.transpose()};
}

Jet2 operator*(double s, const Jet2& a) { return {s * a.value, s * a.grad, s * a.hess}; }

Jet2 operator/(const Jet2& a, const Jet2& b) {
  const double t = b.value;
  return a * chain(b, 1.0 / t, -1.0 / (t * t), 2.0 / (t * t * t));
}

Jet2 chain(const Jet2& a, double f, double df, double d2f) {
  return {f, df * a.grad, df * a.hess + d2f * (a.grad * a.grad.transpose())};
}

Field::Field(int n, JetFn jet, std::string label, ValueFn value)
    : n_(n),
      jet_(std::make_shared<const JetFn>(std::move(jet))),
      value_(value ? std::make_shared<const ValueFn>(std::move(value)) : nullptr),
      label_(std::move(label)) {}

Field Field::constant(int n, double c) {
  return Field(
      n, [n, c](std::span<const double>) { return Jet2::constant(n, c); }, std::to_string(c),
      [c](std::span<const double>) { return c; });
}

Field Field::combine(double a, const Field& f, double b, const Field& g) {
  if (f.dim() != g.dim()) throw ShapeError("Field::combine: dimension mismatch");
  return Field(
      f.dim(), [=](std::span<const double> x) { return a * f.jet(x) + b * g.jet(x); },
      std::to_string(a) + "*(" + f.label() + ") + " + std::to_string(b) + "*(" + g.label() + ")",
      [=](std::span<const double> x) { return a * f.value(x) + b * g.value(x); });
}

Jet2 Field::jet(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != n_) throw ShapeError("Field '" + label_ + "': point has wrong dimension");
  return (*jet_)(x);
}

double Field::value(std::span<const double> x) const {
  if (value_) {
    if (static_cast<int>(x.size()) != n_) throw ShapeError("Field '" + label_ + "': point has wrong dimension");
    return (*value_)(x);
  }
  return jet(x).value;
}

}  // namespace pconvex
