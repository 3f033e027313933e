#pragma once

#include <algorithm>
#include <array>
#include <vector>

namespace sipptrack {

/// c0 + c1*s + c2*s^2 + c3*s^3 with local time s = t - t_begin, valid on
/// [t_begin, t_end].
struct PolynomialPiece {
  std::array<double, 4> coeffs{};
  double t_begin = 0.0;
  double t_end = 0.0;

  double value(double t) const {
    const double s = t - t_begin;
    return coeffs[0] + s * (coeffs[1] + s * (coeffs[2] + s * coeffs[3]));
  }
  double derivative(double t) const {
    const double s = t - t_begin;
    return coeffs[1] + s * (2.0 * coeffs[2] + s * 3.0 * coeffs[3]);
  }
  double second_derivative(double t) const {
    const double s = t - t_begin;
    return 2.0 * coeffs[2] + 6.0 * coeffs[3] * s;
  }

  static PolynomialPiece constant(double value, double t_begin, double t_end) {
    return {{value, 0.0, 0.0, 0.0}, t_begin, t_end};
  }

  /// Cubic Hermite interpolant of (p0, v0) at t_begin and (p1, v1) at t_end.
  static PolynomialPiece hermite(double p0, double v0, double p1, double v1, double t_begin, double t_end) {
    const double T = t_end - t_begin;
    const double c2 = (3.0 * (p1 - p0) - T * (2.0 * v0 + v1)) / (T * T);
    const double c3 = (2.0 * (p0 - p1) + T * (v0 + v1)) / (T * T * T);
    return {{p0, v0, c2, c3}, t_begin, t_end};
  }
};

/// Ordered, contiguous pieces; evaluation clamps to the first/last piece
/// outside the covered span.
class PiecewisePolynomial {
 public:
  void append(const PolynomialPiece& p) { pieces_.push_back(p); }
  const std::vector<PolynomialPiece>& pieces() const { return pieces_; }
  bool empty() const { return pieces_.empty(); }
  double t_begin() const { return pieces_.front().t_begin; }
  double t_end() const { return pieces_.back().t_end; }

  double value(double t) const {
    const auto& p = piece_at(t);
    return p.value(std::clamp(t, p.t_begin, p.t_end));
  }
  double derivative(double t) const {
    const auto& p = piece_at(t);
    if (t < p.t_begin || t > p.t_end) return 0.0;
    return p.derivative(t);
  }
  double second_derivative(double t) const {
    const auto& p = piece_at(t);
    if (t < p.t_begin || t > p.t_end) return 0.0;
    return p.second_derivative(t);
  }

  const PolynomialPiece& piece_at(double t) const {
    auto it = std::upper_bound(pieces_.begin(), pieces_.end(), t,
                               [](double v, const PolynomialPiece& p) { return v < p.t_end; });
    if (it == pieces_.end()) return pieces_.back();
    return *it;
  }

 private:
  std::vector<PolynomialPiece> pieces_;
};

}  // namespace sipptrack
