#pragma once

#include <cstddef>
#include <initializer_list>
#include <utility>
#include <vector>

namespace wishart {

/// Dense univariate polynomial c_0 + c_1 t + ... + c_d t^d. Trailing zero
/// coefficients are kept; degree() reports the last non-zero one.
template <class Coeff>
class Polynomial {
 public:
  Polynomial() : c_{Coeff(0)} {}
  explicit Polynomial(std::vector<Coeff> coeffs) : c_(std::move(coeffs)) {
    if (c_.empty()) c_.push_back(Coeff(0));
  }
  Polynomial(std::initializer_list<Coeff> coeffs) : Polynomial(std::vector<Coeff>(coeffs)) {}

  const std::vector<Coeff>& coeffs() const noexcept { return c_; }
  std::size_t size() const noexcept { return c_.size(); }
  const Coeff& operator[](std::size_t i) const { return c_[i]; }

  /// Index of the highest non-zero coefficient, -1 for the zero polynomial.
  int degree() const {
    for (std::size_t i = c_.size(); i-- > 0;) {
      if (c_[i] != Coeff(0)) return static_cast<int>(i);
    }
    return -1;
  }

  template <class T>
  T operator()(const T& t) const {
    T acc = T(c_.back());
    for (std::size_t i = c_.size() - 1; i-- > 0;) acc = acc * t + T(c_[i]);
    return acc;
  }

  /// Antiderivative vanishing at 0.
  Polynomial antiderivative() const {
    std::vector<Coeff> out(c_.size() + 1, Coeff(0));
    for (std::size_t i = 0; i < c_.size(); ++i) out[i + 1] = c_[i] / Coeff(static_cast<long>(i + 1));
    return Polynomial(std::move(out));
  }

  Polynomial& operator*=(const Coeff& k) {
    for (auto& c : c_) c *= k;
    return *this;
  }

  friend bool operator==(const Polynomial& a, const Polynomial& b) {
    const std::size_t n = a.c_.size() > b.c_.size() ? a.c_.size() : b.c_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Coeff x = i < a.c_.size() ? a.c_[i] : Coeff(0);
      const Coeff y = i < b.c_.size() ? b.c_[i] : Coeff(0);
      if (x != y) return false;
    }
    return true;
  }

  void set(std::size_t i, Coeff v) {
    if (i >= c_.size()) c_.resize(i + 1, Coeff(0));
    c_[i] = std::move(v);
  }

 private:
  std::vector<Coeff> c_;
};

}  // namespace wishart
