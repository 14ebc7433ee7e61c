// Walks the drift parameter over a grid and prints, for each rank of x0,
// whether the Wishart SDE has a solution. Inadmissible points come with the
// moment that goes negative and the time at which it does.
#include <iostream>
#include <vector>

#include "wishart/wishart.hpp"

using namespace wishart;

int main() {
  const int p = 4;
  std::cout << "p = " << p << "\n";
  std::cout << "alpha  rank  admissible  certificate\n";
  for (int k = 0; k <= 4 * p; ++k) {
    const Rational alpha = Rational(k) / 4;
    for (int r = 0; r <= p; ++r) {
      std::vector<Rational> e0;
      Rational b(1);
      for (int n = 1; n <= p; ++n) {
        b = n <= r ? b * (r - n + 1) / n : Rational(0);
        e0.push_back(b);
      }
      const bool ok = sde_admissible(alpha, r, p).admissible;
      std::cout << to_string(alpha) << "\t" << r << "\t" << (ok ? "yes" : "no") << "\t";
      if (const auto cert = nonexistence_certificate(p, alpha, e0)) {
        std::cout << "E e_" << cert->n << "(t) < 0 at t = " << to_string(cert->witness_t) << " ("
                  << to_string(cert->kind) << ")";
      }
      std::cout << "\n";
    }
  }
}
