#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "coopmatch/linalg.hpp"

namespace coopmatch {

/// Polynomial in the agent coordinates z1..z_nz and x1..x_nx.
///
/// Text form: terms joined by '+'/'-', each term a product of a numeric
/// coefficient and powers, e.g. "-x1^3 + 2*x1^2 - x1 - z1".
class Polynomial {
 public:
  struct Factor {
    char var;    // 'x' or 'z'
    int index;   // 1-based
    int power;   // >= 1
    friend bool operator==(const Factor&, const Factor&) = default;
  };
  struct Term {
    double coeff = 0.0;
    std::vector<Factor> factors;
    friend bool operator==(const Term&, const Term&) = default;
  };

  Polynomial() = default;
  explicit Polynomial(std::vector<Term> terms) : terms_(std::move(terms)) {}

  static Polynomial parse(std::string_view text);
  static Polynomial constant(double c);
  static Polynomial linear(char var, int index, double coeff);

  double operator()(const Vector& z, const Vector& x) const;

  std::string to_string() const;
  const std::vector<Term>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  /// Largest index used for the given variable (0 when absent).
  int max_index(char var) const;

  friend bool operator==(const Polynomial&, const Polynomial&) = default;

 private:
  std::vector<Term> terms_;
};

}  // namespace coopmatch
