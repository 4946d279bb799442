#include "coopmatch/polynomial.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "coopmatch/errors.hpp"

namespace coopmatch {

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Polynomial parse() {
    std::vector<Polynomial::Term> terms;
    skip_ws();
    if (at_end()) fail("empty expression");
    bool first = true;
    while (!at_end()) {
      double sign = 1.0;
      if (peek() == '+' || peek() == '-') {
        sign = get() == '-' ? -1.0 : 1.0;
        skip_ws();
      } else if (!first) {
        fail("expected '+' or '-'");
      }
      auto term = parse_term();
      term.coeff *= sign;
      terms.push_back(std::move(term));
      first = false;
      skip_ws();
    }
    return Polynomial(std::move(terms));
  }

 private:
  Polynomial::Term parse_term() {
    Polynomial::Term term;
    term.coeff = 1.0;
    for (;;) {
      skip_ws();
      if (at_end()) fail("unexpected end of expression");
      const char ch = peek();
      if (ch == 'x' || ch == 'z') {
        get();
        Polynomial::Factor f{ch, parse_int("variable index"), 1};
        if (f.index < 1) fail("variable index must be >= 1");
        skip_ws();
        if (!at_end() && peek() == '^') {
          get();
          skip_ws();
          f.power = parse_int("exponent");
          if (f.power < 1) fail("exponent must be >= 1");
        }
        term.factors.push_back(f);
      } else if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') {
        const std::string rest(text_.substr(pos_));
        char* end = nullptr;
        const double value = std::strtod(rest.c_str(), &end);
        if (end == rest.c_str()) fail("bad number");
        pos_ += static_cast<std::size_t>(end - rest.c_str());
        term.coeff *= value;
      } else {
        fail(std::string("unexpected character '") + ch + "'");
      }
      skip_ws();
      if (at_end() || peek() != '*') break;
      get();
    }
    return term;
  }

  int parse_int(const char* what) {
    const std::size_t start = pos_;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    if (pos_ == start) fail(std::string("expected ") + what);
    return std::atoi(std::string(text_.substr(start, pos_ - start)).c_str());
  }

  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }
  char get() { return text_[pos_++]; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("polynomial '" + std::string(text_) + "' at column " + std::to_string(pos_ + 1) + ": " +
                     msg);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Polynomial Polynomial::parse(std::string_view text) { return Parser(text).parse(); }

Polynomial Polynomial::constant(double c) { return Polynomial({Term{c, {}}}); }

Polynomial Polynomial::linear(char var, int index, double coeff) {
  return Polynomial({Term{coeff, {Factor{var, index, 1}}}});
}

double Polynomial::operator()(const Vector& z, const Vector& x) const {
  double sum = 0.0;
  for (const auto& term : terms_) {
    double prod = term.coeff;
    for (const auto& f : term.factors) {
      const double base = f.var == 'x' ? x(f.index - 1) : z(f.index - 1);
      prod *= f.power == 1 ? base : std::pow(base, f.power);
    }
    sum += prod;
  }
  return sum;
}

std::string Polynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::string out;
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const auto& t = terms_[i];
    const bool negative = std::signbit(t.coeff);
    if (i == 0) {
      if (negative) out += "-";
    } else {
      out += negative ? " - " : " + ";
    }
    out += format_double(std::abs(t.coeff));
    for (const auto& f : t.factors) {
      out += "*";
      out += f.var;
      out += std::to_string(f.index);
      if (f.power != 1) out += "^" + std::to_string(f.power);
    }
  }
  return out;
}

int Polynomial::max_index(char var) const {
  int m = 0;
  for (const auto& t : terms_) {
    for (const auto& f : t.factors) {
      if (f.var == var && f.index > m) m = f.index;
    }
  }
  return m;
}

}  // namespace coopmatch
