#pragma once

#include <stdexcept>
#include <string>

namespace levyot {

// Bad input: wrong dimensions, invalid parameters, malformed documents.
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// A computation produced a non-finite value or could not converge.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class QuadratureError : public NumericalError {
public:
  QuadratureError(const std::string& what, std::size_t piece)
      : NumericalError(what + " (density piece " + std::to_string(piece) + ")"),
        piece_(piece) {}
  std::size_t piece() const noexcept { return piece_; }

private:
  std::size_t piece_;
};

// Explicit jump step violates the stability bound; carries a usable step size.
class CflError : public NumericalError {
public:
  CflError(const std::string& what, double suggested_dt)
      : NumericalError(what + " (suggested dt <= " + std::to_string(suggested_dt) + ")"),
        suggested_dt_(suggested_dt) {}
  double suggested_dt() const noexcept { return suggested_dt_; }

private:
  double suggested_dt_;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

}  // namespace levyot
