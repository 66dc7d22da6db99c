#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace projnorm {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A density matrix failed its shape, Hermiticity, trace or positivity check.
class InvalidState : public Error {
 public:
  using Error::Error;
};

/// An operation received a tensor over the wrong scalar field.
class InvalidField : public Error {
 public:
  using Error::Error;
};

/// Operand shapes or dimensions do not agree.
class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

/// A computation would exceed its configured work budget.
///
/// `required()` reports the amount of work that was requested (or a lower
/// bound on it when the count itself overflows), `budget()` the configured cap.
class BudgetExceeded : public Error {
 public:
  BudgetExceeded(const std::string& what, std::uint64_t required, std::uint64_t budget)
      : Error(what + " (required " + std::to_string(required) + ", budget " +
              std::to_string(budget) + ")"),
        required_(required),
        budget_(budget) {}

  std::uint64_t required() const noexcept { return required_; }
  std::uint64_t budget() const noexcept { return budget_; }

 private:
  std::uint64_t required_;
  std::uint64_t budget_;
};

/// The LP objective is unbounded over the given rows.
class Unbounded : public Error {
 public:
  using Error::Error;
};

}  // namespace projnorm
