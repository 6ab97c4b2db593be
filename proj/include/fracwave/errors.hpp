#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fracwave {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A non-finite value reached a module boundary.
class BlowUpError : public Error {
 public:
  BlowUpError(std::size_t index, const std::string& context)
      : Error("non-finite value at index " + std::to_string(index) + " (" +
              context + ")"),
        index_(index),
        context_(context) {}

  std::size_t index() const { return index_; }
  const std::string& context() const { return context_; }

 private:
  std::size_t index_;
  std::string context_;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Fields living on different grids were combined.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Coefficients that should describe real data are not conjugate-symmetric.
class SymmetryError : public Error {
 public:
  using Error::Error;
};

/// A Fourier symbol evaluated to NaN or Inf at some grid wavenumber.
class SymbolError : public Error {
 public:
  using Error::Error;
};

/// The quadratic-cost reference transform was asked for too large a grid.
class OracleGuardError : public Error {
 public:
  using Error::Error;
};

}  // namespace fracwave
