#pragma once

#include <stdexcept>

namespace rpg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A measure with no positive mass, or with a negative / non-finite weight.
class DegenerateMeasure : public Error {
 public:
  using Error::Error;
};

/// A sampled outcome has zero mass under the sampling (old) measure.
class ZeroSupportSample : public Error {
 public:
  using Error::Error;
};

/// A divergence or objective needs q(x) > 0 wherever p(x) > 0.
class SupportError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of a function (log of a nonpositive value, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss or gradient encountered during optimization.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// File could not be written or read; the message carries the path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace rpg
