#pragma once

#include <stdexcept>
#include <string>

namespace ercf {

/// An iterative numeric method failed (non-convergence, singular system).
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input document or file.
class ParseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A sweep trace shows no absorption dip distinguishable from noise.
class NoDipError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace ercf
