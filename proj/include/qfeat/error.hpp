#pragma once

#include <stdexcept>
#include <string>

namespace qfeat {

// Bad input: wrong shape, out-of-domain parameter, missing column. CLI exit 2.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A regularity triple that violates 2r + gamma >= 1 (or gamma <= alpha <= 1).
class ConstraintError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

// Factorization breakdown, non-convergence. CLI exit 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Literal messages take this overload so hot paths don't build a string per call.
inline void require(bool ok, const char* what) {
  if (!ok) throw ArgumentError(what);
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ArgumentError(what);
}

}  // namespace qfeat
