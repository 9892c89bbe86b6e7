#pragma once

#include <stdexcept>
#include <string>

namespace sing {

// Bad arguments: wrong shapes, out-of-range parameters, unparsable input.
class invalid_input_error : public std::invalid_argument {
 public:
  explicit invalid_input_error(const std::string& msg)
      : std::invalid_argument(msg) {}
};

// Requested component rank is incompatible with the data dimensions.
class invalid_rank_error : public invalid_input_error {
 public:
  explicit invalid_rank_error(const std::string& msg)
      : invalid_input_error(msg) {}
};

// Input is syntactically fine but numerically unusable: constant columns,
// zero-variance rows, rank-deficient Gram matrices.
class degenerate_input_error : public std::runtime_error {
 public:
  explicit degenerate_input_error(const std::string& msg)
      : std::runtime_error(msg) {}
};

// Mathematical domain violation (e.g. fractional power of an indefinite
// matrix, chordal distance of a zero vector).
class domain_error : public std::domain_error {
 public:
  explicit domain_error(const std::string& msg) : std::domain_error(msg) {}
};

// Non-finite values produced during iteration.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Score columns are anti-correlated where a sign-aligned pair was expected.
class alignment_error : public std::runtime_error {
 public:
  explicit alignment_error(const std::string& msg)
      : std::runtime_error(msg) {}
};

// Too few subjects or permutation replicates for a valid test.
class insufficient_data_error : public invalid_input_error {
 public:
  explicit insufficient_data_error(const std::string& msg)
      : invalid_input_error(msg) {}
};

// File and format problems in the matrix IO layer.
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sing
