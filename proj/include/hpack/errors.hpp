#pragma once

#include <stdexcept>
#include <string>

namespace hpack {

/// Malformed or out-of-range input.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A lemma's size or density preconditions do not hold, as opposed to the
/// checked property simply being false.
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A randomized phase ran out of retries.
class RoundFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hpack
