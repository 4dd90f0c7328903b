#pragma once

#include <stdexcept>
#include <string>

namespace pimcache {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// A chunk whose distinct blocks cannot fit in the BRB even after a global
// invalidation.
class UnsatisfiableCapacity : public Error {
 public:
  using Error::Error;
};

class StalePlan : public Error {
 public:
  using Error::Error;
};

class SimulatorCapacity : public Error {
 public:
  using Error::Error;
};

class CorruptedPlan : public Error {
 public:
  using Error::Error;
};

class TruncatedStream : public Error {
 public:
  using Error::Error;
};

class MalformedStream : public Error {
 public:
  using Error::Error;
};

class MalformedFrame : public Error {
 public:
  using Error::Error;
};

class EmptySequence : public Error {
 public:
  using Error::Error;
};

class AccountingViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace pimcache
