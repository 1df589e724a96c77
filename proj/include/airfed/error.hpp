#pragma once

#include <stdexcept>
#include <string>

namespace airfed {

/// Invalid configuration or inconsistent inputs. Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Federation protocol failure, e.g. no uploads reached the server.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A transport scheme could not be configured for the round (empty client set
/// after power-constrained selection).
class SchemeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem failure. Maps to CLI exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Broken internal invariant.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace airfed
