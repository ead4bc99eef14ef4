#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xent {

// Base of every error raised by the library. `tag()` is a stable
// machine-readable identifier used in JSON error reports.
class Error : public std::runtime_error {
 public:
  Error(std::string tag, const std::string& what)
      : std::runtime_error(what), tag_(std::move(tag)) {}
  const std::string& tag() const noexcept { return tag_; }

 private:
  std::string tag_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error("invalid-argument", what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error("domain", what) {}
};

class OverflowError : public Error {
 public:
  explicit OverflowError(const std::string& what) : Error("overflow", what) {}
};

class EstimationError : public Error {
 public:
  explicit EstimationError(const std::string& what) : Error("estimation", what) {}
};

class CapabilityError : public Error {
 public:
  explicit CapabilityError(const std::string& what) : Error("capability", what) {}
};

class TransportError : public Error {
 public:
  TransportError(const std::string& what, std::size_t attempts)
      : Error("transport", what + " (after " + std::to_string(attempts) + " attempts)"),
        attempts_(attempts) {}
  std::size_t attempts() const noexcept { return attempts_; }

 private:
  std::size_t attempts_;
};

}  // namespace xent
