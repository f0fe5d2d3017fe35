#pragma once

#include <stdexcept>
#include <string>

namespace scriptbench {

// Base of every error the library throws. Each subclass maps onto one CLI
// exit-code class (see tools/scriptbench.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EncodingError : public Error {
 public:
  EncodingError(const std::string& what, std::size_t byte_offset)
      : Error(what + " at byte offset " + std::to_string(byte_offset)),
        byte_offset_(byte_offset) {}
  std::size_t byte_offset() const { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DependencyError : public Error {
 public:
  DependencyError(const std::string& stage, const std::string& detail)
      : Error("missing upstream stage '" + stage + "': " + detail), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

// Judge response problems. kind() distinguishes the three failure classes.
class VerdictError : public Error {
 public:
  enum class Kind { NoJson, Range, Schema };
  VerdictError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

class StatsError : public Error {
 public:
  using Error::Error;
};

}  // namespace scriptbench
