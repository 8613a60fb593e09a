#pragma once

#include <stdexcept>
#include <string>

namespace ntl {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed input document (network file, CSV header, config).
class ParseError : public Error {
  public:
    using Error::Error;
};

/// A well-formed network that violates a structural invariant.
class ValidationError : public Error {
  public:
    using Error::Error;
};

class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Raised by the analysis pipeline; carries the failing stage name.
class StageError : public Error {
  public:
    StageError(std::string stage, const std::string& cause)
        : Error(stage + ": " + cause), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

  private:
    std::string stage_;
};

}  // namespace ntl
