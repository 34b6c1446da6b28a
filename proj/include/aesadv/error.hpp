#pragma once

#include <stdexcept>
#include <string>

namespace aesadv {

// Exit codes of the command-line tool. Each error class below maps to one.
enum class ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kData = 2,
  kBackend = 3,
  kInvariant = 4,
};

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept { return ExitCode::kInvariant; }
};

struct ConfigError : Error {
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kUsage; }
};

struct DataError : Error {
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kData; }
};

struct BackendUnavailable : Error {
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kBackend; }
};

struct ProtocolError : Error {
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kBackend; }
};

struct InvariantViolation : Error {
  using Error::Error;
};

struct TrainingError : Error {
  using Error::Error;
};

}  // namespace aesadv
