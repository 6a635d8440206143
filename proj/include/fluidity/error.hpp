#pragma once

#include <stdexcept>
#include <string>

namespace fluidity {

// Process exit codes shared by every command.
enum class ExitCode : int {
  ok = 0,
  validation = 2,
  data_dependency = 3,
  transport = 4,
};

// Base class for all toolkit errors. Each error knows which exit code the
// command layer maps it to.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept = 0;
};

// Malformed input, schema violation, out-of-range value or bad config.
class ValidationError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::validation; }
};

// A required upstream artefact is absent (e.g. an NSP score file entry).
class DataDependencyError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::data_dependency; }
};

// Remote backend unreachable, timed out or kept returning 5xx.
class TransportError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::transport; }
};

// Remote backend answered, but with a payload that violates the protocol.
class ProtocolError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::transport; }
};

// Rethrows the in-flight toolkit error with `context` prepended to its
// message, keeping its category. Call only from inside a catch block.
[[noreturn]] inline void rethrow_with_context(const std::string& context) {
  try {
    throw;
  } catch (const ValidationError& e) {
    throw ValidationError(context + e.what());
  } catch (const DataDependencyError& e) {
    throw DataDependencyError(context + e.what());
  } catch (const TransportError& e) {
    throw TransportError(context + e.what());
  } catch (const ProtocolError& e) {
    throw ProtocolError(context + e.what());
  }
}

}  // namespace fluidity
