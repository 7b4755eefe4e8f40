#pragma once

#include <stdexcept>
#include <string>

namespace hybil {

// Every failure raised by the library derives from Error so callers can catch
// one type at the boundary (the CLI does exactly that).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes or extents that do not fit together.
class StructuralError : public Error {
 public:
  explicit StructuralError(const std::string& what) : Error("structural error: " + what) {}
};

// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error("numeric error: " + what) {}
};

// Invalid user-supplied configuration.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config error: " + what) {}
};

// Raw recordings that cannot be turned into samples (missing channels, ...).
class IngestionError : public Error {
 public:
  explicit IngestionError(const std::string& what) : Error("ingestion error: " + what) {}
};

// Malformed on-disk container.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error("format error: " + what) {}
};

// Labels or classes outside the declared schema.
class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what) : Error("schema error: " + what) {}
};

// Checkpoint contents that do not match the model being loaded.
class CheckpointError : public Error {
 public:
  explicit CheckpointError(const std::string& what) : Error("checkpoint error: " + what) {}
};

// A cross-validation fold that could not be trained; wraps the cause.
class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& what) : Error("training error: " + what) {}
};

}  // namespace hybil
