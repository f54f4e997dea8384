#pragma once

#include <stdexcept>
#include <string>

namespace edgeflow {

// Base for all domain errors. `detail` carries machine-usable context
// (field path, byte offset, site id) that tests and the CLI report back.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

struct SyntaxError : Error {
  SyntaxError(const std::string& msg, std::size_t line, std::size_t column)
      : Error("SYNTAX", msg + " (line " + std::to_string(line) + ", column " +
                            std::to_string(column) + ")"),
        line(line),
        column(column) {}
  std::size_t line;
  std::size_t column;
};

struct FieldError : Error {
  FieldError(const std::string& path, const std::string& msg)
      : Error("FIELD", path + ": " + msg), path(path) {}
  std::string path;
};

struct InvariantError : Error {
  InvariantError(std::string what_code, const std::string& msg)
      : Error("INVARIANT", what_code + ": " + msg), kind(std::move(what_code)) {}
  std::string kind;  // e.g. NO_CLOUD, DUP_SITE, NO_LINK
};

struct FormatError : Error {
  FormatError(const std::string& msg, std::size_t line)
      : Error("FORMAT", msg + " (line " + std::to_string(line) + ")"), line(line) {}
  std::size_t line;
};

struct OrderError : Error {
  explicit OrderError(const std::string& msg) : Error("ORDER", msg) {}
};

struct EncodeError : Error {
  explicit EncodeError(const std::string& msg) : Error("ENCODE", msg) {}
};

struct DecodeError : Error {
  DecodeError(const std::string& msg, std::size_t byte_offset)
      : Error("DECODE",
              msg + " (byte " + std::to_string(byte_offset) + ")"),
        byte_offset(byte_offset) {}
  std::size_t byte_offset;
};

struct PlacementError : Error {
  explicit PlacementError(const std::string& msg) : Error("PLACEMENT", msg) {}
};

struct CapacityError : Error {
  explicit CapacityError(const std::string& msg) : Error("CAPACITY", msg) {}
};

struct ShadowExists : Error {
  explicit ShadowExists(const std::string& component)
      : Error("SHADOW_EXISTS", "shadow already present for " + component) {}
};

struct MissingMetric : Error {
  explicit MissingMetric(const std::string& entity)
      : Error("MISSING_METRIC", "no metrics for " + entity) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error("CONFIG", msg) {}
};

struct PreconditionError : Error {
  explicit PreconditionError(const std::string& msg) : Error("PRECONDITION", msg) {}
};

}  // namespace edgeflow
