#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ledgerlens {

// Base for every error the library raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- table ingest ---------------------------------------------------------

class MalformedRow : public Error {
 public:
  MalformedRow(std::size_t line, const std::string& what)
      : Error("malformed row at line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DuplicateKey : public Error {
 public:
  using Error::Error;
};

// --- lexicon ----------------------------------------------------------------

// The message always starts with the JSON path of the offending entry.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class CycleError : public Error {
 public:
  using Error::Error;
};

class AmbiguousSynonym : public Error {
 public:
  using Error::Error;
};

// --- embedding / retrieval -------------------------------------------------

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class EmptyStore : public Error {
 public:
  EmptyStore() : Error("chunk store is empty") {}
  using Error::Error;
};

class BadResponse : public Error {
 public:
  using Error::Error;
};

// Network deadline exceeded, or every retry failed without an HTTP status.
class Timeout : public Error {
 public:
  using Error::Error;
};

// --- prompts ----------------------------------------------------------------

class MissingTemplate : public Error {
 public:
  explicit MissingTemplate(int intent_code)
      : Error("missing prompt template for intent " + std::to_string(intent_code)),
        intent_code_(intent_code) {}
  int intent_code() const noexcept { return intent_code_; }

 private:
  int intent_code_;
};

class MalformedTemplate : public Error {
 public:
  using Error::Error;
};

class PromptOverflow : public Error {
 public:
  using Error::Error;
};

// --- llm gateway ------------------------------------------------------------

class GatewayError : public Error {
 public:
  using Error::Error;
};

class TokenLimitExceeded : public GatewayError {
 public:
  TokenLimitExceeded(std::size_t tokens, std::size_t limit)
      : GatewayError("prompt needs " + std::to_string(tokens) + " tokens, provider limit is " +
                     std::to_string(limit)) {}
};

class ProviderError : public GatewayError {
 public:
  ProviderError(int status, const std::string& what)
      : GatewayError("provider returned HTTP " + std::to_string(status) + ": " + what),
        status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class UnknownProvider : public GatewayError {
 public:
  explicit UnknownProvider(const std::string& name) : GatewayError("unknown provider: " + name) {}
};

class DefectImpossible : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

// --- intent -------------------------------------------------------------------

class EmptyDataset : public Error {
 public:
  EmptyDataset() : Error("dataset is empty") {}
};

// --- service ----------------------------------------------------------------

class UnknownThread : public Error {
 public:
  explicit UnknownThread(const std::string& id) : Error("unknown thread: " + id) {}
};

}  // namespace ledgerlens
