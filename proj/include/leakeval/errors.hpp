#pragma once

#include <stdexcept>
#include <string>

namespace leakeval {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (qrels, runs, topics, corpus, CSV, config).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// HTTP-level failure after retries were exhausted.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// Replay-only mode was asked for a prompt that has no cached response.
class MissingFixtureError : public Error {
 public:
  MissingFixtureError(const std::string& message, std::string key)
      : Error(message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Model response did not match the expected shape (e.g. no numbered list).
class FormatError : public Error {
 public:
  FormatError(const std::string& message, std::string raw_response)
      : Error(message), raw_response_(std::move(raw_response)) {}
  const std::string& raw_response() const { return raw_response_; }

 private:
  std::string raw_response_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace leakeval
