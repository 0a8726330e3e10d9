#pragma once

#include <stdexcept>
#include <string>

namespace biasprobe {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Structural problem in an input document (lexicon, mock script, config).
class ParseError : public Error {
 public:
  enum class Kind { MalformedDocument, MissingField, TypeMismatch, UnknownKey };

  ParseError(Kind kind, std::string path, const std::string& message)
      : Error(path.empty() ? message : path + ": " + message),
        kind_(kind),
        path_(std::move(path)) {}

  Kind kind() const { return kind_; }
  const std::string& path() const { return path_; }

 private:
  Kind kind_;
  std::string path_;
};

class UnknownContextError : public Error {
 public:
  explicit UnknownContextError(const std::string& context)
      : Error("no xfactor entry carries context tag \"" + context + "\""),
        context_(context) {}
  const std::string& context() const { return context_; }

 private:
  std::string context_;
};

class UnknownCategoryError : public Error {
 public:
  explicit UnknownCategoryError(const std::string& category)
      : Error("category \"" + category + "\" is not in the taxonomy"),
        category_(category) {}
  const std::string& category() const { return category_; }

 private:
  std::string category_;
};

class UnknownScenarioFamilyError : public Error {
 public:
  explicit UnknownScenarioFamilyError(const std::string& family)
      : Error("no template exists for scenario family \"" + family + "\"") {}
};

/// step_session was called on a session that already reached a terminal status.
class InvalidTransitionError : public Error {
 public:
  using Error::Error;
};

/// Context/category filters removed every scenario family.
class FilterEmptyError : public Error {
 public:
  using Error::Error;
};

class NonTerminalSessionError : public Error {
 public:
  using Error::Error;
};

/// Failure talking to a model endpoint.
class ClientError : public Error {
 public:
  enum class Kind {
    Transport,    // connect / timeout after retries
    Auth,         // 401 / 403, or an unresolvable API key
    Malformed,    // response body missing the expected fields
    RateLimited,  // 429 after retries
    Http,         // any other unexpected HTTP status
  };

  ClientError(Kind kind, const std::string& message, int status = 0)
      : Error(message), kind_(kind), status_(status) {}

  Kind kind() const { return kind_; }
  int status() const { return status_; }  // 0 when no HTTP response was seen

 private:
  Kind kind_;
  int status_;
};

}  // namespace biasprobe
