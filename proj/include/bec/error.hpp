#pragma once

#include <stdexcept>
#include <string>

namespace bec {

// Exit codes used by the command-line tool; library errors carry the one
// they map to.
enum class ErrorKind : int {
  Config = 2,
  Certification = 3,
  Audit = 4,
  Resource = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Invalid parameters or a value outside the domain of a formula.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

/// Truncation could not be certified (tail mass, weight adequacy, root bracket).
class TruncationError : public Error {
 public:
  explicit TruncationError(const std::string& what) : Error(ErrorKind::Certification, what) {}
};

/// A configured size or budget was exceeded.
class SizingError : public Error {
 public:
  explicit SizingError(const std::string& what) : Error(ErrorKind::Resource, what) {}
};

}  // namespace bec
