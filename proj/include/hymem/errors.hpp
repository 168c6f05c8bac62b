#pragma once

#include <stdexcept>
#include <string>

namespace hymem {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A hybrid arc was queried at a point outside its domain.
class DomainError : public Error {
 public:
  DomainError(const std::string& what, double t, int j) : Error(what), t_(t), j_(j) {}
  double t() const noexcept { return t_; }
  int j() const noexcept { return j_; }

 private:
  double t_;
  int j_;
};

/// The stored history does not reach back far enough for a window or a delayed lookup.
class InsufficientHistory : public DomainError {
 public:
  using DomainError::DomainError;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Event location failed; carries the bracketing interval (relative step times).
class EventLocationError : public Error {
 public:
  EventLocationError(const std::string& what, double lo, double hi) : Error(what), lo_(lo), hi_(hi) {}
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }

 private:
  double lo_;
  double hi_;
};

/// A numerical construction has no solution (e.g. an unstable Lyapunov equation).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// A certificate failed its screening before any sampling was done.
class CertificateError : public Error {
 public:
  using Error::Error;
};

class SamplerError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration; `field` names the offending key (dotted path) when known.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::string field = {}) : Error(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace hymem
