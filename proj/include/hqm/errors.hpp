#pragma once

#include <stdexcept>
#include <string>

namespace hqm {

// Eigensolver did not converge; carries the reported residual.
class DiagonalizationError : public std::runtime_error {
 public:
  DiagonalizationError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// Persistence failures are distinguished by kind so callers can tell a
// missing file from a damaged one.
enum class PersistErrorKind { io, bad_magic, bad_version, corrupt };

class PersistenceError : public std::runtime_error {
 public:
  PersistenceError(PersistErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  PersistErrorKind kind() const { return kind_; }

 private:
  PersistErrorKind kind_;
};

// Config-file rejection; names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : std::runtime_error(what), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

}  // namespace hqm
