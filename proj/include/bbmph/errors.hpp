#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bbmph {

/// Base class for all bbmph errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration (bad gamma, conflicting strategies, infeasible
/// key generation parameters, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failure; carries the offending path in the message.
class IoError : public Error {
 public:
  IoError(const std::string& what, const std::string& path)
      : Error(what + ": " + path), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// The input key stream contained at least one key twice. Duplicates make
/// the cascade unable to terminate, so the build aborts.
class DuplicateKeysError : public Error {
 public:
  using Error::Error;
};

/// The key source yielded no keys.
class EmptyInputError : public Error {
 public:
  using Error::Error;
};

/// A query walked every level without a hit and the key is absent from the
/// fallback table. Only reachable for keys outside the build set.
class NotInFallbackError : public Error {
 public:
  using Error::Error;
};

/// Serialized image does not start with the expected magic bytes.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Serialized image carries an unsupported format version.
class VersionError : public Error {
 public:
  using Error::Error;
};

/// Serialized image ends before its declared payload; `offset` is the byte
/// position at which the decoder ran out of data.
class TruncatedError : public Error {
 public:
  TruncatedError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace bbmph
