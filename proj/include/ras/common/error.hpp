#pragma once

#include <stdexcept>
#include <string>

namespace ras {

/// Base class for every error raised by the engine. Each subclass maps to one
/// failure category so transports (HTTP, CLI exit codes) can translate them.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InvalidEmbedding : public Error {
 public:
  using Error::Error;
};

class DuplicateDocument : public Error {
 public:
  using Error::Error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

// Checksum or structural corruption in persisted data.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ManifestError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class InvalidImage : public Error {
 public:
  using Error::Error;
};

class UpstreamUnavailable : public Error {
 public:
  using Error::Error;
};

class Timeout : public UpstreamUnavailable {
 public:
  using UpstreamUnavailable::UpstreamUnavailable;
};

}  // namespace ras
