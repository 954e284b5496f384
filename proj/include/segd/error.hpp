#pragma once

#include <stdexcept>
#include <string>

namespace segd {

// Base for every error the toolkit raises on bad input or failed processing.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class TruncatedError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class SingularError : public Error {
 public:
  using Error::Error;
};

class NoTracksError : public Error {
 public:
  using Error::Error;
};

class SeedMiss : public Error {
 public:
  using Error::Error;
};

class PrerequisiteError : public Error {
 public:
  using Error::Error;
};

class StageBusyError : public Error {
 public:
  using Error::Error;
};

// Requested object (volume, stage output, job) does not exist.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

}  // namespace segd
