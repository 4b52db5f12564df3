#pragma once

#include <stdexcept>
#include <string>

namespace nesteq {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class UnknownNode : public Error {
public:
  using Error::Error;
};

class UnequalTemperatures : public Error {
public:
  using Error::Error;
};

class PathExplosion : public Error {
public:
  using Error::Error;
};

class CapacityExceeded : public Error {
public:
  using Error::Error;
};

class OutOfDomain : public Error {
public:
  using Error::Error;
};

class MissingToll : public Error {
public:
  using Error::Error;
};

class UnstableStep : public Error {
public:
  using Error::Error;
};

class ProbabilityOverflow : public Error {
public:
  using Error::Error;
};

class OracleNonconvergence : public Error {
public:
  using Error::Error;
};

class InfeasibleConservation : public Error {
public:
  using Error::Error;
};

class ParseError : public Error {
public:
  using Error::Error;
};

} // namespace nesteq
