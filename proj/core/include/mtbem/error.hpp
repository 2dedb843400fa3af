#pragma once

#include <stdexcept>
#include <string>

namespace mtbem {

// Base of all library errors. Messages are meant to be shown to a user as-is.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MeshError : public Error {
 public:
  enum class Kind {
    MalformedFile,
    NonManifold,
    InconsistentOrientation,
    OpenBoundary,
    DegenerateTriangle,
    DuplicateVertex,
    NonConformalInterface,
    InvalidArgument,
  };

  MeshError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

class QuadratureError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  enum class Kind { Singular, Stagnation, MaxIterations, SvdFailure, InvalidArgument };

  SolverError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace mtbem
